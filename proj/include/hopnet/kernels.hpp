#pragma once
// Numeric kernels with serial reference implementations and OpenMP variants.
//
// Every parallel variant splits work by output row and keeps each row's inner
// summation in the same serial order as the reference, so serial and parallel
// results are bitwise identical for any thread count.  The benchmark tool
// compares the two; tests assert the equality.

#include <cstdint>
#include <span>
#include <vector>

namespace hopnet::kernels {

// true if the OpenMP variants should be used by default (compiled with OpenMP
// and more than one thread available); overridable per call
bool parallel_default();
int thread_count();

// out[i] = (1/lambda) * sum_j path_loss(|X_j - eval_i|, alpha)
// points/evals are flat coords (n x dim, m x dim).
void field_sums_serial(std::span<const double> points, std::size_t n, int dim,
                       std::span<const double> evals, std::size_t m,
                       double lambda, double alpha, std::span<double> out);
void field_sums_parallel(std::span<const double> points, std::size_t n, int dim,
                         std::span<const double> evals, std::size_t m,
                         double lambda, double alpha, std::span<double> out);
void field_sums(std::span<const double> points, std::size_t n, int dim,
                std::span<const double> evals, std::size_t m,
                double lambda, double alpha, std::span<double> out, bool parallel);

// log-domain matrix-vector product: out[i] = logsumexp_j(log_mat[i*n+j] + log_x[j])
void logsumexp_matvec_serial(std::span<const double> log_mat, std::size_t n,
                             std::span<const double> log_x, std::span<double> out);
void logsumexp_matvec_parallel(std::span<const double> log_mat, std::size_t n,
                               std::span<const double> log_x, std::span<double> out);
void logsumexp_matvec(std::span<const double> log_mat, std::size_t n,
                      std::span<const double> log_x, std::span<double> out, bool parallel);

// plain matrix-vector product, row-major square matrix
void matvec_serial(std::span<const double> mat, std::size_t n,
                   std::span<const double> x, std::span<double> out);
void matvec_parallel(std::span<const double> mat, std::size_t n,
                     std::span<const double> x, std::span<double> out);
void matvec(std::span<const double> mat, std::size_t n,
            std::span<const double> x, std::span<double> out, bool parallel);

double logsumexp(std::span<const double> xs);

} // namespace hopnet::kernels
