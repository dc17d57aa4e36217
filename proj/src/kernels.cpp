#include "hopnet/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "hopnet/geometry.hpp"

namespace hopnet::kernels {

bool parallel_default() {
#ifdef _OPENMP
    return omp_get_max_threads() > 1;
#else
    return false;
#endif
}

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

inline double dist(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double field_row(std::span<const double> points, std::size_t n, int dim,
                        const double* eval, double lambda, double alpha) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        s += path_loss(dist(points.data() + j * std::size_t(dim), eval, dim), alpha);
    return s / lambda;
}

inline double lse_row(const double* row, std::size_t n, std::span<const double> log_x) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, row[j] + log_x[j]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(row[j] + log_x[j] - mx);
    return mx + std::log(s);
}

inline double dot_row(const double* row, std::size_t n, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
    return s;
}

} // namespace

void field_sums_serial(std::span<const double> points, std::size_t n, int dim,
                       std::span<const double> evals, std::size_t m,
                       double lambda, double alpha, std::span<double> out) {
    for (std::size_t i = 0; i < m; ++i)
        out[i] = field_row(points, n, dim, evals.data() + i * std::size_t(dim), lambda, alpha);
}

void field_sums_parallel(std::span<const double> points, std::size_t n, int dim,
                         std::span<const double> evals, std::size_t m,
                         double lambda, double alpha, std::span<double> out) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(m); ++i)
        out[std::size_t(i)] =
            field_row(points, n, dim, evals.data() + std::size_t(i) * std::size_t(dim), lambda, alpha);
}

void field_sums(std::span<const double> points, std::size_t n, int dim,
                std::span<const double> evals, std::size_t m,
                double lambda, double alpha, std::span<double> out, bool parallel) {
    if (parallel) field_sums_parallel(points, n, dim, evals, m, lambda, alpha, out);
    else field_sums_serial(points, n, dim, evals, m, lambda, alpha, out);
}

void logsumexp_matvec_serial(std::span<const double> log_mat, std::size_t n,
                             std::span<const double> log_x, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = lse_row(log_mat.data() + i * n, n, log_x);
}

void logsumexp_matvec_parallel(std::span<const double> log_mat, std::size_t n,
                               std::span<const double> log_x, std::span<double> out) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(n); ++i)
        out[std::size_t(i)] = lse_row(log_mat.data() + std::size_t(i) * n, n, log_x);
}

void logsumexp_matvec(std::span<const double> log_mat, std::size_t n,
                      std::span<const double> log_x, std::span<double> out, bool parallel) {
    if (parallel) logsumexp_matvec_parallel(log_mat, n, log_x, out);
    else logsumexp_matvec_serial(log_mat, n, log_x, out);
}

void matvec_serial(std::span<const double> mat, std::size_t n,
                   std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = dot_row(mat.data() + i * n, n, x);
}

void matvec_parallel(std::span<const double> mat, std::size_t n,
                     std::span<const double> x, std::span<double> out) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(n); ++i)
        out[std::size_t(i)] = dot_row(mat.data() + std::size_t(i) * n, n, x);
}

void matvec(std::span<const double> mat, std::size_t n,
            std::span<const double> x, std::span<double> out, bool parallel) {
    if (parallel) matvec_parallel(mat, n, x, out);
    else matvec_serial(mat, n, x, out);
}

double logsumexp(std::span<const double> xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : xs) mx = std::max(mx, v);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double v : xs) s += std::exp(v - mx);
    return mx + std::log(s);
}

} // namespace hopnet::kernels
