// Benchmark comparing the serial reference kernels with their OpenMP
// variants, verifying bitwise-identical outputs along the way.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

#include "hopnet/kernels.hpp"
#include "hopnet/rng.hpp"

using hopnet::Rng;
namespace kernels = hopnet::kernels;

namespace {

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

int main() {
    std::printf("threads available: %d (parallel default: %s)\n", kernels::thread_count(),
                kernels::parallel_default() ? "on" : "off");

    Rng rng(42);
    const std::size_t n = 1500;
    const int dim = 2;
    const int reps = 5;

    std::vector<double> points(n * std::size_t(dim));
    for (double& x : points) x = rng.uniform(-1.0, 1.0);
    std::vector<double> out_s(n), out_p(n);

    double ts = time_best_of(reps, [&] {
        kernels::field_sums_serial(points, n, dim, points, n, double(n), 2.0, out_s);
    });
    double tp = time_best_of(reps, [&] {
        kernels::field_sums_parallel(points, n, dim, points, n, double(n), 2.0, out_p);
    });
    std::printf("field_sums     n=%zu  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n", n,
                ts * 1e3, tp * 1e3, ts / tp, bitwise_equal(out_s, out_p) ? "identical" : "MISMATCH");

    std::vector<double> mat(n * n), x(n);
    for (double& v : mat) v = rng.uniform(-2.0, 0.0);
    for (double& v : x) v = rng.uniform(-2.0, 0.0);

    ts = time_best_of(reps, [&] { kernels::logsumexp_matvec_serial(mat, n, x, out_s); });
    tp = time_best_of(reps, [&] { kernels::logsumexp_matvec_parallel(mat, n, x, out_p); });
    std::printf("lse_matvec     n=%zu  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n", n,
                ts * 1e3, tp * 1e3, ts / tp, bitwise_equal(out_s, out_p) ? "identical" : "MISMATCH");

    ts = time_best_of(reps, [&] { kernels::matvec_serial(mat, n, x, out_s); });
    tp = time_best_of(reps, [&] { kernels::matvec_parallel(mat, n, x, out_p); });
    std::printf("matvec         n=%zu  serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n", n,
                ts * 1e3, tp * 1e3, ts / tp, bitwise_equal(out_s, out_p) ? "identical" : "MISMATCH");

    return 0;
}
