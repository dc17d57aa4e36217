#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hopnet/energy.hpp"
#include "hopnet/gibbs.hpp"
#include "hopnet/kernels.hpp"
#include "hopnet/rng.hpp"

using namespace hopnet;

namespace {

PointConfig fixed_points(std::size_t n) {
    PointConfig p;
    p.dim = 1;
    p.n = n;
    p.coords.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        p.coords[i] = -0.9 + 1.7 * double(i) / double(n); // spread, origin-free
    return p;
}

} // namespace

TEST_CASE("a priori weights: N^-(k-1) per trajectory, mass k_max per user") {
    const std::size_t n = 5;
    CHECK(apriori_log_weight(Trajectory{1, {}}, n) == doctest::Approx(0.0));
    CHECK(apriori_log_weight(Trajectory{3, {2, 2}}, n) == doctest::Approx(-2.0 * std::log(5.0)));

    const int k_max = 3;
    double mass = 0.0;
    const auto T = per_user_choice_count(n, k_max, UINT64_MAX).value();
    for (std::uint64_t t = 0; t < T; ++t)
        mass += std::exp(apriori_log_weight(decode_trajectory(t, n, k_max), n));
    CHECK(mass == doctest::Approx(double(k_max)).epsilon(1e-12));
}

TEST_CASE("per-user choice count and overflow refusal") {
    CHECK(per_user_choice_count(4, 1, UINT64_MAX).value() == 1);
    CHECK(per_user_choice_count(4, 3, UINT64_MAX).value() == 1 + 4 + 16);
    CHECK(per_user_choice_count(10, 3, UINT64_MAX).value() == 111);
    CHECK_FALSE(per_user_choice_count(10, 3, 100).has_value()); // exceeds cap
    CHECK_FALSE(per_user_choice_count(1u << 20, 5, UINT64_MAX).has_value()); // N^4 = 2^80
}

TEST_CASE("trajectory codec: round trip and documented ordering") {
    const std::size_t n = 3;
    const int k_max = 3;
    const auto T = per_user_choice_count(n, k_max, UINT64_MAX).value();
    CHECK(T == 13); // 1 + 3 + 9

    // index 0 is the direct route; k ascends; relays lexicographic with the
    // first relay most significant
    CHECK(decode_trajectory(0, n, k_max) == Trajectory{1, {}});
    CHECK(decode_trajectory(1, n, k_max) == Trajectory{2, {0}});
    CHECK(decode_trajectory(3, n, k_max) == Trajectory{2, {2}});
    CHECK(decode_trajectory(4, n, k_max) == Trajectory{3, {0, 0}});
    CHECK(decode_trajectory(5, n, k_max) == Trajectory{3, {0, 1}});
    CHECK(decode_trajectory(7, n, k_max) == Trajectory{3, {1, 0}});
    for (std::uint64_t t = 0; t < T; ++t)
        CHECK(encode_trajectory(decode_trajectory(t, n, k_max), n) == t);
}

TEST_CASE("exact enumeration: normalization, log_Z, and budget refusal") {
    const PointConfig p = fixed_points(3);
    ModelParams params;
    params.gamma = 0.8;
    params.beta = 0.3;
    params.k_max = 2;
    const InterferenceField f = interference_field(p, 3.0, 2.0);
    const ExactGibbs g = exact_gibbs(f, params);
    CHECK(g.per_user_choices == 4);
    CHECK(g.log_weight.size() == 64);

    double total = 0.0;
    for (double pr : g.probability) total += pr;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(kernels::logsumexp(g.log_weight) == doctest::Approx(g.log_Z).epsilon(1e-12));

    // the all-direct configuration has index 0; check its weight by hand
    TrajectoryConfig direct = TrajectoryConfig::all_direct(3);
    const double S = energy_S(f, direct);
    CHECK(g.log_weight[0] == doctest::Approx(-params.gamma * S).epsilon(1e-12));

    // a specific non-trivial configuration: user 0 takes per-user index 2
    // (two hops via relay 1), the rest direct.  Configuration index stacks
    // user 0 most significant: 2*16.
    TrajectoryConfig cfg = direct;
    cfg.traj[0] = Trajectory{2, {1}};
    const double S2 = energy_S(f, cfg);
    const auto infl = inflow_and_M(3, cfg, params.eta);
    const double expect = -std::log(3.0) - params.gamma * S2 - params.beta * infl.M;
    CHECK(g.log_weight[2 * 16] == doctest::Approx(expect).epsilon(1e-12));

    CHECK_THROWS_AS(exact_gibbs(f, params, 10), BudgetExceeded);
}

TEST_CASE("factorized log-partition matches exact enumeration when beta = 0") {
    for (std::size_t n : {2u, 3u, 4u}) {
        const PointConfig p = fixed_points(n);
        ModelParams params;
        params.gamma = 1.3;
        params.beta = 0.0;
        params.k_max = 3;
        const double lambda = double(n);
        const InterferenceField f = interference_field(p, lambda, 2.0);
        const ExactGibbs g = exact_gibbs(f, params, 10'000'000);
        const double rate = factorized_log_partition_beta0(f, params);
        CHECK(lambda * rate == doctest::Approx(g.log_Z).epsilon(1e-9));
    }
}

TEST_CASE("factorized log-partition: serial and parallel agree exactly") {
    const PointConfig p = fixed_points(40);
    ModelParams params;
    params.gamma = 0.7;
    params.k_max = 4;
    const InterferenceField f = interference_field(p, 40.0, 2.0);
    CHECK(factorized_log_partition_beta0(f, params, false) ==
          factorized_log_partition_beta0(f, params, true));
}

TEST_CASE("empty configurations are rejected, not silently scored") {
    PointConfig p;
    p.dim = 1;
    p.n = 0;
    ModelParams params;
    params.gamma = 1.0;
    params.k_max = 2;
    const InterferenceField f = interference_field(p, 5.0, 2.0);
    CHECK_THROWS_AS(exact_gibbs(f, params), std::invalid_argument);
    CHECK_THROWS_AS(factorized_log_partition_beta0(f, params), std::invalid_argument);
    params.beta = 0.5; // the factorized form only exists without congestion
    CHECK_THROWS_AS(factorized_log_partition_beta0(f, params), std::invalid_argument);
}
