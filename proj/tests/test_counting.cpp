#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "hopnet/counting.hpp"
#include "hopnet/minimizer.hpp"
#include "hopnet/rng.hpp"
#include "hopnet/variational.hpp"

using namespace hopnet;

namespace {

// two users in the single cell of the trivial grid over [-1, 1]
PointConfig two_users() {
    PointConfig p;
    p.dim = 1;
    p.n = 2;
    p.coords = {-0.5, 0.5};
    return p;
}

GridMeasure random_positive(const Grid& g, Rng& rng, double scale) {
    GridMeasure mu(g);
    for (double& v : mu.mass) v = scale * (0.2 + rng.uniform01());
    return mu;
}

} // namespace

TEST_CASE("factorials, multinomials, and big-integer logs") {
    CHECK(factorial(0) == 1);
    CHECK(factorial(1) == 1);
    CHECK(factorial(5) == 120);
    CHECK(factorial(25) == BigInt("15511210043330985984000000"));

    const std::vector<std::int64_t> p23{2, 3};
    CHECK(multinomial(5, p23) == 10);
    const std::vector<std::int64_t> p123{1, 2, 3};
    CHECK(multinomial(6, p123) == 60);
    const std::vector<std::int64_t> zero{0, 0};
    CHECK(multinomial(0, zero) == 1);
    const std::vector<std::int64_t> bad{1, 1};
    CHECK_THROWS_AS(multinomial(5, bad), std::invalid_argument);
    const std::vector<std::int64_t> neg{6, -1};
    CHECK_THROWS_AS(multinomial(5, neg), std::invalid_argument);

    CHECK(log_big(BigInt(1)) == 0.0);
    CHECK(log_big(BigInt(2)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(log_big(factorial(50)) == doctest::Approx(std::lgamma(51.0)).epsilon(1e-13));
    CHECK(log_big(factorial(300)) == doctest::Approx(std::lgamma(301.0)).epsilon(1e-13));
    CHECK(std::isinf(log_big(BigInt(0))));
}

TEST_CASE("two users, one cell: the full class decomposition by hand") {
    const PointConfig p = two_users();
    const Grid g = build_grid(Window{1, 1.0}, 1);
    const ClassEnumeration e = enumerate_classes(p, g, 2);

    CHECK(e.per_user_choices == 3); // direct, via user 0, via user 1
    CHECK(e.total == 9);            // 3^2
    REQUIRE(e.classes.size() == 4);

    // each class carries (N1, N2, N3) and its size equals the product
    std::multiset<std::vector<std::int64_t>> triples;
    std::multiset<std::uint64_t> sizes;
    std::uint64_t total = 0;
    for (const auto& cls : e.classes) {
        const CountTerms t = count_terms(cls.counts);
        CHECK(BigInt(cls.size) == t.class_count());
        triples.insert({std::int64_t(t.N1), std::int64_t(t.N2), std::int64_t(t.N3)});
        sizes.insert(cls.size);
        total += cls.size;
        // the representative really belongs to the class
        CHECK(cls.counts.class_key() == cls.key);
        // independent single-target scan agrees
        CHECK(brute_force_class_count(p, g, cls.counts) == BigInt(cls.size));
    }
    CHECK(total == 9);
    CHECK(sizes == std::multiset<std::uint64_t>{1, 2, 2, 4});
    const std::multiset<std::vector<std::int64_t>> expect{
        {1, 1, 1}, // both direct
        {2, 2, 1}, // one direct, one relayed
        {1, 2, 1}, // both relayed into the same user
        {1, 1, 2}, // both relayed, one hop each
    };
    CHECK(triples == expect);
}

TEST_CASE("two users, one cell: route-only classes") {
    const PointConfig p = two_users();
    const Grid g = build_grid(Window{1, 1.0}, 1);
    const ClassEnumeration e = enumerate_classes(p, g, 2, true);
    REQUIRE(e.classes.size() == 3); // 0, 1, or 2 two-hop routes
    std::multiset<std::uint64_t> sizes;
    for (const auto& cls : e.classes) {
        const CountTerms t = count_terms(cls.counts);
        CHECK(BigInt(cls.size) == t.route_class_count());
        sizes.insert(cls.size);
    }
    CHECK(sizes == std::multiset<std::uint64_t>{1, 4, 4});
    CHECK(e.total == 9);
}

TEST_CASE("class enumeration is exhaustive on a finer grid") {
    // three users across two occupied cells, k_max = 3: 13^3 = 2197 configs
    PointConfig p;
    p.dim = 1;
    p.n = 3;
    p.coords = {-0.5, -0.45, 0.6};
    const Grid g = build_grid(Window{1, 1.0}, 3);
    const ClassEnumeration full = enumerate_classes(p, g, 3);
    const ClassEnumeration route = enumerate_classes(p, g, 3, true);
    CHECK(full.total == 13u * 13u * 13u);
    CHECK(route.total == full.total);
    CHECK(route.classes.size() <= full.classes.size());

    std::uint64_t sum_full = 0, sum_route = 0;
    for (const auto& c : full.classes) {
        sum_full += c.size;
        CHECK(count_terms(c.counts).class_count() == BigInt(c.size));
    }
    for (const auto& c : route.classes) {
        sum_route += c.size;
        CHECK(count_terms(c.counts).route_class_count() == BigInt(c.size));
    }
    CHECK(sum_full == full.total);
    CHECK(sum_route == route.total);

    // keys ascend strictly, so every class appears exactly once
    for (std::size_t i = 1; i < full.classes.size(); ++i)
        CHECK(full.classes[i - 1].key < full.classes[i].key);

    // serial and parallel enumeration agree entirely
    const ClassEnumeration par = enumerate_classes(p, g, 3, false, 20'000'000, true);
    REQUIRE(par.classes.size() == full.classes.size());
    for (std::size_t i = 0; i < full.classes.size(); ++i) {
        CHECK(par.classes[i].key == full.classes[i].key);
        CHECK(par.classes[i].size == full.classes[i].size);
        CHECK(par.classes[i].representative == full.classes[i].representative);
    }

    // budget refusal
    CHECK_THROWS_AS(enumerate_classes(p, g, 3, false, 100), BudgetExceeded);
}

TEST_CASE("measure-valued targets: lambda-integrality decides realizability") {
    const PointConfig p = two_users();
    const Grid g = build_grid(Window{1, 1.0}, 1);
    const double lambda = 2.0;

    // the both-direct class as a measure-valued setting: nu_1 = (2/lambda) delta,
    // inflow all at level 0
    TrajectorySetting s;
    s.grid = g;
    s.k_max = 2;
    s.nu.emplace_back(g, 1);
    s.nu.back().add(0, 2.0 / lambda);
    s.nu.emplace_back(g, 2);
    GridMeasure level0(g);
    level0.mass[0] = 2.0 / lambda;
    s.mum.emplace(0, level0);

    CHECK(brute_force_class_count(p, g, s, lambda) == 1);
    const CountTerms t = count_terms(s, lambda, 2);
    CHECK(t.class_count() == 1);
    CHECK(t.N0 == 1); // no relay slots

    // breaking integrality makes the class empty
    TrajectorySetting frac = s;
    frac.nu[0].set(0, 1.7 / lambda);
    GridMeasure l0(g);
    l0.mass[0] = 1.7 / lambda;
    frac.mum[0] = l0;
    CHECK(brute_force_class_count(p, g, frac, lambda) == 0);
    CHECK_THROWS_AS(count_terms(frac, lambda, 2), std::invalid_argument);

    // integral but inconsistent inflow is refused by count_terms
    TrajectorySetting incons = s;
    GridMeasure l1(g);
    l1.mass[0] = 2.0 / lambda;
    incons.mum.clear();
    incons.mum.emplace(1, l1); // claims two incoming hops; routes have none
    CHECK_THROWS_AS(count_terms(incons, lambda, 2), std::invalid_argument);
    CHECK(brute_force_class_count(p, g, incons, lambda) == 0);
}

TEST_CASE("direct-only models have zero rate columns") {
    const Grid g = build_grid(Window{1, 1.0}, 1);
    const GridMeasure mu = [&] {
        GridMeasure m(g);
        m.mass[0] = 1.0;
        return m;
    }();
    TrajectorySetting psi;
    psi.grid = g;
    psi.k_max = 1;
    psi.nu.emplace_back(g, 1);
    psi.nu.back().add(0, 1.0);
    psi.mum.emplace(0, mu);

    ModelParams params;
    const std::vector<double> lambdas{10.0, 40.0};
    const auto rows = rate_comparison(psi, mu, params, lambdas);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r.rate == doctest::Approx(0.0));
        CHECK(r.neg_I == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(r.gap <= 1e-10);
        CHECK(r.hops_rate == 0.0);
        CHECK(r.M_W == 0.0);
    }
}

TEST_CASE("integer rounding preserves the structure the rate identity needs") {
    const Grid g = build_grid(Window{1, 1.0}, 3);
    Rng rng(19);
    const GridMeasure mu = random_positive(g, rng, 1.0);
    ModelParams params;
    params.gamma = 0.5;
    params.k_max = 2;
    const Beta0Minimizer mini = solve_beta0(g, mu, params);
    const TrajectorySetting psi = beta0_setting(mini, mu);

    for (double lambda : {40.0, 400.0}) {
        const RoundedSetting rs = round_setting(psi, lambda);
        // user counts apportion lambda*mu
        std::int64_t users = 0;
        for (std::int64_t c : rs.counts.users_per_cell) users += c;
        CHECK(users == rs.counts.total_users);
        CHECK(std::abs(double(rs.counts.total_users) - lambda * mu.total()) <= 1.0);
        // relay slots match lambda*M(W) within one unit
        const double MW = psi.relay_intensity().total();
        CHECK(std::abs(double(rs.counts.total_relay_slots) - lambda * MW) <= 1.0 + 1e-9);
        // counting terms evaluate cleanly (validation inside throws otherwise)
        CHECK_NOTHROW(count_terms(rs.counts));
        // realized setting is the counts over lambda
        CHECK(rs.setting.nu[0].total() ==
              doctest::Approx(double(/*k=1 routes*/ [&] {
                  std::int64_t n1 = 0;
                  for (const auto& [idx, cnt] : rs.counts.route[0]) n1 += cnt;
                  return n1;
              }()) / lambda));
        // the realized setting converges to psi as lambda grows
        const SettingDistance d = setting_distance(rs.setting, psi);
        CHECK(d.d0 <= 12.0 / std::sqrt(lambda)); // loose envelope
    }
    // the rounded settings approach psi: distance shrinks by an order
    const SettingDistance d40 = setting_distance(round_setting(psi, 40.0).setting, psi);
    const SettingDistance d4000 = setting_distance(round_setting(psi, 4000.0).setting, psi);
    CHECK(d4000.d0 < d40.d0);
}

TEST_CASE("the counting rate approaches the variational rate") {
    const Grid g = build_grid(Window{1, 1.0}, 3);
    Rng rng(23);
    const GridMeasure mu = random_positive(g, rng, 0.4);
    ModelParams params;
    params.gamma = 0.4;
    params.k_max = 2;
    const Beta0Minimizer mini = solve_beta0(g, mu, params);
    const TrajectorySetting psi = beta0_setting(mini, mu);

    const std::vector<double> lambdas{30.0, 300.0, 3000.0};
    const auto rows = rate_comparison(psi, mu, params, lambdas);
    REQUIRE(rows.size() == 3);
    const FunctionalValues v = eval_functionals(psi, mu, params);
    for (const auto& r : rows) {
        CHECK(r.neg_I == doctest::Approx(-v.I).epsilon(1e-12));
        CHECK(r.M_W == doctest::Approx(psi.relay_intensity().total()).epsilon(1e-12));
        CHECK(std::abs(r.hops_rate - r.M_W) <= 2.0 / r.lambda);
        CHECK(r.gap == doctest::Approx(std::abs(r.rate - r.neg_I)));
        CHECK(r.delta == doctest::Approx(1.0 / 3.0));
    }
    CHECK(rows[2].gap < rows[0].gap); // the gap shrinks along the lambda ladder

    std::ostringstream os;
    rate_table_csv(os, rows);
    const std::string s = os.str();
    CHECK(s.rfind("lambda,delta,rate,neg_I,gap,hops_rate,M_W\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 4); // header + one row per lambda
}

TEST_CASE("integerize round-trips the exact integer settings") {
    PointConfig p;
    p.dim = 1;
    p.n = 3;
    p.coords = {-0.5, -0.45, 0.6};
    const Grid g = build_grid(Window{1, 1.0}, 3);
    Rng rng(7);
    const double lambda = 3.0;

    // random configurations: counts -> setting -> integerize recovers counts
    for (int trial = 0; trial < 40; ++trial) {
        TrajectoryConfig cfg;
        for (std::size_t i = 0; i < 3; ++i) {
            Trajectory t;
            t.k = 1 + int(rng.uniform_below(2));
            for (int h = 1; h < t.k; ++h)
                t.relays.push_back(std::uint32_t(rng.uniform_below(3)));
            cfg.traj.push_back(t);
        }
        const SettingCounts sc = setting_counts_of(p, cfg, g, 2);
        const TrajectorySetting ts = trajectory_setting_of(p, cfg, lambda, g, 2);
        const IntegerizeResult ir = integerize_setting(ts, lambda);
        CHECK(ir.integral);
        CHECK(ir.consistent);
        CHECK(ir.counts == sc);
        CHECK(count_terms(ir.counts).class_count() == count_terms(ts, lambda, 3).class_count());
    }

    // a slightly perturbed mass is flagged as non-integral
    TrajectoryConfig cfg;
    cfg.traj = {Trajectory{1, {}}, Trajectory{1, {}}, Trajectory{1, {}}};
    TrajectorySetting ts = trajectory_setting_of(p, cfg, lambda, g, 2);
    ts.nu[0].add(0, 0.21 / lambda);
    CHECK_FALSE(integerize_setting(ts, lambda).integral);
}
