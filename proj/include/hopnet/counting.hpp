#pragma once
// Exact combinatorics of integer-rounded settings: the counting terms behind
// the entropy rate, a brute-force class-enumeration oracle, and the Stirling
// rate table comparing (1/lambda) log(N1*N2*N3/N0) with -I.
//
// A coarsened class fixes, per grid cell c with n_c users and h_c incoming
// hops, the multiset of route tuples started in c and the inflow profile
// (b_{c,m})_m (how many of its users receive m hops).  Then
//   N1 = prod_c multinomial(n_c; route counts)   who sends along which route
//   N2 = prod_c multinomial(n_c; (b_{c,m})_m)    who receives how many hops
//   N3 = prod_c h_c! / prod_m (m!)^{b_{c,m}}     which hops land on whom
//   N4 = prod_c n_c^{h_c}                        free relay completions
//   N0 = N^{sum of relay slots}                  a priori normalization
// and the class holds exactly N1*N2*N3 configurations; the coarser class
// keyed by routes alone holds N1*N4.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hopnet/empirical.hpp"
#include "hopnet/gibbs.hpp"

namespace hopnet {

using BigInt = boost::multiprecision::cpp_int;

// n! with a grown-once memo table; thread-safe.
BigInt factorial(std::int64_t n);

// multinomial(top; parts) = top! / prod parts!; throws std::invalid_argument
// unless the parts are nonnegative and sum to top.
BigInt multinomial(std::int64_t top, std::span<const std::int64_t> parts);

// Natural log of a positive big integer, accurate to ~1e-15 relative
// (top 53 bits plus an exact power of two); -inf for zero.
double log_big(const BigInt& v);

struct CountTerms {
    BigInt N0, N1, N2, N3, N4;
    BigInt class_count() const { return N1 * N2 * N3; }       // routes + inflow fixed
    BigInt route_class_count() const { return N1 * N4; }      // routes fixed, inflow free
};

// Evaluates the counting terms of an integer-count class.  Validates the
// bookkeeping identities (per-cell route totals, inflow mass and mean) and
// throws std::invalid_argument on any violation.
CountTerms count_terms(const SettingCounts& counts);

// The same for a measure-valued setting whose masses become integers after
// scaling by lambda (tolerance tol per entry); n_users must match the total.
// Throws std::invalid_argument on non-integer masses, inconsistent inflow, or
// a user-count mismatch.
CountTerms count_terms(const TrajectorySetting& setting, double lambda, std::int64_t n_users,
                       double tol = 1e-6);

// Scale a setting's masses by lambda and round to integer counts.
//   integral:   every lambda*mass is within tol of a nonnegative integer
//   consistent: the inflow profile reproduces each cell's user count and
//               incoming-hop count as derived from the routes
// counts is meaningful only when integral holds.
struct IntegerizeResult {
    bool integral = false;
    bool consistent = false;
    SettingCounts counts;
};
IntegerizeResult integerize_setting(const TrajectorySetting& s, double lambda, double tol = 1e-6);

// Exhaustive partition of all configurations of a point set into coarsened
// classes (route_only: keyed by route counts alone).  representative is the
// smallest configuration index in the class under the mixed-radix codec.
struct ClassEntry {
    std::string key;
    SettingCounts counts; // of the representative
    std::uint64_t size = 0;
    std::uint64_t representative = 0;
};
struct ClassEnumeration {
    std::vector<ClassEntry> classes; // key-ascending
    std::uint64_t total = 0;         // sum of sizes = (per-user choices)^N
    std::uint64_t per_user_choices = 0;
};
ClassEnumeration enumerate_classes(const PointConfig& points, const Grid& grid, int k_max,
                                   bool route_only = false, std::uint64_t budget = 20'000'000,
                                   bool parallel = false);

// Number of configurations whose coarsened counts equal the target exactly
// (independent single-target scan; same budget semantics as above).
BigInt brute_force_class_count(const PointConfig& points, const Grid& grid,
                               const SettingCounts& target, std::uint64_t budget = 20'000'000);

// Measure-valued target: masses that fail to be lambda-integers (tol) or an
// inconsistent inflow profile cannot be realized, so the count is zero.
BigInt brute_force_class_count(const PointConfig& points, const Grid& grid,
                               const TrajectorySetting& target, double lambda,
                               std::uint64_t budget = 20'000'000, double tol = 1e-9);

// Integer rounding of an admissible setting at a given lambda, preserving the
// structure the rate identity needs: per-cell user counts by largest-remainder
// apportionment of lambda*mu, per-cell route counts by largest remainder over
// the stored routes, total relay slots repaired to within one unit of
// lambda*M(W) by unit moves between same-cell routes, and per-cell inflow
// profiles shaped after the setting's own relay-load measures with the mass
// and mean repaired exactly.  setting holds the realized counts/lambda.
struct RoundedSetting {
    SettingCounts counts;
    TrajectorySetting setting;
};
RoundedSetting round_setting(const TrajectorySetting& psi, double lambda);

// One row of the rate table: exact counting rate of the lambda-rounded class
// next to the limiting -I of the input setting, plus the relay-slot rate
// (slot count / lambda) next to its limit M(W).
struct RateRow {
    double lambda = 0.0;
    double delta = 0.0;
    double rate = 0.0;      // (1/lambda) log(N1*N2*N3/N0)
    double neg_I = 0.0;     // -I(psi)
    double gap = 0.0;       // |rate - neg_I|
    double hops_rate = 0.0; // relay slots / lambda
    double M_W = 0.0;       // limiting relay-slot rate of psi
};
std::vector<RateRow> rate_comparison(const TrajectorySetting& psi, const GridMeasure& mu,
                                     const ModelParams& params, std::span<const double> lambdas);

void rate_table_csv(std::ostream& os, std::span<const RateRow> rows);

} // namespace hopnet
