#pragma once
// Empirical measures of a trajectory collection, coarse-grained to the grid,
// and the bounded-Lipschitz metrics used to compare settings.
//
//   R_k = (1/lambda) sum_{users with k hops} delta_(route cells)   (on W^k)
//   P_m = (1/lambda) sum_{users with inflow m} delta_(own cell)
//
// A TrajectorySetting holds the same shape of data for limiting objects
// (solver outputs, generator settings): route measures nu_k and relay-load
// measures mu_m on one grid.  SettingCounts is the exact integer-count
// companion (masses times lambda) on which the combinatorial identities and
// the admissibility constraints hold in integer arithmetic.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "hopnet/energy.hpp"
#include "hopnet/measure.hpp"

namespace hopnet {

struct TrajectorySetting {
    Grid grid;
    int k_max = 1;
    std::vector<GridMeasureK> nu;   // index k-1
    std::map<int, GridMeasure> mum; // stored relay-load levels; absent = zero

    GridMeasure mum_level(int m) const;
    // M = sum_k sum_{l>=1} pi_l nu_k (the relay-intensity measure)
    GridMeasure relay_intensity() const;
    double max_stored_m() const { return mum.empty() ? 0 : mum.rbegin()->first; }
};

struct SettingCounts {
    Grid grid;
    int k_max = 1;
    std::int64_t total_users = 0;
    std::int64_t total_relay_slots = 0;                    // sum_i (k_i - 1)
    std::vector<std::map<std::int64_t, std::int64_t>> route; // per k: tuple index -> count
    std::map<std::int64_t, std::vector<std::int64_t>> inflow; // m -> per-cell user count
    std::vector<std::int64_t> users_per_cell;
    std::vector<std::int64_t> relay_slots_per_cell; // incoming hops per cell

    bool operator==(const SettingCounts&) const = default;
    std::string class_key() const;        // route+inflow counts (full class)
    std::string route_class_key() const;  // route counts only
};

SettingCounts setting_counts_of(const PointConfig& points, const TrajectoryConfig& cfg,
                                const Grid& grid, int k_max);

TrajectorySetting trajectory_setting_of(const PointConfig& points, const TrajectoryConfig& cfg,
                                        double lambda, const Grid& grid, int k_max);

// Bounded-Lipschitz distance sup{ |<a-b, f>| : |f| <= 1, Lip(f) <= 1 } between
// measures supported on cell centers (tuple centers for k-tuple measures, with
// the Euclidean distance on concatenated coordinates).  Computed exactly via
// the LP dual: a transshipment problem with arc cost min(dist, 2) and per-unit
// disposal/creation cost 1, solved by successive shortest paths.
// support_budget bounds the per-side support size (BudgetExceeded beyond).
double bl_distance(const GridMeasure& a, const GridMeasure& b, std::size_t support_budget = 400);
double bl_distance(const GridMeasureK& a, const GridMeasureK& b, std::size_t support_budget = 400);

struct SettingDistance {
    std::vector<double> d_k;        // per hop count, index k-1
    std::map<int, double> d_mum;    // per stored m level
    double d0 = 0.0;                // sum_k d_k + sum_m 2^-m d_mum
};

SettingDistance setting_distance(const TrajectorySetting& a, const TrajectorySetting& b,
                                 std::size_t support_budget = 400);

// flat CSV serialization: rows (kind in {nu, mum}, k-or-m, cell indices..., mass)
void setting_to_csv(std::ostream& os, const TrajectorySetting& s);
TrajectorySetting setting_from_csv(std::istream& is, const Grid& grid, int k_max);

} // namespace hopnet
