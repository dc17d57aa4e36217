#include "hopnet/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "hopnet/gibbs.hpp"

namespace hopnet {

GridMeasure TrajectorySetting::mum_level(int m) const {
    auto it = mum.find(m);
    if (it != mum.end()) return it->second;
    return GridMeasure(grid);
}

GridMeasure TrajectorySetting::relay_intensity() const {
    GridMeasure M(grid);
    for (int k = 2; k <= k_max; ++k) {
        const GridMeasureK& nk = nu[std::size_t(k - 1)];
        for (int l = 1; l < k; ++l) {
            GridMeasure pl = nk.marginal(l);
            for (std::int64_t c = 0; c < grid.n_cells; ++c) M.mass[std::size_t(c)] += pl.mass[std::size_t(c)];
        }
    }
    return M;
}

std::string SettingCounts::class_key() const {
    std::ostringstream os;
    os << route_class_key() << "|P:";
    for (const auto& [m, cells] : inflow) {
        os << m << ':';
        for (std::size_t c = 0; c < cells.size(); ++c)
            if (cells[c] != 0) os << c << '=' << cells[c] << ',';
        os << ';';
    }
    return os.str();
}

std::string SettingCounts::route_class_key() const {
    std::ostringstream os;
    os << "R:";
    for (std::size_t k = 0; k < route.size(); ++k) {
        os << (k + 1) << ':';
        for (const auto& [idx, cnt] : route[k]) os << idx << '=' << cnt << ',';
        os << ';';
    }
    return os.str();
}

SettingCounts setting_counts_of(const PointConfig& points, const TrajectoryConfig& cfg,
                                const Grid& grid, int k_max) {
    SettingCounts sc;
    sc.grid = grid;
    sc.k_max = k_max;
    sc.total_users = std::int64_t(points.n);
    sc.route.resize(std::size_t(k_max));
    sc.users_per_cell.assign(std::size_t(grid.n_cells), 0);
    sc.relay_slots_per_cell.assign(std::size_t(grid.n_cells), 0);

    std::vector<std::int64_t> cell_of(points.n);
    for (std::size_t i = 0; i < points.n; ++i) {
        cell_of[i] = grid.locate_cell(points.point(i));
        ++sc.users_per_cell[std::size_t(cell_of[i])];
    }

    auto inflow = inflow_and_M(points.n, cfg, CongestionPenalty());
    std::vector<std::int64_t> tuple(static_cast<std::size_t>(k_max));
    for (std::size_t i = 0; i < points.n; ++i) {
        const Trajectory& t = cfg.traj[i];
        if (t.k < 1 || t.k > k_max) throw std::invalid_argument("setting_counts_of: hop count out of range");
        tuple[0] = cell_of[i];
        for (int l = 1; l < t.k; ++l) {
            tuple[std::size_t(l)] = cell_of[t.relays[std::size_t(l - 1)]];
            ++sc.relay_slots_per_cell[std::size_t(tuple[std::size_t(l)])];
        }
        std::int64_t idx = 0;
        for (int l = 0; l < t.k; ++l) idx = idx * grid.n_cells + tuple[std::size_t(l)];
        ++sc.route[std::size_t(t.k - 1)][idx];
        sc.total_relay_slots += t.k - 1;

        auto& row = sc.inflow[inflow.m[i]];
        if (row.empty()) row.assign(std::size_t(grid.n_cells), 0);
        ++row[std::size_t(cell_of[i])];
    }
    return sc;
}

TrajectorySetting trajectory_setting_of(const PointConfig& points, const TrajectoryConfig& cfg,
                                        double lambda, const Grid& grid, int k_max) {
    SettingCounts sc = setting_counts_of(points, cfg, grid, k_max);
    TrajectorySetting s;
    s.grid = grid;
    s.k_max = k_max;
    for (int k = 1; k <= k_max; ++k) {
        GridMeasureK nk(grid, k);
        for (const auto& [idx, cnt] : sc.route[std::size_t(k - 1)])
            nk.add(idx, double(cnt) / lambda);
        s.nu.push_back(std::move(nk));
    }
    for (const auto& [m, cells] : sc.inflow) {
        GridMeasure pm(grid);
        for (std::int64_t c = 0; c < grid.n_cells; ++c)
            pm.mass[std::size_t(c)] = double(cells[std::size_t(c)]) / lambda;
        s.mum[int(m)] = std::move(pm);
    }
    return s;
}

namespace {

// Min-cost transport with disposal: supplies and demands on point sets with
// coordinates, arc cost min(Euclidean distance, 2), disposal/creation cost 1.
// Successive shortest paths with Dijkstra and node potentials; the optimum
// equals the bounded-Lipschitz LP by duality.
double transport_value(const std::vector<std::vector<double>>& src_pts, std::vector<double> supply,
                       const std::vector<std::vector<double>>& dst_pts, std::vector<double> demand) {
    const std::size_t S = src_pts.size() + 1; // last = creation node (feeds demand at cost 1)
    const std::size_t D = dst_pts.size() + 1; // last = disposal node (absorbs supply at cost 1)
    double total_supply = 0.0, total_demand = 0.0;
    for (double v : supply) total_supply += v;
    for (double v : demand) total_demand += v;
    supply.push_back(total_demand); // creation capacity
    demand.push_back(total_supply); // disposal capacity
    if (total_supply + total_demand == 0.0) return 0.0;

    auto cost = [&](std::size_t i, std::size_t j) -> double {
        const bool dummy_i = (i + 1 == S), dummy_j = (j + 1 == D);
        if (dummy_i && dummy_j) return 0.0;
        if (dummy_i || dummy_j) return 1.0;
        double s = 0.0;
        for (std::size_t c = 0; c < src_pts[i].size(); ++c) {
            const double d = src_pts[i][c] - dst_pts[j][c];
            s += d * d;
        }
        return std::min(std::sqrt(s), 2.0);
    };

    std::vector<std::vector<double>> flow(S, std::vector<double>(D, 0.0));
    std::vector<double> pot_src(S, 0.0), pot_dst(D, 0.0);
    const double eps = 1e-14 * std::max(1.0, total_supply + total_demand);
    double value = 0.0;

    for (;;) {
        std::size_t s0 = S;
        for (std::size_t i = 0; i < S; ++i)
            if (supply[i] > eps) { s0 = i; break; }
        if (s0 == S) break;

        // Dijkstra over the bipartite residual graph from s0: forward arcs
        // src->dst (always available), backward arcs dst->src where flow > 0.
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> dist_s(S, inf), dist_d(D, inf);
        std::vector<std::size_t> prev_d(D, S);           // predecessor source of a sink
        std::vector<std::size_t> prev_s(S, D);           // predecessor sink of a source
        std::vector<bool> done_s(S, false), done_d(D, false);
        dist_s[s0] = 0.0;
        for (;;) {
            // pick the unsettled node (either side) with the least distance
            double best = inf;
            std::size_t bi = S + D;
            bool side_src = true;
            for (std::size_t i = 0; i < S; ++i)
                if (!done_s[i] && dist_s[i] < best) { best = dist_s[i]; bi = i; side_src = true; }
            for (std::size_t j = 0; j < D; ++j)
                if (!done_d[j] && dist_d[j] < best) { best = dist_d[j]; bi = j; side_src = false; }
            if (bi == S + D) break;
            if (side_src) {
                done_s[bi] = true;
                for (std::size_t j = 0; j < D; ++j) {
                    if (done_d[j]) continue;
                    const double rc = cost(bi, j) + pot_src[bi] - pot_dst[j];
                    if (dist_s[bi] + rc < dist_d[j] - 1e-18) {
                        dist_d[j] = dist_s[bi] + rc;
                        prev_d[j] = bi;
                    }
                }
            } else {
                done_d[bi] = true;
                for (std::size_t i = 0; i < S; ++i) {
                    if (done_s[i] || flow[i][bi] <= eps) continue;
                    const double rc = -cost(i, bi) - pot_src[i] + pot_dst[bi];
                    if (dist_d[bi] + rc < dist_s[i] - 1e-18) {
                        dist_s[i] = dist_d[bi] + rc;
                        prev_s[i] = bi;
                    }
                }
            }
        }

        // cheapest reachable sink with remaining demand
        std::size_t t0 = D;
        double bestd = inf;
        for (std::size_t j = 0; j < D; ++j)
            if (demand[j] > eps && dist_d[j] < bestd) { bestd = dist_d[j]; t0 = j; }
        if (t0 == D) break; // should not happen: disposal always reachable

        // bottleneck along the alternating path
        double push = std::min(supply[s0], demand[t0]);
        {
            std::size_t j = t0;
            for (;;) {
                const std::size_t i = prev_d[j];
                if (i == s0) break;
                const std::size_t jprev = prev_s[i];
                push = std::min(push, flow[i][jprev]);
                j = jprev;
            }
        }
        // apply augmentation
        {
            std::size_t j = t0;
            for (;;) {
                const std::size_t i = prev_d[j];
                flow[i][j] += push;
                if (i == s0) break;
                const std::size_t jprev = prev_s[i];
                flow[i][jprev] -= push;
                j = jprev;
            }
        }
        supply[s0] -= push;
        demand[t0] -= push;
        // update potentials for settled nodes
        for (std::size_t i = 0; i < S; ++i)
            if (done_s[i] && std::isfinite(dist_s[i])) pot_src[i] += dist_s[i];
        for (std::size_t j = 0; j < D; ++j)
            if (done_d[j] && std::isfinite(dist_d[j])) pot_dst[j] += dist_d[j];
    }

    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < D; ++j)
            if (flow[i][j] > 0) value += flow[i][j] * cost(i, j);
    return value;
}

double bl_from_signed(const std::vector<std::vector<double>>& pts, const std::vector<double>& diff,
                      std::size_t support_budget) {
    std::vector<std::vector<double>> src, dst;
    std::vector<double> sup, dem;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (diff[i] > 0) {
            src.push_back(pts[i]);
            sup.push_back(diff[i]);
        } else if (diff[i] < 0) {
            dst.push_back(pts[i]);
            dem.push_back(-diff[i]);
        }
    }
    if (src.size() > support_budget || dst.size() > support_budget)
        throw BudgetExceeded("bl_distance: support size exceeds budget");
    return transport_value(src, sup, dst, dem);
}

} // namespace

double bl_distance(const GridMeasure& a, const GridMeasure& b, std::size_t support_budget) {
    if (a.grid.n_cells != b.grid.n_cells || a.grid.per_axis != b.grid.per_axis)
        throw std::invalid_argument("bl_distance: grid mismatch");
    std::vector<std::vector<double>> pts;
    std::vector<double> diff;
    for (std::int64_t c = 0; c < a.grid.n_cells; ++c) {
        const double d = a.mass[std::size_t(c)] - b.mass[std::size_t(c)];
        if (d != 0.0) {
            pts.push_back(a.grid.cell_center(c));
            diff.push_back(d);
        }
    }
    return bl_from_signed(pts, diff, support_budget);
}

double bl_distance(const GridMeasureK& a, const GridMeasureK& b, std::size_t support_budget) {
    if (a.k() != b.k()) throw std::invalid_argument("bl_distance: tuple arity mismatch");
    if (a.grid().n_cells != b.grid().n_cells || a.grid().per_axis != b.grid().per_axis)
        throw std::invalid_argument("bl_distance: grid mismatch");
    // collect the union support as signed masses keyed by tuple index
    std::map<std::int64_t, double> signed_mass;
    a.for_each([&](std::int64_t idx, double m) { signed_mass[idx] += m; });
    b.for_each([&](std::int64_t idx, double m) { signed_mass[idx] -= m; });
    std::vector<std::vector<double>> pts;
    std::vector<double> diff;
    for (const auto& [idx, d] : signed_mass) {
        if (d == 0.0) continue;
        auto cells = a.tuple_cells(idx);
        std::vector<double> x;
        for (std::int64_t c : cells) {
            auto cc = a.grid().cell_center(c);
            x.insert(x.end(), cc.begin(), cc.end());
        }
        pts.push_back(std::move(x));
        diff.push_back(d);
    }
    return bl_from_signed(pts, diff, support_budget);
}

SettingDistance setting_distance(const TrajectorySetting& a, const TrajectorySetting& b,
                                 std::size_t support_budget) {
    if (a.k_max != b.k_max) throw std::invalid_argument("setting_distance: k_max mismatch");
    SettingDistance out;
    for (int k = 1; k <= a.k_max; ++k) {
        const double d = bl_distance(a.nu[std::size_t(k - 1)], b.nu[std::size_t(k - 1)], support_budget);
        out.d_k.push_back(d);
        out.d0 += d;
    }
    std::vector<int> levels;
    for (const auto& [m, _] : a.mum) levels.push_back(m);
    for (const auto& [m, _] : b.mum)
        if (!a.mum.count(m)) levels.push_back(m);
    std::sort(levels.begin(), levels.end());
    for (int m : levels) {
        const double d = bl_distance(a.mum_level(m), b.mum_level(m), support_budget);
        out.d_mum[m] = d;
        out.d0 += std::pow(2.0, -double(m)) * d;
    }
    return out;
}

void setting_to_csv(std::ostream& os, const TrajectorySetting& s) {
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "kind,k_or_m,cells...,mass\n";
    for (int k = 1; k <= s.k_max; ++k) {
        s.nu[std::size_t(k - 1)].for_each([&](std::int64_t idx, double m) {
            os << "nu," << k;
            for (std::int64_t c : s.nu[std::size_t(k - 1)].tuple_cells(idx)) os << ',' << c;
            os << ',' << fmt(m) << '\n';
        });
    }
    for (const auto& [m, meas] : s.mum)
        for (std::int64_t c = 0; c < meas.grid.n_cells; ++c)
            if (meas.mass[std::size_t(c)] != 0.0)
                os << "mum," << m << ',' << c << ',' << fmt(meas.mass[std::size_t(c)]) << '\n';
}

TrajectorySetting setting_from_csv(std::istream& is, const Grid& grid, int k_max) {
    TrajectorySetting s;
    s.grid = grid;
    s.k_max = k_max;
    for (int k = 1; k <= k_max; ++k) s.nu.emplace_back(grid, k);
    // strtod rather than std::stod: the writer prints every finite double,
    // and subnormal masses must read back instead of raising underflow
    const auto parse_mass = [](const std::string& v, const std::string& line) {
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0' || !std::isfinite(x))
            throw std::invalid_argument("setting_from_csv: bad mass in row: " + line);
        return x;
    };
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("kind,", 0) == 0) continue;
        std::vector<std::string> f;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) f.push_back(tok);
        if (f.size() < 4) throw std::invalid_argument("setting_from_csv: short row: " + line);
        const double mass = parse_mass(f.back(), line);
        if (f[0] == "nu") {
            const int k = std::stoi(f[1]);
            if (k < 1 || k > k_max || int(f.size()) != k + 3)
                throw std::invalid_argument("setting_from_csv: bad nu row: " + line);
            std::vector<std::int64_t> cells(static_cast<std::size_t>(k));
            for (int l = 0; l < k; ++l) cells[std::size_t(l)] = std::stoll(f[std::size_t(l + 2)]);
            auto& nk = s.nu[std::size_t(k - 1)];
            nk.add(nk.tuple_index(cells), mass);
        } else if (f[0] == "mum") {
            const int m = std::stoi(f[1]);
            const std::int64_t c = std::stoll(f[2]);
            auto it = s.mum.find(m);
            if (it == s.mum.end()) it = s.mum.emplace(m, GridMeasure(grid)).first;
            it->second.mass[std::size_t(c)] += mass;
        } else {
            throw std::invalid_argument("setting_from_csv: unknown row kind: " + f[0]);
        }
    }
    return s;
}

} // namespace hopnet
