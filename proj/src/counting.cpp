#include "hopnet/counting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include "hopnet/variational.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hopnet {

BigInt factorial(std::int64_t n) {
    if (n < 0) throw std::invalid_argument("factorial: negative argument");
    static std::vector<BigInt> memo{BigInt(1)};
    static std::mutex lock;
    std::scoped_lock guard(lock);
    while (std::int64_t(memo.size()) <= n) memo.push_back(memo.back() * std::int64_t(memo.size()));
    return memo[std::size_t(n)];
}

BigInt multinomial(std::int64_t top, std::span<const std::int64_t> parts) {
    std::int64_t sum = 0;
    for (std::int64_t p : parts) {
        if (p < 0) throw std::invalid_argument("multinomial: negative part");
        sum += p;
    }
    if (sum != top) throw std::invalid_argument("multinomial: parts do not sum to the top");
    BigInt v = factorial(top);
    for (std::int64_t p : parts)
        if (p > 1) v /= factorial(p);
    return v;
}

double log_big(const BigInt& v) {
    if (v < 0) throw std::invalid_argument("log_big: negative argument");
    if (v == 0) return -std::numeric_limits<double>::infinity();
    const unsigned b = boost::multiprecision::msb(v);
    if (b <= 52) return std::log(v.convert_to<double>());
    const BigInt top = v >> (b - 52);
    return std::log(top.convert_to<double>()) + double(b - 52) * std::log(2.0);
}

namespace {

// digits of a route tuple index, first cell most significant
void tuple_digits(std::int64_t idx, int k, std::int64_t n_cells, std::vector<std::int64_t>& out) {
    out.assign(std::size_t(k), 0);
    for (int l = k - 1; l >= 0; --l) {
        out[std::size_t(l)] = idx % n_cells;
        idx /= n_cells;
    }
}

// Integer apportionment: nonnegative counts summing to total with
// |count_i - weight_i * total / sum(weights)| < 1, largest fractional parts
// rounded up first (ties by smaller index).
std::vector<std::int64_t> largest_remainder(std::span<const double> weights, std::int64_t total) {
    const std::size_t n = weights.size();
    std::vector<std::int64_t> out(n, 0);
    if (total == 0) return out;
    if (total < 0) throw std::invalid_argument("largest_remainder: negative total");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < -1e-12) throw std::invalid_argument("largest_remainder: negative weight");
        wsum += std::max(w, 0.0);
    }
    if (wsum <= 0.0) throw std::invalid_argument("largest_remainder: zero weights with positive total");
    std::vector<double> frac(n, 0.0);
    std::int64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double q = std::max(weights[i], 0.0) / wsum * double(total);
        const double fl = std::floor(q);
        out[i] = std::int64_t(fl);
        frac[i] = q - fl;
        assigned += out[i];
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (frac[a] != frac[b]) return frac[a] > frac[b];
        return a < b;
    });
    std::int64_t rem = total - assigned;
    for (std::size_t j = 0; rem > 0 && j < n; ++j, --rem) ++out[order[j]];
    // floating-point slack can leave the floor sum one past the total
    for (std::size_t j = n; rem < 0 && j > 0; --j) {
        const std::size_t i = order[j - 1];
        if (out[i] > 0) { --out[i]; ++rem; }
    }
    if (rem != 0) throw std::runtime_error("largest_remainder: apportionment failed");
    return out;
}

} // namespace

CountTerms count_terms(const SettingCounts& sc) {
    const std::int64_t n = sc.grid.n_cells;
    if (int(sc.route.size()) != sc.k_max)
        throw std::invalid_argument("count_terms: route table does not match k_max");
    if (std::int64_t(sc.users_per_cell.size()) != n || std::int64_t(sc.relay_slots_per_cell.size()) != n)
        throw std::invalid_argument("count_terms: per-cell tables do not match the grid");

    std::vector<std::vector<std::int64_t>> route_parts(static_cast<std::size_t>(n));
    std::vector<std::int64_t> slots(std::size_t(n), 0), users(std::size_t(n), 0);
    std::int64_t slots_total = 0;
    std::vector<std::int64_t> digits;
    for (int k = 1; k <= sc.k_max; ++k) {
        for (const auto& [idx, cnt] : sc.route[std::size_t(k - 1)]) {
            if (cnt < 0) throw std::invalid_argument("count_terms: negative route count");
            if (cnt == 0) continue;
            if (idx < 0) throw std::invalid_argument("count_terms: route index out of range");
            tuple_digits(idx, k, n, digits);
            route_parts[std::size_t(digits[0])].push_back(cnt);
            users[std::size_t(digits[0])] += cnt;
            for (int l = 1; l < k; ++l) slots[std::size_t(digits[std::size_t(l)])] += cnt;
            slots_total += std::int64_t(k - 1) * cnt;
        }
    }
    std::int64_t users_total = 0;
    for (std::int64_t c = 0; c < n; ++c) {
        if (users[std::size_t(c)] != sc.users_per_cell[std::size_t(c)])
            throw std::invalid_argument("count_terms: route counts do not reproduce the cell user counts");
        if (slots[std::size_t(c)] != sc.relay_slots_per_cell[std::size_t(c)])
            throw std::invalid_argument("count_terms: route counts do not reproduce the incoming-hop counts");
        users_total += users[std::size_t(c)];
    }
    if (users_total != sc.total_users)
        throw std::invalid_argument("count_terms: total user count mismatch");
    if (slots_total != sc.total_relay_slots)
        throw std::invalid_argument("count_terms: total relay-slot count mismatch");

    // inflow profile per cell, validated against mass and incoming hops
    std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> prof(static_cast<std::size_t>(n));
    for (const auto& [m, row] : sc.inflow) {
        if (m < 0) throw std::invalid_argument("count_terms: negative inflow level");
        if (std::int64_t(row.size()) != n)
            throw std::invalid_argument("count_terms: inflow row does not match the grid");
        for (std::int64_t c = 0; c < n; ++c) {
            if (row[std::size_t(c)] < 0) throw std::invalid_argument("count_terms: negative inflow count");
            if (row[std::size_t(c)] > 0) prof[std::size_t(c)].push_back({m, row[std::size_t(c)]});
        }
    }

    CountTerms ct;
    ct.N1 = ct.N2 = ct.N3 = ct.N4 = 1;
    std::vector<std::int64_t> bparts;
    for (std::int64_t c = 0; c < n; ++c) {
        const std::int64_t nc = users[std::size_t(c)], hc = slots[std::size_t(c)];
        std::int64_t bsum = 0, bmean = 0;
        bparts.clear();
        for (const auto& [m, cnt] : prof[std::size_t(c)]) {
            bsum += cnt;
            bmean += m * cnt;
            bparts.push_back(cnt);
        }
        if (bsum != nc)
            throw std::invalid_argument("count_terms: inflow profile mass does not match the cell user count");
        if (bmean != hc)
            throw std::invalid_argument("count_terms: inflow profile mean does not match the incoming hops");
        ct.N1 *= multinomial(nc, route_parts[std::size_t(c)]);
        ct.N2 *= multinomial(nc, bparts);
        BigInt denom = 1;
        for (const auto& [m, cnt] : prof[std::size_t(c)])
            if (m > 1) denom *= boost::multiprecision::pow(factorial(m), unsigned(cnt));
        ct.N3 *= factorial(hc) / denom;
        ct.N4 *= boost::multiprecision::pow(BigInt(nc), unsigned(hc));
    }
    ct.N0 = boost::multiprecision::pow(BigInt(sc.total_users), unsigned(slots_total));
    return ct;
}

IntegerizeResult integerize_setting(const TrajectorySetting& s, double lambda, double tol) {
    IntegerizeResult res;
    const Grid& grid = s.grid;
    const std::int64_t n = grid.n_cells;
    SettingCounts& sc = res.counts;
    sc.grid = grid;
    sc.k_max = s.k_max;
    sc.route.resize(std::size_t(s.k_max));
    sc.users_per_cell.assign(std::size_t(n), 0);
    sc.relay_slots_per_cell.assign(std::size_t(n), 0);
    if (int(s.nu.size()) != s.k_max) return res;

    bool ok = true;
    std::vector<std::int64_t> digits;
    for (int k = 1; k <= s.k_max && ok; ++k) {
        s.nu[std::size_t(k - 1)].for_each([&](std::int64_t idx, double mass) {
            if (!ok) return;
            const double v = lambda * mass;
            const std::int64_t cnt = std::llround(v);
            if (cnt < 0 || std::abs(v - double(cnt)) > tol) { ok = false; return; }
            if (cnt == 0) return;
            sc.route[std::size_t(k - 1)][idx] = cnt;
            tuple_digits(idx, k, n, digits);
            sc.users_per_cell[std::size_t(digits[0])] += cnt;
            for (int l = 1; l < k; ++l) sc.relay_slots_per_cell[std::size_t(digits[std::size_t(l)])] += cnt;
            sc.total_users += cnt;
            sc.total_relay_slots += std::int64_t(k - 1) * cnt;
        });
    }
    if (!ok) return res;

    std::vector<std::int64_t> bsum(std::size_t(n), 0), bmean(std::size_t(n), 0);
    for (const auto& [m, pm] : s.mum) {
        if (m < 0) return res;
        std::vector<std::int64_t> row(std::size_t(n), 0);
        bool any = false;
        for (std::int64_t c = 0; c < n; ++c) {
            const double v = lambda * pm.mass[std::size_t(c)];
            const std::int64_t cnt = std::llround(v);
            if (cnt < 0 || std::abs(v - double(cnt)) > tol) return res;
            row[std::size_t(c)] = cnt;
            bsum[std::size_t(c)] += cnt;
            bmean[std::size_t(c)] += std::int64_t(m) * cnt;
            any = any || cnt > 0;
        }
        if (any) sc.inflow[m] = std::move(row);
    }
    res.integral = true;
    res.consistent = true;
    for (std::int64_t c = 0; c < n; ++c)
        if (bsum[std::size_t(c)] != sc.users_per_cell[std::size_t(c)] ||
            bmean[std::size_t(c)] != sc.relay_slots_per_cell[std::size_t(c)])
            res.consistent = false;
    return res;
}

CountTerms count_terms(const TrajectorySetting& setting, double lambda, std::int64_t n_users,
                       double tol) {
    IntegerizeResult r = integerize_setting(setting, lambda, tol);
    if (!r.integral)
        throw std::invalid_argument("count_terms: setting masses are not integers at this lambda");
    if (!r.consistent)
        throw std::invalid_argument("count_terms: inflow profile inconsistent with the routes");
    if (r.counts.total_users != n_users)
        throw std::invalid_argument("count_terms: total user count does not match n_users");
    return count_terms(r.counts);
}

namespace {

// budget check for exhaustive enumeration; returns T^N
std::uint64_t config_space_size(std::uint64_t per_user, std::size_t n_users, std::uint64_t budget) {
    std::uint64_t total = 1;
    for (std::size_t u = 0; u < n_users; ++u) {
        if (per_user != 0 && total > budget / per_user)
            throw BudgetExceeded("enumeration budget exceeded: configuration space too large");
        total *= per_user;
    }
    if (total > budget)
        throw BudgetExceeded("enumeration budget exceeded: configuration space too large");
    return total;
}

struct ClassAcc {
    std::uint64_t size = 0;
    std::uint64_t representative = 0;
    SettingCounts counts;
};

// scan configurations [first, last) of the mixed-radix codec, grouping by key
void scan_configs(const PointConfig& points, const Grid& grid, int k_max, std::uint64_t per_user,
                  std::uint64_t first, std::uint64_t last, bool route_only,
                  std::map<std::string, ClassAcc>& acc) {
    const std::size_t N = points.n;
    std::vector<std::uint64_t> digit(N, 0);
    TrajectoryConfig cfg;
    cfg.traj.resize(N);
    std::uint64_t rest = first;
    for (std::size_t u = N; u > 0; --u) {
        digit[u - 1] = rest % per_user;
        rest /= per_user;
    }
    for (std::size_t u = 0; u < N; ++u) cfg.traj[u] = decode_trajectory(digit[u], N, k_max);
    for (std::uint64_t c = first; c < last; ++c) {
        SettingCounts sc = setting_counts_of(points, cfg, grid, k_max);
        const std::string key = route_only ? sc.route_class_key() : sc.class_key();
        auto [it, inserted] = acc.try_emplace(key);
        if (inserted) {
            it->second.representative = c;
            it->second.counts = std::move(sc);
        }
        ++it->second.size;
        for (std::size_t u = N; u > 0; --u) { // odometer, last user least significant
            if (++digit[u - 1] < per_user) {
                cfg.traj[u - 1] = decode_trajectory(digit[u - 1], N, k_max);
                break;
            }
            digit[u - 1] = 0;
            cfg.traj[u - 1] = decode_trajectory(0, N, k_max);
        }
    }
}

} // namespace

ClassEnumeration enumerate_classes(const PointConfig& points, const Grid& grid, int k_max,
                                   bool route_only, std::uint64_t budget, bool parallel) {
    if (points.n == 0) throw std::invalid_argument("enumerate_classes: empty point configuration");
    auto per_user = per_user_choice_count(points.n, k_max, budget);
    if (!per_user) throw BudgetExceeded("enumeration budget exceeded: too many per-user choices");
    const std::uint64_t total = config_space_size(*per_user, points.n, budget);

    std::map<std::string, ClassAcc> acc;
    if (parallel && points.n > 1) {
        const std::uint64_t stride = total / *per_user;
        std::vector<std::map<std::string, ClassAcc>> partial(*per_user);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
        for (std::int64_t t0 = 0; t0 < std::int64_t(*per_user); ++t0)
            scan_configs(points, grid, k_max, *per_user, std::uint64_t(t0) * stride,
                         (std::uint64_t(t0) + 1) * stride, route_only, partial[std::size_t(t0)]);
        for (auto& part : partial) // ascending t0 keeps the smallest representative first
            for (auto& [key, a] : part) {
                auto [it, inserted] = acc.try_emplace(key);
                if (inserted) {
                    it->second.representative = a.representative;
                    it->second.counts = std::move(a.counts);
                }
                it->second.size += a.size;
            }
    } else {
        scan_configs(points, grid, k_max, *per_user, 0, total, route_only, acc);
    }

    ClassEnumeration out;
    out.per_user_choices = *per_user;
    for (auto& [key, a] : acc) {
        out.total += a.size;
        out.classes.push_back({key, std::move(a.counts), a.size, a.representative});
    }
    if (out.total != total) throw std::runtime_error("enumerate_classes: class sizes do not cover the space");
    return out;
}

BigInt brute_force_class_count(const PointConfig& points, const Grid& grid,
                               const SettingCounts& target, std::uint64_t budget) {
    if (points.n == 0) throw std::invalid_argument("brute_force_class_count: empty point configuration");
    const int k_max = target.k_max;
    auto per_user = per_user_choice_count(points.n, k_max, budget);
    if (!per_user) throw BudgetExceeded("enumeration budget exceeded: too many per-user choices");
    const std::uint64_t total = config_space_size(*per_user, points.n, budget);

    const std::size_t N = points.n;
    std::vector<std::uint64_t> digit(N, 0);
    TrajectoryConfig cfg;
    cfg.traj.resize(N);
    for (std::size_t u = 0; u < N; ++u) cfg.traj[u] = decode_trajectory(0, N, k_max);
    std::uint64_t hits = 0;
    for (std::uint64_t c = 0; c < total; ++c) {
        if (setting_counts_of(points, cfg, grid, k_max) == target) ++hits;
        for (std::size_t u = N; u > 0; --u) {
            if (++digit[u - 1] < *per_user) {
                cfg.traj[u - 1] = decode_trajectory(digit[u - 1], N, k_max);
                break;
            }
            digit[u - 1] = 0;
            cfg.traj[u - 1] = decode_trajectory(0, N, k_max);
        }
    }
    return BigInt(hits);
}

BigInt brute_force_class_count(const PointConfig& points, const Grid& grid,
                               const TrajectorySetting& target, double lambda,
                               std::uint64_t budget, double tol) {
    IntegerizeResult r = integerize_setting(target, lambda, tol);
    if (!r.integral || !r.consistent) return BigInt(0);
    return brute_force_class_count(points, grid, r.counts, budget);
}

namespace {

struct CellRoute {
    int k = 1;
    std::int64_t idx = 0;
    double mass = 0.0;
    std::int64_t count = 0;
};

} // namespace

RoundedSetting round_setting(const TrajectorySetting& psi, double lambda) {
    const Grid& grid = psi.grid;
    const std::int64_t n = grid.n_cells;
    if (int(psi.nu.size()) != psi.k_max)
        throw std::invalid_argument("round_setting: setting has no route measure for every hop count");
    if (!(lambda > 0)) throw std::invalid_argument("round_setting: lambda must be positive");

    // per-cell user masses and the stored routes grouped by start cell
    std::vector<double> ucell(std::size_t(n), 0.0);
    std::vector<std::vector<CellRoute>> routes(static_cast<std::size_t>(n));
    double MW = 0.0;
    std::vector<std::int64_t> digits;
    for (int k = 1; k <= psi.k_max; ++k) {
        const auto& nk = psi.nu[std::size_t(k - 1)];
        MW += double(k - 1) * nk.total();
        nk.for_each([&](std::int64_t idx, double mass) {
            if (mass <= 0.0) return;
            tuple_digits(idx, k, n, digits);
            ucell[std::size_t(digits[0])] += mass;
            routes[std::size_t(digits[0])].push_back({k, idx, mass, 0});
        });
    }
    double utotal = 0.0;
    for (double u : ucell) utotal += u;
    const std::int64_t T = std::llround(lambda * utotal);

    std::vector<std::int64_t> nc(std::size_t(n), 0);
    if (T > 0) nc = largest_remainder(ucell, T);
    std::int64_t H = 0;
    for (std::int64_t c = 0; c < n; ++c) {
        auto& rts = routes[std::size_t(c)];
        if (nc[std::size_t(c)] == 0) continue;
        if (rts.empty())
            throw std::invalid_argument("round_setting: populated cell has no stored route");
        std::vector<double> w(rts.size());
        for (std::size_t i = 0; i < rts.size(); ++i) w[i] = rts[i].mass;
        auto cnt = largest_remainder(w, nc[std::size_t(c)]);
        for (std::size_t i = 0; i < rts.size(); ++i) {
            rts[i].count = cnt[i];
            H += std::int64_t(rts[i].k - 1) * cnt[i];
        }
    }

    // repair the relay-slot total to within one unit of lambda * M(W) by unit
    // moves between routes sharing a start cell
    const double target = lambda * MW;
    while (std::abs(double(H) - target) > 1.0 + 1e-9) {
        double best = std::abs(double(H) - target);
        std::int64_t bc = -1;
        std::size_t bd = 0, br = 0;
        for (std::int64_t c = 0; c < n; ++c) {
            const auto& rts = routes[std::size_t(c)];
            for (std::size_t d = 0; d < rts.size(); ++d) {
                if (rts[d].count == 0) continue;
                for (std::size_t r = 0; r < rts.size(); ++r) {
                    const int delta = rts[r].k - rts[d].k;
                    if (delta == 0) continue;
                    const double nd = std::abs(double(H + delta) - target);
                    if (nd < best - 1e-12) {
                        best = nd;
                        bc = c;
                        bd = d;
                        br = r;
                    }
                }
            }
        }
        if (bc < 0) break; // no unit move improves the slot total further
        auto& rts = routes[std::size_t(bc)];
        --rts[bd].count;
        ++rts[br].count;
        H += rts[br].k - rts[bd].k;
    }

    RoundedSetting out;
    SettingCounts& sc = out.counts;
    sc.grid = grid;
    sc.k_max = psi.k_max;
    sc.route.resize(std::size_t(psi.k_max));
    sc.users_per_cell = nc;
    sc.relay_slots_per_cell.assign(std::size_t(n), 0);
    sc.total_users = T;
    sc.total_relay_slots = H;
    for (std::int64_t c = 0; c < n; ++c)
        for (const auto& rt : routes[std::size_t(c)]) {
            if (rt.count == 0) continue;
            sc.route[std::size_t(rt.k - 1)][rt.idx] += rt.count;
            tuple_digits(rt.idx, rt.k, n, digits);
            for (int l = 1; l < rt.k; ++l)
                sc.relay_slots_per_cell[std::size_t(digits[std::size_t(l)])] += rt.count;
        }

    // inflow profiles: shaped after the setting's relay-load measures, then
    // the mass and mean repaired to the exact per-cell counts
    std::vector<int> levels;
    for (const auto& [m, pm] : psi.mum) levels.push_back(m);
    std::sort(levels.begin(), levels.end());
    for (std::int64_t c = 0; c < n; ++c) {
        const std::int64_t users = nc[std::size_t(c)], hops = sc.relay_slots_per_cell[std::size_t(c)];
        if (users == 0) {
            if (hops != 0)
                throw std::invalid_argument("round_setting: incoming hops into a cell with no users");
            continue;
        }
        std::map<std::int64_t, std::int64_t> b;
        std::vector<double> w(levels.size(), 0.0);
        double wsum = 0.0;
        for (std::size_t i = 0; i < levels.size(); ++i) {
            w[i] = std::max(psi.mum.at(levels[i]).mass[std::size_t(c)], 0.0);
            wsum += w[i];
        }
        if (wsum > 0.0) {
            auto cnt = largest_remainder(w, users);
            for (std::size_t i = 0; i < levels.size(); ++i)
                if (cnt[i] > 0) b[levels[i]] = cnt[i];
        } else {
            b[0] = users; // no stored shape for this cell; start flat and repair
        }
        std::int64_t mean = 0;
        for (const auto& [m, cnt] : b) mean += m * cnt;
        auto largest_level = [&](bool positive_m) {
            std::int64_t pick = -1, best_cnt = 0;
            for (const auto& [m, cnt] : b) {
                if (positive_m && m == 0) continue;
                if (cnt > best_cnt) {
                    best_cnt = cnt;
                    pick = m;
                }
            }
            return pick;
        };
        while (mean < hops) {
            const std::int64_t m = largest_level(false);
            --b[m];
            if (b[m] == 0) b.erase(m);
            ++b[m + 1];
            ++mean;
        }
        while (mean > hops) {
            const std::int64_t m = largest_level(true);
            --b[m];
            if (b[m] == 0) b.erase(m);
            ++b[m - 1];
            --mean;
        }
        for (const auto& [m, cnt] : b) {
            auto& row = sc.inflow[m];
            if (row.empty()) row.assign(std::size_t(n), 0);
            row[std::size_t(c)] = cnt;
        }
    }

    // realized empirical measures: counts / lambda
    TrajectorySetting& rs = out.setting;
    rs.grid = grid;
    rs.k_max = psi.k_max;
    for (int k = 1; k <= psi.k_max; ++k) {
        GridMeasureK nk(grid, k);
        for (const auto& [idx, cnt] : sc.route[std::size_t(k - 1)]) nk.add(idx, double(cnt) / lambda);
        rs.nu.push_back(std::move(nk));
    }
    for (const auto& [m, row] : sc.inflow) {
        GridMeasure pm(grid);
        for (std::int64_t c = 0; c < n; ++c) pm.mass[std::size_t(c)] = double(row[std::size_t(c)]) / lambda;
        rs.mum[int(m)] = std::move(pm);
    }
    return out;
}

std::vector<RateRow> rate_comparison(const TrajectorySetting& psi, const GridMeasure& mu,
                                     const ModelParams& params, std::span<const double> lambdas) {
    const FunctionalValues fv = eval_functionals(psi, mu, params);
    double MW = 0.0;
    for (int k = 1; k <= psi.k_max; ++k) MW += double(k - 1) * psi.nu[std::size_t(k - 1)].total();

    std::vector<RateRow> rows;
    for (double lambda : lambdas) {
        RoundedSetting rs = round_setting(psi, lambda);
        CountTerms ct = count_terms(rs.counts);
        RateRow row;
        row.lambda = lambda;
        row.delta = psi.grid.delta();
        row.rate = (log_big(ct.N1) + log_big(ct.N2) + log_big(ct.N3) - log_big(ct.N0)) / lambda;
        row.neg_I = -fv.I;
        row.gap = std::abs(row.rate - row.neg_I);
        row.hops_rate = double(rs.counts.total_relay_slots) / lambda;
        row.M_W = MW;
        rows.push_back(row);
    }
    return rows;
}

void rate_table_csv(std::ostream& os, std::span<const RateRow> rows) {
    os << "lambda,delta,rate,neg_I,gap,hops_rate,M_W\n";
    char buf[512];
    for (const RateRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.lambda,
                      r.delta, r.rate, r.neg_I, r.gap, r.hops_rate, r.M_W);
        os << buf;
    }
}

} // namespace hopnet
