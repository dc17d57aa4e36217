#include "hopnet/variational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hopnet {

namespace {

constexpr double neg_mass_slack = 1e-12;

// clamp roundoff negatives to zero, reject anything worse
double checked_mass(double v, const char* what) {
    if (v >= 0.0) return v;
    if (v >= -neg_mass_slack) return 0.0;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s: negative mass %.3e", what, v);
    throw std::invalid_argument(buf);
}

} // namespace

PoissonWeights::PoissonWeights(double mu_total) : mu_total_(mu_total) {
    if (!(mu_total > 0.0)) throw std::invalid_argument("PoissonWeights: mu(W) must be positive");
}

double PoissonWeights::log_c(int m) const {
    const double log_eq = 1.0 + std::log(mu_total_);
    return -1.0 / (std::exp(1.0) * mu_total_) - double(m) * log_eq - std::lgamma(double(m) + 1.0);
}

double PoissonWeights::operator()(int m) const { return std::exp(log_c(m)); }

double rel_entropy(const GridMeasure& nu, const GridMeasure& rho) {
    return rel_entropy_plain(nu, rho) - nu.total() + rho.total();
}

double rel_entropy_plain(const GridMeasure& nu, const GridMeasure& rho) {
    if (nu.mass.size() != rho.mass.size())
        throw std::invalid_argument("rel_entropy: cell count mismatch");
    double acc = 0.0;
    for (std::size_t c = 0; c < nu.mass.size(); ++c) {
        const double n = checked_mass(nu.mass[c], "rel_entropy");
        if (n == 0.0) continue;
        const double r = rho.mass[c];
        if (r <= 0.0) return std::numeric_limits<double>::infinity();
        acc += n * std::log(n / r);
    }
    return acc;
}

namespace {

double tuple_integral_plain(const GridMeasureK& nu, const GridMeasure& first,
                            const GridMeasure& rest, bool& infinite) {
    const std::int64_t n = nu.grid().n_cells;
    double acc = 0.0;
    infinite = false;
    nu.for_each([&](std::int64_t idx, double mraw) {
        if (infinite) return;
        const double m = checked_mass(mraw, "rel_entropy_tuple");
        if (m == 0.0) return;
        double log_ref = 0.0;
        std::int64_t rem = idx;
        for (int l = nu.k() - 1; l >= 0; --l) {
            const std::int64_t c = rem % n;
            rem /= n;
            const double f = (l == 0) ? first.mass[std::size_t(c)] : rest.mass[std::size_t(c)];
            if (f <= 0.0) {
                infinite = true;
                return;
            }
            log_ref += std::log(f);
        }
        acc += m * (std::log(m) - log_ref);
    });
    return acc;
}

} // namespace

double rel_entropy_tuple_plain(const GridMeasureK& nu, const GridMeasure& first,
                               const GridMeasure& rest) {
    bool infinite = false;
    const double acc = tuple_integral_plain(nu, first, rest, infinite);
    return infinite ? std::numeric_limits<double>::infinity() : acc;
}

double rel_entropy_tuple(const GridMeasureK& nu, const GridMeasure& first,
                         const GridMeasure& rest) {
    bool infinite = false;
    const double acc = tuple_integral_plain(nu, first, rest, infinite);
    if (infinite) return std::numeric_limits<double>::infinity();
    const double ref_total = first.total() * std::pow(rest.total(), double(nu.k() - 1));
    return acc - nu.total() + ref_total;
}

AdmissibilityResult check_admissible(const TrajectorySetting& psi, const GridMeasure& mu) {
    const std::int64_t n = mu.grid.n_cells;
    AdmissibilityResult r;

    std::vector<double> start(std::size_t(n), 0.0);
    for (const auto& nk : psi.nu) {
        GridMeasure p0 = nk.marginal(0);
        for (std::int64_t c = 0; c < n; ++c) start[std::size_t(c)] += p0.mass[std::size_t(c)];
    }
    for (std::int64_t c = 0; c < n; ++c)
        r.res_routes = std::max(r.res_routes, std::abs(start[std::size_t(c)] - mu.mass[std::size_t(c)]));

    GridMeasure M = psi.relay_intensity();
    std::vector<double> mass(std::size_t(n), 0.0), mean(std::size_t(n), 0.0);
    for (const auto& [m, pm] : psi.mum)
        for (std::int64_t c = 0; c < n; ++c) {
            mass[std::size_t(c)] += pm.mass[std::size_t(c)];
            mean[std::size_t(c)] += double(m) * pm.mass[std::size_t(c)];
        }
    for (std::int64_t c = 0; c < n; ++c) {
        r.res_mass = std::max(r.res_mass, std::abs(mass[std::size_t(c)] - mu.mass[std::size_t(c)]));
        r.res_inflow = std::max(r.res_inflow, std::abs(mean[std::size_t(c)] - M.mass[std::size_t(c)]));
    }
    r.pass = r.res_routes <= admissibility_tol && r.res_mass <= admissibility_tol &&
             r.res_inflow <= admissibility_tol;
    return r;
}

std::vector<double> interference_potential(const Grid& grid, const GridMeasure& mu, double alpha) {
    std::vector<double> phi(std::size_t(grid.n_cells), 0.0);
    for (std::int64_t c = 0; c < grid.n_cells; ++c) {
        auto y = grid.cell_center(c);
        phi[std::size_t(c)] = interference_potential_at(grid, mu, alpha, y);
    }
    return phi;
}

double interference_potential_at(const Grid& grid, const GridMeasure& mu, double alpha,
                                 std::span<const double> y) {
    double acc = 0.0;
    for (std::int64_t c = 0; c < grid.n_cells; ++c) {
        auto z = grid.cell_center(c);
        double d2 = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            const double d = z[i] - y[i];
            d2 += d * d;
        }
        acc += path_loss(std::sqrt(d2), alpha) * mu.mass[std::size_t(c)];
    }
    return acc;
}

namespace {

struct HopCostTable {
    // cost(c, c') of a hop from cell c into cell c', and cost of the final
    // hop from c into the origin: Phi(target) / ell(distance)
    std::vector<double> pair;   // n*n, row = from
    std::vector<double> to_o;   // n
    std::int64_t n = 0;
};

HopCostTable hop_cost_table(const Grid& grid, const GridMeasure& mu, double alpha) {
    HopCostTable t;
    t.n = grid.n_cells;
    const std::vector<double> phi = interference_potential(grid, mu, alpha);
    std::vector<double> o(std::size_t(grid.window.dim), 0.0);
    const double phi_o = interference_potential_at(grid, mu, alpha, o);
    t.pair.resize(std::size_t(t.n * t.n));
    t.to_o.resize(std::size_t(t.n));
    for (std::int64_t a = 0; a < t.n; ++a) {
        auto xa = grid.cell_center(a);
        for (std::int64_t b = 0; b < t.n; ++b) {
            auto xb = grid.cell_center(b);
            double d2 = 0.0;
            for (std::size_t i = 0; i < xa.size(); ++i) {
                const double d = xa[i] - xb[i];
                d2 += d * d;
            }
            t.pair[std::size_t(a * t.n + b)] = phi[std::size_t(b)] / path_loss(std::sqrt(d2), alpha);
        }
        double d2 = 0.0;
        for (double v : xa) d2 += v * v;
        t.to_o[std::size_t(a)] = phi_o / path_loss(std::sqrt(d2), alpha);
    }
    return t;
}

} // namespace

double eval_S(const std::vector<GridMeasureK>& nu, const GridMeasure& mu, double alpha) {
    if (nu.empty()) return 0.0;
    const Grid& grid = nu.front().grid();
    const HopCostTable t = hop_cost_table(grid, mu, alpha);
    double S = 0.0;
    for (const auto& nk : nu) {
        const int k = nk.k();
        nk.for_each([&](std::int64_t idx, double m) {
            auto cells = nk.tuple_cells(idx);
            double f = 0.0;
            for (int l = 1; l < k; ++l)
                f += t.pair[std::size_t(cells[std::size_t(l - 1)] * t.n + cells[std::size_t(l)])];
            f += t.to_o[std::size_t(cells[std::size_t(k - 1)])];
            S += m * f;
        });
    }
    return S;
}

FunctionalValues eval_functionals(const TrajectorySetting& psi, const GridMeasure& mu,
                                  const ModelParams& params) {
    const AdmissibilityResult adm = check_admissible(psi, mu);
    if (!adm.pass) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "eval_functionals: setting not admissible (residuals %.3e / %.3e / %.3e)",
                      adm.res_routes, adm.res_mass, adm.res_inflow);
        throw std::invalid_argument(buf);
    }

    const double mu_tot = mu.total();
    const GridMeasure M = psi.relay_intensity();
    const double M_tot = M.total();
    const PoissonWeights c(mu_tot);

    FunctionalValues out;

    // route entropy against mu (x) M^{(k-1)}
    double route_sum = 0.0;
    for (const auto& nk : psi.nu) route_sum += rel_entropy_tuple(nk, mu, M);

    // inflow entropy: stored levels, with the infinite tail in closed form
    // (an absent level m contributes H(0 | mu c_m) = mu(W) c_m, and the c_m
    // sum to one, so the tail collapses to mu(W) minus the stored weights)
    double inflow_sum = mu_tot;
    double inflow_sum_plain = 0.0;
    for (const auto& [m, pm] : psi.mum) {
        GridMeasure ref = mu;
        const double cm = c(m);
        for (double& v : ref.mass) v *= cm;
        inflow_sum += rel_entropy(pm, ref) - mu_tot * cm;
        inflow_sum_plain += rel_entropy_plain(pm, ref);
    }

    double geom = 0.0;
    for (int k = 1; k <= psi.k_max; ++k)
        geom += (k == 1) ? 1.0 : std::pow(M_tot, double(k - 1));

    const double inv_e = 1.0 / std::exp(1.0);
    out.I = route_sum + inflow_sum + mu_tot * (1.0 - geom) - inv_e;

    double route_plain = 0.0;
    for (const auto& nk : psi.nu) route_plain += rel_entropy_tuple_plain(nk, mu, mu);
    out.I_alt = route_plain - rel_entropy_plain(M, mu) + inflow_sum_plain - inv_e;

    out.S = eval_S(psi.nu, mu, params.alpha);
    out.M = 0.0;
    for (const auto& [m, pm] : psi.mum) out.M += params.eta(m) * pm.total();
    return out;
}

double eval_J(const std::vector<GridMeasureK>& nu, const GridMeasure& mu) {
    const std::int64_t n = mu.grid.n_cells;
    std::vector<double> start(std::size_t(n), 0.0);
    double M_tot = 0.0;
    for (const auto& nk : nu) {
        GridMeasure p0 = nk.marginal(0);
        for (std::int64_t c = 0; c < n; ++c) start[std::size_t(c)] += p0.mass[std::size_t(c)];
        M_tot += double(nk.k() - 1) * nk.total();
    }
    double res = 0.0;
    for (std::int64_t c = 0; c < n; ++c)
        res = std::max(res, std::abs(start[std::size_t(c)] - mu.mass[std::size_t(c)]));
    if (res > admissibility_tol) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "eval_J: not a routeing strategy (residual %.3e)", res);
        throw std::invalid_argument(buf);
    }

    const double mu_tot = mu.total();
    double J = 0.0;
    for (const auto& nk : nu) J += rel_entropy_tuple(nk, mu, mu);
    for (int k = 2; k <= int(nu.size()); ++k) J -= std::pow(mu_tot, double(k));
    J += M_tot * std::log(mu_tot);
    return J;
}

std::vector<GridMeasureK> random_strategy(const Grid& grid, const GridMeasure& mu,
                                          int k_max, Rng& rng) {
    const std::int64_t n = grid.n_cells;
    std::vector<GridMeasureK> nu;
    for (int k = 1; k <= k_max; ++k) {
        GridMeasureK nk(grid, k);
        if (!nk.dense())
            throw BudgetExceeded("random_strategy: tuple space too large for the dense generator");
        for (std::int64_t t = 0; t < nk.tuple_count(); ++t)
            nk.set(t, rng.uniform(0.2, 1.0));
        nu.push_back(std::move(nk));
    }
    // scale so that for every start cell the total mass over k and relay
    // tuples equals mu there; tuples with a given start cell are the
    // contiguous index blocks of size n^(k-1)
    for (std::int64_t c = 0; c < n; ++c) {
        double tot = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            std::int64_t block = 1;
            for (int l = 1; l < k; ++l) block *= n;
            for (std::int64_t t = c * block; t < (c + 1) * block; ++t)
                tot += nu[std::size_t(k - 1)].get(t);
        }
        const double scale = (tot > 0.0) ? mu.mass[std::size_t(c)] / tot : 0.0;
        for (int k = 1; k <= k_max; ++k) {
            std::int64_t block = 1;
            for (int l = 1; l < k; ++l) block *= n;
            for (std::int64_t t = c * block; t < (c + 1) * block; ++t)
                nu[std::size_t(k - 1)].set(t, nu[std::size_t(k - 1)].get(t) * scale);
        }
    }
    return nu;
}

TrajectorySetting random_admissible_setting(const Grid& grid, const GridMeasure& mu,
                                            int k_max, Rng& rng, int max_m) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        TrajectorySetting psi;
        psi.grid = grid;
        psi.k_max = k_max;
        psi.nu = random_strategy(grid, mu, k_max, rng);
        const GridMeasure M = psi.relay_intensity();

        // widen the truncation if the relay load is heavy anywhere
        double rho_max = 0.0;
        for (std::int64_t c = 0; c < grid.n_cells; ++c)
            if (mu.mass[std::size_t(c)] > 0.0)
                rho_max = std::max(rho_max, M.mass[std::size_t(c)] / mu.mass[std::size_t(c)]);
        const int mm = std::max(max_m, int(rho_max + 12.0 * std::sqrt(rho_max) + 20.0));

        std::vector<GridMeasure> levels(std::size_t(mm) + 1, GridMeasure(grid));
        bool ok = true;
        for (std::int64_t c = 0; c < grid.n_cells && ok; ++c) {
            const double muc = mu.mass[std::size_t(c)];
            if (muc <= 0.0) {
                if (M.mass[std::size_t(c)] > admissibility_tol) ok = false;
                continue;
            }
            const double rho = M.mass[std::size_t(c)] / muc;
            double s = 0.0, t = 0.0;
            double logp = -rho; // log Poisson(rho) at m = 0
            for (int m = 0; m <= mm; ++m) {
                if (m > 0) logp += std::log(rho) - std::log(double(m));
                const double v = (rho == 0.0 && m > 0) ? 0.0 : muc * std::exp(logp);
                levels[std::size_t(m)].mass[std::size_t(c)] = v;
                s += v;
                t += double(m) * v;
            }
            const double d1 = M.mass[std::size_t(c)] - t;   // fix the mean via level 1
            const double d0 = (muc - s) - d1;               // then the mass via level 0
            levels[1].mass[std::size_t(c)] += d1;
            levels[0].mass[std::size_t(c)] += d0;
            if (levels[0].mass[std::size_t(c)] < 0.0 || levels[1].mass[std::size_t(c)] < 0.0)
                ok = false;
        }
        if (!ok) continue;
        for (int m = 0; m <= mm; ++m)
            if (m == 0 || levels[std::size_t(m)].total() > 0.0)
                psi.mum[m] = std::move(levels[std::size_t(m)]);
        return psi;
    }
    throw std::runtime_error("random_admissible_setting: repair kept failing");
}

bool perturb_inflow_profile(std::map<int, GridMeasure>& mum, Rng& rng, double eps) {
    if (mum.empty()) return false;
    const Grid& grid = mum.begin()->second.grid;
    auto level = [&](int m) -> double* {
        auto it = mum.find(m);
        return it == mum.end() ? nullptr : it->second.mass.data();
    };
    struct Move {
        std::int64_t cell;
        int m;
        int sign; // +1: (+eps, -2eps, +eps), -1: reverse
    };
    std::vector<Move> feasible;
    int m_top = mum.rbegin()->first;
    for (int m = 1; m <= m_top + 1; ++m) {
        const double* lo = level(m - 1);
        const double* mid = level(m);
        const double* hi = level(m + 1);
        for (std::int64_t c = 0; c < grid.n_cells; ++c) {
            const double vlo = lo ? lo[c] : 0.0;
            const double vmid = mid ? mid[c] : 0.0;
            const double vhi = hi ? hi[c] : 0.0;
            if (vmid >= 2.0 * eps) feasible.push_back({c, m, +1});
            if (vlo >= eps && vhi >= eps) feasible.push_back({c, m, -1});
        }
    }
    if (feasible.empty()) return false;
    const Move mv = feasible[std::size_t(rng.uniform_below(feasible.size()))];
    auto ensure = [&](int m) -> GridMeasure& {
        auto it = mum.find(m);
        if (it == mum.end()) it = mum.emplace(m, GridMeasure(grid)).first;
        return it->second;
    };
    const double d = eps * double(mv.sign);
    ensure(mv.m - 1).mass[std::size_t(mv.cell)] += d;
    ensure(mv.m).mass[std::size_t(mv.cell)] -= 2.0 * d;
    ensure(mv.m + 1).mass[std::size_t(mv.cell)] += d;
    return true;
}

} // namespace hopnet
