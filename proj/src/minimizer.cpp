#include "hopnet/minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hopnet/variational.hpp"

namespace hopnet {

HopKernel hop_kernel(const Grid& grid, const GridMeasure& mu, double alpha) {
    HopKernel k;
    k.n = grid.n_cells;
    const std::vector<double> phi = interference_potential(grid, mu, alpha);
    const std::vector<double> o(std::size_t(grid.window.dim), 0.0);
    const double phi_o = interference_potential_at(grid, mu, alpha, o);
    k.g.resize(std::size_t(k.n * k.n));
    k.g_o.resize(std::size_t(k.n));
    for (std::int64_t a = 0; a < k.n; ++a) {
        const auto xa = grid.cell_center(a);
        for (std::int64_t b = 0; b < k.n; ++b) {
            const auto xb = grid.cell_center(b);
            double d2 = 0.0;
            for (std::size_t i = 0; i < xa.size(); ++i) {
                const double d = xa[i] - xb[i];
                d2 += d * d;
            }
            k.g[std::size_t(a * k.n + b)] = phi[std::size_t(b)] / path_loss(std::sqrt(d2), alpha);
        }
        double d2 = 0.0;
        for (double v : xa) d2 += v * v;
        k.g_o[std::size_t(a)] = phi_o / path_loss(std::sqrt(d2), alpha);
    }
    return k;
}

namespace {

// Backward chain values b_j(c) = weight of finishing a route from cell c in
// exactly j hops, where each intermediate node carries weight w and each hop
// (a -> b) the factor E[a*n+b]; the last hop uses the origin factor Eo.
std::vector<std::vector<double>> backward_chains(const std::vector<double>& E,
                                                 const std::vector<double>& Eo,
                                                 const std::vector<double>& w, int k_max) {
    const std::int64_t n = std::int64_t(Eo.size());
    std::vector<std::vector<double>> b(std::size_t(k_max) + 1);
    b[1] = Eo;
    for (int j = 2; j <= k_max; ++j) {
        b[std::size_t(j)].assign(std::size_t(n), 0.0);
        for (std::int64_t c = 0; c < n; ++c) {
            double acc = 0.0;
            for (std::int64_t d = 0; d < n; ++d)
                acc += E[std::size_t(c * n + d)] * w[std::size_t(d)] * b[std::size_t(j - 1)][std::size_t(d)];
            b[std::size_t(j)][std::size_t(c)] = acc;
        }
    }
    return b;
}

void check_positive_finite(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s degenerate (%.3e); gamma too large for this grid", what, v);
        throw std::overflow_error(buf);
    }
}

} // namespace

Beta0Minimizer solve_beta0(const Grid& grid, const GridMeasure& mu, const ModelParams& params) {
    if (params.k_max < 1) throw std::invalid_argument("solve_beta0: k_max must be >= 1");
    if (params.gamma < 0.0) throw std::invalid_argument("solve_beta0: gamma must be >= 0");
    const std::int64_t n = grid.n_cells;
    const double muW = mu.total();
    if (!(muW > 0.0)) throw std::invalid_argument("solve_beta0: mu must have positive mass");
    const int k_max = params.k_max;
    const HopKernel K = hop_kernel(grid, mu, params.alpha);

    std::vector<double> E(static_cast<std::size_t>(n * n)), Eo(static_cast<std::size_t>(n));
    for (std::int64_t a = 0; a < n; ++a) {
        for (std::int64_t b = 0; b < n; ++b)
            E[std::size_t(a * n + b)] = std::exp(-params.gamma * K.g[std::size_t(a * n + b)]);
        Eo[std::size_t(a)] = std::exp(-params.gamma * K.g_o[std::size_t(a)]);
    }
    std::vector<double> w(static_cast<std::size_t>(n)); // relay weight mu_c / mu(W)
    for (std::int64_t c = 0; c < n; ++c) w[std::size_t(c)] = mu.mass[std::size_t(c)] / muW;

    const auto bchain = backward_chains(E, Eo, w, k_max);

    Beta0Minimizer out;
    out.A.assign(std::size_t(n), 0.0);
    for (std::int64_t c = 0; c < n; ++c) {
        if (mu.mass[std::size_t(c)] <= 0.0) continue;
        double inv = 0.0;
        for (int j = 1; j <= k_max; ++j) inv += bchain[std::size_t(j)][std::size_t(c)];
        check_positive_finite(inv, "solve_beta0: normalizer sum");
        out.A[std::size_t(c)] = 1.0 / inv;
    }

    out.M = GridMeasure(grid);
    out.marginal.resize(std::size_t(k_max));
    out.nu_mass.assign(std::size_t(k_max), 0.0);
    double S = 0.0;
    for (int k = 1; k <= k_max; ++k) {
        std::vector<double> al(static_cast<std::size_t>(n)), eps(static_cast<std::size_t>(n), 0.0);
        for (std::int64_t c = 0; c < n; ++c)
            al[std::size_t(c)] = mu.mass[std::size_t(c)] * out.A[std::size_t(c)];
        auto& marg = out.marginal[std::size_t(k - 1)];
        marg.assign(std::size_t(k), GridMeasure(grid));
        for (int l = 0; l < k; ++l) {
            if (l > 0) {
                std::vector<double> al2(std::size_t(n), 0.0), eps2(std::size_t(n), 0.0);
                for (std::int64_t d = 0; d < n; ++d) {
                    double a_acc = 0.0, e_acc = 0.0;
                    for (std::int64_t c = 0; c < n; ++c) {
                        const double step = E[std::size_t(c * n + d)] * w[std::size_t(d)];
                        a_acc += al[std::size_t(c)] * step;
                        e_acc += (eps[std::size_t(c)] +
                                  al[std::size_t(c)] * K.g[std::size_t(c * n + d)]) * step;
                    }
                    al2[std::size_t(d)] = a_acc;
                    eps2[std::size_t(d)] = e_acc;
                }
                al.swap(al2);
                eps.swap(eps2);
            }
            for (std::int64_t c = 0; c < n; ++c)
                marg[std::size_t(l)].mass[std::size_t(c)] =
                    al[std::size_t(c)] * bchain[std::size_t(k - l)][std::size_t(c)];
            if (l > 0)
                for (std::int64_t c = 0; c < n; ++c)
                    out.M.mass[std::size_t(c)] += marg[std::size_t(l)].mass[std::size_t(c)];
        }
        out.nu_mass[std::size_t(k - 1)] = marg[0].total();
        for (std::int64_t c = 0; c < n; ++c)
            S += (eps[std::size_t(c)] + al[std::size_t(c)] * K.g_o[std::size_t(c)]) * Eo[std::size_t(c)];
    }
    out.S = S;
    double value = 0.0;
    for (std::int64_t c = 0; c < n; ++c)
        if (mu.mass[std::size_t(c)] > 0.0)
            value += mu.mass[std::size_t(c)] * std::log(out.A[std::size_t(c)]);
    out.value = value;
    out.J = value - params.gamma * S;

    // materialize small route tensors directly from the product formula
    for (int k = 1; k <= std::min(k_max, 3); ++k) {
        double count = 1.0;
        for (int l = 0; l < k; ++l) count *= double(n);
        if (count > double(GridMeasureK::dense_limit)) break;
        GridMeasureK nk(grid, k);
        std::vector<std::int64_t> cells(static_cast<std::size_t>(k));
        for (std::int64_t t = 0; t < nk.tuple_count(); ++t) {
            std::int64_t rem = t;
            for (int l = k - 1; l >= 0; --l) {
                cells[std::size_t(l)] = rem % n;
                rem /= n;
            }
            double mass = mu.mass[std::size_t(cells[0])] * out.A[std::size_t(cells[0])];
            double f = 0.0;
            for (int l = 1; l < k; ++l) {
                mass *= w[std::size_t(cells[std::size_t(l)])];
                f += K.g[std::size_t(cells[std::size_t(l - 1)] * n + cells[std::size_t(l)])];
            }
            f += K.g_o[std::size_t(cells[std::size_t(k - 1)])];
            mass *= std::exp(-params.gamma * f);
            if (mass != 0.0) nk.set(t, mass);
        }
        out.nu_dense.push_back(std::move(nk));
    }
    return out;
}

PoissonInflow poisson_mum(const GridMeasure& M, const GridMeasure& mu, int m_max) {
    const std::int64_t n = mu.grid.n_cells;
    if (M.mass.size() != mu.mass.size())
        throw std::invalid_argument("poisson_mum: cell count mismatch");
    PoissonInflow out;
    std::vector<GridMeasure> levels(std::size_t(m_max) + 1, GridMeasure(mu.grid));
    for (std::int64_t c = 0; c < n; ++c) {
        const double muc = mu.mass[std::size_t(c)];
        const double Mc = M.mass[std::size_t(c)];
        if (muc <= 0.0) {
            if (Mc > 1e-14)
                throw std::invalid_argument("poisson_mum: relay intensity charges a mu-null cell");
            continue;
        }
        const double rho = Mc / muc;
        double logp = -rho;
        double s = 0.0, t = 0.0;
        for (int m = 0; m <= m_max; ++m) {
            if (m > 0) logp += std::log(rho) - std::log(double(m));
            const double v = (rho == 0.0 && m > 0) ? 0.0 : muc * std::exp(logp);
            levels[std::size_t(m)].mass[std::size_t(c)] = v;
            s += v;
            t += double(m) * v;
        }
        out.mass_defect = std::max(out.mass_defect, std::abs(s - muc));
        out.mean_defect = std::max(out.mean_defect, std::abs(t - Mc));
    }
    for (int m = 0; m <= m_max; ++m)
        if (m == 0 || levels[std::size_t(m)].total() > 0.0)
            out.mum[m] = std::move(levels[std::size_t(m)]);
    return out;
}

TrajectorySetting beta0_setting(const Beta0Minimizer& mini, const GridMeasure& mu, int m_max) {
    if (mini.nu_dense.size() != mini.marginal.size())
        throw BudgetExceeded("beta0_setting: route tensors were not materialized for every k");
    TrajectorySetting psi;
    psi.grid = mu.grid;
    psi.k_max = int(mini.marginal.size());
    psi.nu = mini.nu_dense;
    psi.mum = poisson_mum(mini.M, mu, m_max).mum;
    return psi;
}

namespace {

// partition-function series of the inflow weight at one cell:
// S0 = sum_m alpha^m e^{-beta eta(m)} / m!,  S1 = same with an extra factor m
void inflow_series(double alpha, double beta, const CongestionPenalty& eta,
                   double& S0, double& S1) {
    if (alpha > 500.0)
        throw std::overflow_error("inflow series: alpha too large; fixed point diverged");
    double a = 1.0; // alpha^m / m!
    S0 = 1.0;       // m = 0 term (eta(0) = 0)
    S1 = 0.0;
    for (int m = 1; m < 100000; ++m) {
        a *= alpha / double(m);
        const double term = a * std::exp(-beta * eta(m));
        S0 += term;
        S1 += double(m) * term;
        if (double(m) > alpha && term * double(m) < 1e-16 * S0) break;
    }
}

struct ELDerived {
    std::vector<double> alpha, phi, B, A, Gamma, M_tilde;
    GridMeasure M;
    std::vector<std::vector<double>> bchain;
    double res_C = 0.0;
};

ELDerived el_evaluate(const std::vector<double>& C, const GridMeasure& mu, double muW,
                      const std::vector<double>& E, const std::vector<double>& Eo,
                      const ModelParams& params) {
    const std::int64_t n = std::int64_t(Eo.size());
    ELDerived d;
    d.alpha.assign(std::size_t(n), 0.0);
    d.phi.assign(std::size_t(n), 0.0);
    d.B.assign(std::size_t(n), 0.0);
    d.M = GridMeasure(mu.grid);
    d.M_tilde.assign(std::size_t(n), 0.0);
    for (std::int64_t c = 0; c < n; ++c) {
        if (mu.mass[std::size_t(c)] <= 0.0) continue;
        check_positive_finite(C[std::size_t(c)], "fixed point: C");
        const double a = 1.0 / (C[std::size_t(c)] * muW);
        double S0 = 0.0, S1 = 0.0;
        inflow_series(a, params.beta, params.eta, S0, S1);
        d.alpha[std::size_t(c)] = a;
        d.phi[std::size_t(c)] = S1 / S0;
        d.B[std::size_t(c)] = 1.0 / S0;
        d.M.mass[std::size_t(c)] = mu.mass[std::size_t(c)] * d.phi[std::size_t(c)];
        d.M_tilde[std::size_t(c)] = C[std::size_t(c)] * d.M.mass[std::size_t(c)];
    }

    d.bchain = backward_chains(E, Eo, d.M_tilde, params.k_max);
    d.A.assign(std::size_t(n), 0.0);
    for (std::int64_t c = 0; c < n; ++c) {
        if (mu.mass[std::size_t(c)] <= 0.0) continue;
        double inv = 0.0;
        for (int j = 1; j <= params.k_max; ++j) inv += d.bchain[std::size_t(j)][std::size_t(c)];
        check_positive_finite(inv, "fixed point: normalizer sum");
        d.A[std::size_t(c)] = 1.0 / inv;
    }

    // forward chains P_j and the relay response Gamma
    std::vector<double> P(std::size_t(n), 0.0);
    d.Gamma.assign(std::size_t(n), 0.0);
    // suffix sums over the backward chain: sum_{j'=1}^{k_max-j} b_{j'}
    std::vector<std::vector<double>> bsuf(std::size_t(params.k_max), std::vector<double>(std::size_t(n), 0.0));
    for (int j = params.k_max - 1; j >= 1; --j) {
        for (std::int64_t c = 0; c < n; ++c)
            bsuf[std::size_t(j)][std::size_t(c)] =
                d.bchain[std::size_t(params.k_max - j)][std::size_t(c)] +
                (j + 1 < params.k_max ? bsuf[std::size_t(j + 1)][std::size_t(c)] : 0.0);
    }
    for (int j = 1; j <= params.k_max - 1; ++j) {
        std::vector<double> P2(std::size_t(n), 0.0);
        for (std::int64_t x = 0; x < n; ++x) {
            double acc = 0.0;
            if (j == 1) {
                for (std::int64_t c = 0; c < n; ++c)
                    acc += mu.mass[std::size_t(c)] * d.A[std::size_t(c)] * E[std::size_t(c * n + x)];
            } else {
                for (std::int64_t c = 0; c < n; ++c)
                    acc += P[std::size_t(c)] * d.M_tilde[std::size_t(c)] * E[std::size_t(c * n + x)];
            }
            P2[std::size_t(x)] = acc;
        }
        P.swap(P2);
        for (std::int64_t x = 0; x < n; ++x)
            d.Gamma[std::size_t(x)] += P[std::size_t(x)] * bsuf[std::size_t(j)][std::size_t(x)];
    }
    for (std::int64_t c = 0; c < n; ++c) {
        if (mu.mass[std::size_t(c)] <= 0.0) continue;
        check_positive_finite(d.Gamma[std::size_t(c)], "fixed point: Gamma");
        d.res_C = std::max(d.res_C,
                           std::abs(1.0 / C[std::size_t(c)] - d.Gamma[std::size_t(c)]));
    }
    return d;
}

} // namespace

ELSolution solve_C_fixed_point(const Grid& grid, const GridMeasure& mu,
                               const ModelParams& params, const ELOptions& opts) {
    if (!(params.beta > 0.0)) throw std::invalid_argument("solve_C_fixed_point: beta must be > 0");
    if (params.gamma < 0.0) throw std::invalid_argument("solve_C_fixed_point: gamma must be >= 0");
    if (params.k_max < 2) throw std::invalid_argument("solve_C_fixed_point: k_max must be >= 2");
    const std::int64_t n = grid.n_cells;
    const double muW = mu.total();
    if (!(muW > 0.0)) throw std::invalid_argument("solve_C_fixed_point: mu must have positive mass");

    const HopKernel K = hop_kernel(grid, mu, params.alpha);
    std::vector<double> E(static_cast<std::size_t>(n * n)), Eo(static_cast<std::size_t>(n));
    for (std::int64_t a = 0; a < n; ++a) {
        for (std::int64_t b = 0; b < n; ++b)
            E[std::size_t(a * n + b)] = std::exp(-params.gamma * K.g[std::size_t(a * n + b)]);
        Eo[std::size_t(a)] = std::exp(-params.gamma * K.g_o[std::size_t(a)]);
    }

    std::vector<double> C(std::size_t(n), 0.0);
    if (opts.init_C.empty()) {
        for (std::int64_t c = 0; c < n; ++c)
            if (mu.mass[std::size_t(c)] > 0.0) C[std::size_t(c)] = 1.0 / muW;
    } else {
        if (opts.init_C.size() != std::size_t(n))
            throw std::invalid_argument("solve_C_fixed_point: init_C has the wrong length");
        C = opts.init_C;
    }

    ELSolution sol;
    ELDerived d;
    int iter = 0;
    for (;;) {
        d = el_evaluate(C, mu, muW, E, Eo, params);
        ++iter;
        if (d.res_C <= opts.tol) {
            sol.converged = true;
            break;
        }
        if (iter >= opts.max_iter) break;
        for (std::int64_t c = 0; c < n; ++c)
            if (mu.mass[std::size_t(c)] > 0.0)
                C[std::size_t(c)] = (1.0 - opts.damping) * C[std::size_t(c)] +
                                    opts.damping / d.Gamma[std::size_t(c)];
    }

    sol.tilt.A = d.A;
    sol.tilt.B = d.B;
    sol.tilt.C = C;
    sol.state.M_tilde = d.M_tilde;
    sol.state.phi = d.phi;
    sol.state.Gamma = d.Gamma;
    sol.state.res_C = d.res_C;
    sol.state.M = d.M;
    sol.state.iterations = iter;

    // candidate setting from the tilted product form
    TrajectorySetting psi;
    psi.grid = grid;
    psi.k_max = params.k_max;
    for (int k = 1; k <= params.k_max; ++k) {
        double count = 1.0;
        for (int l = 0; l < k; ++l) count *= double(n);
        const bool feasible = (k <= 3 && count <= double(GridMeasureK::dense_limit)) ||
                              count <= double(1 << 18);
        if (!feasible)
            throw BudgetExceeded("solve_C_fixed_point: route tensor too large; use a coarser grid");
        GridMeasureK nk(grid, k);
        std::vector<std::int64_t> cells(static_cast<std::size_t>(k));
        for (std::int64_t t = 0; t < nk.tuple_count(); ++t) {
            std::int64_t rem = t;
            for (int l = k - 1; l >= 0; --l) {
                cells[std::size_t(l)] = rem % n;
                rem /= n;
            }
            double mass = mu.mass[std::size_t(cells[0])] * d.A[std::size_t(cells[0])];
            if (mass == 0.0) continue;
            for (int l = 1; l < k; ++l) {
                mass *= d.M_tilde[std::size_t(cells[std::size_t(l)])] *
                        E[std::size_t(cells[std::size_t(l - 1)] * n + cells[std::size_t(l)])];
            }
            mass *= Eo[std::size_t(cells[std::size_t(k - 1)])];
            if (mass != 0.0) nk.set(t, mass);
        }
        psi.nu.push_back(std::move(nk));
    }
    {
        std::vector<GridMeasure> levels(std::size_t(opts.m_max) + 1, GridMeasure(grid));
        for (std::int64_t c = 0; c < n; ++c) {
            const double muc = mu.mass[std::size_t(c)];
            if (muc <= 0.0) continue;
            const double a = d.alpha[std::size_t(c)];
            double am = 1.0; // alpha^m / m!
            double s = 0.0, t = 0.0;
            for (int m = 0; m <= opts.m_max; ++m) {
                if (m > 0) am *= a / double(m);
                const double v = muc * d.B[std::size_t(c)] * am * std::exp(-params.beta * params.eta(m));
                levels[std::size_t(m)].mass[std::size_t(c)] = v;
                s += v;
                t += double(m) * v;
            }
            sol.state.mass_defect = std::max(sol.state.mass_defect, std::abs(s - muc));
            sol.state.mean_defect =
                std::max(sol.state.mean_defect, std::abs(t - d.M.mass[std::size_t(c)]));
        }
        for (int m = 0; m <= opts.m_max; ++m)
            if (m == 0 || levels[std::size_t(m)].total() > 0.0)
                psi.mum[m] = std::move(levels[std::size_t(m)]);
    }
    sol.psi = std::move(psi);
    return sol;
}

std::vector<ELSolution> solve_C_multi_init(const Grid& grid, const GridMeasure& mu,
                                           const ModelParams& params, const ELOptions& opts,
                                           int random_inits, std::uint64_t seed) {
    std::vector<ELSolution> out;
    out.push_back(solve_C_fixed_point(grid, mu, params, opts));
    Rng rng(seed);
    const double muW = mu.total();
    for (int i = 0; i < random_inits; ++i) {
        ELOptions o = opts;
        o.init_C.assign(std::size_t(grid.n_cells), 0.0);
        for (std::int64_t c = 0; c < grid.n_cells; ++c)
            if (mu.mass[std::size_t(c)] > 0.0)
                o.init_C[std::size_t(c)] = std::exp(rng.uniform(-1.0, 1.0)) / muW;
        out.push_back(solve_C_fixed_point(grid, mu, params, o));
    }
    return out;
}

} // namespace hopnet
