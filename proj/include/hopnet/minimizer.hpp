#pragma once
// Explicit minimizers of the limiting variational problems.  At beta = 0 the
// unique optimal routeing strategy is a tilted product measure whose
// normalizer A comes from transfer-operator chains; its relay-load profile is
// cellwise Poisson.  At beta > 0 the Euler-Lagrange conditions couple three
// tilt functions A, B, C; C solves a fixed-point equation iterated here with
// damping.  Marginals and energies are computed by forward-backward vector
// products; dense route tensors are only materialized for small k.

#include <cstdint>
#include <map>
#include <vector>

#include "hopnet/empirical.hpp"
#include "hopnet/gibbs.hpp"
#include "hopnet/measure.hpp"
#include "hopnet/rng.hpp"

namespace hopnet {

// per-hop cost g(x, y) = Phi(y) / ell(|x - y|) on cell-center pairs, where
// Phi is the interference potential of mu; g_o is the final hop into the
// origin
struct HopKernel {
    std::int64_t n = 0;
    std::vector<double> g;   // n*n row-major, g[from * n + to]
    std::vector<double> g_o; // n
};

HopKernel hop_kernel(const Grid& grid, const GridMeasure& mu, double alpha);

struct Beta0Minimizer {
    std::vector<double> A;       // start tilt per cell; 0 on mu-null cells
    std::vector<double> nu_mass; // nu_k(W^k), index k-1
    std::vector<std::vector<GridMeasure>> marginal; // [k-1][l] = pi_l nu_k
    GridMeasure M;               // relay intensity sum_k sum_{l>=1} pi_l nu_k
    double S = 0.0;              // interference functional of the minimizer
    double J = 0.0;              // route entropy of the minimizer
    double value = 0.0;          // J + gamma S = <mu, log A>
    std::vector<GridMeasureK> nu_dense; // materialized nu_k for k <= 3 (empty beyond)
};

Beta0Minimizer solve_beta0(const Grid& grid, const GridMeasure& mu, const ModelParams& params);

// Poisson inflow completion mu_m = mu rho^m e^{-rho} / m! with rho = dM/dmu,
// truncated at m_max; the truncation defects are reported, not hidden.
struct PoissonInflow {
    std::map<int, GridMeasure> mum;
    double mass_defect = 0.0; // sup_c |sum_m mu_m - mu|
    double mean_defect = 0.0; // sup_c |sum_m m mu_m - M|
};

PoissonInflow poisson_mum(const GridMeasure& M, const GridMeasure& mu, int m_max = 80);

// full setting from a beta=0 minimizer (requires nu_dense to cover all k)
TrajectorySetting beta0_setting(const Beta0Minimizer& mini, const GridMeasure& mu, int m_max = 80);

struct TiltFunctions {
    std::vector<double> A, B, C; // per cell; 0 on mu-null cells
};

struct ELState {
    std::vector<double> M_tilde; // C * dM per cell
    std::vector<double> phi;     // phi(alpha_c), so M = mu * phi
    std::vector<double> Gamma;   // relay-response values at the final iterate
    double res_C = 0.0;          // sup over mu-positive cells of |1/C - Gamma|
    double mass_defect = 0.0;    // inflow truncation: |sum_m mu_m - mu|
    double mean_defect = 0.0;    // inflow truncation: |sum_m m mu_m - M|
    GridMeasure M;
    int iterations = 0;
};

struct ELOptions {
    double damping = 0.5;
    double tol = 1e-12;          // fixed-point residual target
    int max_iter = 10000;
    int m_max = 80;              // inflow truncation of the returned setting
    std::vector<double> init_C;  // empty: C = 1/mu(W) on mu-positive cells
};

struct ELSolution {
    TiltFunctions tilt;
    ELState state;
    TrajectorySetting psi; // built from the final iterate
    bool converged = false;
};

ELSolution solve_C_fixed_point(const Grid& grid, const GridMeasure& mu,
                               const ModelParams& params, const ELOptions& opts = {});

// probe for distinct fixed points from randomized initializations
std::vector<ELSolution> solve_C_multi_init(const Grid& grid, const GridMeasure& mu,
                                           const ModelParams& params, const ELOptions& opts,
                                           int random_inits, std::uint64_t seed);

} // namespace hopnet
