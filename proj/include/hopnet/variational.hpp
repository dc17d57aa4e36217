#pragma once
// Limiting functionals of the high-density model.  Relative entropy on grid
// measures, the three admissibility residuals, the rate function I in its two
// equivalent representations, the interference functional S, the congestion
// functional M, and the route-only entropy J.  All integrals are cell-center
// quadrature on the triadic grid.

#include <limits>
#include <map>
#include <vector>

#include "hopnet/empirical.hpp"
#include "hopnet/energy.hpp"
#include "hopnet/gibbs.hpp"
#include "hopnet/measure.hpp"
#include "hopnet/rng.hpp"

namespace hopnet {

// Reference inflow weights c_m = exp(-1/(e q)) (e q)^{-m} / m! with
// q = mu(W); they sum to exactly 1 over m >= 0.
class PoissonWeights {
public:
    explicit PoissonWeights(double mu_total);
    double operator()(int m) const;
    double log_c(int m) const;
    double mu_total() const { return mu_total_; }

private:
    double mu_total_ = 1.0;
};

// Relative entropy with mass-correction terms,
//   sum_c nu_c log(nu_c / rho_c) - nu(V) + rho(V),
// with 0 log 0 = 0 and +infinity when nu charges a cell where rho vanishes.
double rel_entropy(const GridMeasure& nu, const GridMeasure& rho);
// Plain integral form without the correction terms.
double rel_entropy_plain(const GridMeasure& nu, const GridMeasure& rho);

// Same two forms for a k-tuple measure against the product reference
// first (x) rest^{(k-1)} (k = nu.k(); for k = 1 only `first` enters).
double rel_entropy_tuple(const GridMeasureK& nu, const GridMeasure& first,
                         const GridMeasure& rest);
double rel_entropy_tuple_plain(const GridMeasureK& nu, const GridMeasure& first,
                               const GridMeasure& rest);

constexpr double admissibility_tol = 1e-10;

struct AdmissibilityResult {
    double res_routes = 0.0; // sup_c |sum_k pi_0 nu_k - mu|
    double res_mass = 0.0;   // sup_c |sum_m mu_m - mu|
    double res_inflow = 0.0; // sup_c |sum_m m mu_m - sum_k sum_{l>=1} pi_l nu_k|
    bool pass = false;       // all residuals <= admissibility_tol
};

AdmissibilityResult check_admissible(const TrajectorySetting& psi, const GridMeasure& mu);

struct FunctionalValues {
    double I = 0.0;
    double I_alt = 0.0;
    double S = 0.0;
    double M = 0.0;
    double J = std::numeric_limits<double>::quiet_NaN(); // routes-only entropy, set by eval_J
    double objective(double gamma, double beta) const { return I + gamma * S + beta * M; }
};

// Interference load of the density: Phi(y) = sum_c ell(|center_c - y|) mu_c,
// evaluated at every cell center (and at any point via the _at variant).
std::vector<double> interference_potential(const Grid& grid, const GridMeasure& mu, double alpha);
double interference_potential_at(const Grid& grid, const GridMeasure& mu, double alpha,
                                 std::span<const double> y);

// S = sum_k <nu_k, f_k> with the per-hop cost Phi(x_l) / ell(|x_{l-1}-x_l|),
// final hop into the origin.  Works on any routeing strategy (nu_k)_k.
double eval_S(const std::vector<GridMeasureK>& nu, const GridMeasure& mu, double alpha);

// Full functional evaluation on an admissible setting; refuses (with the
// residuals in the message) if the admissibility check fails.
FunctionalValues eval_functionals(const TrajectorySetting& psi, const GridMeasure& mu,
                                  const ModelParams& params);

// Routes-only entropy
//   J = sum_k H(nu_k | mu^{(x)k}) - sum_{k>=2} mu(W)^k + M(W) log mu(W),
// defined on strategies with sum_k pi_0 nu_k = mu (checked, refused otherwise).
double eval_J(const std::vector<GridMeasureK>& nu, const GridMeasure& mu);

// --- random generators for property tests ---------------------------------

// strategy with iid positive tuple masses, rescaled so that the start-cell
// marginals sum to mu exactly
std::vector<GridMeasureK> random_strategy(const Grid& grid, const GridMeasure& mu,
                                          int k_max, Rng& rng);

// admissible setting: random strategy plus an inflow profile built from a
// cellwise Poisson shape matched to the relay intensity, repaired exactly on
// levels 0 and 1 (redrawn if the repair would go negative)
TrajectorySetting random_admissible_setting(const Grid& grid, const GridMeasure& mu,
                                            int k_max, Rng& rng, int max_m = 40);

// Mass- and mean-preserving local move on an inflow profile: adds
// eps*(+1,-2,+1) (or its negative) across levels (m-1, m, m+1) in one cell.
// Returns false when no feasible move of size eps exists.
bool perturb_inflow_profile(std::map<int, GridMeasure>& mum, Rng& rng, double eps);

} // namespace hopnet
