#pragma once
// Metropolis and Gibbs-sweep samplers targeting the trajectory Gibbs
// distribution, plus a simulated-annealing mode that slowly raises the
// inverse-temperature pair (gamma_t, beta_t) at constant ratio.
//
// The Metropolis proposal is the normalized a priori law itself (hop count
// uniform on {1..k_max}, relays i.i.d. uniform over the points), so the
// a priori weights cancel and the acceptance probability is
// min(1, exp(-gamma*dS - beta*dM)).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hopnet/energy.hpp"
#include "hopnet/gibbs.hpp"
#include "hopnet/rng.hpp"

namespace hopnet {

struct ChainState {
    TrajectoryConfig config;
    std::vector<std::int64_t> inflow;
    double S = 0.0;
    double M = 0.0;
    std::uint64_t step = 0;

    static ChainState init_apriori(const InterferenceField& field, const ModelParams& params,
                                   Rng& rng);
    // recompute S, M, inflow from the config (consistency checks)
    void recompute(const InterferenceField& field, const CongestionPenalty& eta);
};

// gamma_t = min(c0 * log(1+t), gamma_max), beta_t = (beta/gamma) * gamma_t.
// c0 defaults to lambda/N^2 (the prescribed scaling); gamma_max to 50*gamma.
struct AnnealSchedule {
    double c0 = 0.0;
    double gamma_max = 0.0;
    double beta_over_gamma = 0.0;

    static AnnealSchedule standard(const ModelParams& params, double lambda, std::size_t n,
                                   double c0_override = -1.0, double gamma_max_override = -1.0);
    double gamma_at(std::uint64_t t) const;
    double beta_at(std::uint64_t t) const { return beta_over_gamma * gamma_at(t); }
};

Trajectory propose_apriori(std::size_t n_points, int k_max, Rng& rng);

// One Metropolis move at inverse temperatures (gamma, beta); returns acceptance.
bool metropolis_step(ChainState& state, const InterferenceField& field, const ModelParams& params,
                     double gamma, double beta, Rng& rng);

// Exact resampling of one user's trajectory from its full conditional.
// Strategy: enumerate the per-user choices if their count is within budget;
// otherwise, at beta = 0, sample from the product form by backward transfer
// vectors; otherwise fall back to a Metropolis move and report it.
struct GibbsAux; // cached transfer vectors for the beta=0 sampler
struct GibbsResampleReport {
    bool fallback_metropolis = false;
};
GibbsResampleReport gibbs_resample_user(ChainState& state, const InterferenceField& field,
                                        const ModelParams& params, double gamma, double beta,
                                        std::uint32_t user, Rng& rng, GibbsAux* aux = nullptr,
                                        std::uint64_t enum_budget = 100'000);

GibbsAux* gibbs_aux_create(const InterferenceField& field, const ModelParams& params, double gamma);
void gibbs_aux_destroy(GibbsAux*);

struct TraceRow {
    std::uint64_t step = 0;
    double gamma_t = 0.0;
    double beta_t = 0.0;
    double S = 0.0;
    double M = 0.0;
    bool accepted = false;
};

struct RunOptions {
    std::uint64_t steps = 1000;
    std::uint64_t thin = 1;
    bool anneal = false;
    AnnealSchedule schedule;
    std::uint64_t sweep_every = 0; // interleave a full Gibbs sweep every so many steps (0 = never)
    std::uint64_t enum_budget = 100'000;
    double burn_in_frac = 0.2;
};

struct RunResult {
    ChainState state;
    std::vector<TraceRow> trace;
    double acceptance_rate = 0.0;
    std::uint64_t gibbs_fallbacks = 0;
    // best configuration seen, scored by gamma*S + beta*M at the target parameters
    TrajectoryConfig best_config;
    double best_S = 0.0;
    double best_M = 0.0;
    double best_score = 0.0;
    // post-burn-in energy means
    double mean_S = 0.0;
    double mean_M = 0.0;
};

RunResult run_chain(const InterferenceField& field, const ModelParams& params,
                    const RunOptions& opts, std::uint64_t seed);

// Independent replica chains (seed + replica index); runs concurrently when
// `parallel` is set, each replica owning its state and RNG stream.
std::vector<RunResult> run_replicas(const InterferenceField& field, const ModelParams& params,
                                    const RunOptions& opts, std::uint64_t seed,
                                    std::size_t replicas, bool parallel = false);

} // namespace hopnet
