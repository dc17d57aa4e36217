#include "hopnet/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hopnet/kernels.hpp"

namespace hopnet {

ChainState ChainState::init_apriori(const InterferenceField& field, const ModelParams& params,
                                    Rng& rng) {
    const std::size_t n = field.points->n;
    ChainState st;
    st.config.traj.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        st.config.traj.push_back(propose_apriori(n, params.k_max, rng));
    st.recompute(field, params.eta);
    return st;
}

void ChainState::recompute(const InterferenceField& field, const CongestionPenalty& eta) {
    S = energy_S(field, config);
    auto infl = inflow_and_M(field.points->n, config, eta);
    inflow = std::move(infl.m);
    M = infl.M;
}

AnnealSchedule AnnealSchedule::standard(const ModelParams& params, double lambda, std::size_t n,
                                        double c0_override, double gamma_max_override) {
    if (!(params.gamma > 0))
        throw std::invalid_argument("AnnealSchedule: target gamma must be positive");
    AnnealSchedule s;
    s.c0 = c0_override > 0 ? c0_override : lambda / (double(n) * double(n));
    s.gamma_max = gamma_max_override > 0 ? gamma_max_override : 50.0 * params.gamma;
    s.beta_over_gamma = params.beta / params.gamma;
    return s;
}

double AnnealSchedule::gamma_at(std::uint64_t t) const {
    return std::min(c0 * std::log1p(double(t)), gamma_max);
}

Trajectory propose_apriori(std::size_t n_points, int k_max, Rng& rng) {
    Trajectory t;
    t.k = int(rng.uniform_below(std::uint64_t(k_max))) + 1;
    t.relays.resize(std::size_t(t.k - 1));
    for (auto& r : t.relays) r = std::uint32_t(rng.uniform_below(n_points));
    return t;
}

bool metropolis_step(ChainState& state, const InterferenceField& field, const ModelParams& params,
                     double gamma, double beta, Rng& rng) {
    const std::size_t n = field.points->n;
    const std::uint32_t user = std::uint32_t(rng.uniform_below(n));
    Trajectory prop = propose_apriori(n, params.k_max, rng);
    const EnergyDelta d = delta_energy(field, state.config, state.inflow, params.eta, user, prop);
    const double log_acc = -gamma * d.dS - beta * d.dM;
    bool accept = true;
    if (log_acc < 0) accept = rng.uniform01() < std::exp(log_acc);
    if (accept) {
        apply_replacement(state.config, state.inflow, user, prop);
        state.S += d.dS;
        state.M += d.dM;
    }
    return accept;
}

// Cached per-(gamma, k_max) transfer vectors for the beta=0 conditional:
// log_chain[j][b] = log (T^j v)[b], j = 0..k_max-1.
struct GibbsAux {
    double gamma = 0.0;
    int k_max = 1;
    std::vector<double> log_T; // n*n
    std::vector<std::vector<double>> log_chain;
};

GibbsAux* gibbs_aux_create(const InterferenceField& field, const ModelParams& params, double gamma) {
    const std::size_t n = field.points->n;
    auto* aux = new GibbsAux;
    aux->gamma = gamma;
    aux->k_max = params.k_max;
    const double log_n = std::log(double(n));
    aux->log_T.resize(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            aux->log_T[a * n + b] = -gamma / sir(field, std::uint32_t(a), std::int64_t(b)) - log_n;
    std::vector<double> v(n);
    for (std::size_t b = 0; b < n; ++b) v[b] = -gamma / sir(field, std::uint32_t(b), -1);
    aux->log_chain.push_back(v);
    for (int j = 1; j < params.k_max; ++j) {
        std::vector<double> next(n);
        kernels::logsumexp_matvec(aux->log_T, n, aux->log_chain.back(), next, false);
        aux->log_chain.push_back(std::move(next));
    }
    return aux;
}

void gibbs_aux_destroy(GibbsAux* aux) { delete aux; }

namespace {

std::size_t sample_from_log_weights(std::span<const double> lw, Rng& rng) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : lw) mx = std::max(mx, v);
    double total = 0.0;
    for (double v : lw) total += std::exp(v - mx);
    const double u = rng.uniform01() * total;
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < lw.size(); ++t) {
        acc += std::exp(lw[t] - mx);
        if (u < acc) return t;
    }
    return lw.size() - 1;
}

// congestion change if `t` replaced user i's trajectory, with inflow counts
// that exclude user i's current relays
double congestion_of_candidate(const Trajectory& t, std::span<const std::int64_t> inflow_wo,
                               const CongestionPenalty& eta) {
    double dM = 0.0;
    // count relay multiplicities over the (short) relay list
    std::vector<std::uint32_t> rs(t.relays);
    std::sort(rs.begin(), rs.end());
    for (std::size_t a = 0; a < rs.size();) {
        std::size_t b = a;
        while (b < rs.size() && rs[b] == rs[a]) ++b;
        const std::int64_t m0 = inflow_wo[rs[a]];
        dM += eta(m0 + std::int64_t(b - a)) - eta(m0);
        a = b;
    }
    return dM;
}

} // namespace

GibbsResampleReport gibbs_resample_user(ChainState& state, const InterferenceField& field,
                                        const ModelParams& params, double gamma, double beta,
                                        std::uint32_t user, Rng& rng, GibbsAux* aux,
                                        std::uint64_t enum_budget) {
    const std::size_t n = field.points->n;
    GibbsResampleReport report;
    auto choices = per_user_choice_count(n, params.k_max, enum_budget);

    Trajectory chosen;
    if (choices) {
        // exact conditional by enumeration: weight(t) = apriori * exp(-gamma S_t - beta dM_t)
        std::vector<std::int64_t> inflow_wo(state.inflow.begin(), state.inflow.end());
        for (std::uint32_t r : state.config.traj[user].relays) --inflow_wo[r];
        std::vector<double> lw(*choices);
        std::vector<Trajectory> cand(*choices);
        for (std::uint64_t t = 0; t < *choices; ++t) {
            cand[t] = decode_trajectory(t, n, params.k_max);
            lw[t] = apriori_log_weight(cand[t], n) -
                    gamma * trajectory_energy(field, user, cand[t]);
            if (beta != 0.0) lw[t] -= beta * congestion_of_candidate(cand[t], inflow_wo, params.eta);
        }
        chosen = cand[sample_from_log_weights(lw, rng)];
    } else if (beta == 0.0) {
        // product form: P(k) prop (T^(k-1) v)[user], then relays forward using
        // the cached backward chain vectors
        GibbsAux* local = aux;
        bool own = false;
        if (local == nullptr || local->gamma != gamma || local->k_max != params.k_max) {
            local = gibbs_aux_create(field, params, gamma);
            own = true;
        }
        std::vector<double> lk(std::size_t(params.k_max));
        for (int k = 1; k <= params.k_max; ++k)
            lk[std::size_t(k - 1)] = local->log_chain[std::size_t(k - 1)][user];
        const int k = int(sample_from_log_weights(lk, rng)) + 1;
        chosen.k = k;
        chosen.relays.resize(std::size_t(k - 1));
        std::size_t a = user;
        std::vector<double> lw(n);
        for (int l = 1; l < k; ++l) {
            const auto& back = local->log_chain[std::size_t(k - 1 - l)];
            for (std::size_t b = 0; b < n; ++b) lw[b] = local->log_T[a * n + b] + back[b];
            const std::size_t b = sample_from_log_weights(lw, rng);
            chosen.relays[std::size_t(l - 1)] = std::uint32_t(b);
            a = b;
        }
        if (own) gibbs_aux_destroy(local);
    } else {
        report.fallback_metropolis = true;
        metropolis_step(state, field, params, gamma, beta, rng);
        return report;
    }

    const EnergyDelta d = delta_energy(field, state.config, state.inflow, params.eta, user, chosen);
    apply_replacement(state.config, state.inflow, user, chosen);
    state.S += d.dS;
    state.M += d.dM;
    return report;
}

RunResult run_chain(const InterferenceField& field, const ModelParams& params,
                    const RunOptions& opts, std::uint64_t seed) {
    if (opts.steps < 1) throw std::invalid_argument("run_chain: steps must be >= 1");
    if (opts.thin < 1) throw std::invalid_argument("run_chain: thin must be >= 1");
    const std::size_t n = field.points->n;
    Rng rng(seed);
    RunResult res;
    ChainState st = ChainState::init_apriori(field, params, rng);

    auto target_score = [&](double S, double M) { return params.gamma * S + params.beta * M; };
    res.best_config = st.config;
    res.best_S = st.S;
    res.best_M = st.M;
    res.best_score = target_score(st.S, st.M);

    GibbsAux* aux = nullptr;
    double aux_gamma = -1.0;
    std::uint64_t accepted = 0;
    const std::uint64_t burn = std::uint64_t(double(opts.steps) * opts.burn_in_frac);
    double sum_S = 0.0, sum_M = 0.0;
    std::uint64_t post = 0;

    for (std::uint64_t t = 0; t < opts.steps; ++t) {
        const double gamma_t = opts.anneal ? opts.schedule.gamma_at(t) : params.gamma;
        const double beta_t = opts.anneal ? opts.schedule.beta_at(t) : params.beta;
        const bool acc = metropolis_step(st, field, params, gamma_t, beta_t, rng);
        if (acc) ++accepted;

        if (opts.sweep_every > 0 && (t + 1) % opts.sweep_every == 0) {
            auto choices = per_user_choice_count(n, params.k_max, opts.enum_budget);
            if (!choices && beta_t == 0.0 && (aux == nullptr || aux_gamma != gamma_t)) {
                gibbs_aux_destroy(aux);
                aux = gibbs_aux_create(field, params, gamma_t);
                aux_gamma = gamma_t;
            }
            for (std::uint32_t i = 0; i < n; ++i) {
                auto rep = gibbs_resample_user(st, field, params, gamma_t, beta_t, i, rng, aux,
                                               opts.enum_budget);
                if (rep.fallback_metropolis) ++res.gibbs_fallbacks;
            }
        }

        st.step = t + 1;
        const double score = target_score(st.S, st.M);
        if (score < res.best_score) {
            res.best_score = score;
            res.best_config = st.config;
            res.best_S = st.S;
            res.best_M = st.M;
        }
        if (t >= burn) {
            sum_S += st.S;
            sum_M += st.M;
            ++post;
        }
        if (t % opts.thin == 0)
            res.trace.push_back({t, gamma_t, beta_t, st.S, st.M, acc});

        // periodic consistency audit of the cached energies
        if ((t + 1) % 10'000 == 0) {
            ChainState probe = st;
            probe.recompute(field, params.eta);
            if (std::abs(probe.S - st.S) > 1e-8 || std::abs(probe.M - st.M) > 1e-8)
                throw std::logic_error("run_chain: cached energies drifted");
            st.S = probe.S;
            st.M = probe.M;
        }
    }
    gibbs_aux_destroy(aux);

    res.state = std::move(st);
    res.acceptance_rate = double(accepted) / double(opts.steps);
    if (post > 0) {
        res.mean_S = sum_S / double(post);
        res.mean_M = sum_M / double(post);
    }
    return res;
}

std::vector<RunResult> run_replicas(const InterferenceField& field, const ModelParams& params,
                                    const RunOptions& opts, std::uint64_t seed,
                                    std::size_t replicas, bool parallel) {
    std::vector<RunResult> out(replicas);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t r = 0; r < std::int64_t(replicas); ++r)
            out[std::size_t(r)] = run_chain(field, params, opts, seed + std::uint64_t(r));
    } else {
        for (std::size_t r = 0; r < replicas; ++r)
            out[r] = run_chain(field, params, opts, seed + r);
    }
    return out;
}

} // namespace hopnet
