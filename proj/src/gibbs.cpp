#include "hopnet/gibbs.hpp"

#include <cmath>
#include <stdexcept>

#include "hopnet/kernels.hpp"

namespace hopnet {

double apriori_log_weight(const Trajectory& t, std::size_t n_points) {
    return -double(t.k - 1) * std::log(double(n_points));
}

std::optional<std::uint64_t> per_user_choice_count(std::size_t n_points, int k_max, std::uint64_t cap) {
    std::uint64_t total = 0, term = 1;
    for (int k = 1; k <= k_max; ++k) {
        if (term > cap - total) return std::nullopt;
        total += term;
        if (k < k_max) {
            if (n_points != 0 && term > cap / n_points) return std::nullopt;
            term *= n_points;
        }
    }
    return total;
}

Trajectory decode_trajectory(std::uint64_t t, std::size_t n_points, int k_max) {
    std::uint64_t term = 1; // N^(k-1)
    for (int k = 1; k <= k_max; ++k) {
        if (t < term) {
            Trajectory out;
            out.k = k;
            out.relays.resize(std::size_t(k - 1));
            for (int l = k - 2; l >= 0; --l) {
                out.relays[std::size_t(l)] = std::uint32_t(t % n_points);
                t /= n_points;
            }
            return out;
        }
        t -= term;
        term *= n_points;
    }
    throw std::out_of_range("decode_trajectory: index beyond the per-user choice count");
}

std::uint64_t encode_trajectory(const Trajectory& t, std::size_t n_points) {
    std::uint64_t base = 0, term = 1;
    for (int k = 1; k < t.k; ++k) {
        base += term;
        term *= n_points;
    }
    std::uint64_t idx = 0;
    for (std::uint32_t relay : t.relays) idx = idx * n_points + relay;
    return base + idx;
}

ExactGibbs exact_gibbs(const InterferenceField& field, const ModelParams& params,
                       std::uint64_t budget) {
    const std::size_t n = field.points->n;
    if (n == 0) throw std::invalid_argument("exact_gibbs: empty point configuration");
    auto per_user = per_user_choice_count(n, params.k_max, budget);
    if (!per_user) throw BudgetExceeded("exact_gibbs: per-user choice count exceeds budget");
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (*per_user != 0 && total > budget / *per_user)
            throw BudgetExceeded("exact_gibbs: configuration count exceeds budget");
        total *= *per_user;
    }

    // Precompute each user's candidate trajectories with their a priori log
    // weight and interference energy; the congestion term couples users, so it
    // is recomputed per configuration from the inflow counts.
    std::vector<std::vector<Trajectory>> cand(n);
    std::vector<std::vector<double>> cand_log(n); // apriori - gamma * S_traj
    for (std::size_t i = 0; i < n; ++i) {
        cand[i].reserve(*per_user);
        cand_log[i].reserve(*per_user);
        for (std::uint64_t t = 0; t < *per_user; ++t) {
            Trajectory tr = decode_trajectory(t, n, params.k_max);
            const double lw = apriori_log_weight(tr, n) -
                              params.gamma * trajectory_energy(field, std::uint32_t(i), tr);
            cand[i].push_back(std::move(tr));
            cand_log[i].push_back(lw);
        }
    }

    ExactGibbs out;
    out.per_user_choices = *per_user;
    out.log_weight.resize(total);
    std::vector<std::uint64_t> digits(n, 0);
    std::vector<std::int64_t> inflow(n, 0);
    TrajectoryConfig cfg;
    cfg.traj.reserve(n);
    for (std::size_t i = 0; i < n; ++i) cfg.traj.push_back(cand[i][0]);
    for (std::size_t i = 0; i < n; ++i)
        for (std::uint32_t r : cfg.traj[i].relays) ++inflow[r];

    for (std::uint64_t idx = 0;; ++idx) {
        double lw = 0.0;
        for (std::size_t i = 0; i < n; ++i) lw += cand_log[i][digits[i]];
        double M = 0.0;
        for (std::int64_t m : inflow) M += params.eta(m);
        out.log_weight[idx] = lw - params.beta * M;

        // advance the mixed-radix counter, least significant digit = last user
        std::size_t pos = n;
        while (pos > 0) {
            --pos;
            for (std::uint32_t r : cfg.traj[pos].relays) --inflow[r];
            if (++digits[pos] < *per_user) {
                cfg.traj[pos] = cand[pos][digits[pos]];
                for (std::uint32_t r : cfg.traj[pos].relays) ++inflow[r];
                break;
            }
            digits[pos] = 0;
            cfg.traj[pos] = cand[pos][0];
            for (std::uint32_t r : cfg.traj[pos].relays) ++inflow[r];
            if (pos == 0) {
                pos = SIZE_MAX;
                break;
            }
        }
        if (pos == SIZE_MAX) break;
    }

    out.log_Z = kernels::logsumexp(out.log_weight);
    out.probability.resize(total);
    for (std::uint64_t i = 0; i < total; ++i)
        out.probability[i] = std::exp(out.log_weight[i] - out.log_Z);
    return out;
}

double factorized_log_partition_beta0(const InterferenceField& field, const ModelParams& params,
                                      bool parallel) {
    if (params.beta != 0.0)
        throw std::invalid_argument("factorized_log_partition_beta0 requires beta = 0");
    const std::size_t n = field.points->n;
    if (n == 0) throw std::invalid_argument("factorized_log_partition_beta0: empty configuration");

    // log T[a][b] = -gamma/SIR(a->b) - log N, log v[b] = -gamma/SIR(b->o)
    const double log_n = std::log(double(n));
    std::vector<double> log_T(n * n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            log_T[a * n + b] =
                -params.gamma / sir(field, std::uint32_t(a), std::int64_t(b)) - log_n;
    std::vector<double> log_v(n);
    for (std::size_t b = 0; b < n; ++b) log_v[b] = -params.gamma / sir(field, std::uint32_t(b), -1);

    // acc[i] accumulates logsumexp over k of (T^(k-1) v)[i]
    std::vector<double> acc(log_v), w(log_v), next(n);
    for (int k = 2; k <= params.k_max; ++k) {
        kernels::logsumexp_matvec(log_T, n, w, next, parallel);
        w.swap(next);
        for (std::size_t i = 0; i < n; ++i) {
            const double hi = std::max(acc[i], w[i]);
            acc[i] = hi + std::log(std::exp(acc[i] - hi) + std::exp(w[i] - hi));
        }
    }
    double log_Z = 0.0;
    for (std::size_t i = 0; i < n; ++i) log_Z += acc[i];
    return log_Z / field.lambda;
}

} // namespace hopnet
