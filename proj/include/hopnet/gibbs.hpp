#pragma once
// The a priori trajectory measure, the Gibbs distribution over trajectory
// collections, an exact enumeration oracle for tiny instances, and the
// factorized partition function when the congestion term is switched off.
//
// A priori, each trajectory of hop count k carries weight N^-(k-1) (uniform
// over the N^(k-1) relay tuples), so the per-user total mass is k_max and the
// total mass over configurations is k_max^N.  The Gibbs distribution tilts
// this by exp(-gamma*S - beta*M); its normalizer is the partition function Z.

#include <cstdint>
#include <optional>
#include <vector>

#include "hopnet/energy.hpp"

namespace hopnet {

struct ModelParams {
    double gamma = 0.0;
    double beta = 0.0;
    int k_max = 1;
    double alpha = 2.0;
    CongestionPenalty eta;
};

double apriori_log_weight(const Trajectory& t, std::size_t n_points);

// Per-user trajectory count sum_{k<=k_max} N^(k-1); nullopt on overflow past `cap`.
std::optional<std::uint64_t> per_user_choice_count(std::size_t n_points, int k_max, std::uint64_t cap);

// Mixed-radix trajectory codec: per-user index t in [0, T) decodes as hop
// count k (ascending) then the relay tuple in lexicographic order (first
// relay most significant).  A configuration index stacks user 0 as the most
// significant digit.  This fixes the enumeration order of the oracle.
Trajectory decode_trajectory(std::uint64_t t, std::size_t n_points, int k_max);
std::uint64_t encode_trajectory(const Trajectory& t, std::size_t n_points);

struct ExactGibbs {
    double log_Z = 0.0;                 // log of the partition function
    std::vector<double> log_weight;     // unnormalized, per configuration index
    std::vector<double> probability;    // normalized, per configuration index
    std::uint64_t per_user_choices = 0; // T
};

// Enumerates every configuration; refuses instances with T^N above the budget.
// Throws BudgetExceeded (see below) rather than truncating.
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ExactGibbs exact_gibbs(const InterferenceField& field, const ModelParams& params,
                       std::uint64_t budget = 1'000'000);

// (1/lambda) log Z at beta = 0, where Z factorizes over users.  Per user,
//   Z_i = sum_k N^-(k-1) sum_{relays} exp(-gamma * sum_hops 1/SIR)
// is a chained product: with the N x N kernel T[a][b] = exp(-gamma/SIR(a->b))/N
// and end vector v[b] = exp(-gamma/SIR(b->o)), the k-hop term is (T^(k-1) v)[i].
// The chain vectors are shared across users, so the total cost is
// O(k_max * N^2), accumulated in the log domain throughout.
double factorized_log_partition_beta0(const InterferenceField& field, const ModelParams& params,
                                      bool parallel = false);

} // namespace hopnet
