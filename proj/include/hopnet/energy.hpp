#pragma once
// Interference and congestion energies of a trajectory collection.
//
// Every user i sends one message to the origin in k_i <= k_max hops through
// relays chosen among the users (repeats and relaying through oneself are
// allowed; multiplicities count).  With the path-loss l and the empirical
// field
//     field(x) = (1/lambda) * sum_j l(|X_j - x|),
// the signal-to-interference ratio of a hop from a to the receiver x is
//     SIR(a, x) = l(|a - x|) / field(x)            (own term included, so SIR <= lambda)
// and the two energies are
//     S = sum_i sum_{hops (a->x)} 1/SIR(a, x)
//     M = sum_i eta(m_i),  m_i = number of incoming hops at X_i,
// with eta(m) = m(m-1) by default (superlinear congestion penalty).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hopnet/geometry.hpp"

namespace hopnet {

// Congestion penalty eta: nonnegative, eta(0) = 0, and superlinear; the
// constructor smoke-tests eta(m)/m nondecreasing for m <= 64.
class CongestionPenalty {
public:
    CongestionPenalty(); // default eta(m) = m(m-1)
    explicit CongestionPenalty(std::function<double(std::int64_t)> eta);
    double operator()(std::int64_t m) const { return eta_(m); }

private:
    std::function<double(std::int64_t)> eta_;
};

// One message trajectory: hop count k and the k-1 relay point indices; the
// implicit endpoints are the sender's own point and the origin.
struct Trajectory {
    int k = 1;
    std::vector<std::uint32_t> relays; // size k-1

    bool operator==(const Trajectory&) const = default;
};

// Trajectories of all users, one per user.
struct TrajectoryConfig {
    std::vector<Trajectory> traj;

    static TrajectoryConfig all_direct(std::size_t n);
    bool operator==(const TrajectoryConfig&) const = default;
};

// Precomputed interference field of a point configuration: values at every
// point and at the origin.  Positions never change during a chain, so this is
// built once and shared.
struct InterferenceField {
    const PointConfig* points = nullptr;
    double lambda = 1.0;
    double alpha = 2.0;
    std::vector<double> at_point; // field(X_i)
    double at_origin = 0.0;       // field(o)
};

InterferenceField interference_field(const PointConfig& cfg, double lambda, double alpha,
                                     bool parallel = false);

// SIR of a hop tx -> rx; rx < 0 encodes the origin.
double sir(const InterferenceField& field, std::uint32_t tx, std::int64_t rx);

// interference energy of one trajectory (sum of reciprocal SIRs over its hops)
double trajectory_energy(const InterferenceField& field, std::uint32_t user, const Trajectory& t);

// total interference energy S
double energy_S(const InterferenceField& field, const TrajectoryConfig& cfg);

// incoming-hop counts m_i and the congestion energy M = sum eta(m_i)
struct InflowResult {
    std::vector<std::int64_t> m; // per user
    double M = 0.0;
};
InflowResult inflow_and_M(std::size_t n, const TrajectoryConfig& cfg, const CongestionPenalty& eta);

// energy deltas if user's trajectory were replaced (state unchanged)
struct EnergyDelta {
    double dS = 0.0;
    double dM = 0.0;
};
EnergyDelta delta_energy(const InterferenceField& field, const TrajectoryConfig& cfg,
                         std::span<const std::int64_t> inflow, const CongestionPenalty& eta,
                         std::uint32_t user, const Trajectory& replacement);

// apply a replacement, updating the inflow counts in place
void apply_replacement(TrajectoryConfig& cfg, std::span<std::int64_t> inflow,
                       std::uint32_t user, const Trajectory& replacement);

} // namespace hopnet
