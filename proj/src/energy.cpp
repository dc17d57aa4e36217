#include "hopnet/energy.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "hopnet/kernels.hpp"

namespace hopnet {

CongestionPenalty::CongestionPenalty()
    : CongestionPenalty([](std::int64_t m) { return double(m) * double(m - 1); }) {}

CongestionPenalty::CongestionPenalty(std::function<double(std::int64_t)> eta) : eta_(std::move(eta)) {
    if (eta_(0) != 0.0) throw std::invalid_argument("CongestionPenalty: eta(0) must be 0");
    double prev_ratio = -1.0;
    for (std::int64_t m = 1; m <= 64; ++m) {
        const double v = eta_(m);
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("CongestionPenalty: eta must be finite and nonnegative on m <= 64");
        const double ratio = v / double(m);
        if (ratio < prev_ratio - 1e-12)
            throw std::invalid_argument("CongestionPenalty: eta(m)/m must be nondecreasing (superlinearity)");
        prev_ratio = ratio;
    }
}

TrajectoryConfig TrajectoryConfig::all_direct(std::size_t n) {
    TrajectoryConfig cfg;
    cfg.traj.assign(n, Trajectory{});
    return cfg;
}

InterferenceField interference_field(const PointConfig& cfg, double lambda, double alpha,
                                     bool parallel) {
    InterferenceField f;
    f.points = &cfg;
    f.lambda = lambda;
    f.alpha = alpha;
    f.at_point.resize(cfg.n);
    kernels::field_sums(cfg.coords, cfg.n, cfg.dim, cfg.coords, cfg.n, lambda, alpha,
                        f.at_point, parallel);
    std::vector<double> origin(std::size_t(cfg.dim), 0.0);
    double out[1];
    kernels::field_sums(cfg.coords, cfg.n, cfg.dim, origin, 1, lambda, alpha, {out, 1}, false);
    f.at_origin = out[0];
    return f;
}

namespace {

inline double point_dist(const PointConfig& pts, std::uint32_t a, std::uint32_t b) {
    const double* pa = pts.coords.data() + std::size_t(a) * std::size_t(pts.dim);
    const double* pb = pts.coords.data() + std::size_t(b) * std::size_t(pts.dim);
    double s = 0.0;
    for (int j = 0; j < pts.dim; ++j) {
        const double d = pa[j] - pb[j];
        s += d * d;
    }
    return std::sqrt(s);
}

inline double origin_dist(const PointConfig& pts, std::uint32_t a) {
    const double* pa = pts.coords.data() + std::size_t(a) * std::size_t(pts.dim);
    double s = 0.0;
    for (int j = 0; j < pts.dim; ++j) s += pa[j] * pa[j];
    return std::sqrt(s);
}

} // namespace

double sir(const InterferenceField& field, std::uint32_t tx, std::int64_t rx) {
    const PointConfig& pts = *field.points;
    if (rx < 0)
        return path_loss(origin_dist(pts, tx), field.alpha) / field.at_origin;
    return path_loss(point_dist(pts, tx, std::uint32_t(rx)), field.alpha) /
           field.at_point[std::size_t(rx)];
}

double trajectory_energy(const InterferenceField& field, std::uint32_t user, const Trajectory& t) {
    double e = 0.0;
    std::uint32_t prev = user;
    for (std::uint32_t relay : t.relays) {
        e += 1.0 / sir(field, prev, std::int64_t(relay));
        prev = relay;
    }
    e += 1.0 / sir(field, prev, -1);
    return e;
}

double energy_S(const InterferenceField& field, const TrajectoryConfig& cfg) {
    double s = 0.0;
    for (std::size_t i = 0; i < cfg.traj.size(); ++i)
        s += trajectory_energy(field, std::uint32_t(i), cfg.traj[i]);
    return s;
}

InflowResult inflow_and_M(std::size_t n, const TrajectoryConfig& cfg, const CongestionPenalty& eta) {
    InflowResult r;
    r.m.assign(n, 0);
    for (const Trajectory& t : cfg.traj)
        for (std::uint32_t relay : t.relays) ++r.m[relay];
    for (std::int64_t m : r.m) r.M += eta(m);
    return r;
}

EnergyDelta delta_energy(const InterferenceField& field, const TrajectoryConfig& cfg,
                         std::span<const std::int64_t> inflow, const CongestionPenalty& eta,
                         std::uint32_t user, const Trajectory& replacement) {
    EnergyDelta d;
    const Trajectory& old = cfg.traj[user];
    if (replacement == old) return d;
    d.dS = trajectory_energy(field, user, replacement) - trajectory_energy(field, user, old);

    // net relay-count changes of the affected users (repeats add with multiplicity)
    std::unordered_map<std::uint32_t, std::int64_t> delta_m;
    for (std::uint32_t relay : replacement.relays) ++delta_m[relay];
    for (std::uint32_t relay : old.relays) --delta_m[relay];
    for (const auto& [j, dm] : delta_m) {
        if (dm == 0) continue;
        const std::int64_t mj = inflow[j];
        d.dM += eta(mj + dm) - eta(mj);
    }
    return d;
}

void apply_replacement(TrajectoryConfig& cfg, std::span<std::int64_t> inflow,
                       std::uint32_t user, const Trajectory& replacement) {
    for (std::uint32_t relay : cfg.traj[user].relays) --inflow[relay];
    for (std::uint32_t relay : replacement.relays) ++inflow[relay];
    cfg.traj[user] = replacement;
}

} // namespace hopnet
