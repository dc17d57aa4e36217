#pragma once
// Spatial domain: the observation window W = [-r, r]^d with the base station
// at the origin, an intensity measure given by a density on W, the triadic
// grid of congruent subcubes used for coarse-graining, and Poisson point
// process sampling.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hopnet/rng.hpp"

namespace hopnet {

// Path-loss function l(r) = min{1, r^-alpha}: monotone, l(0)=1, bounded away
// from zero on any bounded window.
double path_loss(double dist, double alpha);

struct Window {
    int dim = 1;       // d >= 1
    double radius = 1; // r > 0, W = [-r, r]^d

    double side() const { return 2.0 * radius; }
    double volume() const;
    bool contains(std::span<const double> x) const;

    bool operator==(const Window&) const = default;
};

// Intensity density u on W; the intensity measure is mu(dx) = u(x) dx and the
// point process has intensity lambda * mu.  Uniform densities keep a flag so
// cell masses can use the closed form instead of quadrature.
struct IntensityDensity {
    std::function<double(std::span<const double>)> u;
    bool uniform = false;
    double uniform_value = 0.0;

    static IntensityDensity make_uniform(double total_mass, const Window& w);
    double operator()(std::span<const double> x) const { return u(x); }
};

// Triadic grid: W partitioned into per_axis^d congruent subcubes with
// per_axis = 1/delta a power of three (or 1), so the origin is a cell center
// and refinements nest.  Cells are numbered lexicographically by midpoint,
// first coordinate most significant.
struct Grid {
    Window window;
    std::int64_t per_axis = 1; // 1/delta
    std::int64_t n_cells = 1;  // per_axis^dim

    double delta() const { return 1.0 / double(per_axis); }
    double cell_side() const { return window.side() / double(per_axis); }
    double cell_volume() const;

    // lexicographic id <-> per-axis indices
    std::vector<std::int64_t> cell_coords(std::int64_t cell) const;
    std::int64_t cell_of_coords(std::span<const std::int64_t> c) const;
    std::vector<double> cell_center(std::int64_t cell) const;

    // cell id of the cell containing x; throws std::domain_error if any
    // coordinate lies exactly on an interior cell face (membership is only
    // defined Lebesgue-a.e.) or x is outside W.
    std::int64_t locate_cell(std::span<const double> x) const;

    // id of the grid-coarsening parent cell when per_axis shrinks by `factor`
    std::int64_t parent_cell(std::int64_t cell, std::int64_t coarse_per_axis) const;

    // mirror cell under x -> -x (used for symmetry checks)
    std::int64_t reflect_cell(std::int64_t cell) const;

    bool operator==(const Grid&) const = default;
};

// per_axis must be a power of 3 (3^0 = 1 allowed)
Grid build_grid(const Window& w, std::int64_t per_axis);

// Integrate the density over each cell: closed form for uniform densities,
// otherwise midpoint quadrature with one refinement level (2^d sub-midpoints).
std::vector<double> cell_masses(const Grid& grid, const IntensityDensity& density);

// A sampled user configuration: n points of dimension dim, flat coordinate
// storage.  Positions are immutable once sampled.
struct PointConfig {
    int dim = 1;
    std::size_t n = 0;
    std::vector<double> coords; // n * dim

    std::span<const double> point(std::size_t i) const {
        return {coords.data() + i * std::size_t(dim), std::size_t(dim)};
    }
};

// Poisson point process with intensity lambda * mu: N ~ Poisson(lambda mu(W)),
// then N i.i.d. points with density u/mu(W) drawn by rejection against the
// density's sup over W.  Deterministic given (seed, lambda).  Points whose
// coordinates fall exactly on a triadic grid line (a probability-zero event)
// are redrawn so that later cell location is always well defined.
PointConfig sample_ppp(const Window& w, const IntensityDensity& density, double lambda,
                       std::uint64_t seed, double density_sup_hint = 0.0);

} // namespace hopnet
