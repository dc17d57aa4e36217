#include "hopnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hopnet {

double path_loss(double dist, double alpha) {
    if (dist < 0) throw std::invalid_argument("path_loss: negative distance");
    if (dist <= 1.0) return 1.0;
    return std::pow(dist, -alpha);
}

double Window::volume() const {
    double v = 1.0;
    for (int j = 0; j < dim; ++j) v *= side();
    return v;
}

bool Window::contains(std::span<const double> x) const {
    if (int(x.size()) != dim) return false;
    for (double c : x)
        if (c < -radius || c > radius) return false;
    return true;
}

IntensityDensity IntensityDensity::make_uniform(double total_mass, const Window& w) {
    if (!(total_mass > 0)) throw std::invalid_argument("uniform density needs positive mass");
    const double value = total_mass / w.volume();
    IntensityDensity d;
    d.u = [value](std::span<const double>) { return value; };
    d.uniform = true;
    d.uniform_value = value;
    return d;
}

double Grid::cell_volume() const {
    double v = 1.0;
    for (int j = 0; j < window.dim; ++j) v *= cell_side();
    return v;
}

std::vector<std::int64_t> Grid::cell_coords(std::int64_t cell) const {
    std::vector<std::int64_t> c(window.dim);
    for (int j = window.dim - 1; j >= 0; --j) {
        c[j] = cell % per_axis;
        cell /= per_axis;
    }
    return c;
}

std::int64_t Grid::cell_of_coords(std::span<const std::int64_t> c) const {
    std::int64_t id = 0;
    for (int j = 0; j < window.dim; ++j) {
        if (c[j] < 0 || c[j] >= per_axis) throw std::out_of_range("cell coordinate out of range");
        id = id * per_axis + c[j];
    }
    return id;
}

std::vector<double> Grid::cell_center(std::int64_t cell) const {
    auto c = cell_coords(cell);
    std::vector<double> x(window.dim);
    for (int j = 0; j < window.dim; ++j)
        x[j] = -window.radius + (double(c[j]) + 0.5) * cell_side();
    return x;
}

std::int64_t Grid::locate_cell(std::span<const double> x) const {
    if (!window.contains(x)) throw std::domain_error("locate_cell: point outside window");
    std::int64_t id = 0;
    for (int j = 0; j < window.dim; ++j) {
        const double u = (x[j] + window.radius) / cell_side();
        double fl = std::floor(u);
        if (u == fl && fl > 0 && fl < double(per_axis))
            throw std::domain_error("locate_cell: coordinate exactly on an interior cell face");
        std::int64_t c = std::int64_t(fl);
        if (c == per_axis) c = per_axis - 1; // x[j] == +radius belongs to the last cell
        id = id * per_axis + c;
    }
    return id;
}

std::int64_t Grid::parent_cell(std::int64_t cell, std::int64_t coarse_per_axis) const {
    if (coarse_per_axis <= 0 || per_axis % coarse_per_axis != 0)
        throw std::invalid_argument("parent_cell: coarse grid does not nest");
    const std::int64_t factor = per_axis / coarse_per_axis;
    auto c = cell_coords(cell);
    std::int64_t id = 0;
    for (int j = 0; j < window.dim; ++j) id = id * coarse_per_axis + c[j] / factor;
    return id;
}

std::int64_t Grid::reflect_cell(std::int64_t cell) const {
    auto c = cell_coords(cell);
    std::int64_t id = 0;
    for (int j = 0; j < window.dim; ++j) id = id * per_axis + (per_axis - 1 - c[j]);
    return id;
}

Grid build_grid(const Window& w, std::int64_t per_axis) {
    if (w.dim < 1 || !(w.radius > 0)) throw std::invalid_argument("build_grid: bad window");
    std::int64_t p = per_axis;
    while (p > 1) {
        if (p % 3 != 0) throw std::invalid_argument("build_grid: per_axis must be a power of 3");
        p /= 3;
    }
    Grid g;
    g.window = w;
    g.per_axis = per_axis;
    g.n_cells = 1;
    for (int j = 0; j < w.dim; ++j) {
        if (g.n_cells > (std::int64_t(1) << 40) / per_axis)
            throw std::invalid_argument("build_grid: cell count too large");
        g.n_cells *= per_axis;
    }
    return g;
}

std::vector<double> cell_masses(const Grid& grid, const IntensityDensity& density) {
    std::vector<double> masses(std::size_t(grid.n_cells), 0.0);
    if (density.uniform) {
        const double m = density.uniform_value * grid.cell_volume();
        std::fill(masses.begin(), masses.end(), m);
        return masses;
    }
    // midpoint rule refined once: 2^d sub-midpoints per cell
    const int d = grid.window.dim;
    const int sub = 1 << d;
    const double h = grid.cell_side();
    const double subvol = grid.cell_volume() / double(sub);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::int64_t cell = 0; cell < grid.n_cells; ++cell) {
        auto c = grid.cell_coords(cell);
        double acc = 0.0;
        for (int s = 0; s < sub; ++s) {
            for (int j = 0; j < d; ++j) {
                const double off = ((s >> j) & 1) ? 0.75 : 0.25;
                x[std::size_t(j)] = -grid.window.radius + (double(c[j]) + off) * h;
            }
            acc += density(x);
        }
        masses[std::size_t(cell)] = acc * subvol;
    }
    return masses;
}

namespace {

// A coordinate sits on a triadic grid line if (x+r)/(2r*3^-n) is an integer
// for some refinement depth n; such points make cell membership ambiguous.
bool on_triadic_line(double coord, double radius, int max_depth) {
    double scale = 1.0; // per_axis = 3^n
    for (int n = 0; n <= max_depth; ++n) {
        const double u = (coord + radius) * scale / (2.0 * radius);
        if (u == std::floor(u) && u > 0 && u < scale) return true;
        scale *= 3.0;
    }
    return false;
}

} // namespace

PointConfig sample_ppp(const Window& w, const IntensityDensity& density, double lambda,
                       std::uint64_t seed, double density_sup_hint) {
    if (!(lambda > 0)) throw std::invalid_argument("sample_ppp: lambda must be positive");
    Rng rng(seed);

    // total intensity mass mu(W) for the Poisson count
    double mu_w;
    double sup = density_sup_hint;
    if (density.uniform) {
        mu_w = density.uniform_value * w.volume();
        sup = density.uniform_value;
    } else {
        // estimate mass and sup on the delta = 1/27 grid midpoints (callers
        // with sharply peaked densities should pass density_sup_hint)
        Grid probe = build_grid(w, 27);
        auto masses = cell_masses(probe, density);
        mu_w = 0.0;
        for (double m : masses) mu_w += m;
        for (std::int64_t cell = 0; cell < probe.n_cells; ++cell) {
            auto x = probe.cell_center(cell);
            sup = std::max(sup, density(x));
        }
        sup *= 1.5; // headroom for mild variation between probe points
    }
    if (!(mu_w > 0) || !(sup > 0)) throw std::invalid_argument("sample_ppp: degenerate density");

    const std::uint64_t n = rng.poisson(lambda * mu_w);
    PointConfig cfg;
    cfg.dim = w.dim;
    cfg.n = n;
    cfg.coords.resize(n * std::size_t(w.dim));
    std::vector<double> x(std::size_t(w.dim));
    for (std::uint64_t i = 0; i < n; ++i) {
        for (;;) {
            bool clean = true;
            for (int j = 0; j < w.dim; ++j) {
                x[std::size_t(j)] = rng.uniform(-w.radius, w.radius);
                if (on_triadic_line(x[std::size_t(j)], w.radius, 8)) clean = false;
            }
            if (!clean) continue; // redraw boundary points
            if (density.uniform) break;
            const double acc = density(x) / sup;
            if (rng.uniform01() < acc) break;
        }
        for (int j = 0; j < w.dim; ++j) cfg.coords[i * std::size_t(w.dim) + std::size_t(j)] = x[std::size_t(j)];
    }
    return cfg;
}

} // namespace hopnet
