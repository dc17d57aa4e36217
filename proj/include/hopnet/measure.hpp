#pragma once
// Measures on the triadic grid.
//
// GridMeasure: one mass per cell.  GridMeasureK: a measure on k-tuples of
// cells (route measures live on W^k); dense storage for small tuple spaces,
// a hash map keyed by the mixed-radix tuple index otherwise.  Coarsening maps
// a measure on a fine grid to a nested coarser one (conditional expectation
// onto the coarser sigma-field; the tower property holds exactly).

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "hopnet/geometry.hpp"

namespace hopnet {

struct GridMeasure {
    Grid grid;
    std::vector<double> mass; // size grid.n_cells

    explicit GridMeasure(const Grid& g) : grid(g), mass(std::size_t(g.n_cells), 0.0) {}
    GridMeasure() = default;

    double total() const;
    double& operator[](std::int64_t cell) { return mass[std::size_t(cell)]; }
    double operator[](std::int64_t cell) const { return mass[std::size_t(cell)]; }
};

// Measure on ordered k-tuples of cells.  Tuple index = sum_l c_l * n^(k-1-l)
// (first coordinate most significant), which keeps dense iteration in
// lexicographic tuple order.
class GridMeasureK {
public:
    static constexpr std::int64_t dense_limit = std::int64_t(1) << 24;

    GridMeasureK() = default;
    GridMeasureK(const Grid& g, int k);

    int k() const { return k_; }
    const Grid& grid() const { return grid_; }
    std::int64_t tuple_count() const { return tuple_count_; } // -1 if beyond index range
    bool dense() const { return dense_storage_; }

    std::int64_t tuple_index(std::span<const std::int64_t> cells) const;
    std::vector<std::int64_t> tuple_cells(std::int64_t index) const;

    double get(std::int64_t index) const;
    void add(std::int64_t index, double m);
    void set(std::int64_t index, double m);

    double total() const;

    // visit nonzero entries; sparse storage is visited in sorted index order
    // so downstream output is deterministic
    template <typename F>
    void for_each(F&& f) const {
        if (dense_storage_) {
            for (std::int64_t t = 0; t < tuple_count_; ++t)
                if (dense_[std::size_t(t)] != 0.0) f(t, dense_[std::size_t(t)]);
        } else {
            for (std::int64_t idx : sorted_keys()) f(idx, sparse_.at(idx));
        }
    }

    // marginal of the l-th coordinate (0-based), as a cell measure
    GridMeasure marginal(int l) const;

    std::vector<std::int64_t> sorted_keys() const;

private:
    Grid grid_;
    int k_ = 1;
    std::int64_t tuple_count_ = 0;
    bool dense_storage_ = true;
    std::vector<double> dense_;
    std::unordered_map<std::int64_t, double> sparse_;
};

// Coarsen onto a nested grid (coarse_per_axis divides the measure's per_axis).
GridMeasure coarsen(const GridMeasure& nu, std::int64_t coarse_per_axis);
GridMeasureK coarsen(const GridMeasureK& nu, std::int64_t coarse_per_axis);

} // namespace hopnet
