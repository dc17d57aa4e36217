#include "hopnet/measure.hpp"

#include <algorithm>
#include <stdexcept>

namespace hopnet {

double GridMeasure::total() const {
    double t = 0.0;
    for (double m : mass) t += m;
    return t;
}

GridMeasureK::GridMeasureK(const Grid& g, int k) : grid_(g), k_(k) {
    if (k < 1) throw std::invalid_argument("GridMeasureK: k must be >= 1");
    // tuple_count = n_cells^k, guarding against index overflow
    tuple_count_ = 1;
    for (int l = 0; l < k; ++l) {
        if (tuple_count_ > (std::int64_t(1) << 62) / g.n_cells) {
            tuple_count_ = -1;
            break;
        }
        tuple_count_ *= g.n_cells;
    }
    if (tuple_count_ < 0)
        throw std::invalid_argument("GridMeasureK: tuple space exceeds index range");
    dense_storage_ = (k <= 3 && tuple_count_ <= dense_limit);
    if (dense_storage_) dense_.assign(std::size_t(tuple_count_), 0.0);
}

std::int64_t GridMeasureK::tuple_index(std::span<const std::int64_t> cells) const {
    if (int(cells.size()) != k_) throw std::invalid_argument("tuple_index: wrong arity");
    std::int64_t idx = 0;
    for (int l = 0; l < k_; ++l) {
        if (cells[std::size_t(l)] < 0 || cells[std::size_t(l)] >= grid_.n_cells)
            throw std::out_of_range("tuple_index: cell out of range");
        idx = idx * grid_.n_cells + cells[std::size_t(l)];
    }
    return idx;
}

std::vector<std::int64_t> GridMeasureK::tuple_cells(std::int64_t index) const {
    std::vector<std::int64_t> cells(static_cast<std::size_t>(k_));
    for (int l = k_ - 1; l >= 0; --l) {
        cells[std::size_t(l)] = index % grid_.n_cells;
        index /= grid_.n_cells;
    }
    return cells;
}

double GridMeasureK::get(std::int64_t index) const {
    if (dense_storage_) return dense_[std::size_t(index)];
    auto it = sparse_.find(index);
    return it == sparse_.end() ? 0.0 : it->second;
}

void GridMeasureK::add(std::int64_t index, double m) {
    if (dense_storage_) dense_[std::size_t(index)] += m;
    else sparse_[index] += m;
}

void GridMeasureK::set(std::int64_t index, double m) {
    if (dense_storage_) dense_[std::size_t(index)] = m;
    else if (m == 0.0) sparse_.erase(index);
    else sparse_[index] = m;
}

double GridMeasureK::total() const {
    double t = 0.0;
    for_each([&](std::int64_t, double m) { t += m; });
    return t;
}

std::vector<std::int64_t> GridMeasureK::sorted_keys() const {
    std::vector<std::int64_t> keys;
    keys.reserve(sparse_.size());
    for (const auto& [idx, m] : sparse_)
        if (m != 0.0) keys.push_back(idx);
    std::sort(keys.begin(), keys.end());
    return keys;
}

GridMeasure GridMeasureK::marginal(int l) const {
    if (l < 0 || l >= k_) throw std::out_of_range("marginal: coordinate out of range");
    GridMeasure out(grid_);
    // the l-th digit of the tuple index, extracted without materializing tuples
    std::int64_t div = 1;
    for (int j = l + 1; j < k_; ++j) div *= grid_.n_cells;
    for_each([&](std::int64_t idx, double m) {
        out.mass[std::size_t((idx / div) % grid_.n_cells)] += m;
    });
    return out;
}

GridMeasure coarsen(const GridMeasure& nu, std::int64_t coarse_per_axis) {
    Grid coarse = build_grid(nu.grid.window, coarse_per_axis);
    GridMeasure out(coarse);
    for (std::int64_t cell = 0; cell < nu.grid.n_cells; ++cell)
        out.mass[std::size_t(nu.grid.parent_cell(cell, coarse_per_axis))] += nu.mass[std::size_t(cell)];
    return out;
}

GridMeasureK coarsen(const GridMeasureK& nu, std::int64_t coarse_per_axis) {
    Grid coarse = build_grid(nu.grid().window, coarse_per_axis);
    GridMeasureK out(coarse, nu.k());
    std::vector<std::int64_t> parent(std::size_t(nu.k()));
    nu.for_each([&](std::int64_t idx, double m) {
        auto cells = nu.tuple_cells(idx);
        for (int l = 0; l < nu.k(); ++l)
            parent[std::size_t(l)] = nu.grid().parent_cell(cells[std::size_t(l)], coarse_per_axis);
        out.add(out.tuple_index(parent), m);
    });
    return out;
}

} // namespace hopnet
