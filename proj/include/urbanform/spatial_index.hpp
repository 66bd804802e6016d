#ifndef URBANFORM_SPATIAL_INDEX_HPP
#define URBANFORM_SPATIAL_INDEX_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "urbanform/geometry.hpp"

namespace urbanform {

// Uniform grid over item bounding boxes. Queries return candidate ids in
// ascending order; callers do the exact geometric test.
class GridIndex {
 public:
  explicit GridIndex(double cell_size = 200.0) : cell_(cell_size) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("grid cell size must be positive");
  }

  std::size_t insert(const Box& box) {
    const std::size_t id = boxes_.size();
    boxes_.push_back(box);
    for_cells(box, [&](std::uint64_t key) { cells_[key].push_back(id); });
    return id;
  }

  std::size_t size() const { return boxes_.size(); }
  const Box& box(std::size_t id) const { return boxes_[id]; }

  std::vector<std::size_t> query(const Box& window) const {
    std::vector<std::size_t> out;
    for_cells(window, [&](std::uint64_t key) {
      const auto it = cells_.find(key);
      if (it == cells_.end()) return;
      for (const auto id : it->second) {
        if (boxes_[id].intersects(window)) out.push_back(id);
      }
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  std::vector<std::size_t> query(Point p) const { return query(Box{p.x, p.y, p.x, p.y}); }

 private:
  static std::uint64_t key(std::int64_t ix, std::int64_t iy) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
           static_cast<std::uint32_t>(iy);
  }

  template <typename F>
  void for_cells(const Box& b, F&& f) const {
    if (b.empty()) return;
    const auto x0 = static_cast<std::int64_t>(std::floor(b.min_x / cell_));
    const auto x1 = static_cast<std::int64_t>(std::floor(b.max_x / cell_));
    const auto y0 = static_cast<std::int64_t>(std::floor(b.min_y / cell_));
    const auto y1 = static_cast<std::int64_t>(std::floor(b.max_y / cell_));
    for (auto ix = x0; ix <= x1; ++ix) {
      for (auto iy = y0; iy <= y1; ++iy) f(key(ix, iy));
    }
  }

  double cell_;
  std::vector<Box> boxes_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace urbanform

#endif  // URBANFORM_SPATIAL_INDEX_HPP
