#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "infharm/error.hpp"
#include "infharm/tensor.hpp"

namespace infharm {

struct Axis {
  double min = 0.0;
  double max = 1.0;
  std::size_t count = 3;

  double spacing() const { return (max - min) / static_cast<double>(count - 1); }
  double coordinate(std::size_t i) const {
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
};

/// Uniform tensor-product grid. Node index runs fastest along axis 0.
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes) : axes_(std::move(axes)) { validate(); }

  /// Square grid [lo, hi]^dim with `count` nodes per axis.
  static Grid cube(std::size_t dim, double lo, double hi, std::size_t count) {
    return Grid(std::vector<Axis>(dim, Axis{lo, hi, count}));
  }

  std::size_t dim() const { return axes_.size(); }
  const Axis& axis(std::size_t k) const { return axes_[k]; }
  const std::vector<Axis>& axes() const { return axes_; }

  std::size_t size() const {
    std::size_t s = 1;
    for (const auto& a : axes_) s *= a.count;
    return s;
  }

  std::vector<std::size_t> multi_index(std::size_t node) const {
    std::vector<std::size_t> idx(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
      idx[k] = node % axes_[k].count;
      node /= axes_[k].count;
    }
    return idx;
  }

  std::size_t linear_index(const std::vector<std::size_t>& idx) const {
    std::size_t node = 0;
    for (std::size_t k = dim(); k-- > 0;) node = node * axes_[k].count + idx[k];
    return node;
  }

  Vector point(std::size_t node) const {
    Vector x(dim());
    for (std::size_t k = 0; k < dim(); ++k) {
      x[k] = axes_[k].coordinate(node % axes_[k].count);
      node /= axes_[k].count;
    }
    return x;
  }

  std::size_t stride(std::size_t k) const {
    std::size_t s = 1;
    for (std::size_t a = 0; a < k; ++a) s *= axes_[a].count;
    return s;
  }

  /// Axis neighbours (2 per axis away from the boundary).
  template <class F>
  void for_each_neighbor(std::size_t node, F&& f) const {
    std::size_t rest = node;
    for (std::size_t k = 0; k < dim(); ++k) {
      const std::size_t i = rest % axes_[k].count;
      rest /= axes_[k].count;
      const std::size_t s = stride(k);
      if (i > 0) f(node - s);
      if (i + 1 < axes_[k].count) f(node + s);
    }
  }

  bool on_boundary(std::size_t node) const {
    for (std::size_t k = 0; k < dim(); ++k) {
      const std::size_t i = node % axes_[k].count;
      node /= axes_[k].count;
      if (i == 0 || i + 1 == axes_[k].count) return true;
    }
    return false;
  }

  bool contains(std::span<const double> x) const {
    for (std::size_t k = 0; k < dim(); ++k)
      if (!(x[k] >= axes_[k].min && x[k] <= axes_[k].max)) return false;
    return true;
  }

  double diameter() const {
    double s = 0.0;
    for (const auto& a : axes_) s += (a.max - a.min) * (a.max - a.min);
    return std::sqrt(s);
  }

 private:
  void validate() const {
    if (axes_.empty()) throw InvalidInput("grid: needs at least one axis");
    for (std::size_t k = 0; k < axes_.size(); ++k) {
      const auto& a = axes_[k];
      if (a.count < 3) throw InvalidInput("grid: axis " + std::to_string(k) + " needs at least 3 nodes");
      if (!(a.min < a.max) || !std::isfinite(a.min) || !std::isfinite(a.max))
        throw InvalidInput("grid: axis " + std::to_string(k) + " needs finite min < max");
    }
  }

  std::vector<Axis> axes_;
};

}  // namespace infharm
