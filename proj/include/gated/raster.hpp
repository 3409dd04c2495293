#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "gated/error.hpp"

namespace gated {

/// Dense row-major 2D grid, origin at the top-left pixel.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw Error(Errc::kInvalidArgument, "raster dimensions must be positive");
    }
    values_.assign(static_cast<size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& at(int row, int col) { return values_[static_cast<size_t>(row) * width_ + col]; }
  const T& at(int row, int col) const {
    return values_[static_cast<size_t>(row) * width_ + col];
  }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  template <typename U>
  bool same_shape(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }

  friend bool operator==(const Raster& a, const Raster& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.values_ == b.values_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

/// Boolean per-pixel mask; nonzero means true.
using Mask = Raster<uint8_t>;

}  // namespace gated
