#include "gated/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace gated {

namespace {

void require_level(int level) {
  if (level < 0 || level > 16) {
    throw Error(Errc::kInvalidArgument, "bin level must be in [0, 16]");
  }
}

int binned_extent(int extent, int level) {
  int block = 1 << level;
  return (extent + block - 1) / block;
}

}  // namespace

DepthMap bin_depth(const DepthMap& depth, int level) {
  require_level(level);
  if (level == 0) return depth;

  const int block = 1 << level;
  const int out_w = binned_extent(depth.values.width(), level);
  const int out_h = binned_extent(depth.values.height(), level);
  DepthMap out;
  out.values = Raster<float>(out_w, out_h, invalid_depth());
  out.min_range_m = depth.min_range_m;
  out.max_range_m = depth.max_range_m;

  for (int brow = 0; brow < out_h; ++brow) {
    for (int bcol = 0; bcol < out_w; ++bcol) {
      double sum = 0.0;
      int count = 0;
      int row_end = std::min(depth.values.height(), (brow + 1) * block);
      int col_end = std::min(depth.values.width(), (bcol + 1) * block);
      for (int row = brow * block; row < row_end; ++row) {
        for (int col = bcol * block; col < col_end; ++col) {
          float v = depth.values.at(row, col);
          if (is_valid_depth(v)) {
            sum += v;
            ++count;
          }
        }
      }
      if (count > 0) {
        out.values.at(brow, bcol) = static_cast<float>(sum / count);
      }
    }
  }
  return out;
}

BinnedSparse bin_sparse(const SparseDepth& sparse, int level) {
  require_level(level);
  if (sparse.frame_width <= 0 || sparse.frame_height <= 0) {
    throw Error(Errc::kInvalidArgument, "sparse frame must be non-empty");
  }

  const int out_w = binned_extent(sparse.frame_width, level);
  const int out_h = binned_extent(sparse.frame_height, level);
  BinnedSparse out{
      DepthMap{Raster<float>(out_w, out_h, invalid_depth())},
      Mask(out_w, out_h, 0),
  };

  Raster<double> sums(out_w, out_h, 0.0);
  Raster<int32_t> counts(out_w, out_h, 0);
  for (const LidarSample& s : sparse.samples) {
    if (s.col < 0 || s.col >= sparse.frame_width || s.row < 0 ||
        s.row >= sparse.frame_height) {
      throw Error(Errc::kInvalidArgument, "sample outside the frame");
    }
    if (!std::isfinite(s.range_m)) {
      throw Error(Errc::kInvalidValue, "sample range is not finite");
    }
    int brow = s.row >> level;
    int bcol = s.col >> level;
    sums.at(brow, bcol) += s.range_m;
    counts.at(brow, bcol) += 1;
  }

  for (int brow = 0; brow < out_h; ++brow) {
    for (int bcol = 0; bcol < out_w; ++bcol) {
      int n = counts.at(brow, bcol);
      if (n > 0) {
        out.depth.values.at(brow, bcol) =
            static_cast<float>(sums.at(brow, bcol) / n);
        out.mask.at(brow, bcol) = 1;
      }
    }
  }
  return out;
}

double masked_l1(const DepthMap& pred, const DepthMap& target,
                 const Mask& mask) {
  if (!pred.values.same_shape(target.values) ||
      !pred.values.same_shape(mask)) {
    throw Error(Errc::kDimensionMismatch, "loss inputs differ in shape");
  }
  double sum = 0.0;
  int64_t n = 0;
  for (int row = 0; row < mask.height(); ++row) {
    for (int col = 0; col < mask.width(); ++col) {
      if (!mask.at(row, col)) continue;
      float p = pred.values.at(row, col);
      float t = target.values.at(row, col);
      if (!std::isfinite(p) || !std::isfinite(t)) {
        throw Error(Errc::kInvalidValue,
                    "non-finite value at a masked bin");
      }
      sum += std::abs(double{p} - double{t});
      ++n;
    }
  }
  if (n == 0) throw Error(Errc::kEmptyMask, "mask selects no bins");
  return sum / static_cast<double>(n);
}

double multiscale_loss(const DepthMap& pred, const DepthMap& target,
                       const MultiScaleWeights& weights) {
  if (!pred.values.same_shape(target.values)) {
    throw Error(Errc::kDimensionMismatch, "loss inputs differ in shape");
  }
  double loss = 0.0;
  for (int level = 0; level < 3; ++level) {
    DepthMap p = bin_depth(pred, level);
    DepthMap t = bin_depth(target, level);
    Mask all(p.values.width(), p.values.height(), 1);
    loss += weights.lambda_m[level] * masked_l1(p, t, all);
  }
  return loss;
}

double multiscale_loss(const DepthMap& pred, const SparseDepth& target,
                       const MultiScaleWeights& weights) {
  if (pred.values.width() != target.frame_width ||
      pred.values.height() != target.frame_height) {
    throw Error(Errc::kDimensionMismatch,
                "prediction and sparse frame differ in shape");
  }
  double loss = 0.0;
  for (int level = 0; level < 3; ++level) {
    DepthMap p = bin_depth(pred, level);
    BinnedSparse t = bin_sparse(target, level);
    loss += weights.lambda_m[level] * masked_l1(p, t.depth, t.mask);
  }
  return loss;
}

double smoothness_loss(const DepthMap& pred, const Raster<float>& guide,
                       double vertical_bias, double gradient_scale_dn) {
  if (!pred.values.same_shape(guide)) {
    throw Error(Errc::kDimensionMismatch,
                "prediction and guide differ in shape");
  }
  if (vertical_bias < 1.0) {
    throw Error(Errc::kInvalidArgument, "vertical bias must be >= 1");
  }
  if (!(gradient_scale_dn > 0.0)) {
    throw Error(Errc::kInvalidArgument, "gradient scale must be positive");
  }
  const int width = pred.values.width();
  const int height = pred.values.height();
  if (width < 2 || height < 2) {
    throw Error(Errc::kInvalidArgument,
                "smoothness needs at least a 2x2 raster");
  }

  double sum = 0.0;
  for (int row = 0; row + 1 < height; ++row) {
    for (int col = 0; col + 1 < width; ++col) {
      float d = pred.values.at(row, col);
      float dx = pred.values.at(row, col + 1);
      float dy = pred.values.at(row + 1, col);
      float z = guide.at(row, col);
      float zx = guide.at(row, col + 1);
      float zy = guide.at(row + 1, col);
      if (!std::isfinite(z) || !std::isfinite(zx) || !std::isfinite(zy)) {
        throw Error(Errc::kInvalidValue, "guide image is not finite");
      }
      if (is_valid_depth(d) && is_valid_depth(dx)) {
        sum += std::abs(double{dx} - double{d}) *
               std::exp(-std::abs(double{zx} - double{z}) / gradient_scale_dn);
      }
      if (is_valid_depth(d) && is_valid_depth(dy)) {
        sum += vertical_bias * std::abs(double{dy} - double{d}) *
               std::exp(-std::abs(double{zy} - double{z}) / gradient_scale_dn);
      }
    }
  }
  const auto interior = static_cast<double>(int64_t{width - 1} * (height - 1));
  return sum / interior;
}

}  // namespace gated
