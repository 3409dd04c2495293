#include "gated/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "gated/parallel.hpp"
#include "gated/rng.hpp"

namespace gated {

namespace {

void require_noise(const NoiseParams& params) {
  if (!(params.a > 0.0)) {
    throw Error(Errc::kInvalidArgument, "noise parameter a must be positive");
  }
  if (params.b < 0.0) {
    throw Error(Errc::kInvalidArgument, "noise parameter b must be >= 0");
  }
}

void require_scene(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) {
    throw Error(Errc::kInvalidArgument, "scene dimensions must be positive");
  }
  if (!(spec.near_m <= spec.far_m) || !(spec.near_m > 0.0)) {
    throw Error(Errc::kInvalidArgument,
                "depth range must satisfy 0 < near <= far");
  }
  if (!(0.0 <= spec.albedo_lo && spec.albedo_lo <= spec.albedo_hi &&
        spec.albedo_hi <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "albedo range must be within [0, 1]");
  }
  if (spec.steps < 1) {
    throw Error(Errc::kInvalidArgument, "staircase needs at least one step");
  }
  if (spec.ambient_dn < 0.0) {
    throw Error(Errc::kInvalidArgument, "ambient level must be >= 0");
  }
}

struct Box {
  int col0, row0, col1, row1;
  float depth_m;
};

// Scalar draws for scene layout come from one stream pinned at pixel (0,0)
// so layout randomness is independent of raster size.
std::vector<Box> layout_boxes(const SceneSpec& spec, int count,
                              float depth_lo, float depth_hi) {
  PixelStream rng(spec.seed, kStreamSceneLayout, 0, 0);
  std::vector<Box> boxes;
  boxes.reserve(count);
  for (int i = 0; i < count; ++i) {
    int w = 1 + static_cast<int>(rng.uniform() * (spec.width / 3));
    int h = 1 + static_cast<int>(rng.uniform() * (spec.height / 3));
    int col0 = static_cast<int>(rng.uniform() * spec.width);
    int row0 = static_cast<int>(rng.uniform() * spec.height);
    Box box;
    box.col0 = std::min(col0, spec.width - 1);
    box.row0 = std::min(row0, spec.height - 1);
    box.col1 = std::min(col0 + w, spec.width);
    box.row1 = std::min(row0 + h, spec.height);
    box.depth_m =
        depth_lo + static_cast<float>(rng.uniform()) * (depth_hi - depth_lo);
    boxes.push_back(box);
  }
  return boxes;
}

void paint_boxes(const std::vector<Box>& boxes, Raster<float>* depth) {
  for (const Box& box : boxes) {
    for (int row = box.row0; row < box.row1; ++row) {
      for (int col = box.col0; col < box.col1; ++col) {
        depth->at(row, col) = box.depth_m;
      }
    }
  }
}

}  // namespace

float quantize_dn(float value) {
  if (!std::isfinite(value)) {
    throw Error(Errc::kInvalidValue, "cannot quantize a non-finite value");
  }
  return std::round(std::clamp(value, 0.0f, kMaxDn));
}

GatedStack render_slices(const DepthMap& depth, const AlbedoMap& albedo,
                         const ProfileSet& profiles, double ambient_dn,
                         bool quantize, bool clamp_profiles, int threads) {
  if (!depth.values.same_shape(albedo.values)) {
    throw Error(Errc::kDimensionMismatch, "depth and albedo shapes differ");
  }
  require_common_domain(profiles);
  if (ambient_dn < 0.0) {
    throw Error(Errc::kInvalidArgument, "ambient level must be >= 0");
  }

  const int width = depth.values.width();
  const int height = depth.values.height();
  GatedStack stack;
  for (auto& slice : stack.slices) slice = Raster<float>(width, height);
  stack.ambient = Raster<float>(width, height);
  stack.delays_ns = profiles.delays_ns;
  stack.quantized = quantize;

  const float ambient = static_cast<float>(ambient_dn);
  parallel_for_rows(height, threads, [&](int row_begin, int row_end) {
    for (int row = row_begin; row < row_end; ++row) {
      for (int col = 0; col < width; ++col) {
        float r = depth.values.at(row, col);
        float a = albedo.values.at(row, col);
        for (int i = 0; i < 3; ++i) {
          float value = ambient;
          if (is_valid_depth(r)) {
            if (!std::isfinite(a)) {
              throw Error(Errc::kInvalidValue, "albedo is not finite");
            }
            value += a * static_cast<float>(eval_profile(
                             profiles.profiles[i], r, clamp_profiles));
          }
          stack.slices[i].at(row, col) =
              quantize ? quantize_dn(value) : value;
        }
        stack.ambient->at(row, col) = quantize ? quantize_dn(ambient) : ambient;
      }
    }
  });
  return stack;
}

GatedStack add_noise(const GatedStack& stack, const NoiseParams& params,
                     int threads) {
  require_noise(params);
  require_valid_stack(stack);
  if (stack.quantized) {
    throw Error(Errc::kInvalidArgument,
                "noise applies to the unquantized render");
  }

  const int width = stack.width();
  const int height = stack.height();
  GatedStack out;
  for (auto& slice : out.slices) slice = Raster<float>(width, height);
  if (stack.ambient) out.ambient = Raster<float>(width, height);
  out.delays_ns = stack.delays_ns;
  out.quantized = true;

  const double sigma = std::sqrt(params.b);
  auto corrupt = [&](const Raster<float>& in, Raster<float>* dst,
                     uint32_t stream, int row_begin, int row_end) {
    for (int row = row_begin; row < row_end; ++row) {
      for (int col = 0; col < width; ++col) {
        PixelStream rng(params.seed, stream, static_cast<uint32_t>(row),
                        static_cast<uint32_t>(col));
        double intensity = std::max(0.0, double{in.at(row, col)});
        double z = params.a * static_cast<double>(
                                  rng.poisson(intensity / params.a));
        if (sigma > 0.0) z += sigma * rng.normal();
        dst->at(row, col) = quantize_dn(static_cast<float>(z));
      }
    }
  };

  parallel_for_rows(height, threads, [&](int row_begin, int row_end) {
    for (int i = 0; i < 3; ++i) {
      corrupt(stack.slices[i], &out.slices[i], kStreamNoiseSlice0 + i,
              row_begin, row_end);
    }
    if (stack.ambient) {
      corrupt(*stack.ambient, &*out.ambient, kStreamNoiseSlice0 + 3, row_begin,
              row_end);
    }
  });
  return out;
}

GatedStack subtract_ambient(const GatedStack& stack, bool clamp_at_zero) {
  if (!stack.ambient) {
    throw Error(Errc::kMissingAmbientFrame,
                "subtraction needs the ambient frame");
  }
  require_valid_stack(stack);

  const int width = stack.width();
  const int height = stack.height();
  GatedStack out;
  for (auto& slice : out.slices) slice = Raster<float>(width, height);
  out.ambient = std::nullopt;
  out.delays_ns = stack.delays_ns;
  // Unclamped subtraction can go negative, which leaves the DN range.
  out.quantized = stack.quantized && clamp_at_zero;

  for (int i = 0; i < 3; ++i) {
    for (int row = 0; row < height; ++row) {
      for (int col = 0; col < width; ++col) {
        float v = stack.slices[i].at(row, col) - stack.ambient->at(row, col);
        if (clamp_at_zero && v < 0.0f) v = 0.0f;
        out.slices[i].at(row, col) = v;
      }
    }
  }
  return out;
}

Scene gen_scene(const SceneSpec& spec) {
  require_scene(spec);

  Scene scene;
  scene.depth.values = Raster<float>(spec.width, spec.height);
  scene.depth.min_range_m = static_cast<float>(spec.near_m);
  scene.depth.max_range_m = static_cast<float>(spec.far_m);
  scene.albedo.values = Raster<float>(spec.width, spec.height);

  const auto near = static_cast<float>(spec.near_m);
  const auto far = static_cast<float>(spec.far_m);
  Raster<float>& depth = scene.depth.values;

  switch (spec.layout) {
    case SceneLayout::kPlane: {
      // Tilted plane, near at the top row, far at the bottom row.
      for (int row = 0; row < spec.height; ++row) {
        float t = (spec.height > 1)
                      ? static_cast<float>(row) / (spec.height - 1)
                      : 0.0f;
        float r = near + t * (far - near);
        for (int col = 0; col < spec.width; ++col) depth.at(row, col) = r;
      }
      break;
    }
    case SceneLayout::kStaircase: {
      // Horizontal bands, far at the top, descending toward the viewer.
      for (int row = 0; row < spec.height; ++row) {
        int band = std::min(row * spec.steps / spec.height, spec.steps - 1);
        float r = (spec.steps > 1)
                      ? far - band * (far - near) / (spec.steps - 1)
                      : near;
        for (int col = 0; col < spec.width; ++col) depth.at(row, col) = r;
      }
      break;
    }
    case SceneLayout::kBoxes: {
      depth.fill(far);
      paint_boxes(layout_boxes(spec, 8, near, far), &depth);
      break;
    }
    case SceneLayout::kRoad: {
      // Ground plane receding upward, with boxes standing on it.
      for (int row = 0; row < spec.height; ++row) {
        float t = (spec.height > 1)
                      ? static_cast<float>(row) / (spec.height - 1)
                      : 0.0f;
        float r = far - t * (far - near);
        for (int col = 0; col < spec.width; ++col) depth.at(row, col) = r;
      }
      paint_boxes(layout_boxes(spec, 4, near, far), &depth);
      break;
    }
  }

  Raster<float>& albedo = scene.albedo.values;
  const auto lo = static_cast<float>(spec.albedo_lo);
  const auto hi = static_cast<float>(spec.albedo_hi);
  if (lo == hi) {
    albedo.fill(lo);
  } else {
    for (int row = 0; row < spec.height; ++row) {
      for (int col = 0; col < spec.width; ++col) {
        PixelStream rng(spec.seed, kStreamSceneAlbedo,
                        static_cast<uint32_t>(row), static_cast<uint32_t>(col));
        albedo.at(row, col) =
            lo + static_cast<float>(rng.uniform()) * (hi - lo);
      }
    }
  }
  return scene;
}

SparseDepth sample_lidar(const DepthMap& depth, const LidarPattern& pattern) {
  if (pattern.num_lines < 1 || pattern.line_spacing < 1 ||
      pattern.column_stride < 1) {
    throw Error(Errc::kInvalidArgument, "lidar pattern counts must be >= 1");
  }
  if (pattern.dropout < 0.0 || pattern.dropout >= 1.0) {
    throw Error(Errc::kInvalidArgument, "dropout must be in [0, 1)");
  }
  int last_row = (pattern.num_lines - 1) * pattern.line_spacing;
  if (last_row >= depth.values.height()) {
    throw Error(Errc::kInvalidArgument, "lidar lines fall outside the raster");
  }

  SparseDepth out;
  out.frame_width = depth.values.width();
  out.frame_height = depth.values.height();
  for (int line = 0; line < pattern.num_lines; ++line) {
    int row = line * pattern.line_spacing;
    for (int col = 0; col < depth.values.width(); col += pattern.column_stride) {
      float r = depth.values.at(row, col);
      if (!is_valid_depth(r)) continue;
      if (pattern.dropout > 0.0) {
        PixelStream rng(pattern.seed, kStreamLidarDropout,
                        static_cast<uint32_t>(row), static_cast<uint32_t>(col));
        if (rng.uniform() < pattern.dropout) continue;
      }
      out.samples.push_back({col, row, r});
    }
  }
  return out;
}

}  // namespace gated
