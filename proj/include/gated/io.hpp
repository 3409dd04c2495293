#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gated/core.hpp"
#include "gated/profile.hpp"

namespace gated {

// File formats (byte-level details in docs/formats.md):
//   slices/masks   16-bit grayscale PNG, DN stored as-is
//   depth/albedo   raw little-endian float32 payload + JSON sidecar
//   sparse points  CSV "col,row,range_m"
//   profiles       JSON with per-slice delay, coefficients, domain
//   manifests      JSON frame lists

/// Writes a quantized DN raster (integer values in [0, 1023]) as 16-bit
/// grayscale PNG. Throws kDnOutOfRange on values outside the range.
void write_slice(const std::string& path, const Raster<float>& dn);

/// Reads a 16-bit grayscale PNG. In strict mode any stored value above 1023
/// is a kValueOverflow error; lenient mode clips instead.
Raster<float> read_slice(const std::string& path, bool strict = true);

/// Depth/albedo payload: `path` gets width*height little-endian float32
/// values, row-major; the sidecar (same path with ".json" appended to the
/// stem) records {"width", "height", "units": "m", "invalid": "nan"}.
void write_depth(const std::string& path, const DepthMap& map);
DepthMap read_depth(const std::string& path);

void write_albedo(const std::string& path, const AlbedoMap& map);
AlbedoMap read_albedo(const std::string& path);

/// Raw float32 payload + sidecar with an arbitrary units tag; the depth and
/// albedo writers are thin wrappers over this pair.
void write_raster_f32(const std::string& path, const Raster<float>& raster,
                      const std::string& units);
Raster<float> read_raster_f32(const std::string& path,
                              const std::string& units);

/// CSV with header "col,row,range_m", LF newlines, '.' decimal point.
void write_sparse(const std::string& path, const SparseDepth& sparse);

/// frame_width/frame_height are not part of the format; callers supply the
/// frame the samples project into. Duplicate (col,row) pairs are an error.
SparseDepth read_sparse(const std::string& path, int frame_width,
                        int frame_height);

void write_profiles(const std::string& path, const ProfileSet& set,
                    const std::array<double, 3>& fit_rms = {});
ProfileSet read_profiles(const std::string& path);

struct ManifestFrame {
  std::string id;
  std::array<std::string, 3> slice_paths;
  std::string ambient_path;
  std::optional<std::string> depth_gt_path;
  std::optional<std::string> sparse_gt_path;
};

/// Dataset index; paths are relative to the manifest's directory.
struct DatasetManifest {
  std::string version = "1";
  std::vector<ManifestFrame> frames;
  std::string profile_config_path;
};

void write_manifest(const std::string& path, const DatasetManifest& manifest);

/// check_paths verifies every referenced file exists (relative to the
/// manifest) and that frame ids are unique.
DatasetManifest read_manifest(const std::string& path, bool check_paths = true);

/// Mask convenience: stored as 16-bit PNG with 0 = false, 1023 = true.
void write_mask(const std::string& path, const Mask& mask);
Mask read_mask(const std::string& path);

}  // namespace gated
