#include "gated/io.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gated {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr fp(std::fopen(path.c_str(), mode));
  if (!fp) {
    throw Error(Errc::kIoFailure, "cannot open " + path);
  }
  return fp;
}

void on_png_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<std::string*>(png_get_error_ptr(png));
  if (sink && msg) *sink = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

// The libpng longjmp handlers must not cross frames holding C++ objects, so
// these two helpers own no non-trivial locals; buffers live in the caller.
bool write_png16(std::FILE* fp, const uint16_t* pixels, uint32_t width,
                 uint32_t height, std::string* message) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, message,
                                            on_png_error, on_png_warning);
  if (!png) {
    *message = "png_create_write_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    *message = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);
  for (uint32_t row = 0; row < height; ++row) {
    png_write_row(png, reinterpret_cast<png_const_bytep>(
                           pixels + size_t{row} * width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

bool read_png16(std::FILE* fp, std::vector<uint16_t>* pixels, uint32_t* width,
                uint32_t* height, std::string* message) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, message,
                                           on_png_error, on_png_warning);
  if (!png) {
    *message = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    *message = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  if (png_get_bit_depth(png, info) != 16 ||
      png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    *message = "expected non-interlaced 16-bit grayscale";
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  *width = png_get_image_width(png, info);
  *height = png_get_image_height(png, info);
  png_set_swap(png);
  pixels->resize(size_t{*width} * *height);
  for (uint32_t row = 0; row < *height; ++row) {
    png_read_row(png, reinterpret_cast<png_bytep>(
                          pixels->data() + size_t{row} * *width),
                 nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

Raster<float> read_png_raster(const std::string& path, bool strict) {
  FilePtr fp = open_file(path, "rb");
  std::vector<uint16_t> pixels;
  uint32_t width = 0;
  uint32_t height = 0;
  std::string message = "libpng error";
  if (!read_png16(fp.get(), &pixels, &width, &height, &message)) {
    throw Error(Errc::kMalformedFile, path + ": " + message);
  }
  if (width == 0 || height == 0 || width > 1 << 20 || height > 1 << 20) {
    throw Error(Errc::kMalformedFile, path + ": bad dimensions");
  }
  Raster<float> out(static_cast<int>(width), static_cast<int>(height));
  for (size_t i = 0; i < pixels.size(); ++i) {
    uint16_t v = pixels[i];
    if (v > 1023) {
      if (strict) {
        std::ostringstream os;
        os << path << ": stored value " << v << " exceeds 1023";
        throw Error(Errc::kValueOverflow, os.str());
      }
      v = 1023;
    }
    out.data()[i] = static_cast<float>(v);
  }
  return out;
}

void write_png_raster(const std::string& path, const Raster<float>& dn) {
  std::vector<uint16_t> pixels(size_t{static_cast<size_t>(dn.width())} *
                               dn.height());
  const float* src = dn.data();
  for (size_t i = 0; i < pixels.size(); ++i) {
    float v = src[i];
    if (!std::isfinite(v) || v < 0.0f || v > kMaxDn || v != std::floor(v)) {
      throw Error(Errc::kDnOutOfRange,
                  "slice values must be integers in [0, 1023]");
    }
    pixels[i] = static_cast<uint16_t>(v);
  }
  FilePtr fp = open_file(path, "wb");
  std::string message = "libpng error";
  if (!write_png16(fp.get(), pixels.data(),
                   static_cast<uint32_t>(dn.width()),
                   static_cast<uint32_t>(dn.height()), &message)) {
    throw Error(Errc::kIoFailure, path + ": " + message);
  }
}

fs::path sidecar_path(const std::string& path) {
  fs::path p(path);
  if (p.extension() == ".json") {
    throw Error(Errc::kInvalidArgument,
                "payload path must not end in .json: " + path);
  }
  return fs::path(p).replace_extension(".json");
}

}  // namespace

void write_raster_f32(const std::string& path, const Raster<float>& raster,
                      const std::string& units) {
  fs::path side = sidecar_path(path);

  std::vector<unsigned char> bytes(size_t{static_cast<size_t>(
                                       raster.width())} *
                                   raster.height() * 4);
  const float* src = raster.data();
  for (size_t i = 0; i * 4 < bytes.size(); ++i) {
    uint32_t bits;
    std::memcpy(&bits, &src[i], 4);
    bytes[i * 4 + 0] = static_cast<unsigned char>(bits & 0xff);
    bytes[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xff);
    bytes[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xff);
    bytes[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xff);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIoFailure, "cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::kIoFailure, "short write to " + path);
  out.close();

  json header = {{"width", raster.width()},
                 {"height", raster.height()},
                 {"units", units},
                 {"invalid", "nan"}};
  std::ofstream js(side, std::ios::trunc);
  if (!js) throw Error(Errc::kIoFailure, "cannot open " + side.string());
  js << header.dump(2) << '\n';
  if (!js) throw Error(Errc::kIoFailure, "short write to " + side.string());
}

Raster<float> read_raster_f32(const std::string& path,
                              const std::string& units) {
  fs::path side = sidecar_path(path);

  json header;
  {
    std::ifstream js(side);
    if (!js) throw Error(Errc::kIoFailure, "cannot open " + side.string());
    try {
      js >> header;
    } catch (const json::exception& e) {
      throw Error(Errc::kMalformedFile, side.string() + ": " + e.what());
    }
  }
  bool shaped = header.is_object() && header.contains("units") &&
                header["units"].is_string() &&
                header["units"].get<std::string>() == units &&
                header.contains("invalid") && header["invalid"].is_string() &&
                header["invalid"].get<std::string>() == "nan" &&
                header.contains("width") &&
                header["width"].is_number_integer() &&
                header.contains("height") &&
                header["height"].is_number_integer();
  if (!shaped) {
    throw Error(Errc::kMalformedFile, side.string() + ": bad raster header");
  }
  int width = header["width"].get<int>();
  int height = header["height"].get<int>();
  if (width <= 0 || height <= 0) {
    throw Error(Errc::kMalformedFile, side.string() + ": bad dimensions");
  }

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  size_t expected = size_t{static_cast<size_t>(width)} * height * 4;
  if (bytes.size() != expected) {
    std::ostringstream os;
    os << path << ": payload is " << bytes.size() << " bytes, header implies "
       << expected;
    throw Error(Errc::kSizeMismatch, os.str());
  }

  Raster<float> out(width, height);
  float* dst = out.data();
  for (size_t i = 0; i * 4 < bytes.size(); ++i) {
    uint32_t bits = uint32_t{bytes[i * 4 + 0]} |
                    (uint32_t{bytes[i * 4 + 1]} << 8) |
                    (uint32_t{bytes[i * 4 + 2]} << 16) |
                    (uint32_t{bytes[i * 4 + 3]} << 24);
    std::memcpy(&dst[i], &bits, 4);
  }
  return out;
}

namespace {

json require_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(Errc::kMalformedFile, path + ": " + e.what());
  }
  return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error(Errc::kIoFailure, "cannot open " + path);
  out << text;
  if (!out) throw Error(Errc::kIoFailure, "short write to " + path);
}

}  // namespace

void write_slice(const std::string& path, const Raster<float>& dn) {
  write_png_raster(path, dn);
}

Raster<float> read_slice(const std::string& path, bool strict) {
  return read_png_raster(path, strict);
}

void write_depth(const std::string& path, const DepthMap& map) {
  write_raster_f32(path, map.values, "m");
}

DepthMap read_depth(const std::string& path) {
  DepthMap map;
  map.values = read_raster_f32(path, "m");
  return map;
}

void write_albedo(const std::string& path, const AlbedoMap& map) {
  write_raster_f32(path, map.values, "albedo");
}

AlbedoMap read_albedo(const std::string& path) {
  AlbedoMap map;
  map.values = read_raster_f32(path, "albedo");
  return map;
}

void write_sparse(const std::string& path, const SparseDepth& sparse) {
  std::string text = "col,row,range_m\n";
  char line[96];
  for (const LidarSample& s : sparse.samples) {
    if (!std::isfinite(s.range_m)) {
      throw Error(Errc::kInvalidValue, "sample range is not finite");
    }
    std::snprintf(line, sizeof(line), "%d,%d,%.9g\n", s.col, s.row,
                  double{s.range_m});
    text += line;
  }
  write_text_file(path, text);
}

SparseDepth read_sparse(const std::string& path, int frame_width,
                        int frame_height) {
  if (frame_width <= 0 || frame_height <= 0) {
    throw Error(Errc::kInvalidArgument, "frame dimensions must be positive");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line) || line != "col,row,range_m") {
    throw Error(Errc::kMalformedFile, path + ": missing csv header");
  }

  SparseDepth out;
  out.frame_width = frame_width;
  out.frame_height = frame_height;
  std::unordered_set<int64_t> seen;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    auto bad = [&](const char* why) -> Error {
      std::ostringstream os;
      os << path << ":" << line_no << ": " << why;
      return Error(Errc::kMalformedFile, os.str());
    };

    size_t c1 = line.find(',');
    size_t c2 = (c1 == std::string::npos) ? std::string::npos
                                          : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw bad("expected 3 fields");
    }
    LidarSample s{};
    const char* begin = line.data();
    auto r1 = std::from_chars(begin, begin + c1, s.col);
    auto r2 = std::from_chars(begin + c1 + 1, begin + c2, s.row);
    if (r1.ec != std::errc{} || r1.ptr != begin + c1 || r2.ec != std::errc{} ||
        r2.ptr != begin + c2) {
      throw bad("bad integer field");
    }
    double range = 0.0;
    auto r3 = std::from_chars(begin + c2 + 1, begin + line.size(), range);
    if (r3.ec != std::errc{} || r3.ptr != begin + line.size() ||
        !std::isfinite(range)) {
      throw bad("bad range field");
    }
    s.range_m = static_cast<float>(range);
    if (s.col < 0 || s.col >= frame_width || s.row < 0 ||
        s.row >= frame_height) {
      throw Error(Errc::kInvalidArgument, path + ": sample outside the frame");
    }
    int64_t key = (int64_t{s.row} << 32) | uint32_t(s.col);
    if (!seen.insert(key).second) {
      std::ostringstream os;
      os << path << ": duplicate sample at (" << s.col << "," << s.row << ")";
      throw Error(Errc::kDuplicateSample, os.str());
    }
    out.samples.push_back(s);
  }
  return out;
}

void write_profiles(const std::string& path, const ProfileSet& set,
                    const std::array<double, 3>& fit_rms) {
  require_common_domain(set);
  json doc;
  doc["version"] = "1";
  doc["slices"] = json::array();
  for (int i = 0; i < 3; ++i) {
    const ChebyshevProfile& p = set.profiles[i];
    doc["slices"].push_back({{"delay_ns", set.delays_ns[i]},
                             {"domain_m", {p.domain_min_m, p.domain_max_m}},
                             {"coefficients", p.coefficients},
                             {"fit_rms", fit_rms[i]}});
  }
  write_text_file(path, doc.dump(2) + "\n");
}

ProfileSet read_profiles(const std::string& path) {
  json doc = require_json_file(path);
  if (!doc.is_object() || !doc.contains("slices") ||
      !doc["slices"].is_array() || doc["slices"].size() != 3) {
    throw Error(Errc::kMalformedFile, path + ": expected 3 profile slices");
  }
  ProfileSet set;
  for (int i = 0; i < 3; ++i) {
    const json& s = doc["slices"][i];
    bool shaped = s.is_object() && s.contains("delay_ns") &&
                  s["delay_ns"].is_number() && s.contains("domain_m") &&
                  s["domain_m"].is_array() && s["domain_m"].size() == 2 &&
                  s.contains("coefficients") && s["coefficients"].is_array() &&
                  !s["coefficients"].empty();
    if (!shaped) {
      throw Error(Errc::kMalformedFile, path + ": bad profile slice");
    }
    set.delays_ns[i] = s["delay_ns"].get<double>();
    set.profiles[i].domain_min_m = s["domain_m"][0].get<double>();
    set.profiles[i].domain_max_m = s["domain_m"][1].get<double>();
    set.profiles[i].coefficients.clear();
    for (const json& c : s["coefficients"]) {
      if (!c.is_number()) {
        throw Error(Errc::kMalformedFile, path + ": bad coefficient");
      }
      set.profiles[i].coefficients.push_back(c.get<double>());
    }
  }
  require_common_domain(set);
  return set;
}

void write_manifest(const std::string& path, const DatasetManifest& manifest) {
  json doc;
  doc["version"] = manifest.version;
  doc["profile_config"] = manifest.profile_config_path;
  doc["frames"] = json::array();
  for (const ManifestFrame& f : manifest.frames) {
    json frame = {{"id", f.id},
                  {"slices", f.slice_paths},
                  {"ambient", f.ambient_path}};
    if (f.depth_gt_path) frame["depth_gt"] = *f.depth_gt_path;
    if (f.sparse_gt_path) frame["sparse_gt"] = *f.sparse_gt_path;
    doc["frames"].push_back(frame);
  }
  write_text_file(path, doc.dump(2) + "\n");
}

DatasetManifest read_manifest(const std::string& path, bool check_paths) {
  json doc = require_json_file(path);
  if (!doc.is_object() || !doc.contains("frames") ||
      !doc["frames"].is_array()) {
    throw Error(Errc::kMalformedFile, path + ": expected a frame list");
  }
  DatasetManifest manifest;
  manifest.version = doc.value("version", "1");
  manifest.profile_config_path = doc.value("profile_config", "");

  const fs::path base = fs::path(path).parent_path();
  std::unordered_set<std::string> ids;
  auto require_exists = [&](const std::string& rel) {
    if (!check_paths) return;
    fs::path full = base / rel;
    if (!fs::exists(full)) {
      throw Error(Errc::kIoFailure,
                  path + ": missing referenced file " + full.string());
    }
  };

  for (const json& f : doc["frames"]) {
    bool shaped = f.is_object() && f.contains("id") && f["id"].is_string() &&
                  f.contains("slices") && f["slices"].is_array() &&
                  f["slices"].size() == 3 && f.contains("ambient") &&
                  f["ambient"].is_string();
    if (!shaped) {
      throw Error(Errc::kMalformedFile, path + ": bad frame entry");
    }
    ManifestFrame frame;
    frame.id = f["id"].get<std::string>();
    if (!ids.insert(frame.id).second) {
      throw Error(Errc::kDuplicateSample,
                  path + ": duplicate frame id " + frame.id);
    }
    for (int i = 0; i < 3; ++i) {
      if (!f["slices"][i].is_string()) {
        throw Error(Errc::kMalformedFile, path + ": bad slice path");
      }
      frame.slice_paths[i] = f["slices"][i].get<std::string>();
      require_exists(frame.slice_paths[i]);
    }
    frame.ambient_path = f["ambient"].get<std::string>();
    require_exists(frame.ambient_path);
    if (f.contains("depth_gt")) {
      frame.depth_gt_path = f["depth_gt"].get<std::string>();
      require_exists(*frame.depth_gt_path);
    }
    if (f.contains("sparse_gt")) {
      frame.sparse_gt_path = f["sparse_gt"].get<std::string>();
      require_exists(*frame.sparse_gt_path);
    }
    manifest.frames.push_back(std::move(frame));
  }
  if (!manifest.profile_config_path.empty()) {
    require_exists(manifest.profile_config_path);
  }
  return manifest;
}

void write_mask(const std::string& path, const Mask& mask) {
  Raster<float> dn(mask.width(), mask.height());
  for (int row = 0; row < mask.height(); ++row) {
    for (int col = 0; col < mask.width(); ++col) {
      dn.at(row, col) = mask.at(row, col) ? kMaxDn : 0.0f;
    }
  }
  write_png_raster(path, dn);
}

Mask read_mask(const std::string& path) {
  Raster<float> dn = read_png_raster(path, true);
  Mask mask(dn.width(), dn.height());
  for (int row = 0; row < dn.height(); ++row) {
    for (int col = 0; col < dn.width(); ++col) {
      float v = dn.at(row, col);
      if (v != 0.0f && v != kMaxDn) {
        throw Error(Errc::kMalformedFile,
                    path + ": mask values must be 0 or 1023");
      }
      mask.at(row, col) = (v != 0.0f) ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace gated
