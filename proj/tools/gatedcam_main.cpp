#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gated/estimate.hpp"
#include "gated/io.hpp"
#include "gated/losses.hpp"
#include "gated/metrics.hpp"
#include "gated/parallel.hpp"
#include "gated/profile.hpp"
#include "gated/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gated;

namespace {

json load_json(const std::string& path) {
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

double num_field(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    throw Error(Errc::kMalformedFile, "field '" + key + "' must be a number");
  }
  return j[key].get<double>();
}

double require_num(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw Error(Errc::kMalformedFile,
                "missing numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

EnvelopeShape parse_shape(const json& j) {
  std::string s = j.value("shape", "rect");
  if (s == "rect") return EnvelopeShape::kRect;
  if (s == "trapezoid") return EnvelopeShape::kTrapezoid;
  throw Error(Errc::kMalformedFile, "field 'shape' must be rect or trapezoid");
}

CameraConfig parse_camera(const json& doc) {
  CameraConfig config = default_camera();
  if (doc.contains("domain_m")) {
    if (!doc["domain_m"].is_array() || doc["domain_m"].size() != 2) {
      throw Error(Errc::kMalformedFile, "field 'domain_m' must be [min, max]");
    }
    config.domain_min_m = doc["domain_m"][0].get<double>();
    config.domain_max_m = doc["domain_m"][1].get<double>();
  }
  config.grid_step_m = num_field(doc, "grid_step_m", config.grid_step_m);

  if (doc.contains("attenuation")) {
    const json& a = doc["attenuation"];
    std::string mode = a.value("mode", "inverse_square");
    if (mode == "none") {
      config.attenuation.mode = AttenuationMode::kNone;
    } else if (mode == "inverse_square") {
      config.attenuation.mode = AttenuationMode::kInverseSquare;
    } else if (mode == "inverse_square_extinction") {
      config.attenuation.mode = AttenuationMode::kInverseSquareExtinction;
    } else {
      throw Error(Errc::kMalformedFile, "field 'mode' has an unknown value");
    }
    config.attenuation.sigma_inv_m = num_field(a, "sigma_inv_m", 0.0);
    config.attenuation.reference_range_m =
        num_field(a, "reference_range_m", 50.0);
  }

  if (doc.contains("slices")) {
    if (!doc["slices"].is_array() || doc["slices"].size() != 3) {
      throw Error(Errc::kMalformedFile, "field 'slices' must list 3 slices");
    }
    for (int i = 0; i < 3; ++i) {
      const json& s = doc["slices"][i];
      if (!s.contains("pulse") || !s.contains("gate")) {
        throw Error(Errc::kMalformedFile,
                    "each slice needs 'pulse' and 'gate'");
      }
      const json& p = s["pulse"];
      const json& g = s["gate"];
      config.slices[i].pulse = {parse_shape(p), require_num(p, "duration_ns"),
                                num_field(p, "rise_ns", 0.0),
                                num_field(p, "amplitude", 1.0)};
      config.slices[i].gate = {parse_shape(g), require_num(g, "delay_ns"),
                               require_num(g, "duration_ns"),
                               num_field(g, "rise_ns", 0.0)};
    }
  }
  return config;
}

SceneSpec parse_scene(const json& doc) {
  SceneSpec spec;
  std::string layout = doc.value("layout", "plane");
  if (layout == "plane") {
    spec.layout = SceneLayout::kPlane;
  } else if (layout == "staircase") {
    spec.layout = SceneLayout::kStaircase;
  } else if (layout == "boxes") {
    spec.layout = SceneLayout::kBoxes;
  } else if (layout == "road") {
    spec.layout = SceneLayout::kRoad;
  } else {
    throw Error(Errc::kMalformedFile, "field 'layout' has an unknown value");
  }
  if (doc.contains("depth_range_m")) {
    if (!doc["depth_range_m"].is_array() || doc["depth_range_m"].size() != 2) {
      throw Error(Errc::kMalformedFile,
                  "field 'depth_range_m' must be [near, far]");
    }
    spec.near_m = doc["depth_range_m"][0].get<double>();
    spec.far_m = doc["depth_range_m"][1].get<double>();
  }
  if (doc.contains("albedo_range")) {
    if (!doc["albedo_range"].is_array() || doc["albedo_range"].size() != 2) {
      throw Error(Errc::kMalformedFile,
                  "field 'albedo_range' must be [lo, hi]");
    }
    spec.albedo_lo = doc["albedo_range"][0].get<double>();
    spec.albedo_hi = doc["albedo_range"][1].get<double>();
  }
  spec.width = static_cast<int>(num_field(doc, "width", spec.width));
  spec.height = static_cast<int>(num_field(doc, "height", spec.height));
  spec.seed = static_cast<uint64_t>(num_field(doc, "seed", 0.0));
  spec.steps = static_cast<int>(num_field(doc, "steps", spec.steps));
  spec.ambient_dn = num_field(doc, "ambient_dn", spec.ambient_dn);
  return spec;
}

LidarPattern parse_lidar(const json& doc, const SceneSpec& scene) {
  LidarPattern pattern;
  pattern.num_lines = std::min(64, scene.height);
  pattern.line_spacing = std::max(1, scene.height / pattern.num_lines);
  if (doc.contains("lidar")) {
    const json& l = doc["lidar"];
    pattern.num_lines =
        static_cast<int>(num_field(l, "num_lines", pattern.num_lines));
    pattern.line_spacing =
        static_cast<int>(num_field(l, "line_spacing", pattern.line_spacing));
    pattern.column_stride =
        static_cast<int>(num_field(l, "column_stride", pattern.column_stride));
    pattern.dropout = num_field(l, "dropout", pattern.dropout);
    pattern.seed = static_cast<uint64_t>(num_field(l, "seed", 0.0));
  }
  return pattern;
}

LmOptions parse_lm_options(const json& doc) {
  LmOptions opts;
  opts.init_grid_step_m =
      num_field(doc, "init_grid_step_m", opts.init_grid_step_m);
  opts.max_iterations =
      static_cast<int>(num_field(doc, "max_iterations", opts.max_iterations));
  opts.damping_init = num_field(doc, "damping_init", opts.damping_init);
  opts.damping_up = num_field(doc, "damping_up", opts.damping_up);
  opts.damping_down = num_field(doc, "damping_down", opts.damping_down);
  opts.param_tolerance_m =
      num_field(doc, "param_tolerance_m", opts.param_tolerance_m);
  opts.residual_tolerance =
      num_field(doc, "residual_tolerance", opts.residual_tolerance);
  opts.albedo_max = num_field(doc, "albedo_max", opts.albedo_max);
  return opts;
}

NoiseParams parse_noise(const std::string& text) {
  NoiseParams params;
  unsigned long long seed = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf,%lf,%llu%c", &params.a, &params.b, &seed,
                  &extra) != 3) {
    throw Error(Errc::kInvalidArgument,
                "noise must be 'a,b,seed', e.g. 4,25,1");
  }
  if (!(params.a > 0.0)) {
    throw Error(Errc::kInvalidArgument, "noise field a must be positive");
  }
  if (params.b < 0.0) {
    throw Error(Errc::kInvalidArgument, "noise field b must be >= 0");
  }
  params.seed = seed;
  return params;
}

int run_profile(const std::string& config_path, int degree,
                const std::string& out_path) {
  CameraConfig config = default_camera();
  if (!config_path.empty()) config = parse_camera(load_json(config_path));
  CameraFit fit = fit_camera(config, degree);
  write_profiles(out_path, fit.profiles, fit.fit_rms);
  for (int i = 0; i < 3; ++i) {
    std::printf("slice %d: delay %.1f ns, fit rms %.6g\n", i + 1,
                fit.profiles.delays_ns[i], fit.fit_rms[i]);
  }
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int run_simulate(const std::string& scene_path,
                 const std::string& profiles_path, const std::string& noise,
                 int threads, const std::string& out_dir) {
  json doc = load_json(scene_path);
  SceneSpec spec = parse_scene(doc);
  LidarPattern lidar = parse_lidar(doc, spec);
  ProfileSet profiles = read_profiles(profiles_path);

  Scene scene = gen_scene(spec);
  GatedStack stack;
  if (noise.empty()) {
    stack = render_slices(scene.depth, scene.albedo, profiles, spec.ambient_dn,
                          true, false, threads);
  } else {
    NoiseParams params = parse_noise(noise);
    GatedStack clean = render_slices(scene.depth, scene.albedo, profiles,
                                     spec.ambient_dn, false, false, threads);
    stack = add_noise(clean, params, threads);
  }

  fs::create_directories(out_dir);
  fs::path dir(out_dir);
  for (int i = 0; i < 3; ++i) {
    write_slice((dir / ("slice_" + std::to_string(i + 1) + ".png")).string(),
                stack.slices[i]);
  }
  write_slice((dir / "ambient.png").string(), *stack.ambient);
  write_depth((dir / "depth_gt.bin").string(), scene.depth);
  write_sparse((dir / "sparse_gt.csv").string(),
               sample_lidar(scene.depth, lidar));
  std::printf("wrote %s\n", out_dir.c_str());
  return 0;
}

int run_estimate(const std::string& in_dir, const std::string& profiles_path,
                 const std::string& lm_path, int threads,
                 const std::string& out_dir) {
  ProfileSet profiles = read_profiles(profiles_path);
  LmOptions opts;
  if (!lm_path.empty()) opts = parse_lm_options(load_json(lm_path));

  fs::path dir(in_dir);
  GatedStack stack;
  for (int i = 0; i < 3; ++i) {
    stack.slices[i] =
        read_slice((dir / ("slice_" + std::to_string(i + 1) + ".png")).string());
  }
  stack.ambient = read_slice((dir / "ambient.png").string());
  stack.delays_ns = profiles.delays_ns;
  stack.quantized = true;

  GatedStack active = subtract_ambient(stack, true);
  EstimateResult result = estimate_depth(active, profiles, opts, threads);

  fs::create_directories(out_dir);
  fs::path out(out_dir);
  write_depth((out / "depth_pred.bin").string(), result.depth);
  write_albedo((out / "albedo_pred.bin").string(), result.albedo);
  write_mask((out / "mask.png").string(), result.illuminated);
  write_raster_f32((out / "residual.bin").string(), result.residual, "dn2");
  std::printf("wrote %s\n", out_dir.c_str());
  return 0;
}

int run_evaluate(const std::string& pred_path, const std::string& gt_path,
                 const std::string& mask_path, double max_range,
                 const std::string& report) {
  DepthMap pred = read_depth(pred_path);
  Mask mask = mask_path.empty()
                  ? Mask(pred.values.width(), pred.values.height(), 1)
                  : read_mask(mask_path);

  MetricsReport metrics;
  if (fs::path(gt_path).extension() == ".csv") {
    SparseDepth gt = read_sparse(gt_path, pred.values.width(),
                                 pred.values.height());
    metrics = depth_metrics(pred, gt, mask, max_range);
  } else {
    DepthMap gt = read_depth(gt_path);
    metrics = depth_metrics(pred, gt, mask, max_range);
  }
  if (report == "json") {
    std::printf("%s\n", metrics_to_json(metrics).c_str());
  } else {
    std::printf("%s", metrics_to_table(metrics).c_str());
  }
  return 0;
}

int run_bench(const std::string& size, int repeat, int threads) {
  int width = 0, height = 0;
  char extra = 0;
  if (std::sscanf(size.c_str(), "%dx%d%c", &width, &height, &extra) != 2 ||
      width < 1 || height < 1) {
    throw Error(Errc::kInvalidArgument, "size must be WxH, e.g. 1280x720");
  }

  ProfileSet profiles = fit_camera(default_camera()).profiles;
  SceneSpec spec;
  spec.layout = SceneLayout::kBoxes;
  spec.near_m = 37.0;
  spec.far_m = 69.0;
  spec.albedo_lo = 0.3;
  spec.albedo_hi = 1.0;
  spec.width = width;
  spec.height = height;
  spec.seed = 7;
  Scene scene = gen_scene(spec);

  using clock = std::chrono::steady_clock;
  auto seconds_since = [](clock::time_point t0) {
    return std::max(std::chrono::duration<double>(clock::now() - t0).count(),
                    1e-9);
  };

  std::vector<double> render_s, estimate_s;
  GatedStack noisy;
  for (int i = 0; i < repeat; ++i) {
    auto t0 = clock::now();
    GatedStack clean = render_slices(scene.depth, scene.albedo, profiles, 0.0,
                                     false, false, threads);
    noisy = add_noise(clean, {4.0, 25.0, static_cast<uint64_t>(i)}, threads);
    render_s.push_back(seconds_since(t0));

    t0 = clock::now();
    EstimateResult result = estimate_depth(noisy, profiles, {}, threads);
    estimate_s.push_back(seconds_since(t0));
    (void)result;
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  const double pixels = double(width) * height;
  json out = {
      {"width", width},
      {"height", height},
      {"repeat", repeat},
      {"threads", resolve_thread_count(threads)},
      {"render", {{"seconds_median", median(render_s)},
                  {"pixels_per_s", pixels / median(render_s)}}},
      {"estimate", {{"seconds_median", median(estimate_s)},
                    {"pixels_per_s", pixels / median(estimate_s)}}},
  };
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gated-imaging simulator and analytic depth estimator"};
  app.require_subcommand(1);

  std::string config_path, out_path = "profiles.json";
  int degree = 6;
  auto* profile =
      app.add_subcommand("profile", "synthesize and fit slice profiles");
  profile->add_option("--config", config_path, "camera config JSON");
  profile->add_option("--fit-degree", degree, "Chebyshev degree")
      ->check(CLI::Range(0, 6));
  profile->add_option("--out", out_path, "output profiles JSON");

  std::string scene_path, profiles_path, noise, sim_out;
  int threads = 0;
  auto* simulate =
      app.add_subcommand("simulate", "render a scene to a gated stack");
  simulate->add_option("--scene", scene_path, "scene spec JSON")->required();
  simulate->add_option("--profiles", profiles_path, "fitted profiles JSON")
      ->required();
  simulate->add_option("--noise", noise, "noise as a,b,seed (omit for none)");
  simulate->add_option("--threads", threads, "worker threads (0 = auto)");
  simulate->add_option("--out", sim_out, "output directory")->required();

  std::string est_in, est_profiles, lm_path, est_out;
  int est_threads = 0;
  auto* estimate =
      app.add_subcommand("estimate", "recover depth/albedo from a stack");
  estimate->add_option("--in", est_in, "input directory")->required();
  estimate->add_option("--profiles", est_profiles, "fitted profiles JSON")
      ->required();
  estimate->add_option("--lm-opts", lm_path, "LM options JSON");
  estimate->add_option("--threads", est_threads, "worker threads (0 = auto)");
  estimate->add_option("--out", est_out, "output directory")->required();

  std::string pred_path, gt_path, mask_path, report = "table";
  double max_range = 80.0;
  auto* evaluate =
      app.add_subcommand("evaluate", "compare a prediction against truth");
  evaluate->add_option("--pred", pred_path, "predicted depth .bin")->required();
  evaluate->add_option("--gt", gt_path, "ground truth .bin or .csv")
      ->required();
  evaluate->add_option("--mask", mask_path, "evaluation mask PNG");
  evaluate->add_option("--max-range", max_range, "evaluation cap in meters");
  evaluate->add_option("--report", report, "output format")
      ->check(CLI::IsMember({"json", "table"}));

  std::string size = "1280x720";
  int repeat = 3, bench_threads = 0;
  auto* bench = app.add_subcommand("bench", "throughput report");
  bench->add_option("--size", size, "raster size WxH");
  bench->add_option("--repeat", repeat, "timing repetitions")
      ->check(CLI::Range(1, 1000000));
  bench->add_option("--threads", bench_threads, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (profile->parsed()) return run_profile(config_path, degree, out_path);
    if (simulate->parsed()) {
      return run_simulate(scene_path, profiles_path, noise, threads, sim_out);
    }
    if (estimate->parsed()) {
      return run_estimate(est_in, est_profiles, lm_path, est_threads, est_out);
    }
    if (evaluate->parsed()) {
      return run_evaluate(pred_path, gt_path, mask_path, max_range, report);
    }
    if (bench->parsed()) return run_bench(size, repeat, bench_threads);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", errc_name(e.code()), e.what());
    return e.code() == Errc::kZeroEvaluatedPoints ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
