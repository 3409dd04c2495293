#include "gated/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace gated {

namespace {

struct Accumulator {
  double sq_sum = 0.0;
  double abs_sum = 0.0;
  double rel_sum = 0.0;
  int64_t evaluated = 0;
  int64_t in_range = 0;
  std::array<int64_t, 3> delta_hits{};

  // gt must already be known finite and positive.
  void add(double gt, bool masked, double pred, double max_range) {
    if (gt > max_range) return;
    ++in_range;
    if (!masked) return;
    if (!std::isfinite(pred)) {
      throw Error(Errc::kInvalidValue,
                  "prediction not finite at an evaluated point");
    }
    ++evaluated;
    double err = pred - gt;
    sq_sum += err * err;
    abs_sum += std::abs(err);
    rel_sum += std::abs(err) / gt;
    if (pred > 0.0) {
      double ratio = std::max(pred / gt, gt / pred);
      double bound = 1.25;
      for (int i = 0; i < 3; ++i) {
        if (ratio < bound) ++delta_hits[i];
        bound *= 1.25;
      }
    }
  }

  MetricsReport report(double max_range) const {
    if (evaluated == 0) {
      throw Error(Errc::kZeroEvaluatedPoints,
                  "no ground-truth points were evaluated");
    }
    MetricsReport r;
    const auto n = static_cast<double>(evaluated);
    r.rmse_m = std::sqrt(sq_sum / n);
    r.mae_m = abs_sum / n;
    r.ard = rel_sum / n;
    r.delta1_pct = 100.0 * static_cast<double>(delta_hits[0]) / n;
    r.delta2_pct = 100.0 * static_cast<double>(delta_hits[1]) / n;
    r.delta3_pct = 100.0 * static_cast<double>(delta_hits[2]) / n;
    r.completeness_pct =
        100.0 * n / static_cast<double>(in_range);
    r.evaluated_points = evaluated;
    r.max_range_m = max_range;
    return r;
  }
};

void require_max_range(double max_range_m) {
  if (!(max_range_m > 0.0)) {
    throw Error(Errc::kInvalidArgument, "max range must be positive");
  }
}

}  // namespace

bool ratio_delta(double pred_m, double gt_m, int i) {
  if (i < 1 || i > 3) {
    throw Error(Errc::kInvalidArgument, "delta index must be 1, 2 or 3");
  }
  if (!(pred_m > 0.0) || !(gt_m > 0.0)) {
    throw Error(Errc::kNonPositiveDepth, "ratio test needs positive depths");
  }
  double ratio = std::max(pred_m / gt_m, gt_m / pred_m);
  return ratio < std::pow(1.25, i);
}

MetricsReport depth_metrics(const DepthMap& pred, const DepthMap& gt,
                            const Mask& eval_mask, double max_range_m) {
  require_max_range(max_range_m);
  if (!pred.values.same_shape(gt.values) || !pred.values.same_shape(eval_mask)) {
    throw Error(Errc::kDimensionMismatch, "metric inputs differ in shape");
  }

  Accumulator acc;
  for (int row = 0; row < gt.values.height(); ++row) {
    for (int col = 0; col < gt.values.width(); ++col) {
      float g = gt.values.at(row, col);
      if (!std::isfinite(g) || g <= 0.0f) continue;
      acc.add(g, eval_mask.at(row, col) != 0, pred.values.at(row, col),
              max_range_m);
    }
  }
  return acc.report(max_range_m);
}

MetricsReport depth_metrics(const DepthMap& pred, const SparseDepth& gt,
                            const Mask& eval_mask, double max_range_m) {
  require_max_range(max_range_m);
  if (pred.values.width() != gt.frame_width ||
      pred.values.height() != gt.frame_height ||
      !pred.values.same_shape(eval_mask)) {
    throw Error(Errc::kDimensionMismatch, "metric inputs differ in shape");
  }

  Accumulator acc;
  for (const LidarSample& s : gt.samples) {
    if (s.col < 0 || s.col >= gt.frame_width || s.row < 0 ||
        s.row >= gt.frame_height) {
      throw Error(Errc::kInvalidArgument, "sample outside the frame");
    }
    if (!std::isfinite(s.range_m) || s.range_m <= 0.0f) continue;
    acc.add(s.range_m, eval_mask.at(s.row, s.col) != 0,
            pred.values.at(s.row, s.col), max_range_m);
  }
  return acc.report(max_range_m);
}

std::string metrics_to_json(const MetricsReport& report) {
  std::ostringstream os;
  os.precision(9);
  os << "{";
  os << "\"rmse_m\": " << report.rmse_m << ", ";
  os << "\"ard\": " << report.ard << ", ";
  os << "\"mae_m\": " << report.mae_m << ", ";
  os << "\"delta1_pct\": " << report.delta1_pct << ", ";
  os << "\"delta2_pct\": " << report.delta2_pct << ", ";
  os << "\"delta3_pct\": " << report.delta3_pct << ", ";
  os << "\"completeness_pct\": " << report.completeness_pct << ", ";
  os << "\"evaluated_points\": " << report.evaluated_points << ", ";
  os << "\"max_range_m\": " << report.max_range_m;
  os << "}";
  return os.str();
}

std::string metrics_to_table(const MetricsReport& report) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%10s %8s %8s %7s %7s %7s %7s\n",
                "RMSE", "ARD", "MAE", "d1", "d2", "d3", "Compl.");
  out += line;
  std::snprintf(line, sizeof(line),
                "%10.3f %8.3f %8.3f %7.1f %7.1f %7.1f %7.1f\n", report.rmse_m,
                report.ard, report.mae_m, report.delta1_pct,
                report.delta2_pct, report.delta3_pct,
                report.completeness_pct);
  out += line;
  return out;
}

}  // namespace gated
