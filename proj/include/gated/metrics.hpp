#pragma once

#include <cstdint>
#include <string>

#include "gated/core.hpp"

namespace gated {

/// Depth evaluation summary. Distances in meters, delta and completeness in
/// percent. evaluated_points counts the ground-truth points that actually
/// entered the error statistics.
struct MetricsReport {
  double rmse_m = 0.0;
  double mae_m = 0.0;
  double ard = 0.0;
  double delta1_pct = 0.0;
  double delta2_pct = 0.0;
  double delta3_pct = 0.0;
  double completeness_pct = 0.0;
  int64_t evaluated_points = 0;
  double max_range_m = 0.0;
};

/// Symmetric ratio test: max(pred/gt, gt/pred) < 1.25^i, strict. Both inputs
/// must be positive.
bool ratio_delta(double pred_m, double gt_m, int i);

/// Evaluation protocol over a dense ground-truth map: ground-truth points are
/// finite pixels with range in (0, max_range]; a point is evaluated iff its
/// pixel is inside eval_mask. rmse/mae/ard/delta are computed over evaluated
/// points, completeness = 100 * evaluated / in-range ground-truth points.
/// Predictions must be finite at evaluated points; predictions <= 0 fail all
/// delta thresholds rather than erroring.
MetricsReport depth_metrics(const DepthMap& pred, const DepthMap& gt,
                            const Mask& eval_mask, double max_range_m = 80.0);

/// Same protocol over sparse ground truth.
MetricsReport depth_metrics(const DepthMap& pred, const SparseDepth& gt,
                            const Mask& eval_mask, double max_range_m = 80.0);

std::string metrics_to_json(const MetricsReport& report);

/// Aligned table, columns RMSE, ARD, MAE, d1, d2, d3, Compl.
std::string metrics_to_table(const MetricsReport& report);

}  // namespace gated
