#pragma once

#include <array>

#include "gated/core.hpp"

namespace gated {

/// Loss weights. lambda_m are the per-scale weights of the multi-scale L1
/// term at scales 1, 1/2, 1/4; lambda_s scales the smoothness term in the
/// combined loss; lambda_a is recorded for the (absent) adversarial term.
/// vertical_bias multiplies the vertical smoothness gradient and
/// gradient_scale_dn normalizes guide-image gradients to a unitless exponent.
struct MultiScaleWeights {
  std::array<double, 3> lambda_m{1.0, 0.8, 0.6};
  double lambda_s = 1e-4;
  double lambda_a = 1e-3;
  double vertical_bias = 1.5;
  double gradient_scale_dn = 100.0;
};

/// Downsamples by averaging valid pixels over 2^level x 2^level blocks.
/// Output dimensions are ceil(dim / 2^level); blocks extending past the
/// image edge average their in-image part, and all-invalid blocks become
/// invalid. Level 0 is the identity.
DepthMap bin_depth(const DepthMap& depth, int level);

struct BinnedSparse {
  DepthMap depth;
  Mask mask;  // true where the bin received at least one sample
};

/// Bins sparse samples at scale 1/2^level: each bin holds the mean range of
/// the samples that fall inside it.
BinnedSparse bin_sparse(const SparseDepth& sparse, int level);

/// Mean absolute difference over masked bins: (1/N) sum |pred - target| * m
/// with N = number of masked bins. Empty masks and non-finite values at
/// masked bins are errors, not zeros.
double masked_l1(const DepthMap& pred, const DepthMap& target, const Mask& mask);

/// Multi-scale masked L1 against a dense target: scales 0..2 with all-true
/// masks, weighted by lambda_m.
double multiscale_loss(const DepthMap& pred, const DepthMap& target,
                       const MultiScaleWeights& weights);

/// Multi-scale masked L1 against sparse samples: per level, the target and
/// mask come from bin_sparse.
double multiscale_loss(const DepthMap& pred, const SparseDepth& target,
                       const MultiScaleWeights& weights);

/// Gradient-weighted total variation with forward differences:
///   (1/N) sum_interior |dx d| exp(-|dx z|/s) + vb * |dy d| exp(-|dy z|/s)
/// where z is the guide image (DN), s = gradient_scale_dn and N the count of
/// interior pixels (both forward neighbors in-image). Terms touching an
/// invalid pred pixel contribute zero; N is unchanged.
double smoothness_loss(const DepthMap& pred, const Raster<float>& guide,
                       double vertical_bias = 1.5,
                       double gradient_scale_dn = 100.0);

}  // namespace gated
