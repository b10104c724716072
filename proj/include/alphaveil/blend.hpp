#pragma once

#include "alphaveil/types.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace alphaveil {

// Optimization and pipeline parameters. Width/height describe the working
// raster size every input is preprocessed to.
struct BlendConfig {
  Eigen::Index width = 150;
  Eigen::Index height = 150;
  int steps = 1000;
  Scalar learning_rate = 0.01;
  Scalar background_scale = 0.5;
  int log_interval = 100;
  std::string filename_tag = "_blended";
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Adam accumulators, threaded explicitly through adam_step.
struct OptimizerState {
  Grid m, v;
  long t = 0;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;

  static OptimizerState zeros(Eigen::Index rows, Eigen::Index cols);
};

struct TracePoint {
  long step;
  Scalar loss;
};
using LossTrace = std::vector<TracePoint>;

struct OptimizeResult {
  Grid alpha;
  LossTrace trace;
};

struct FeasibilityReport {
  Scalar fraction;      // share of pixels with target >= scaled background
  Scalar residual_mse;  // loss left at the per-pixel constrained minimizer
};

// alpha * bg_scaled + (1 - alpha) * backdrop, elementwise. The optimizer runs
// this against the all-ones (white) backdrop; the compositor reuses it for
// arbitrary display themes.
Grid blend(const Grid& alpha, const Grid& bg_scaled, const Grid& backdrop);
Grid blend(const Grid& alpha, const Grid& bg_scaled);  // white backdrop

Scalar mse_loss(const Grid& blended, const Grid& target);

// Analytic gradient of mse_loss(blend(alpha, bg_scaled), target) w.r.t. alpha:
// (2/N) * (blend - target) * (bg_scaled - 1).
Grid grad_alpha(const Grid& alpha, const Grid& bg_scaled, const Grid& target);

// One bias-corrected Adam update followed by projection of alpha onto [0,1].
// Pass state and alpha by value; they are moved through.
std::pair<OptimizerState, Grid> adam_step(OptimizerState state, Grid alpha,
                                          const Grid& grad, Scalar learning_rate);

// Full loop: starting from alpha == 1, run cfg.steps iterations of
// blend -> loss -> gradient -> adam_step against cfg.background_scale *
// background. The trace holds the pre-update loss at every log_interval step
// plus a final entry for the returned alpha.
OptimizeResult optimize(const Grid& target, const Grid& background,
                        const BlendConfig& cfg);

// Exact per-pixel constrained minimizer clamp((1 - T) / (1 - B), 0, 1).
// Requires bg_scaled < 1 everywhere.
Grid closed_form_alpha(const Grid& target, const Grid& bg_scaled);

FeasibilityReport feasibility_report(const Grid& target, const Grid& bg_scaled);

}  // namespace alphaveil
