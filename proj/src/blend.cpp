#include "alphaveil/blend.hpp"

#include <cmath>

namespace alphaveil {

void BlendConfig::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("BlendConfig: size must be >= 1x1");
  if (steps < 1) throw std::invalid_argument("BlendConfig: steps must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("BlendConfig: learning_rate must be > 0");
  if (!(background_scale > 0.0) || background_scale > 1.0) {
    throw std::invalid_argument("BlendConfig: background_scale must be in (0,1]");
  }
  if (log_interval < 1) throw std::invalid_argument("BlendConfig: log_interval must be >= 1");
}

OptimizerState OptimizerState::zeros(Eigen::Index rows, Eigen::Index cols) {
  OptimizerState s;
  s.m = Grid::Zero(rows, cols);
  s.v = Grid::Zero(rows, cols);
  return s;
}

Grid blend(const Grid& alpha, const Grid& bg_scaled, const Grid& backdrop) {
  detail::require_same_dims(alpha, bg_scaled, "blend");
  detail::require_same_dims(alpha, backdrop, "blend");
  return alpha * bg_scaled + (1.0 - alpha) * backdrop;
}

Grid blend(const Grid& alpha, const Grid& bg_scaled) {
  detail::require_same_dims(alpha, bg_scaled, "blend");
  return alpha * bg_scaled + (1.0 - alpha);
}

Scalar mse_loss(const Grid& blended, const Grid& target) {
  detail::require_same_dims(blended, target, "mse_loss");
  return (blended - target).square().mean();
}

Grid grad_alpha(const Grid& alpha, const Grid& bg_scaled, const Grid& target) {
  detail::require_same_dims(alpha, bg_scaled, "grad_alpha");
  detail::require_same_dims(alpha, target, "grad_alpha");
  const Scalar inv_n = 2.0 / static_cast<Scalar>(alpha.size());
  return inv_n * (alpha * bg_scaled + (1.0 - alpha) - target) * (bg_scaled - 1.0);
}

std::pair<OptimizerState, Grid> adam_step(OptimizerState state, Grid alpha,
                                          const Grid& grad, Scalar learning_rate) {
  detail::require_same_dims(alpha, grad, "adam_step");
  detail::require_same_dims(alpha, state.m, "adam_step");
  if (!grad.allFinite()) throw numeric_error("adam_step: non-finite gradient");

  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.square();
  const Scalar m_corr = 1.0 - std::pow(state.beta1, static_cast<Scalar>(state.t));
  const Scalar v_corr = 1.0 - std::pow(state.beta2, static_cast<Scalar>(state.t));
  alpha -= learning_rate * (state.m / m_corr) / ((state.v / v_corr).sqrt() + state.epsilon);
  alpha = alpha.min(1.0).max(0.0);
  return {std::move(state), std::move(alpha)};
}

OptimizeResult optimize(const Grid& target, const Grid& background,
                        const BlendConfig& cfg) {
  cfg.validate();
  detail::require_same_dims(target, background, "optimize");

  const Grid bg_scaled = cfg.background_scale * background;
  Grid alpha = Grid::Ones(target.rows(), target.cols());
  OptimizerState state = OptimizerState::zeros(target.rows(), target.cols());

  LossTrace trace;
  for (int step = 0; step < cfg.steps; ++step) {
    const Grid blended = alpha * bg_scaled + (1.0 - alpha);
    const Scalar loss = (blended - target).square().mean();
    if (!std::isfinite(loss)) throw numeric_error("optimize: non-finite loss");
    if (step % cfg.log_interval == 0) trace.push_back({step, loss});

    const Grid grad = (2.0 / static_cast<Scalar>(alpha.size())) *
                      (blended - target) * (bg_scaled - 1.0);
    std::tie(state, alpha) = adam_step(std::move(state), std::move(alpha), grad,
                                       cfg.learning_rate);
  }

  const Scalar final_loss = (alpha * bg_scaled + (1.0 - alpha) - target).square().mean();
  if (!std::isfinite(final_loss)) throw numeric_error("optimize: non-finite loss");
  trace.push_back({cfg.steps, final_loss});
  return {std::move(alpha), std::move(trace)};
}

Grid closed_form_alpha(const Grid& target, const Grid& bg_scaled) {
  detail::require_same_dims(target, bg_scaled, "closed_form_alpha");
  if ((bg_scaled >= 1.0).any()) {
    throw std::domain_error("closed_form_alpha: scaled background must be < 1 everywhere");
  }
  return ((1.0 - target) / (1.0 - bg_scaled)).min(1.0).max(0.0);
}

FeasibilityReport feasibility_report(const Grid& target, const Grid& bg_scaled) {
  const Grid best = closed_form_alpha(target, bg_scaled);
  FeasibilityReport rep;
  rep.fraction = static_cast<Scalar>((target >= bg_scaled).count()) /
                 static_cast<Scalar>(target.size());
  rep.residual_mse = mse_loss(blend(best, bg_scaled), target);
  return rep;
}

}  // namespace alphaveil
