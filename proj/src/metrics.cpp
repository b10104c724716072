#include "alphaveil/metrics.hpp"

#include "alphaveil/compositor.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace alphaveil {

namespace {

std::string fmt(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_fields(const AttackReport& rep, std::string& out, const char* sep) {
  out += "human_fidelity_mse=" + fmt(rep.human_fidelity_mse) + sep;
  out += "human_fidelity_psnr=" + fmt(rep.human_fidelity_psnr) + sep;
  out += "machine_divergence_mse=" + fmt(rep.machine_divergence_mse) + sep;
  out += "hidden_integrity_mse=" + fmt(rep.hidden_integrity_mse) + sep;
  out += "dark_exposure_mse=" + fmt(rep.dark_exposure_mse) + sep;
  out += "feasibility_fraction=" + fmt(rep.feasibility_fraction) + sep;
  out += std::string("success=") + (rep.success ? "1" : "0");
}

}  // namespace

Scalar psnr(Scalar mse) {
  if (mse < 0.0) throw std::invalid_argument("psnr: mse must be >= 0");
  if (mse == 0.0) return std::numeric_limits<Scalar>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

AttackReport evaluate(const AttackImage& img, const Grid& target,
                      const Grid& background, const BlendConfig& cfg,
                      const SuccessThresholds& thresholds) {
  detail::require_same_dims(img.alpha, target, "evaluate");
  detail::require_same_dims(img.alpha, background, "evaluate");
  cfg.validate();

  const Grid bg_scaled = cfg.background_scale * background;
  const Grid human = human_view(img);
  const Grid machine = machine_view(img);

  AttackReport rep;
  rep.human_fidelity_mse = mse_loss(human, target);
  rep.human_fidelity_psnr = psnr(rep.human_fidelity_mse);
  rep.machine_divergence_mse = mse_loss(machine, target);
  rep.hidden_integrity_mse = mse_loss(machine, bg_scaled);
  rep.dark_exposure_mse = mse_loss(render(img, ViewerModel::dark()), target);
  rep.feasibility_fraction = feasibility_report(target, bg_scaled).fraction;
  rep.success = rep.human_fidelity_mse <= thresholds.tau_human &&
                rep.machine_divergence_mse >= thresholds.tau_machine;
  return rep;
}

std::string format_report(const AttackReport& rep) {
  std::string out;
  append_fields(rep, out, "\n");
  out += "\n";
  return out;
}

std::string report_fields(const AttackReport& rep) {
  std::string out;
  append_fields(rep, out, " ");
  return out;
}

}  // namespace alphaveil
