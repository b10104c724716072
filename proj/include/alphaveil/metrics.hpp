#pragma once

#include "alphaveil/blend.hpp"
#include "alphaveil/types.hpp"

#include <string>

namespace alphaveil {

// Numeric success proxies: the human view must stay within tau_human of the
// target while the machine view diverges from it by at least tau_machine.
struct SuccessThresholds {
  Scalar tau_human = 1e-3;
  Scalar tau_machine = 1e-2;
};

struct AttackReport {
  Scalar human_fidelity_mse = 0;     // human view vs target
  Scalar human_fidelity_psnr = 0;
  Scalar machine_divergence_mse = 0; // machine view vs target
  Scalar hidden_integrity_mse = 0;   // machine view vs scaled background
  Scalar dark_exposure_mse = 0;      // dark-theme flatten vs target
  Scalar feasibility_fraction = 0;
  bool success = false;
};

// 10 * log10(1 / mse) for unit dynamic range; +infinity when mse == 0.
Scalar psnr(Scalar mse);

AttackReport evaluate(const AttackImage& img, const Grid& target,
                      const Grid& background, const BlendConfig& cfg,
                      const SuccessThresholds& thresholds = {});

// Line-oriented key=value block, one field per line.
std::string format_report(const AttackReport& rep);

// The same fields as a single space-separated key=value run, as embedded in
// poison manifests.
std::string report_fields(const AttackReport& rep);

}  // namespace alphaveil
