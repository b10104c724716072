#include "alphaveil/detector.hpp"

#include "alphaveil/blend.hpp"
#include "alphaveil/imgio.hpp"

namespace alphaveil {

ScanResult scan(const std::filesystem::path& path, const ScanThresholds& thresholds) {
  DecodedImage img = decode_image(path);

  ScanResult res;
  if (!img.alpha) {
    return res;  // no alpha channel: nothing to hide behind
  }
  res.has_alpha = true;

  const Grid& alpha = *img.alpha;
  const Grid gray = luminance(img.rgb);
  res.alpha_variance = (alpha - alpha.mean()).square().mean();
  res.view_divergence_mse = mse_loss(alpha * gray + (1.0 - alpha), gray);

  const bool structured = res.alpha_variance > thresholds.alpha_variance;
  const bool divergent = res.view_divergence_mse > thresholds.view_divergence;
  if (structured && divergent) {
    res.verdict = Verdict::AttackLikely;
  } else if (structured || divergent) {
    res.verdict = Verdict::Suspicious;
  }
  return res;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Clean: return "CLEAN";
    case Verdict::Suspicious: return "SUSPICIOUS";
    case Verdict::AttackLikely: return "ATTACK_LIKELY";
  }
  return "UNKNOWN";
}

int verdict_exit_code(Verdict v) { return static_cast<int>(v); }

}  // namespace alphaveil
