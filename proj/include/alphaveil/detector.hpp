#pragma once

#include "alphaveil/types.hpp"

#include <filesystem>
#include <string>

namespace alphaveil {

enum class Verdict { Clean, Suspicious, AttackLikely };

struct ScanThresholds {
  Scalar alpha_variance = 1e-3;
  Scalar view_divergence = 1e-2;
};

struct ScanResult {
  bool has_alpha = false;
  Scalar alpha_variance = 0;
  Scalar view_divergence_mse = 0;  // human view vs machine view
  Verdict verdict = Verdict::Clean;
};

// Flags images likely to carry a hidden layer: alpha structure plus
// divergence between the flattened and alpha-dropped renderings. A score
// counts against the file only when strictly above its threshold, so raising
// thresholds never worsens a verdict.
ScanResult scan(const std::filesystem::path& path, const ScanThresholds& thresholds = {});

std::string verdict_name(Verdict v);

// Shell-pipeline encoding: 0 clean, 1 suspicious, 2 attack-likely.
int verdict_exit_code(Verdict v);

}  // namespace alphaveil
