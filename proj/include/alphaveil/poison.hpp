#pragma once

#include "alphaveil/blend.hpp"
#include "alphaveil/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace alphaveil {

enum class PoisonMode {
  Single,       // every target hides the one given background
  RandomClass,  // each target draws its background from the pool, seeded per file
};

struct PoisonJob {
  std::filesystem::path target_dir;
  std::vector<std::filesystem::path> backgrounds;
  PoisonMode mode = PoisonMode::Single;
  BlendConfig cfg;
  std::filesystem::path out_dir;
  std::vector<std::string> eligible_extensions = {".jpg", ".jpeg", ".png"};

  void validate() const;
};

struct PoisonRecord {
  std::string target_file;      // basename within target_dir
  std::string background_file;
  std::string output_file;      // basename within out_dir
  std::uint64_t rng_seed_used = 0;
  bool ok = false;
  Scalar final_loss = 0;
  AttackReport report;
  std::string error;
};

struct PoisonManifest {
  std::string created_at;   // derived from input mtimes, so re-runs reproduce it
  std::string cfg_digest;
  std::string mode;
  std::size_t eligible = 0;
  std::size_t skipped = 0;
  std::vector<PoisonRecord> records;
};

// Stable FNV-1a digest over the canonical config serialization.
std::string config_digest(const BlendConfig& cfg);

// Per-file seed: FNV-1a over the job seed bytes and the target basename.
// Depends only on (seed, name), so assignments are order-independent.
std::uint64_t per_file_seed(std::uint64_t job_seed, const std::string& filename);

// Uniform background index for RANDOM_CLASS mode.
std::size_t background_index(std::uint64_t job_seed, const std::string& filename,
                             std::size_t background_count);

std::string format_manifest(const PoisonManifest& manifest);

// Crafts an attack image per eligible target, writes the outputs and
// poison_manifest.txt into job.out_dir, and returns the manifest. Per-file
// failures are recorded and do not stop the job.
PoisonManifest run_job(const PoisonJob& job);

struct SeparabilityResult {
  Scalar machine_accuracy;     // leave-one-out nearest-centroid on machine views
  Scalar human_view_mse_gap;   // mean MSE between human views across the two sets
};

SeparabilityResult separability_check(const std::filesystem::path& poisoned_dir,
                                      const std::filesystem::path& clean_dir);

}  // namespace alphaveil
