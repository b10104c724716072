#include "alphaveil/poison.hpp"

#include "alphaveil/compositor.hpp"
#include "alphaveil/imgio.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <random>

namespace alphaveil {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(const unsigned char* data, std::size_t n, std::uint64_t h) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = kFnvOffset) {
  return fnv1a(reinterpret_cast<const unsigned char*>(s.data()), s.size(), h);
}

std::string fmt(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string lowercase_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

std::vector<fs::path> list_eligible(const fs::path& dir,
                                    const std::vector<std::string>& extensions,
                                    std::size_t* skipped) {
  if (!fs::is_directory(dir)) {
    throw io_error("not a directory: '" + dir.string() + "'");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lowercase_ext(entry.path());
    if (std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) {
      files.push_back(entry.path());
    } else if (skipped) {
      ++*skipped;
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

std::string iso8601_utc(std::time_t t) {
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Manifest timestamp comes from the newest input file, not the wall clock, so
// re-running a job over unchanged inputs rewrites the manifest byte-for-byte.
std::string derive_created_at(const std::vector<fs::path>& targets,
                              const std::vector<fs::path>& backgrounds) {
  fs::file_time_type newest = fs::file_time_type::min();
  bool any = false;
  for (const auto& group : {targets, backgrounds}) {
    for (const auto& p : group) {
      std::error_code ec;
      auto t = fs::last_write_time(p, ec);
      if (!ec && (!any || t > newest)) {
        newest = t;
        any = true;
      }
    }
  }
  if (!any) return iso8601_utc(0);
  const auto sys = std::chrono::file_clock::to_sys(newest);
  return iso8601_utc(std::chrono::system_clock::to_time_t(sys));
}

}  // namespace

void PoisonJob::validate() const {
  cfg.validate();
  if (mode == PoisonMode::Single && backgrounds.size() != 1) {
    throw std::invalid_argument("single mode requires exactly one background");
  }
  if (mode == PoisonMode::RandomClass && backgrounds.size() < 2) {
    throw std::invalid_argument("random-class mode requires at least two backgrounds");
  }
  if (backgrounds.empty()) {
    throw std::invalid_argument("at least one background is required");
  }
}

std::string config_digest(const BlendConfig& cfg) {
  std::string canon = "w=" + std::to_string(cfg.width) + ";h=" + std::to_string(cfg.height) +
                      ";steps=" + std::to_string(cfg.steps) + ";lr=" + fmt(cfg.learning_rate) +
                      ";scale=" + fmt(cfg.background_scale) +
                      ";log=" + std::to_string(cfg.log_interval) + ";tag=" + cfg.filename_tag +
                      ";seed=" + std::to_string(cfg.rng_seed);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

std::uint64_t per_file_seed(std::uint64_t job_seed, const std::string& filename) {
  unsigned char seed_bytes[8];
  for (int i = 0; i < 8; ++i) {
    seed_bytes[i] = static_cast<unsigned char>(job_seed >> (8 * i));
  }
  return fnv1a(reinterpret_cast<const unsigned char*>(filename.data()), filename.size(),
               fnv1a(seed_bytes, 8, kFnvOffset));
}

std::size_t background_index(std::uint64_t job_seed, const std::string& filename,
                             std::size_t background_count) {
  if (background_count == 0) {
    throw std::invalid_argument("background_index: empty background pool");
  }
  std::mt19937_64 gen(per_file_seed(job_seed, filename));
  // Unbiased bounded draw; mt19937_64 output is pinned by the standard.
  const std::uint64_t bound = background_count;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = gen();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

std::string format_manifest(const PoisonManifest& m) {
  std::string out = "manifest=alphaveil-poison/1 created_at=" + m.created_at +
                    " cfg_digest=" + m.cfg_digest + " mode=" + m.mode +
                    " eligible=" + std::to_string(m.eligible) +
                    " skipped=" + std::to_string(m.skipped) + "\n";
  if (m.records.empty()) {
    out += "warning=no_eligible_targets\n";
  }
  for (const auto& r : m.records) {
    out += "target=" + r.target_file + " background=" + r.background_file +
           " output=" + r.output_file + " seed=" + std::to_string(r.rng_seed_used) +
           " status=" + (r.ok ? "ok" : "error");
    if (r.ok) {
      out += " final_loss=" + fmt(r.final_loss) + " " + report_fields(r.report);
    } else {
      out += " error=" + r.error;
    }
    out += "\n";
  }
  return out;
}

PoisonManifest run_job(const PoisonJob& job) {
  job.validate();

  PoisonManifest manifest;
  manifest.mode = job.mode == PoisonMode::Single ? "single" : "random_class";
  manifest.cfg_digest = config_digest(job.cfg);

  std::vector<fs::path> targets = list_eligible(job.target_dir, job.eligible_extensions,
                                                &manifest.skipped);
  manifest.eligible = targets.size();
  manifest.created_at = derive_created_at(targets, job.backgrounds);

  std::vector<Grid> backgrounds;
  backgrounds.reserve(job.backgrounds.size());
  for (const auto& p : job.backgrounds) {
    backgrounds.push_back(load_grayscale(p, job.cfg.width, job.cfg.height));
  }

  fs::create_directories(job.out_dir);

  for (const auto& target_path : targets) {
    const std::string name = target_path.filename().string();
    PoisonRecord rec;
    rec.target_file = name;
    rec.rng_seed_used = per_file_seed(job.cfg.rng_seed, name);
    const std::size_t bg_idx = job.mode == PoisonMode::Single
                                   ? 0
                                   : background_index(job.cfg.rng_seed, name,
                                                      backgrounds.size());
    rec.background_file = job.backgrounds[bg_idx].string();
    rec.output_file = target_path.stem().string() + job.cfg.filename_tag + ".png";

    try {
      const Grid target = load_grayscale(target_path, job.cfg.width, job.cfg.height);
      OptimizeResult opt = optimize(target, backgrounds[bg_idx], job.cfg);
      rec.final_loss = opt.trace.back().loss;

      const Grid bg_scaled = job.cfg.background_scale * backgrounds[bg_idx];
      const fs::path out_path = job.out_dir / rec.output_file;
      encode_attack_png(gray_to_rgb(bg_scaled), opt.alpha, out_path);

      // Score the artifact as shipped: re-read the quantized file.
      auto [rgb, alpha] = decode_attack_png(out_path);
      AttackImage img{std::move(rgb), std::move(alpha),
                      Provenance{target_path.string(), rec.background_file,
                                 manifest.cfg_digest}};
      rec.report = evaluate(img, target, backgrounds[bg_idx], job.cfg);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
    manifest.records.push_back(std::move(rec));
  }

  std::ofstream out(job.out_dir / "poison_manifest.txt", std::ios::binary);
  if (!out) throw io_error("cannot write manifest in '" + job.out_dir.string() + "'");
  out << format_manifest(manifest);
  out.close();
  if (!out) throw io_error("manifest write failed in '" + job.out_dir.string() + "'");
  return manifest;
}

SeparabilityResult separability_check(const fs::path& poisoned_dir,
                                      const fs::path& clean_dir) {
  const std::vector<std::string> exts = {".jpg", ".jpeg", ".png"};
  std::vector<Grid> machine[2], human[2];
  const fs::path* dirs[2] = {&poisoned_dir, &clean_dir};

  Eigen::Index rows = -1, cols = -1;
  for (int c = 0; c < 2; ++c) {
    std::vector<fs::path> files = list_eligible(*dirs[c], exts, nullptr);
    if (files.size() < 2) {
      throw std::invalid_argument("separability_check: each directory needs >= 2 images");
    }
    for (const auto& p : files) {
      DecodedImage img = decode_image(p);
      const Grid gray = luminance(img.rgb);
      if (rows < 0) {
        rows = gray.rows();
        cols = gray.cols();
      } else if (gray.rows() != rows || gray.cols() != cols) {
        throw std::invalid_argument("separability_check: dimension mismatch at '" +
                                    p.string() + "'");
      }
      machine[c].push_back(gray);
      human[c].push_back(img.alpha ? Grid(*img.alpha * gray + (1.0 - *img.alpha)) : gray);
    }
  }

  // Leave-one-out nearest centroid on flattened machine-view pixels. Ties go
  // to the poisoned class, so indistinguishable sets score exactly 1/2.
  Grid sum[2] = {Grid::Zero(rows, cols), Grid::Zero(rows, cols)};
  for (int c = 0; c < 2; ++c) {
    for (const auto& g : machine[c]) sum[c] += g;
  }

  std::size_t correct = 0, total = 0;
  for (int c = 0; c < 2; ++c) {
    const int other = 1 - c;
    const Scalar n_own = static_cast<Scalar>(machine[c].size());
    const Scalar n_other = static_cast<Scalar>(machine[other].size());
    for (const auto& g : machine[c]) {
      const Grid own_centroid = (sum[c] - g) / (n_own - 1.0);
      const Grid other_centroid = sum[other] / n_other;
      Scalar dist[2];
      dist[c] = (g - own_centroid).square().sum();
      dist[other] = (g - other_centroid).square().sum();
      int assigned;
      if (std::abs(dist[0] - dist[1]) <=
          1e-12 * std::max({dist[0], dist[1], Scalar(1)})) {
        assigned = 0;  // numeric tie
      } else {
        assigned = dist[0] < dist[1] ? 0 : 1;
      }
      correct += (assigned == c);
      ++total;
    }
  }

  Scalar gap = 0;
  for (const auto& a : human[0]) {
    for (const auto& b : human[1]) {
      gap += mse_loss(a, b);
    }
  }
  gap /= static_cast<Scalar>(human[0].size() * human[1].size());

  return {static_cast<Scalar>(correct) / static_cast<Scalar>(total), gap};
}

}  // namespace alphaveil
