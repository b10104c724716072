#include "alphaveil/blend.hpp"
#include "alphaveil/compositor.hpp"
#include "alphaveil/detector.hpp"
#include "alphaveil/imgio.hpp"
#include "alphaveil/metrics.hpp"
#include "alphaveil/poison.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitSoftware = 70;
constexpr int kExitIo = 74;
constexpr int kExitReportFailure = 3;

using namespace alphaveil;
namespace fs = std::filesystem;

std::pair<Eigen::Index, Eigen::Index> parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) {
    throw std::invalid_argument("size must be WxH, e.g. 150x150");
  }
  try {
    const long w = std::stol(s.substr(0, x));
    const long h = std::stol(s.substr(x + 1));
    if (w < 1 || h < 1) throw std::invalid_argument("");
    return {w, h};
  } catch (const std::exception&) {
    throw std::invalid_argument("size must be WxH with positive dimensions");
  }
}

ViewerModel parse_viewer(const std::string& s) {
  if (s == "light") return ViewerModel::light();
  if (s == "dark") return ViewerModel::dark();
  if (s == "drop") return ViewerModel::drop_alpha();
  if (s.rfind("b=", 0) == 0) {
    try {
      return ViewerModel::flatten(std::stod(s.substr(2)));
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("viewer backdrop must be a number in [0,1]");
    }
  }
  throw std::invalid_argument("viewer must be light, dark, drop, or b=<luminance>");
}

void print_kv(const char* key, Scalar value) {
  std::printf("%s=%.10g\n", key, value);
}

struct CraftOptions {
  std::string target, background, out;
  std::string size = "150x150";
  BlendConfig cfg;
};

int run_craft(const CraftOptions& opt) {
  auto [w, h] = parse_size(opt.size);
  BlendConfig cfg = opt.cfg;
  cfg.width = w;
  cfg.height = h;
  cfg.validate();

  const Grid target = load_grayscale(opt.target, cfg.width, cfg.height);
  const Grid background = load_grayscale(opt.background, cfg.width, cfg.height);

  OptimizeResult res = optimize(target, background, cfg);
  for (const auto& pt : res.trace) {
    std::printf("step=%ld loss=%.10g\n", pt.step, pt.loss);
  }

  const Grid bg_scaled = cfg.background_scale * background;
  encode_attack_png(gray_to_rgb(bg_scaled), res.alpha, opt.out);

  auto [rgb, alpha] = decode_attack_png(opt.out);
  AttackImage img{std::move(rgb), std::move(alpha),
                  Provenance{opt.target, opt.background, config_digest(cfg)}};
  std::fputs(format_report(evaluate(img, target, background, cfg)).c_str(), stdout);
  return 0;
}

struct PoisonOptions {
  std::string targets, out;
  std::vector<std::string> backgrounds;
  std::string mode = "single";
  std::string size = "150x150";
  BlendConfig cfg;
};

int run_poison(const PoisonOptions& opt) {
  PoisonJob job;
  auto [w, h] = parse_size(opt.size);
  job.cfg = opt.cfg;
  job.cfg.width = w;
  job.cfg.height = h;
  job.target_dir = opt.targets;
  job.out_dir = opt.out;
  for (const auto& b : opt.backgrounds) job.backgrounds.emplace_back(b);
  if (opt.mode == "single") {
    job.mode = PoisonMode::Single;
  } else if (opt.mode == "random") {
    job.mode = PoisonMode::RandomClass;
  } else {
    throw std::invalid_argument("mode must be 'single' or 'random'");
  }

  PoisonManifest manifest = run_job(job);

  std::size_t failed = 0;
  Scalar loss_sum = 0;
  std::size_t ok = 0;
  for (const auto& r : manifest.records) {
    if (r.ok) {
      loss_sum += r.final_loss;
      ++ok;
    } else {
      ++failed;
    }
  }
  std::printf("processed=%zu skipped=%zu failed=%zu\n", manifest.records.size(),
              manifest.skipped, failed);
  if (ok > 0) print_kv("mean_final_loss", loss_sum / static_cast<Scalar>(ok));
  std::printf("manifest=%s\n", (job.out_dir / "poison_manifest.txt").string().c_str());
  return 0;
}

int run_flatten(const std::string& in, const std::string& viewer_spec,
                const std::string& out) {
  const ViewerModel viewer = parse_viewer(viewer_spec);
  auto [rgb, alpha] = decode_attack_png(in);
  AttackImage img{std::move(rgb), std::move(alpha), std::nullopt};
  write_gray_png(render(img, viewer), out);
  return 0;
}

int run_inspect(const std::string& in, Scalar v_alpha, Scalar v_div) {
  if (v_alpha < 0 || v_div < 0) {
    throw std::invalid_argument("thresholds must be >= 0");
  }
  const ScanResult res = scan(in, ScanThresholds{v_alpha, v_div});
  std::printf("has_alpha=%d\n", res.has_alpha ? 1 : 0);
  print_kv("alpha_variance", res.alpha_variance);
  print_kv("view_divergence_mse", res.view_divergence_mse);
  std::printf("verdict=%s\n", verdict_name(res.verdict).c_str());
  return verdict_exit_code(res.verdict);
}

struct ReportOptions {
  std::string attack, target, background;
  std::string size;  // optional; asserts the attack dimensions when given
  Scalar scale = 0.5;
  Scalar tau_h = 1e-3;
  Scalar tau_m = 1e-2;
};

int run_report(const ReportOptions& opt) {
  auto [rgb, alpha] = decode_attack_png(opt.attack);
  if (!opt.size.empty()) {
    auto [w, h] = parse_size(opt.size);
    if (w != alpha.cols() || h != alpha.rows()) {
      throw std::invalid_argument("attack image is " + std::to_string(alpha.cols()) + "x" +
                                  std::to_string(alpha.rows()) + ", expected " + opt.size);
    }
  }
  BlendConfig cfg;
  cfg.width = alpha.cols();
  cfg.height = alpha.rows();
  cfg.background_scale = opt.scale;

  const Grid target = load_grayscale(opt.target, cfg.width, cfg.height);
  const Grid background = load_grayscale(opt.background, cfg.width, cfg.height);
  AttackImage img{std::move(rgb), std::move(alpha), std::nullopt};

  const AttackReport rep = evaluate(img, target, background, cfg,
                                    SuccessThresholds{opt.tau_h, opt.tau_m});
  std::fputs(format_report(rep).c_str(), stdout);
  return rep.success ? 0 : kExitReportFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alphaveil: craft, deploy, and detect PNG transparency attacks"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok/clean, 1 suspicious, 2 attack-likely, 3 report failure,\n"
             "64 usage error, 74 I/O or format error.");

  CraftOptions craft;
  auto* craft_cmd = app.add_subcommand(
      "craft", "Optimize one attack image that shows the target but stores the background");
  craft_cmd->add_option("--target", craft.target, "Visible target image (PNG/JPEG)")->required();
  craft_cmd->add_option("--background", craft.background, "Hidden background image")->required();
  craft_cmd->add_option("--out", craft.out, "Output RGBA PNG path")->required();
  craft_cmd->add_option("--size", craft.size, "Working size WxH (default 150x150)");
  craft_cmd->add_option("--steps", craft.cfg.steps, "Optimization steps");
  craft_cmd->add_option("--lr", craft.cfg.learning_rate, "Adam learning rate");
  craft_cmd->add_option("--scale", craft.cfg.background_scale, "Background scale factor");
  craft_cmd->add_option("--log-interval", craft.cfg.log_interval, "Loss trace interval");

  PoisonOptions poison;
  auto* poison_cmd = app.add_subcommand(
      "poison", "Batch-craft attack images over a directory of targets");
  poison_cmd->add_option("--targets", poison.targets, "Directory of target images")->required();
  poison_cmd->add_option("--backgrounds", poison.backgrounds, "Background image file(s)")
      ->required()
      ->expected(-1);
  poison_cmd->add_option("--mode", poison.mode, "single | random");
  poison_cmd->add_option("--out", poison.out, "Output directory")->required();
  poison_cmd->add_option("--seed", poison.cfg.rng_seed, "Job RNG seed");
  poison_cmd->add_option("--tag", poison.cfg.filename_tag, "Output filename tag");
  poison_cmd->add_option("--size", poison.size, "Working size WxH");
  poison_cmd->add_option("--steps", poison.cfg.steps, "Optimization steps");
  poison_cmd->add_option("--lr", poison.cfg.learning_rate, "Adam learning rate");
  poison_cmd->add_option("--scale", poison.cfg.background_scale, "Background scale factor");

  std::string flatten_in, flatten_viewer = "light", flatten_out;
  auto* flatten_cmd = app.add_subcommand(
      "flatten", "Render an attack PNG the way a given viewer would");
  flatten_cmd->add_option("--in", flatten_in, "Input RGBA PNG")->required();
  flatten_cmd->add_option("--viewer", flatten_viewer, "light | dark | drop | b=<luminance>");
  flatten_cmd->add_option("--out", flatten_out, "Output grayscale PNG")->required();

  std::string inspect_in;
  Scalar v_alpha = ScanThresholds{}.alpha_variance;
  Scalar v_div = ScanThresholds{}.view_divergence;
  auto* inspect_cmd = app.add_subcommand("inspect", "Scan an image for a hidden layer");
  inspect_cmd->add_option("--in", inspect_in, "Image to scan")->required();
  inspect_cmd->add_option("--v-alpha", v_alpha, "Alpha variance threshold");
  inspect_cmd->add_option("--v-div", v_div, "View divergence threshold");

  ReportOptions report;
  auto* report_cmd = app.add_subcommand(
      "report", "Score an attack image against its target and background");
  report_cmd->add_option("--attack", report.attack, "Attack RGBA PNG")->required();
  report_cmd->add_option("--target", report.target, "Target image")->required();
  report_cmd->add_option("--background", report.background, "Background image")->required();
  report_cmd->add_option("--size", report.size, "Expected size WxH");
  report_cmd->add_option("--scale", report.scale, "Background scale factor");
  report_cmd->add_option("--tau-h", report.tau_h, "Human fidelity threshold");
  report_cmd->add_option("--tau-m", report.tau_m, "Machine divergence threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (craft_cmd->parsed()) return run_craft(craft);
    if (poison_cmd->parsed()) return run_poison(poison);
    if (flatten_cmd->parsed()) return run_flatten(flatten_in, flatten_viewer, flatten_out);
    if (inspect_cmd->parsed()) return run_inspect(inspect_in, v_alpha, v_div);
    if (report_cmd->parsed()) return run_report(report);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const format_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSoftware;
  }
  return kExitUsage;
}
