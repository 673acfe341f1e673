// Command-line front end: scenario runs, confidence training, contact
// reports, the offload sweep, the masking experiment, and elevation-mask
// calibration. All outputs land in --out (or $SPACEVERSE_OUT_DIR, or ".").

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "spaceverse/config.hpp"
#include "spaceverse/report.hpp"

namespace fs = std::filesystem;
using namespace spaceverse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitHorizonOnly = 3;
constexpr int kExitCalibration = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  int verbosity = 0;
};

std::string resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("SPACEVERSE_OUT_DIR"); env && *env)
    return env;
  return ".";
}

std::string load_raw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config file not readable: " + path});
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

ScenarioConfig load_or_exit(const CommonArgs& args) {
  if (!args.seed_override) return load_config(args.config_path);
  // Re-resolve with the override: drop every explicit sub-seed so the whole
  // seed tree re-derives from the new master.
  nlohmann::json replay;
  try {
    replay = nlohmann::json::parse(load_raw(args.config_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({args.config_path + ": " + e.what()});
  }
  replay["seed"] = *args.seed_override;
  auto drop = [&](std::initializer_list<const char*> path, const char* key) {
    nlohmann::json* node = &replay;
    for (const char* p : path) {
      if (!node->contains(p)) return;
      node = &(*node)[p];
    }
    node->erase(key);
  };
  drop({"sim"}, "arrival_seed");
  drop({"encoder"}, "seed");
  drop({"confidence"}, "init_seed");
  drop({"confidence", "training"}, "generator_seed");
  drop({"confidence", "training"}, "seed");
  drop({"oracles", "satellite"}, "seed");
  drop({"oracles", "ground"}, "seed");
  drop({"samples"}, "seed");
  drop({"policy"}, "seed");
  return config_from_json(replay);
}

void echo_config(const ScenarioConfig& cfg, const std::string& out_dir) {
  write_file(out_dir + "/resolved_config.json", config_to_json(cfg).dump(2) + "\n");
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "scenario config (JSON)")
      ->required();
  cmd->add_option("-o,--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed_override, "override the master seed");
  cmd->add_flag("-v,--verbose", args.verbosity, "more progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satellite-ground synergistic inference simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, train_args, contact_args, sweep_args, mask_args,
      cal_args;

  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  add_common(run_cmd, run_args);

  auto* train_cmd =
      app.add_subcommand("train-confidence", "train and save the confidence net");
  add_common(train_cmd, train_args);
  std::string net_out;
  train_cmd->add_option("--net-out", net_out, "output PCN1 path");

  auto* contact_cmd =
      app.add_subcommand("contact-report", "emit contact windows as CSV");
  add_common(contact_cmd, contact_args);

  auto* sweep_cmd = app.add_subcommand("sweep", "offload-volume sweep");
  add_common(sweep_cmd, sweep_args);
  std::vector<double> sweep_fractions{0.0, 0.1, 0.2, 0.3, 0.4,
                                      0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  sweep_cmd->add_option("--fractions", sweep_fractions, "offload fractions");

  auto* mask_cmd =
      app.add_subcommand("mask-experiment", "masking-strategy comparison");
  add_common(mask_cmd, mask_args);
  std::vector<double> mask_fractions{0.0, 0.2, 0.4, 0.6, 0.8};
  mask_cmd->add_option("--fractions", mask_fractions, "mask fractions");
  bool dump_scores = false;
  mask_cmd->add_flag("--dump-scores", dump_scores,
                     "write per-region attention scores");

  auto* cal_cmd = app.add_subcommand(
      "calibrate-mask", "solve the elevation mask for a contact-fraction target");
  add_common(cal_cmd, cal_args);
  double target = 0.0433;
  double tolerance = 0.0005;
  cal_cmd->add_option("--target", target, "contact fraction target");
  cal_cmd->add_option("--tolerance", tolerance, "acceptable deviation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const auto out = resolve_out_dir(run_args.out_dir);
      fs::create_directories(out);
      ScenarioConfig cfg = load_or_exit(run_args);
      if (cfg.net_path.empty() &&
          (cfg.policy.kind == Policy::SpaceVerse ||
           cfg.policy.kind == Policy::ConfidenceAfterFullInference))
        cfg.net_path = out + "/confidence_net.pcn";
      echo_config(cfg, out);
      const ScenarioResult result = run_scenario(cfg);
      write_file(out + "/traces.csv", traces_csv(result.traces));
      write_file(out + "/metrics.json",
                 metrics_json(result.metrics, cfg).dump(2) + "\n");
      if (run_args.verbosity > 0)
        std::cout << metrics_json(result.metrics, cfg).dump(2) << "\n";
      if (result.metrics.samples > 0 &&
          result.metrics.incomplete == result.metrics.samples) {
        std::cerr << "every sample exceeded the window horizon\n";
        return kExitHorizonOnly;
      }
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      const auto out = resolve_out_dir(train_args.out_dir);
      fs::create_directories(out);
      ScenarioConfig cfg = load_or_exit(train_args);
      if (!net_out.empty()) cfg.net_path = net_out;
      if (cfg.net_path.empty()) cfg.net_path = out + "/confidence_net.pcn";
      echo_config(cfg, out);
      TrainResult history;
      const auto net = train_confidence_net(cfg, &history);
      save_net(net, cfg.net_path);
      std::string csv = "epoch,loss\n";
      for (std::size_t e = 0; e < history.epoch_loss.size(); ++e)
        csv += std::to_string(e) + "," + format_double(history.epoch_loss[e]) + "\n";
      write_file(out + "/training_loss.csv", csv);
      std::cout << "trained " << cfg.confidence.stages << "-stage net -> "
                << cfg.net_path << " (final loss "
                << format_double(history.epoch_loss.empty()
                                     ? 0.0
                                     : history.epoch_loss.back())
                << ")\n";
      return kExitOk;
    }

    if (contact_cmd->parsed()) {
      const auto out = resolve_out_dir(contact_args.out_dir);
      fs::create_directories(out);
      const ScenarioConfig cfg = load_or_exit(contact_args);
      echo_config(cfg, out);
      const auto windows = all_contact_windows(
          cfg.satellites, cfg.ground_stations, cfg.sim.horizon_s,
          cfg.sim.window_step_s, cfg.sim.window_refine_s, cfg.sim.threads);
      write_file(out + "/contact_windows.csv",
                 contact_report_csv(cfg.satellites, cfg.ground_stations, windows));
      double mean = 0.0;
      for (std::size_t s = 0; s < cfg.satellites.size(); ++s)
        mean += contact_fraction(merge_windows(windows[s]), cfg.sim.horizon_s);
      mean /= double(cfg.satellites.size());
      std::cout << "mean contact fraction: " << format_double(mean) << "\n";
      return kExitOk;
    }

    if (sweep_cmd->parsed()) {
      const auto out = resolve_out_dir(sweep_args.out_dir);
      fs::create_directories(out);
      ScenarioConfig cfg = load_or_exit(sweep_args);
      if (cfg.net_path.empty()) cfg.net_path = out + "/confidence_net.pcn";
      echo_config(cfg, out);
      const auto rows = sweep_offload(cfg, sweep_fractions);
      write_file(out + "/sweep.csv", sweep_csv(rows));
      return kExitOk;
    }

    if (mask_cmd->parsed()) {
      const auto out = resolve_out_dir(mask_args.out_dir);
      fs::create_directories(out);
      ScenarioConfig cfg = load_or_exit(mask_args);
      echo_config(cfg, out);
      const auto rows = masking_experiment(cfg, mask_fractions);
      write_file(out + "/mask_experiment.csv", mask_csv(rows));
      if (dump_scores) {
        // Per-region scores of the detection split, for external plotting.
        GeneratorSpec gen = cfg.generator;
        gen.qa_weight = gen.classification_weight = 0.0;
        gen.detection_weight = 1.0;
        const auto samples = generate_samples(gen, cfg.sim.threads);
        std::string csv = "sample_id,region,score\n";
        for (const auto& s : samples) {
          const auto grid = partition_image(s.image, cfg.preprocess.region_height,
                                            cfg.preprocess.region_width);
          const auto tokens =
              encode_grid(grid, cfg.encoder, s.id, s.region_relevance,
                          cfg.sim.threads);
          const auto scores = region_attention_scores(
              tokens, encode_prompt(s.prompt, cfg.encoder),
              cfg.preprocess.normalize_attention, cfg.sim.threads);
          for (std::size_t r = 0; r < scores.size(); ++r)
            csv += s.id + "," + std::to_string(r) + "," +
                   format_double(scores[r]) + "\n";
        }
        write_file(out + "/region_scores.csv", csv);
      }
      return kExitOk;
    }

    if (cal_cmd->parsed()) {
      const auto out = resolve_out_dir(cal_args.out_dir);
      fs::create_directories(out);
      ScenarioConfig cfg = load_or_exit(cal_args);
      const auto cal = calibrate_elevation_mask(
          cfg.satellites, cfg.ground_stations, target, tolerance,
          cfg.sim.horizon_s, cfg.sim.window_step_s, cfg.sim.threads);
      if (!cal.reachable) {
        std::cerr << "target " << format_double(target)
                  << " unreachable; achievable range ["
                  << format_double(cal.fraction_lo) << ", "
                  << format_double(cal.fraction_hi) << "]\n";
        return kExitCalibration;
      }
      std::cout << "solved elevation mask: " << format_double(cal.mask_deg)
                << " deg (fraction " << format_double(cal.fraction) << ")\n";
      for (auto& gs : cfg.ground_stations) gs.min_elevation_deg = cal.mask_deg;
      echo_config(cfg, out);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
