#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "aerobat/evaluation.hpp"
#include "aerobat/ppo.hpp"

namespace {

enum ExitCode {
  kOk = 0,
  kUsageError = 1,
  kIoError = 2,
  kNumericError = 3,
  kInternalError = 4,
};

int verbosity() {
  const char* level = std::getenv("AEROBAT_LOG");
  if (level == nullptr) return 1;
  const std::string s(level);
  if (s == "quiet" || s == "0") return 0;
  if (s == "debug" || s == "2") return 2;
  return 1;
}

void info(const std::string& msg) {
  if (verbosity() >= 1) std::cerr << msg << std::endl;
}

aerobat::AppConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return aerobat::AppConfig::from_string("{}");
  return aerobat::AppConfig::from_file(path);
}

int cmd_train(const std::string& config_path, const std::string& mode_str,
              std::uint64_t seed, const std::string& out_dir, int iterations) {
  auto cfg = load_config_or_default(config_path);
  if (iterations > 0) cfg.ppo.iterations = iterations;
  const auto mode = aerobat::train_mode_from_string(mode_str);

  std::filesystem::create_directories(out_dir);
  const std::string ckpt = out_dir + "/checkpoint.bin";
  info("training mode=" + mode_str + " seed=" + std::to_string(seed) +
       " iterations=" + std::to_string(cfg.ppo.iterations));
  const aerobat::TrainResult result = aerobat::train(cfg, mode, seed, ckpt);

  std::ofstream log_out(out_dir + "/training_log.csv");
  if (!log_out) {
    std::cerr << "cannot write training log in " << out_dir << std::endl;
    return kIoError;
  }
  log_out << aerobat::log_to_csv(result.log);
  info("env steps: " + std::to_string(result.env_steps));
  if (!result.log.empty()) {
    info("final eval reward: " + std::to_string(result.log.back().eval_reward) +
         " success rate: " + std::to_string(result.log.back().eval_success));
  }
  if (result.aborted) {
    std::cerr << "training aborted on divergence; last-good checkpoint kept"
              << std::endl;
    return kNumericError;
  }
  return kOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& track_id,
             int episodes, double gate_speed, const std::string& jsonl_path,
             const std::string& record_path, const std::string& out_path) {
  const auto cp = aerobat::load_checkpoint(checkpoint_path);
  auto cfg = aerobat::AppConfig::from_string(cp.config_yaml);
  const aerobat::Track track =
      track_id.empty() ? cfg.track : aerobat::load_track(track_id);

  std::ofstream jsonl;
  aerobat::EpisodeLog first_episode;
  aerobat::EvalSinks sinks;
  if (!jsonl_path.empty()) {
    jsonl.open(jsonl_path);
    if (!jsonl) {
      std::cerr << "cannot write " << jsonl_path << std::endl;
      return kIoError;
    }
    sinks.episode_jsonl = &jsonl;
  }
  if (!record_path.empty()) sinks.first_episode = &first_episode;

  const auto metrics = aerobat::run_eval(cp.params, cfg, track, episodes,
                                         gate_speed, cp.seed ^ 0x5eedULL,
                                         sinks);
  if (!record_path.empty()) {
    std::ofstream rec(record_path);
    if (!rec) {
      std::cerr << "cannot write " << record_path << std::endl;
      return kIoError;
    }
    for (const auto& r : first_episode) {
      rec << aerobat::step_record_to_json(r) << '\n';
    }
  }

  std::ostringstream report;
  report << "{\n  \"episodes\": " << metrics.episodes
         << ",\n  \"success_rate\": " << metrics.success_rate
         << ",\n  \"flight_time\": " << metrics.flight_time
         << ",\n  \"aer_p\": " << metrics.aer_p
         << ",\n  \"aer_a_deg\": " << metrics.aer_a_deg << "\n}\n";
  if (out_path.empty()) {
    std::cout << report.str();
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << std::endl;
      return kIoError;
    }
    out << report.str();
  }
  return kOk;
}

int cmd_ablate(const std::string& matrix_path, long budget,
               const std::string& config_path, const std::string& out_path,
               int jobs) {
  auto matrix = aerobat::RunMatrix::from_file(matrix_path);
  if (budget >= 0) matrix.budget = budget;
  const auto base = load_config_or_default(config_path);
  info("running " + std::to_string(matrix.cells.size()) + " cells, budget " +
       std::to_string(matrix.budget));
  const auto report = aerobat::run_ablation(matrix, base, jobs);
  const std::string text = report.to_json();
  if (out_path.empty()) {
    std::cout << text << std::endl;
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cannot write " << out_path << std::endl;
      return kIoError;
    }
    out << text << std::endl;
  }
  for (const auto& cell : report.cells) {
    if (cell.failed) return kNumericError;
  }
  return kOk;
}

int cmd_export(const std::string& episode_path, const std::string& out_path) {
  std::ifstream in(episode_path);
  if (!in) {
    std::cerr << "cannot open episode log: " << episode_path << std::endl;
    return kIoError;
  }
  const auto log = aerobat::load_episode_jsonl(in);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write " << out_path << std::endl;
    return kIoError;
  }
  aerobat::export_trajectory(log, out);
  info("exported " + std::to_string(log.size()) + " rows");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"aerobatic quadrotor training and evaluation"};
  app.require_subcommand(1);

  std::string config_path, mode = "proposed", out_dir = "run";
  std::uint64_t seed = 1;
  int iterations = -1;
  auto* train_cmd = app.add_subcommand("train", "train a policy");
  train_cmd->add_option("--config", config_path, "YAML config file");
  train_cmd->add_option("--mode", mode, "sp|rs|proposed");
  train_cmd->add_option("--seed", seed, "RNG seed");
  train_cmd->add_option("--out", out_dir, "output directory");
  train_cmd->add_option("--iterations", iterations, "override iteration count");

  std::string checkpoint_path, track_id, jsonl_path, record_path, out_path;
  int episodes = 50;
  double gate_speed = 0.0;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")
      ->required();
  eval_cmd->add_option("--track", track_id, "fixture name or track file");
  eval_cmd->add_option("--episodes", episodes, "number of episodes");
  eval_cmd->add_option("--gate-speed", gate_speed, "gate speed, m/s");
  eval_cmd->add_option("--jsonl", jsonl_path, "write per-episode JSON lines");
  eval_cmd->add_option("--record", record_path,
                       "write per-step JSON lines of the first episode");
  eval_cmd->add_option("--out", out_path, "metrics output file");

  std::string matrix_path, ablate_out;
  long budget = -1;
  int jobs = 1;
  auto* ablate_cmd = app.add_subcommand("ablate", "run a training matrix");
  ablate_cmd->add_option("--matrix", matrix_path, "matrix JSON file")
      ->required();
  ablate_cmd->add_option("--budget", budget, "env steps per cell");
  ablate_cmd->add_option("--config", config_path, "base YAML config");
  ablate_cmd->add_option("--out", ablate_out, "report output file");
  ablate_cmd->add_option("--jobs", jobs, "concurrent cells");

  std::string episode_path, csv_path;
  auto* export_cmd = app.add_subcommand("export", "episode log to CSV");
  export_cmd->add_option("--episode", episode_path, "per-step JSONL file")
      ->required();
  export_cmd->add_option("--out", csv_path, "CSV output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      return cmd_train(config_path, mode, seed, out_dir, iterations);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(checkpoint_path, track_id, episodes, gate_speed,
                      jsonl_path, record_path, out_path);
    }
    if (ablate_cmd->parsed()) {
      return cmd_ablate(matrix_path, budget, config_path, ablate_out, jobs);
    }
    if (export_cmd->parsed()) {
      return cmd_export(episode_path, csv_path);
    }
  } catch (const aerobat::SimulationDivergence& e) {
    std::cerr << "simulation diverged: " << e.what() << std::endl;
    return kNumericError;
  } catch (const aerobat::TrainingDiverged& e) {
    std::cerr << "training diverged: " << e.what() << std::endl;
    return kNumericError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << std::endl;
    return kUsageError;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << std::endl;
    return kInternalError;
  }
  return kUsageError;
}
