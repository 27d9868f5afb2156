#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "aerobat/config.hpp"
#include "aerobat/environment.hpp"
#include "aerobat/ppo.hpp"

namespace aerobat {

struct GateStats {
  int gate = 0;
  int passes = 0;
  double mean_p_error = 0.0;
  double mean_theta_error_deg = 0.0;
};

struct EvalMetrics {
  int episodes = 0;
  double success_rate = 0.0;
  double flight_time = 0.0;   // mean over successful episodes, s
  double aer_p = 0.0;         // mean position error over all passes, m
  double aer_a_deg = 0.0;     // mean attitude error over all passes, deg
  std::vector<GateStats> per_gate;
};

// Pure aggregation, reusable on episode records parsed back from JSON lines.
EvalMetrics metrics_from_episodes(const std::vector<EpisodeInfo>& episodes,
                                  std::size_t n_gates);

// One row per policy step of a recorded episode.
struct StepRecord {
  double t = 0.0;
  Vec3 p{Vec3::Zero()};
  Quat q{1.0, 0.0, 0.0, 0.0};
  Vec3 v{Vec3::Zero()};
  Vec3 omega{Vec3::Zero()};
  Vec4 cmd{Vec4::Zero()};  // physical command
  double reward = 0.0;
  int gate = 0;
};
using EpisodeLog = std::vector<StepRecord>;

std::string step_record_to_json(const StepRecord& r);
StepRecord step_record_from_json(const std::string& line);
EpisodeLog load_episode_jsonl(std::istream& in);

// CSV with full double round-trip precision; header then one row per step.
void export_trajectory(const EpisodeLog& log, std::ostream& out);
EpisodeLog parse_trajectory_csv(std::istream& in);

struct EvalSinks {
  std::ostream* episode_jsonl = nullptr;  // one line per episode
  EpisodeLog* first_episode = nullptr;    // per-step record of episode 0
  std::vector<EpisodeInfo>* episodes = nullptr;
};

// Deterministic-policy evaluation on a track whose gates move at
// `gate_speed`; resets from the start region, success = all gates passed.
EvalMetrics run_eval(const PolicyParams& params, const AppConfig& cfg,
                     const Track& track, int n_episodes, double gate_speed,
                     std::uint64_t seed, const EvalSinks& sinks = {});

struct AblationCell {
  TrainMode mode = TrainMode::kSparse;
  std::string track_id;
  std::uint64_t seed = 0;
  double gate_speed = 0.0;  // gate speed for the post-training evaluation
};

struct RunMatrix {
  long budget = 0;  // env steps per cell
  int eval_episodes = 50;
  std::vector<AblationCell> cells;

  static RunMatrix from_file(const std::string& path);
  static RunMatrix from_json(const std::string& text);
};

struct CellResult {
  AblationCell cell;
  bool failed = false;
  std::vector<TrainLogRow> log;
  EvalMetrics final_metrics;
  PolicyParams params;
};

struct AblationReport {
  long budget = 0;
  long total_episodes = 0;  // sum of per-cell final-eval episode counts
  std::vector<CellResult> cells;

  std::string to_json() const;
};

// Trains every cell under the shared budget and evaluates the result. Cells
// whose training diverges are marked failed; the rest continue. `jobs`
// bounds how many cells run concurrently.
AblationReport run_ablation(const RunMatrix& matrix, const AppConfig& base,
                            int jobs = 1);

// Area under the evaluation-reward curve (trapezoid over iterations).
double curve_auc(const std::vector<TrainLogRow>& log);

}  // namespace aerobat
