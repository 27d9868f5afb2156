#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aerobat/dynamics.hpp"
#include "aerobat/reward.hpp"
#include "aerobat/track.hpp"
#include "aerobat/types.hpp"

namespace aerobat {

// Initial-state sampling ranges: position in a cube around a start point,
// hover attitude with random yaw, random-direction velocity.
struct StartRegion {
  Vec3 center{0.0, 0.0, 3.0};
  double half_extent = 1.0;
  double yaw_min = -M_PI;
  double yaw_max = M_PI;
  double speed_min = 0.0;
  double speed_max = 2.0;
};

struct EpisodeConfig {
  int max_steps = 1500;
  double policy_rate = 100.0;  // Hz
  StartRegion start;
  // When set, every waypoint's oscillation speed is resampled uniformly from
  // this range at each reset.
  std::optional<std::pair<double, double>> gate_speed_range;
};

struct CurriculumConfig {
  double rho1 = 0.5;
  double rho2 = 0.3;
  int expansion_steps = 200;  // K
  double expansion_dt = 0.01;
  double jerk_max = 60.0;  // m/s^3 per axis
  double goal_speed_min = 1.0;
  double goal_speed_max = 6.0;
  double goal_cone_half_angle = M_PI / 3.0;
  double thrust_min = 5.0;
  double thrust_max = 15.0;
  int goals_per_gate = 10;
  double band_lo = 40.0;  // critic-value percentile band
  double band_hi = 60.0;
  int min_band_count = 8;
  int seeds_per_iteration = 16;
  int visited_stride = 8;
  std::size_t buffer_capacity = 50000;
};

struct NetworkConfig {
  int latent = 512;
  std::vector<int> trunk{512, 512, 256, 128};
  double init_stddev = 0.5;
};

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  int epochs = 4;
  int minibatch = 8192;
  double learning_rate = 3e-4;
  double entropy_coef = 1e-3;
  double value_coef = 0.5;
  double kl_threshold = 0.05;
  int num_envs = 64;
  int rollout_steps = 256;
  int iterations = 100;
  NetworkConfig network;
};

struct EvalConfig {
  int episodes = 8;
  int every = 1;  // iterations between evaluations
};

struct AppConfig {
  DynamicsParams dynamics;
  Track track;
  RewardWeights reward_weights;
  RewardMode reward_mode = RewardMode::kSparse;
  EpisodeConfig episode;
  CurriculumConfig curriculum;
  PpoConfig ppo;
  EvalConfig eval;

  static AppConfig from_file(const std::string& path);
  static AppConfig from_string(const std::string& yaml);
  std::string to_string() const;
};

// Loads only the track section of a YAML file, or a bundled fixture when
// `id` names one.
Track load_track(const std::string& id);

}  // namespace aerobat
