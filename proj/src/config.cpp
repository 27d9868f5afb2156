#include "aerobat/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aerobat {

namespace {

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node[key]) out = node[key].as<T>();
}

void read_vec3(const YAML::Node& node, const char* key, Vec3& out) {
  if (!node[key]) return;
  const auto v = node[key].as<std::vector<double>>();
  if (v.size() != 3) throw std::runtime_error(std::string(key) + ": expected 3 values");
  out = Vec3(v[0], v[1], v[2]);
}

void read_range(const YAML::Node& node, const char* key, double& lo, double& hi) {
  if (!node[key]) return;
  const auto v = node[key].as<std::vector<double>>();
  if (v.size() != 2) throw std::runtime_error(std::string(key) + ": expected 2 values");
  lo = v[0];
  hi = v[1];
}

void load_dynamics(const YAML::Node& node, DynamicsParams& out) {
  read(node, "substep_dt", out.substep_dt);
  read(node, "substeps", out.substeps);
  read(node, "tau_rate", out.tau_rate);
  read_vec3(node, "drag", out.drag.coeffs);
  auto& r = out.randomization;
  read(node, "drag_jitter", r.drag_jitter);
  read(node, "command_jitter", r.command_jitter);
  read_range(node, "t0_range", r.t0_min, r.t0_max);
  read(node, "t_latency", r.t_latency);
  read(node, "randomize_drag", r.randomize_drag);
  read(node, "randomize_command", r.randomize_command);
  read(node, "randomize_latency", r.randomize_latency);
  if (r.drag_jitter < 0.0 || r.drag_jitter >= 1.0 || r.command_jitter < 0.0 ||
      r.command_jitter >= 1.0) {
    throw std::runtime_error("dynamics: jitter fractions must be in [0, 1)");
  }
  if (r.t0_min < 0.0 || r.t0_max > r.t_latency || r.t0_min > r.t0_max) {
    throw std::runtime_error("dynamics: t0_range must lie within [0, t_latency]");
  }
}

void load_track_node(const YAML::Node& node, Track& out) {
  if (node["fixture"]) {
    out = Track::fixture(node["fixture"].as<std::string>());
  } else if (node["waypoints"]) {
    out.waypoints.clear();
    for (const auto& entry : node["waypoints"]) {
      Waypoint w;
      read_vec3(entry, "position", w.position);
      if (entry["quat_wxyz"]) {
        const auto q = entry["quat_wxyz"].as<std::vector<double>>();
        if (q.size() != 4) throw std::runtime_error("quat_wxyz: expected 4 values");
        w.orientation = Quat(q[0], q[1], q[2], q[3]).normalized();
      }
      read(entry, "osc_amplitude", w.osc_amplitude);
      read(entry, "osc_speed", w.osc_speed);
      read(entry, "phase", w.phase);
      out.waypoints.push_back(w);
    }
  }
  read(node, "pass_threshold", out.pass_threshold);
  read_vec3(node, "bbox", out.bbox_half_extents);
  if (out.waypoints.empty()) {
    throw std::runtime_error("track: at least one waypoint required");
  }
  if (out.pass_threshold <= 0.0) {
    throw std::runtime_error("track: pass_threshold must be > 0");
  }
}

void load_reward(const YAML::Node& node, RewardWeights& w, RewardMode& mode) {
  read(node, "w_aer", w.w_aer);
  read(node, "w_act", w.w_act);
  read(node, "w_act_change", w.w_act_change);
  read(node, "w_yaw", w.w_yaw);
  read(node, "a", w.a);
  read(node, "b", w.b);
  read(node, "c", w.c);
  read(node, "w_sp", w.w_sp);
  read(node, "w_sq", w.w_sq);
  if (!(w.a > w.b && w.b > 0.0)) {
    throw std::runtime_error("reward: requires a > b > 0");
  }
  if (node["mode"]) {
    const auto m = node["mode"].as<std::string>();
    if (m == "sp") mode = RewardMode::kSparse;
    else if (m == "rs") mode = RewardMode::kShaped;
    else throw std::runtime_error("reward: mode must be sp or rs");
  }
}

void load_env(const YAML::Node& node, EpisodeConfig& out) {
  read(node, "max_steps", out.max_steps);
  read(node, "policy_rate", out.policy_rate);
  if (node["start"]) {
    const auto s = node["start"];
    read_vec3(s, "center", out.start.center);
    read(s, "half_extent", out.start.half_extent);
    read_range(s, "yaw_range", out.start.yaw_min, out.start.yaw_max);
    read_range(s, "speed_range", out.start.speed_min, out.start.speed_max);
  }
  if (node["gate_speed_range"]) {
    double lo = 0.0, hi = 0.0;
    read_range(node, "gate_speed_range", lo, hi);
    out.gate_speed_range = {lo, hi};
  }
  if (out.max_steps <= 0) throw std::runtime_error("env: max_steps must be > 0");
}

void load_curriculum(const YAML::Node& node, CurriculumConfig& out) {
  read(node, "rho1", out.rho1);
  read(node, "rho2", out.rho2);
  read(node, "expansion_steps", out.expansion_steps);
  read(node, "expansion_dt", out.expansion_dt);
  read(node, "jerk_max", out.jerk_max);
  read_range(node, "goal_speed_range", out.goal_speed_min, out.goal_speed_max);
  read(node, "goal_cone_half_angle", out.goal_cone_half_angle);
  read_range(node, "thrust_range", out.thrust_min, out.thrust_max);
  read(node, "goals_per_gate", out.goals_per_gate);
  read_range(node, "band", out.band_lo, out.band_hi);
  read(node, "min_band_count", out.min_band_count);
  read(node, "seeds_per_iteration", out.seeds_per_iteration);
  read(node, "visited_stride", out.visited_stride);
  read(node, "buffer_capacity", out.buffer_capacity);
  if (out.rho1 + out.rho2 > 1.0) {
    throw std::runtime_error("curriculum: rho1 + rho2 must be <= 1");
  }
  if (out.expansion_steps < 1 || out.expansion_dt <= 0.0) {
    throw std::runtime_error("curriculum: invalid expansion parameters");
  }
}

void load_ppo(const YAML::Node& node, PpoConfig& out) {
  read(node, "gamma", out.gamma);
  read(node, "gae_lambda", out.gae_lambda);
  read(node, "clip", out.clip);
  read(node, "epochs", out.epochs);
  read(node, "minibatch", out.minibatch);
  read(node, "learning_rate", out.learning_rate);
  read(node, "entropy_coef", out.entropy_coef);
  read(node, "value_coef", out.value_coef);
  read(node, "kl_threshold", out.kl_threshold);
  read(node, "num_envs", out.num_envs);
  read(node, "rollout_steps", out.rollout_steps);
  read(node, "iterations", out.iterations);
  if (node["network"]) {
    const auto n = node["network"];
    read(n, "latent", out.network.latent);
    if (n["trunk"]) out.network.trunk = n["trunk"].as<std::vector<int>>();
    read(n, "init_stddev", out.network.init_stddev);
  }
  if (!(out.gamma >= 0.0 && out.gamma < 1.0) || out.gae_lambda < 0.0 ||
      out.gae_lambda > 1.0 || out.clip <= 0.0) {
    throw std::runtime_error("ppo: invalid gamma/lambda/clip");
  }
}

void load_eval(const YAML::Node& node, EvalConfig& out) {
  read(node, "episodes", out.episodes);
  read(node, "every", out.every);
}

AppConfig from_yaml(const YAML::Node& root) {
  AppConfig cfg;
  cfg.track = Track::fixture("splits_single");
  if (root["dynamics"]) load_dynamics(root["dynamics"], cfg.dynamics);
  if (root["track"]) load_track_node(root["track"], cfg.track);
  if (root["reward"]) load_reward(root["reward"], cfg.reward_weights, cfg.reward_mode);
  if (root["env"]) load_env(root["env"], cfg.episode);
  if (root["curriculum"]) load_curriculum(root["curriculum"], cfg.curriculum);
  if (root["ppo"]) load_ppo(root["ppo"], cfg.ppo);
  if (root["eval"]) load_eval(root["eval"], cfg.eval);
  return cfg;
}

YAML::Node vec3_node(const Vec3& v) {
  YAML::Node n;
  n.SetStyle(YAML::EmitterStyle::Flow);
  n.push_back(v.x());
  n.push_back(v.y());
  n.push_back(v.z());
  return n;
}

YAML::Node range_node(double lo, double hi) {
  YAML::Node n;
  n.SetStyle(YAML::EmitterStyle::Flow);
  n.push_back(lo);
  n.push_back(hi);
  return n;
}

}  // namespace

AppConfig AppConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

AppConfig AppConfig::from_string(const std::string& yaml) {
  return from_yaml(YAML::Load(yaml));
}

std::string AppConfig::to_string() const {
  YAML::Node root;

  YAML::Node dyn;
  dyn["substep_dt"] = dynamics.substep_dt;
  dyn["substeps"] = dynamics.substeps;
  dyn["tau_rate"] = dynamics.tau_rate;
  dyn["drag"] = vec3_node(dynamics.drag.coeffs);
  const auto& r = dynamics.randomization;
  dyn["drag_jitter"] = r.drag_jitter;
  dyn["command_jitter"] = r.command_jitter;
  dyn["t0_range"] = range_node(r.t0_min, r.t0_max);
  dyn["t_latency"] = r.t_latency;
  dyn["randomize_drag"] = r.randomize_drag;
  dyn["randomize_command"] = r.randomize_command;
  dyn["randomize_latency"] = r.randomize_latency;
  root["dynamics"] = dyn;

  YAML::Node trk;
  for (const auto& w : track.waypoints) {
    YAML::Node entry;
    entry["position"] = vec3_node(w.position);
    YAML::Node q;
    q.SetStyle(YAML::EmitterStyle::Flow);
    q.push_back(w.orientation.w());
    q.push_back(w.orientation.x());
    q.push_back(w.orientation.y());
    q.push_back(w.orientation.z());
    entry["quat_wxyz"] = q;
    entry["osc_amplitude"] = w.osc_amplitude;
    entry["osc_speed"] = w.osc_speed;
    entry["phase"] = w.phase;
    trk["waypoints"].push_back(entry);
  }
  trk["pass_threshold"] = track.pass_threshold;
  trk["bbox"] = vec3_node(track.bbox_half_extents);
  root["track"] = trk;

  YAML::Node rew;
  rew["mode"] = reward_mode == RewardMode::kShaped ? "rs" : "sp";
  rew["w_aer"] = reward_weights.w_aer;
  rew["w_act"] = reward_weights.w_act;
  rew["w_act_change"] = reward_weights.w_act_change;
  rew["w_yaw"] = reward_weights.w_yaw;
  rew["a"] = reward_weights.a;
  rew["b"] = reward_weights.b;
  rew["c"] = reward_weights.c;
  rew["w_sp"] = reward_weights.w_sp;
  rew["w_sq"] = reward_weights.w_sq;
  root["reward"] = rew;

  YAML::Node env;
  env["max_steps"] = episode.max_steps;
  env["policy_rate"] = episode.policy_rate;
  YAML::Node start;
  start["center"] = vec3_node(episode.start.center);
  start["half_extent"] = episode.start.half_extent;
  start["yaw_range"] = range_node(episode.start.yaw_min, episode.start.yaw_max);
  start["speed_range"] =
      range_node(episode.start.speed_min, episode.start.speed_max);
  env["start"] = start;
  if (episode.gate_speed_range) {
    env["gate_speed_range"] = range_node(episode.gate_speed_range->first,
                                         episode.gate_speed_range->second);
  }
  root["env"] = env;

  YAML::Node cur;
  cur["rho1"] = curriculum.rho1;
  cur["rho2"] = curriculum.rho2;
  cur["expansion_steps"] = curriculum.expansion_steps;
  cur["expansion_dt"] = curriculum.expansion_dt;
  cur["jerk_max"] = curriculum.jerk_max;
  cur["goal_speed_range"] =
      range_node(curriculum.goal_speed_min, curriculum.goal_speed_max);
  cur["goal_cone_half_angle"] = curriculum.goal_cone_half_angle;
  cur["thrust_range"] = range_node(curriculum.thrust_min, curriculum.thrust_max);
  cur["goals_per_gate"] = curriculum.goals_per_gate;
  cur["band"] = range_node(curriculum.band_lo, curriculum.band_hi);
  cur["min_band_count"] = curriculum.min_band_count;
  cur["seeds_per_iteration"] = curriculum.seeds_per_iteration;
  cur["visited_stride"] = curriculum.visited_stride;
  cur["buffer_capacity"] = curriculum.buffer_capacity;
  root["curriculum"] = cur;

  YAML::Node ppo_node;
  ppo_node["gamma"] = ppo.gamma;
  ppo_node["gae_lambda"] = ppo.gae_lambda;
  ppo_node["clip"] = ppo.clip;
  ppo_node["epochs"] = ppo.epochs;
  ppo_node["minibatch"] = ppo.minibatch;
  ppo_node["learning_rate"] = ppo.learning_rate;
  ppo_node["entropy_coef"] = ppo.entropy_coef;
  ppo_node["value_coef"] = ppo.value_coef;
  ppo_node["kl_threshold"] = ppo.kl_threshold;
  ppo_node["num_envs"] = ppo.num_envs;
  ppo_node["rollout_steps"] = ppo.rollout_steps;
  ppo_node["iterations"] = ppo.iterations;
  YAML::Node net;
  net["latent"] = ppo.network.latent;
  YAML::Node trunk;
  trunk.SetStyle(YAML::EmitterStyle::Flow);
  for (int t : ppo.network.trunk) trunk.push_back(t);
  net["trunk"] = trunk;
  net["init_stddev"] = ppo.network.init_stddev;
  ppo_node["network"] = net;
  root["ppo"] = ppo_node;

  YAML::Node ev;
  ev["episodes"] = eval.episodes;
  ev["every"] = eval.every;
  root["eval"] = ev;

  YAML::Emitter emitter;
  emitter.SetDoublePrecision(17);
  emitter << root;
  return std::string(emitter.c_str()) + "\n";
}

Track load_track(const std::string& id) {
  if (Track::is_fixture(id)) return Track::fixture(id);
  std::ifstream in(id);
  if (!in) throw std::runtime_error("cannot open track file: " + id);
  std::stringstream ss;
  ss << in.rdbuf();
  const YAML::Node root = YAML::Load(ss.str());
  Track track;
  if (root["track"]) {
    load_track_node(root["track"], track);
  } else {
    load_track_node(root, track);
  }
  return track;
}

}  // namespace aerobat
