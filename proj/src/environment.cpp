#include "aerobat/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace aerobat {

namespace {

void write_quat(Observation& obs, int offset, const Quat& q) {
  const Quat c = canonical(q);
  obs[offset] = c.w();
  obs[offset + 1] = c.x();
  obs[offset + 2] = c.y();
  obs[offset + 3] = c.z();
}

}  // namespace

const char* to_string(Termination t) {
  switch (t) {
    case Termination::kNone: return "none";
    case Termination::kStepCap: return "step_cap";
    case Termination::kOutOfBounds: return "out_of_bounds";
    case Termination::kTrackComplete: return "track_complete";
  }
  return "unknown";
}

std::string EpisodeInfo::to_json() const {
  nlohmann::json j;
  j["steps"] = steps;
  j["flight_time"] = flight_time;
  j["termination"] = aerobat::to_string(termination);
  j["completed"] = completed;
  j["action_warnings"] = action_warnings;
  auto& passes_json = j["passes"] = nlohmann::json::array();
  for (const auto& p : passes) {
    passes_json.push_back({{"gate", p.gate},
                           {"t", p.t},
                           {"p_error", p.p_error},
                           {"theta_error", p.theta_error},
                           {"y_cross", p.y_cross},
                           {"z_cross", p.z_cross}});
  }
  return j.dump();
}

EpisodeInfo EpisodeInfo::from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  EpisodeInfo info;
  info.steps = j.at("steps").get<int>();
  info.flight_time = j.at("flight_time").get<double>();
  const auto term = j.at("termination").get<std::string>();
  if (term == "none") info.termination = Termination::kNone;
  else if (term == "step_cap") info.termination = Termination::kStepCap;
  else if (term == "out_of_bounds") info.termination = Termination::kOutOfBounds;
  else if (term == "track_complete") info.termination = Termination::kTrackComplete;
  else throw std::runtime_error("unknown termination: " + term);
  info.completed = j.at("completed").get<std::vector<bool>>();
  info.action_warnings = j.at("action_warnings").get<int>();
  for (const auto& p : j.at("passes")) {
    info.passes.push_back({p.at("gate").get<int>(), p.at("t").get<double>(),
                           p.at("p_error").get<double>(),
                           p.at("theta_error").get<double>(),
                           p.at("y_cross").get<double>(),
                           p.at("z_cross").get<double>()});
  }
  return info;
}

QuadState sample_start_state(const StartRegion& region, Rng& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> yaw_draw(region.yaw_min,
                                                  region.yaw_max);
  std::uniform_real_distribution<double> speed_draw(region.speed_min,
                                                    region.speed_max);
  std::uniform_real_distribution<double> azimuth(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> cos_polar(-1.0, 1.0);

  QuadState s;
  s.p = region.center +
        region.half_extent * Vec3(unit(rng), unit(rng), unit(rng));
  s.q = Quat(Eigen::AngleAxisd(yaw_draw(rng), Vec3::UnitZ()));
  const double speed = speed_draw(rng);
  const double phi = azimuth(rng);
  const double cp = cos_polar(rng);
  const double sp = std::sqrt(std::max(0.0, 1.0 - cp * cp));
  s.v = speed * Vec3(sp * std::cos(phi), sp * std::sin(phi), cp);
  s.omega.setZero();
  return s;
}

std::size_t initial_cursor_index(const QuadState& s, const Track& track) {
  for (std::size_t i = 0; i < track.waypoints.size(); ++i) {
    const WaypointPose pose = waypoint_pose_at(track.waypoints[i], 0.0);
    if (to_local(s.p, pose).x() <= 0.0) return i;
  }
  return track.waypoints.size() - 1;
}

bool reset_in_bounds(const QuadState& s, const Track& track) {
  const std::size_t idx = initial_cursor_index(s, track);
  const WaypointPose pose = waypoint_pose_at(track.waypoints[idx], 0.0);
  return !out_of_bounds(to_local(s.p, pose), track.bbox_half_extents);
}

bool valid_reset_candidate(const QuadState& s, const Track& track) {
  const std::size_t idx = initial_cursor_index(s, track);
  const WaypointPose pose = waypoint_pose_at(track.waypoints[idx], 0.0);
  const Vec3 local = to_local(s.p, pose);
  return local.x() <= 0.0 &&
         !out_of_bounds(local, track.bbox_half_extents);
}

Observation observe(const QuadState& state, const Track& track,
                    std::size_t cursor_index, const Vec4& u_last, double t) {
  const std::size_t last = track.waypoints.size() - 1;
  const std::size_t idx1 = std::min(cursor_index, last);
  const std::size_t idx2 = std::min(idx1 + 1, last);
  const WaypointPose pose1 = waypoint_pose_at(track.waypoints[idx1], t);
  const WaypointPose pose2 = waypoint_pose_at(track.waypoints[idx2], t);

  const Quat q_inv = state.q.conjugate();
  Observation obs;
  obs.segment<3>(0) = q_inv * (pose1.position - state.p);
  write_quat(obs, 3, q_inv * pose1.orientation);
  obs.segment<3>(7) = q_inv * (pose2.position - state.p);
  write_quat(obs, 10, q_inv * pose2.orientation);
  obs.segment<3>(14) = state.p;
  write_quat(obs, 17, state.q);
  obs.segment<3>(21) = q_inv * state.v;
  obs.segment<4>(24) = u_last;
  return obs;
}

Environment::Environment(const AppConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), base_track_(cfg.track), track_(cfg.track), rng_(seed) {
  policy_dt_ = 1.0 / cfg_.episode.policy_rate;
  const double span =
      cfg_.dynamics.substeps * cfg_.dynamics.substep_dt;
  if (std::abs(span - policy_dt_) > 1e-9) {
    throw std::invalid_argument(
        "substeps * substep_dt must equal the policy period");
  }
  if (base_track_.waypoints.empty()) {
    throw std::invalid_argument("environment needs at least one waypoint");
  }
}

WaypointPose Environment::current_pose() const {
  return waypoint_pose_at(track_.waypoints[cursor_.index], time_);
}

void Environment::init_shaping_errors() {
  const WaypointPose pose = current_pose();
  p_err_last_ = to_local(state_.p, pose).norm();
  theta_err_last_ = attitude_error(pose.orientation, state_.q);
}

Observation Environment::reset() {
  return reset_from(sample_start_state(cfg_.episode.start, rng_));
}

Observation Environment::reset_from(const QuadState& s0,
                                    const Command& held_command) {
  if (!s0.finite()) {
    throw std::invalid_argument("reset state has non-finite components");
  }
  if (std::abs(s0.q.norm() - 1.0) > 1e-6) {
    throw std::invalid_argument("reset state quaternion is not normalized");
  }

  // Per-episode randomization draws.
  const auto& rand = cfg_.dynamics.randomization;
  episode_drag_ = sample_drag(cfg_.dynamics.drag, rand, rng_);
  t0_ = sample_latency_offset(rand, rng_);
  track_ = base_track_;
  if (cfg_.episode.gate_speed_range) {
    std::uniform_real_distribution<double> speed_draw(
        cfg_.episode.gate_speed_range->first,
        cfg_.episode.gate_speed_range->second);
    for (auto& w : track_.waypoints) w.osc_speed = speed_draw(rng_);
  }

  time_ = 0.0;
  state_ = s0;
  state_.q.normalize();

  // Target the first waypoint whose crossing plane is still ahead.
  cursor_ = ProgressCursor{};
  cursor_.index = initial_cursor_index(state_, track_);
  cursor_.last_local = to_local(state_.p, current_pose());

  if (out_of_bounds(cursor_.last_local, track_.bbox_half_extents)) {
    throw std::invalid_argument("reset state is out of bounds");
  }

  info_ = EpisodeInfo{};
  info_.completed.assign(track_.waypoints.size(), false);

  latency_.prefill(0.0, rand.t0_max + rand.t_latency + 2.0 * policy_dt_,
                   policy_dt_, held_command);
  last_cmd_ = held_command;
  u_last_ = scaler_.unscale(held_command);
  init_shaping_errors();
  done_ = false;
  return observation();
}

StepResult Environment::step(const Vec4& action_in) {
  if (done_) {
    throw std::logic_error("step called on a finished episode");
  }

  Vec4 action = action_in;
  for (int i = 0; i < 4; ++i) {
    if (std::abs(action[i]) > 1.001) ++info_.action_warnings;
    action[i] = std::clamp(action[i], -1.0, 1.0);
  }
  const Command cmd = scaler_.scale(action);

  const auto& rand = cfg_.dynamics.randomization;
  latency_.push(time_, cmd);
  latency_.prune(rand.t0_max + rand.t_latency + 2.0 * policy_dt_);

  const QuadState prev_state = state_;
  for (int k = 0; k < cfg_.dynamics.substeps; ++k) {
    const double t_sub = time_ + k * cfg_.dynamics.substep_dt;
    const Command effective =
        effective_command(latency_, t_sub, t0_, rand.t_latency);
    state_ = aerobat::step(state_, effective, cfg_.dynamics.substep_dt,
                           episode_drag_, rand, cfg_.dynamics.tau_rate, rng_);
  }
  time_ += policy_dt_;
  ++info_.steps;

  // Gate progress against the pose at the current step's time.
  const WaypointPose pose = current_pose();
  const Vec3 local_now = to_local(state_.p, pose);
  const Vec3 local_prev = to_local(prev_state.p, pose);
  cursor_.last_local = local_prev;
  const bool crossed =
      check_completion(local_prev, local_now, track_.pass_threshold);

  const double r_aer =
      aerobatic_reward(local_now, state_.q, pose, crossed, cfg_.reward_weights);
  const auto [r_act, r_act_change] =
      smoothness_rewards(cmd, last_cmd_, scaler_.inv_amplitude());
  const Vec3 v_body = state_.q.conjugate() * state_.v;
  const double r_yaw = yaw_reward(v_body);

  std::optional<double> r_rs;
  const double p_err = local_now.norm();
  const double theta_err = attitude_error(pose.orientation, state_.q);
  if (cfg_.reward_mode == RewardMode::kShaped) {
    r_rs = shaping_reward(p_err_last_, p_err, theta_err_last_, theta_err,
                          cfg_.reward_weights.w_sp, cfg_.reward_weights.w_sq);
  }
  p_err_last_ = p_err;
  theta_err_last_ = theta_err;

  const RewardBreakdown reward =
      total_reward(r_aer, r_act, r_act_change, r_yaw, r_rs,
                   cfg_.reward_weights, cfg_.reward_mode);

  if (crossed) {
    const Vec3 cross = crossing_point(local_prev, local_now);
    info_.passes.push_back({static_cast<int>(cursor_.index), time_, p_err,
                            theta_err, cross.y(), cross.z()});
    info_.completed[cursor_.index] = true;
    if (cursor_.index + 1 == track_.waypoints.size()) {
      cursor_.complete = true;
      info_.flight_time = time_;
    } else {
      ++cursor_.index;
      init_shaping_errors();
    }
  }

  if (cursor_.complete) {
    done_ = true;
    info_.termination = Termination::kTrackComplete;
  } else if (out_of_bounds(to_local(state_.p, current_pose()),
                           track_.bbox_half_extents)) {
    done_ = true;
    info_.termination = Termination::kOutOfBounds;
    info_.flight_time = time_;
  } else if (info_.steps >= cfg_.episode.max_steps) {
    done_ = true;
    info_.termination = Termination::kStepCap;
    info_.flight_time = time_;
  }

  last_cmd_ = cmd;
  u_last_ = action;
  return {observation(), reward, done_};
}

}  // namespace aerobat
