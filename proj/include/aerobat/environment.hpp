#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aerobat/config.hpp"
#include "aerobat/dynamics.hpp"
#include "aerobat/reward.hpp"
#include "aerobat/track.hpp"
#include "aerobat/types.hpp"

namespace aerobat {

inline constexpr int kObservationDim = 28;
using Observation = Eigen::Matrix<double, kObservationDim, 1>;

// Affine map between normalized actions in [-1,1]^4 and physical commands.
struct ActionScaler {
  Vec4 mean{10.0, 0.0, 0.0, 0.0};
  Vec4 amplitude{10.0, kRollPitchRateMax, kRollPitchRateMax, kYawRateMax};

  Command scale(const Vec4& normalized) const {
    const Vec4 physical = mean + amplitude.cwiseProduct(normalized);
    return Command(physical[0], physical.tail<3>());
  }
  Vec4 unscale(const Command& cmd) const {
    return (cmd.as_vec() - mean).cwiseQuotient(amplitude);
  }
  Vec4 inv_amplitude() const { return amplitude.cwiseInverse(); }
};

enum class Termination { kNone, kStepCap, kOutOfBounds, kTrackComplete };
const char* to_string(Termination t);

struct GatePass {
  int gate = 0;
  double t = 0.0;
  double p_error = 0.0;      // ||p_A|| at the pass step, m
  double theta_error = 0.0;  // body-Z misalignment at the pass step, rad
  double y_cross = 0.0;      // plane-crossing point, waypoint frame
  double z_cross = 0.0;
};

struct EpisodeInfo {
  int steps = 0;
  double flight_time = 0.0;  // time of the final pass, else episode length
  Termination termination = Termination::kNone;
  std::vector<GatePass> passes;
  std::vector<bool> completed;
  int action_warnings = 0;

  bool success() const {
    return termination == Termination::kTrackComplete;
  }
  std::string to_json() const;
  static EpisodeInfo from_json(const std::string& line);
};

struct StepResult {
  Observation obs;
  RewardBreakdown reward;
  bool done = false;
};

// Uniform draw from the start region: position in a cube, hover attitude with
// random yaw, random-direction velocity, zero body rates.
QuadState sample_start_state(const StartRegion& region, Rng& rng);

// First waypoint whose crossing plane is still ahead of the state (local
// x <= 0) at t = 0, else the last waypoint.
std::size_t initial_cursor_index(const QuadState& s, const Track& track);

// Whether a reset at this state lands inside the bounding box of its initial
// waypoint.
bool reset_in_bounds(const QuadState& s, const Track& track);

// Stricter acceptance for curriculum reset candidates: in bounds and still
// ahead of the initial waypoint's crossing plane, so a pass remains possible.
bool valid_reset_candidate(const QuadState& s, const Track& track);

// Assembles the 28-entry observation: relative position and attitude of the
// next two gates in the body frame, then world position, attitude, body-frame
// velocity and the previous normalized action. Quaternions are written with
// non-negative w. The final gate duplicates itself as "gate 2".
Observation observe(const QuadState& state, const Track& track,
                    std::size_t cursor_index, const Vec4& u_last, double t);

class Environment {
 public:
  Environment(const AppConfig& cfg, std::uint64_t seed);

  // Draws the initial state from the start region.
  Observation reset();
  // Resets to a given state. The latency buffer is prefilled with
  // `held_command` (hover by default). Rejects non-finite, non-normalized or
  // out-of-bounds states.
  Observation reset_from(const QuadState& s0,
                         const Command& held_command = Command::hover());

  StepResult step(const Vec4& normalized_action);

  bool done() const { return done_; }
  double time() const { return time_; }
  const QuadState& state() const { return state_; }
  const EpisodeInfo& info() const { return info_; }
  const Track& track() const { return track_; }
  const ProgressCursor& cursor() const { return cursor_; }
  const ActionScaler& scaler() const { return scaler_; }
  const Vec4& last_action() const { return u_last_; }
  const Command& last_command() const { return last_cmd_; }
  const AppConfig& config() const { return cfg_; }
  Rng& rng() { return rng_; }

  Observation observation() const {
    return observe(state_, track_, cursor_.index, u_last_, time_);
  }

 private:
  WaypointPose current_pose() const;
  void init_shaping_errors();

  AppConfig cfg_;
  Track base_track_;
  Track track_;
  ActionScaler scaler_;
  Rng rng_;

  QuadState state_;
  ProgressCursor cursor_;
  EpisodeInfo info_;
  LatencyBuffer latency_;
  DragModel episode_drag_;
  double t0_ = 0.0;
  double time_ = 0.0;
  double policy_dt_ = 0.01;
  Vec4 u_last_{Vec4::Zero()};
  Command last_cmd_{Command::hover()};
  double p_err_last_ = 0.0;
  double theta_err_last_ = 0.0;
  bool done_ = true;
};

}  // namespace aerobat
