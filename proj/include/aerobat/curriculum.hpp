#pragma once

#include <deque>
#include <iosfwd>
#include <vector>

#include "aerobat/config.hpp"
#include "aerobat/environment.hpp"
#include "aerobat/track.hpp"
#include "aerobat/types.hpp"

namespace aerobat {

// Differential-flatness coordinates from which the attitude is recoverable
// through the thrust direction.
struct FlatState {
  Vec3 p{Vec3::Zero()};
  Vec3 v{Vec3::Zero()};
  Vec3 a{Vec3::Zero()};
};

// Pose-plus-velocity target at a waypoint.
struct GoalState {
  Vec3 position{Vec3::Zero()};
  Quat orientation{1.0, 0.0, 0.0, 0.0};
  Vec3 velocity{Vec3::Zero()};
};

struct ExpansionParams {
  int steps = 200;       // K
  double dt = 0.01;      // s
  double jerk_max = 60.0;  // m/s^3 per axis
  double min_thrust_accel = 0.1;  // lower bound on ||a - g||
  int max_retries = 8;
};

// A curriculum reset state plus the thrust that keeps its flat acceleration
// consistent, used to prefill the latency buffer on reset.
struct ResetState {
  QuadState state;
  double thrust = kGravity;
};

// Start sampler plus the adaptive and replay reset pools with their biased
// sampling probabilities.
struct ResetSets {
  StartRegion start;
  std::vector<ResetState> current;
  std::deque<ResetState> buffer;
  std::size_t buffer_capacity = 50000;
  double rho1 = 0.5;
  double rho2 = 0.3;

  // Appends into the replay buffer, evicting oldest entries past capacity.
  void absorb(const std::vector<ResetState>& states);

  void save(std::ostream& out) const;
  static ResetSets load(std::istream& in);
};

// One goal per draw at each waypoint pose, with speed uniform in
// [speed_min, speed_max] and direction inside a cone around the waypoint's
// crossing axis.
std::vector<GoalState> extract_goals(const Track& track, double speed_min,
                                     double speed_max, double cone_half_angle,
                                     int per_gate, Rng& rng);

// Flat coordinates whose acceleration realizes the goal attitude under the
// given thrust: a = q (x) (0,0,thrust) + g.
FlatState state_to_flat(const GoalState& goal, double thrust_accel);

// Backward expansion under randomly drawn jerk, exact inverse of cubic
// forward integration. May return fewer than `steps` entries when the
// thrust-degeneracy guard cannot be satisfied by resampling.
std::vector<FlatState> expand_flats(const FlatState& flat,
                                    const ExpansionParams& params, Rng& rng);

// Attitude recovery: body Z along a - g, heading along the velocity
// projection (world-axis fallback when degenerate), zero body rates.
QuadState flat_to_state(const FlatState& flat);

// Thrust magnitude consistent with a flat acceleration.
inline double flat_thrust(const FlatState& flat) {
  return (flat.a - kGravityVec).norm();
}

// Indices of the entries whose value falls in the given percentile band,
// widened symmetrically until at least `min_count` entries qualify.
std::vector<std::size_t> select_percentile_band(const Eigen::VectorXd& values,
                                                double lo_pct, double hi_pct,
                                                std::size_t min_count);

// Three-way biased draw: rho1 -> current set, rho2 -> replay buffer,
// remainder -> start sampler. Empty pools fall through to the start sampler.
ResetState sample_reset(const ResetSets& sets, Rng& rng);

}  // namespace aerobat
