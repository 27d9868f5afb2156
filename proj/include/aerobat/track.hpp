#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aerobat/types.hpp"

namespace aerobat {

// A gate pose: position and full orientation. Local +X is the crossing
// direction, local Z the desired body-Z at the pass.
struct Waypoint {
  Vec3 position{Vec3::Zero()};
  Quat orientation{1.0, 0.0, 0.0, 0.0};
  double osc_amplitude = 0.0;  // m, along local Y
  double osc_speed = 0.0;      // m/s
  double phase = 0.0;          // rad
};

struct WaypointPose {
  Vec3 position;
  Quat orientation;
};

struct Track {
  std::vector<Waypoint> waypoints;
  double pass_threshold = 0.5;          // L, m
  Vec3 bbox_half_extents{8.0, 8.0, 8.0};

  // Bundled maneuver fixtures: "powerloop", "barrelroll", "splits",
  // "splits_single".
  static Track fixture(const std::string& name);
  static bool is_fixture(const std::string& name);

  // Copy with every waypoint's oscillation speed replaced.
  Track with_gate_speed(double speed) const;
};

// Index of the gate currently targeted plus the previous step's position in
// that gate's frame.
struct ProgressCursor {
  std::size_t index = 0;
  Vec3 last_local{Vec3::Zero()};
  bool complete = false;
};

// Pose at time t: the center travels a triangle wave along the local Y axis
// (constant speed with reversals), orientation fixed.
WaypointPose waypoint_pose_at(const Waypoint& w, double t);

// Triangle-wave displacement along local Y at time t.
double oscillation_offset(const Waypoint& w, double t);

// Drone world position expressed in the waypoint frame.
Vec3 to_local(const Vec3& p_world, const WaypointPose& pose);

// Point where the segment prev->cur pierces the local Y-O-Z plane. Requires
// prev.x <= 0 < cur.x.
Vec3 crossing_point(const Vec3& local_prev, const Vec3& local_cur);

// True iff the local x coordinate crossed from <=0 to >0 this step and the
// interpolated crossing point lies within the pass threshold in |y| and |z|.
bool check_completion(const Vec3& local_prev, const Vec3& local_cur,
                      double threshold);

// True iff any |component| exceeds its half-extent.
bool out_of_bounds(const Vec3& local, const Vec3& half_extents);

}  // namespace aerobat
