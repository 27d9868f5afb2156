#include "aerobat/track.hpp"

#include <cmath>
#include <stdexcept>

namespace aerobat {

namespace {

Quat axis_angle(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

Waypoint gate(const Vec3& position, const Quat& orientation,
              double amplitude = 1.5, double speed = 0.5) {
  Waypoint w;
  w.position = position;
  w.orientation = orientation.normalized();
  w.osc_amplitude = amplitude;
  w.osc_speed = speed;
  return w;
}

}  // namespace

double oscillation_offset(const Waypoint& w, double t) {
  if (w.osc_amplitude <= 0.0 || w.osc_speed <= 0.0) return 0.0;
  const double period = 4.0 * w.osc_amplitude / w.osc_speed;
  double tau = std::fmod(t + w.phase / (2.0 * M_PI) * period, period);
  if (tau < 0.0) tau += period;
  const double quarter = 0.25 * period;
  if (tau < quarter) return w.osc_speed * tau;
  if (tau < 3.0 * quarter) return w.osc_amplitude - w.osc_speed * (tau - quarter);
  return -w.osc_amplitude + w.osc_speed * (tau - 3.0 * quarter);
}

WaypointPose waypoint_pose_at(const Waypoint& w, double t) {
  const Vec3 local_y = w.orientation * Vec3::UnitY();
  return {w.position + oscillation_offset(w, t) * local_y, w.orientation};
}

Vec3 to_local(const Vec3& p_world, const WaypointPose& pose) {
  return pose.orientation.conjugate() * (p_world - pose.position);
}

Vec3 crossing_point(const Vec3& local_prev, const Vec3& local_cur) {
  const double denom = local_cur.x() - local_prev.x();
  if (denom <= 0.0) {
    throw std::invalid_argument("crossing_point: segment does not cross +x");
  }
  const double t = -local_prev.x() / denom;
  return local_prev + t * (local_cur - local_prev);
}

bool check_completion(const Vec3& local_prev, const Vec3& local_cur,
                      double threshold) {
  if (!(local_prev.x() <= 0.0 && local_cur.x() > 0.0)) return false;
  const Vec3 cross = crossing_point(local_prev, local_cur);
  return std::abs(cross.y()) <= threshold && std::abs(cross.z()) <= threshold;
}

bool out_of_bounds(const Vec3& local, const Vec3& half_extents) {
  return std::abs(local.x()) > half_extents.x() ||
         std::abs(local.y()) > half_extents.y() ||
         std::abs(local.z()) > half_extents.z();
}

Track Track::with_gate_speed(double speed) const {
  Track out = *this;
  for (auto& w : out.waypoints) w.osc_speed = speed;
  return out;
}

bool Track::is_fixture(const std::string& name) {
  return name == "powerloop" || name == "barrelroll" || name == "splits" ||
         name == "splits_single";
}

Track Track::fixture(const std::string& name) {
  const Vec3 x = Vec3::UnitX();
  const Vec3 y = Vec3::UnitY();
  const Vec3 z = Vec3::UnitZ();
  Track t;
  if (name == "splits_single") {
    // One inverted gate ahead of the start region: half-roll entry of a
    // Split-S.
    t.waypoints = {gate({4.0, 0.0, 3.0}, axis_angle(x, M_PI))};
  } else if (name == "splits") {
    // Level entry, inverted pass, descending half loop exiting backward.
    t.waypoints = {
        gate({3.0, 0.0, 4.0}, Quat::Identity()),
        gate({7.0, 0.0, 4.0}, axis_angle(x, M_PI)),
        gate({4.0, 0.0, 1.5}, axis_angle(z, M_PI)),
    };
  } else if (name == "powerloop") {
    // Level entry, vertical climb, inverted top, vertical dive.
    t.waypoints = {
        gate({3.0, 0.0, 2.0}, Quat::Identity()),
        gate({7.0, 0.0, 4.0}, axis_angle(y, -M_PI_2)),
        gate({5.0, 0.0, 6.0}, axis_angle(y, M_PI)),
        gate({3.0, 0.0, 4.0}, axis_angle(y, M_PI_2)),
    };
  } else if (name == "barrelroll") {
    // Quarter-roll increments along a straight course.
    t.waypoints = {
        gate({3.0, 0.0, 3.0}, axis_angle(x, M_PI_2)),
        gate({6.0, 0.0, 4.0}, axis_angle(x, M_PI)),
        gate({9.0, 0.0, 3.0}, axis_angle(x, 3.0 * M_PI_2)),
        gate({12.0, 0.0, 3.0}, Quat::Identity()),
    };
  } else {
    throw std::invalid_argument("unknown track fixture: " + name);
  }
  return t;
}

}  // namespace aerobat
