#include <doctest.h>

#include <cmath>

#include "aerobat/track.hpp"

using namespace aerobat;

namespace {

Waypoint oscillating_gate(double amplitude, double speed) {
  Waypoint w;
  w.position = Vec3(5, 0, 3);
  w.osc_amplitude = amplitude;
  w.osc_speed = speed;
  return w;
}

// Marches the oscillation forward at constant speed with reversals, as an
// independent route to the displacement.
double marched_offset(double amplitude, double speed, double t) {
  double y = 0.0, dir = 1.0;
  const double dt = 1e-5;
  for (double s = 0.0; s < t; s += dt) {
    y += dir * speed * dt;
    if (y > amplitude) {
      y = amplitude;
      dir = -1.0;
    } else if (y < -amplitude) {
      y = -amplitude;
      dir = 1.0;
    }
  }
  return y;
}

}  // namespace

TEST_CASE("static gate pose is constant") {
  const Waypoint w = oscillating_gate(0.0, 1.0);
  for (double t : {0.0, 0.7, 13.2}) {
    const WaypointPose pose = waypoint_pose_at(w, t);
    CHECK(pose.position == w.position);
  }
}

TEST_CASE("triangle wave turning points") {
  const Waypoint w = oscillating_gate(1.5, 1.0);
  CHECK(oscillation_offset(w, 1.5) == doctest::Approx(1.5));
  CHECK(oscillation_offset(w, 4.5) == doctest::Approx(-1.5));
  CHECK(oscillation_offset(w, 0.0) == doctest::Approx(0.0));
  CHECK(oscillation_offset(w, 6.0) == doctest::Approx(0.0));
}

TEST_CASE("triangle wave matches marched oracle") {
  const Waypoint w = oscillating_gate(1.5, 0.8);
  for (double t : {0.3, 1.9, 3.75, 5.5, 8.25, 11.0}) {
    CHECK(oscillation_offset(w, t) ==
          doctest::Approx(marched_offset(1.5, 0.8, t)).epsilon(1e-3));
  }
}

TEST_CASE("oscillation is periodic and continuous") {
  Waypoint w = oscillating_gate(1.2, 0.9);
  const double period = 4.0 * w.osc_amplitude / w.osc_speed;
  for (double t : {0.1, 1.3, 2.9, 4.4}) {
    CHECK(oscillation_offset(w, t) ==
          doctest::Approx(oscillation_offset(w, t + period)).epsilon(1e-12));
  }
  const double dt = 1e-3;
  for (double t = 0.0; t < 1.5 * period; t += dt) {
    const double jump =
        std::abs(oscillation_offset(w, t + dt) - oscillation_offset(w, t));
    CHECK(jump <= w.osc_speed * dt + 1e-12);
  }
}

TEST_CASE("oscillation displaces along the local Y axis") {
  Waypoint w = oscillating_gate(1.0, 1.0);
  w.orientation = Quat(Eigen::AngleAxisd(M_PI_2, Vec3::UnitZ()));
  const WaypointPose pose = waypoint_pose_at(w, 0.5);
  // Local Y of a 90-degree-yawed gate points along world -X.
  CHECK((pose.position - (w.position + Vec3(-0.5, 0, 0))).norm() < 1e-12);
}

TEST_CASE("to_local identity and coincident cases") {
  WaypointPose pose{Vec3(1, 2, 3), Quat::Identity()};
  CHECK(to_local(Vec3(1, 2, 3), pose).norm() == 0.0);
  CHECK((to_local(Vec3(2, 4, 6), pose) - Vec3(1, 2, 3)).norm() < 1e-12);
}

TEST_CASE("to_local matches transpose oracle") {
  Rng rng(3);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    Quat q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    const WaypointPose pose{Vec3(n(rng), n(rng), n(rng)), q};
    const Vec3 p(n(rng), n(rng), n(rng));
    const Vec3 expected =
        q.toRotationMatrix().transpose() * (p - pose.position);
    CHECK((to_local(p, pose) - expected).cwiseAbs().maxCoeff() < 1e-9);
  }

  // 90 degrees about z: world +X becomes local -Y.
  const WaypointPose yawed{Vec3::Zero(),
                           Quat(Eigen::AngleAxisd(M_PI_2, Vec3::UnitZ()))};
  CHECK((to_local(Vec3(1, 0, 0), yawed) - Vec3(0, -1, 0)).norm() < 1e-12);
}

TEST_CASE("to_local round trip recovers the world position") {
  Rng rng(5);
  std::normal_distribution<double> n(0.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    Quat q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    const WaypointPose pose{Vec3(n(rng), n(rng), n(rng)), q};
    const Vec3 p(n(rng), n(rng), n(rng));
    const Vec3 back = pose.orientation * to_local(p, pose) + pose.position;
    CHECK((back - p).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("check_completion basic crossings") {
  CHECK(check_completion(Vec3(-0.1, 0, 0), Vec3(0.1, 0, 0), 0.5));
  CHECK_FALSE(check_completion(Vec3(0.1, 0, 0), Vec3(0.2, 0, 0), 0.5));
  CHECK_FALSE(check_completion(Vec3(-0.2, 0, 0), Vec3(-0.1, 0, 0), 0.5));
  // Wide miss in y at the crossing point.
  CHECK_FALSE(check_completion(Vec3(-0.1, 2.0, 0), Vec3(0.1, 2.0, 0), 0.5));
}

TEST_CASE("check_completion agrees with dense interpolation oracle") {
  Rng rng(11);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  std::uniform_real_distribution<double> span(-2.0, 2.0);
  const double threshold = 0.5;
  int crossings = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 prev(span(rng), coord(rng), coord(rng));
    const Vec3 cur(span(rng), coord(rng), coord(rng));

    // Brute force: scan sub-samples for the first sign change, interpolate
    // within that bracket, apply the same thresholds.
    bool oracle = false;
    const int n = 1000;
    Vec3 a = prev;
    for (int k = 1; k <= n; ++k) {
      const Vec3 b = prev + (cur - prev) * (double(k) / n);
      if (a.x() <= 0.0 && b.x() > 0.0) {
        const double f = -a.x() / (b.x() - a.x());
        const Vec3 hit = a + f * (b - a);
        oracle = std::abs(hit.y()) <= threshold &&
                 std::abs(hit.z()) <= threshold;
        break;
      }
      a = b;
    }

    // Skip cases whose crossing point sits on a decision boundary.
    if (prev.x() <= 0.0 && cur.x() > 0.0) {
      const Vec3 hit = crossing_point(prev, cur);
      if (std::abs(std::abs(hit.y()) - threshold) < 1e-6) continue;
      if (std::abs(std::abs(hit.z()) - threshold) < 1e-6) continue;
      if (std::abs(prev.x()) < 1e-6 || std::abs(cur.x()) < 1e-6) continue;
      ++crossings;
    }
    CHECK(check_completion(prev, cur, threshold) == oracle);
  }
  CHECK(crossings > 1000);  // the sample actually exercises crossings
}

TEST_CASE("completion fires at most once along a crossing trajectory") {
  // Straight line crossing the plane exactly once.
  const Vec3 start(-1.0, 0.1, -0.2), end(1.0, 0.2, 0.1);
  int fires = 0;
  Vec3 prev = start;
  const int steps = 50;
  for (int k = 1; k <= steps; ++k) {
    const Vec3 cur = start + (end - start) * (double(k) / steps);
    if (check_completion(prev, cur, 0.5)) ++fires;
    prev = cur;
  }
  CHECK(fires == 1);
}

TEST_CASE("completion is invariant under a common rigid transform") {
  Rng rng(13);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    Quat gate_q(n(rng), n(rng), n(rng), n(rng));
    gate_q.normalize();
    const WaypointPose pose{Vec3(n(rng), n(rng), n(rng)), gate_q};
    const Vec3 p_prev(n(rng), n(rng), n(rng));
    const Vec3 p_cur(n(rng), n(rng), n(rng));

    Quat rigid(n(rng), n(rng), n(rng), n(rng));
    rigid.normalize();
    const Vec3 shift(n(rng), n(rng), n(rng));
    const WaypointPose pose2{rigid * pose.position + shift,
                             rigid * pose.orientation};

    const bool base = check_completion(to_local(p_prev, pose),
                                       to_local(p_cur, pose), 0.5);
    const bool moved =
        check_completion(to_local(rigid * p_prev + shift, pose2),
                         to_local(rigid * p_cur + shift, pose2), 0.5);
    CHECK(base == moved);
  }
}

TEST_CASE("out_of_bounds componentwise predicate") {
  const Vec3 bbox(8, 8, 8);
  CHECK_FALSE(out_of_bounds(Vec3::Zero(), bbox));
  CHECK(out_of_bounds(Vec3(0, 0, 8.0 + 1e-9), bbox));

  Rng rng(17);
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  for (int i = 0; i < 5000; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const bool oracle = std::abs(p.x()) > bbox.x() ||
                        std::abs(p.y()) > bbox.y() ||
                        std::abs(p.z()) > bbox.z();
    CHECK(out_of_bounds(p, bbox) == oracle);
  }
}

TEST_CASE("fixtures load and have sane shapes") {
  for (const char* name :
       {"powerloop", "barrelroll", "splits", "splits_single"}) {
    const Track t = Track::fixture(name);
    CHECK(t.waypoints.size() >= 1);
    CHECK(t.pass_threshold > 0.0);
    for (const auto& w : t.waypoints) {
      CHECK(std::abs(w.orientation.norm() - 1.0) < 1e-12);
      CHECK(w.osc_amplitude >= 0.0);
    }
  }
  CHECK(Track::fixture("splits_single").waypoints.size() == 1);
  CHECK_THROWS_AS(Track::fixture("nope"), std::invalid_argument);
}

TEST_CASE("with_gate_speed overrides every waypoint") {
  const Track t = Track::fixture("powerloop").with_gate_speed(2.5);
  for (const auto& w : t.waypoints) CHECK(w.osc_speed == 2.5);
}
