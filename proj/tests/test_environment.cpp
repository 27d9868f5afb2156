#include <doctest.h>

#include <cmath>

#include "aerobat/environment.hpp"

using namespace aerobat;

namespace {

AppConfig quiet_config() {
  AppConfig cfg;
  cfg.track = Track::fixture("splits_single");
  for (auto& w : cfg.track.waypoints) {
    w.osc_amplitude = 0.0;
    w.osc_speed = 0.0;
  }
  cfg.dynamics.randomization.randomize_drag = false;
  cfg.dynamics.randomization.randomize_command = false;
  cfg.dynamics.randomization.randomize_latency = false;
  return cfg;
}

Track single_upright_gate(const Vec3& position) {
  Track t;
  Waypoint w;
  w.position = position;
  t.waypoints = {w};
  return t;
}

Vec4 hover_action(const ActionScaler& scaler) {
  return scaler.unscale(Command::hover());
}

}  // namespace

TEST_CASE("action scaler is an invertible affine map") {
  ActionScaler scaler;
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec4 x(u(rng), u(rng), u(rng), u(rng));
    const Command c = scaler.scale(x);
    CHECK((scaler.unscale(c) - x).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Scaled outputs always satisfy the command clamps.
  const Command lo = scaler.scale(Vec4(-1, -1, -1, -1));
  const Command hi = scaler.scale(Vec4(1, 1, 1, 1));
  CHECK(lo.thrust() == kThrustMin);
  CHECK(hi.thrust() == kThrustMax);
  CHECK(hi.rates().z() == doctest::Approx(kYawRateMax));
}

TEST_CASE("observation geometry") {
  AppConfig cfg = quiet_config();

  SUBCASE("drone at the gate center sees zero relative position") {
    QuadState s;
    s.p = cfg.track.waypoints[0].position;
    const Observation obs = observe(s, cfg.track, 0, Vec4::Zero(), 0.0);
    CHECK(obs.segment<3>(0).norm() == 0.0);
  }

  SUBCASE("single-gate track duplicates the gate in both blocks") {
    QuadState s;
    s.p = Vec3(0, 0, 3);
    const Observation obs = observe(s, cfg.track, 0, Vec4::Zero(), 0.0);
    CHECK((obs.segment<7>(0) - obs.segment<7>(7)).norm() == 0.0);
  }

  SUBCASE("body-frame velocity under a 90 degree yaw") {
    QuadState s;
    s.q = Quat(Eigen::AngleAxisd(M_PI_2, Vec3::UnitZ()));
    s.v = Vec3(1, 0, 0);
    const Observation obs = observe(s, cfg.track, 0, Vec4::Zero(), 0.0);
    CHECK((obs.segment<3>(21) - Vec3(0, -1, 0)).norm() < 1e-12);
  }

  SUBCASE("yawing the drone rotates the relative position inversely") {
    QuadState plain;
    plain.p = Vec3(1, 1, 3);
    QuadState yawed = plain;
    const double angle = M_PI_2;
    yawed.q = Quat(Eigen::AngleAxisd(angle, Vec3::UnitZ()));
    const Observation a = observe(plain, cfg.track, 0, Vec4::Zero(), 0.0);
    const Observation b = observe(yawed, cfg.track, 0, Vec4::Zero(), 0.0);
    const Vec3 expected =
        Quat(Eigen::AngleAxisd(-angle, Vec3::UnitZ())) * a.segment<3>(0);
    CHECK((b.segment<3>(0) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("full vector matches independent assembly") {
    QuadState s;
    s.p = Vec3(0.5, -0.5, 2.0);
    s.q = Quat(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()));
    s.v = Vec3(2, -1, 0.5);
    const Vec4 u_last(0.1, -0.2, 0.3, -0.4);
    const Observation obs = observe(s, cfg.track, 0, u_last, 0.0);

    const Eigen::Matrix3d r = s.q.toRotationMatrix();
    const auto& w = cfg.track.waypoints[0];
    Eigen::VectorXd expected(28);
    expected.segment<3>(0) = r.transpose() * (w.position - s.p);
    Quat q1 = s.q.conjugate() * w.orientation;
    if (q1.w() < 0) q1.coeffs() = -q1.coeffs();
    expected[3] = q1.w();
    expected.segment<3>(4) = Vec3(q1.x(), q1.y(), q1.z());
    expected.segment<7>(7) = expected.segment<7>(0);
    expected.segment<3>(14) = s.p;
    Quat qd = s.q;
    if (qd.w() < 0) qd.coeffs() = -qd.coeffs();
    expected[17] = qd.w();
    expected.segment<3>(18) = Vec3(qd.x(), qd.y(), qd.z());
    expected.segment<3>(21) = r.transpose() * s.v;
    expected.segment<4>(24) = u_last;
    CHECK((obs - expected).cwiseAbs().maxCoeff() < 1e-9);
  }

  SUBCASE("quaternion blocks are unit norm with non-negative w") {
    Rng rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      QuadState s;
      s.p = Vec3(n(rng), n(rng), 3 + n(rng));
      Quat q(n(rng), n(rng), n(rng), n(rng));
      s.q = q.normalized();
      const Observation obs = observe(s, cfg.track, 0, Vec4::Zero(), 0.0);
      for (int off : {3, 10, 17}) {
        CHECK(std::abs(obs.segment<4>(off).norm() - 1.0) < 1e-9);
        CHECK(obs[off] >= 0.0);
      }
      CHECK(obs.allFinite());
    }
  }
}

TEST_CASE("reset rejects invalid states") {
  AppConfig cfg = quiet_config();
  Environment env(cfg, 1);
  QuadState bad;
  bad.p = Vec3(100, 0, 0);  // far outside the gate's bounding box
  CHECK_THROWS_AS(env.reset_from(bad), std::invalid_argument);
  QuadState nan_state;
  nan_state.p.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(env.reset_from(nan_state), std::invalid_argument);
  QuadState denorm;
  denorm.q = Quat(2.0, 0, 0, 0);
  CHECK_THROWS_AS(env.reset_from(denorm), std::invalid_argument);
}

TEST_CASE("max_steps of one terminates immediately") {
  AppConfig cfg = quiet_config();
  cfg.episode.max_steps = 1;
  Environment env(cfg, 1);
  env.reset();
  const StepResult res = env.step(hover_action(env.scaler()));
  CHECK(res.done);
  CHECK(env.info().termination == Termination::kStepCap);
}

TEST_CASE("passing the final gate terminates with aerobatic reward") {
  AppConfig cfg = quiet_config();
  cfg.track = single_upright_gate(Vec3(1.0, 0.0, 3.0));
  cfg.dynamics.drag.coeffs.setZero();
  Environment env(cfg, 1);
  QuadState s0;
  s0.p = Vec3(0.7, 0, 3.0);
  s0.v = Vec3(3.0, 0, 0);
  env.reset_from(s0);
  const Vec4 action = hover_action(env.scaler());
  bool crossed = false;
  double aer = 0.0;
  for (int i = 0; i < 50 && !env.done(); ++i) {
    const StepResult res = env.step(action);
    if (res.done) {
      crossed = true;
      aer = res.reward.r_aer;
    }
  }
  CHECK(crossed);
  CHECK(env.info().termination == Termination::kTrackComplete);
  CHECK(aer > 0.0);
  CHECK(env.info().passes.size() == 1);
  CHECK(env.info().flight_time == doctest::Approx(env.time()));
}

TEST_CASE("out of bounds terminates the episode") {
  AppConfig cfg = quiet_config();
  cfg.track.bbox_half_extents = Vec3(5, 5, 5);
  Environment env(cfg, 1);
  QuadState s0;
  s0.p = Vec3(0, 0, 3);
  s0.v = Vec3(-12.0, 0, 0);  // sprint away from the gate
  env.reset_from(s0);
  const Vec4 action = hover_action(env.scaler());
  while (!env.done()) env.step(action);
  CHECK(env.info().termination == Termination::kOutOfBounds);
  CHECK_FALSE(env.info().success());
}

TEST_CASE("done reports exactly one termination cause") {
  AppConfig cfg = quiet_config();
  cfg.episode.max_steps = 40;
  Environment env(cfg, 7);
  Rng rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int ep = 0; ep < 20; ++ep) {
    env.reset();
    while (!env.done()) {
      env.step(Vec4(u(rng), u(rng), u(rng), u(rng)));
    }
    CHECK(env.info().termination != Termination::kNone);
  }
}

TEST_CASE("waypoint cursor is monotone within an episode") {
  AppConfig cfg = quiet_config();
  cfg.track = Track::fixture("barrelroll").with_gate_speed(0.0);
  cfg.episode.max_steps = 300;
  Environment env(cfg, 3);
  Rng rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int ep = 0; ep < 10; ++ep) {
    env.reset();
    std::size_t last = env.cursor().index;
    while (!env.done()) {
      env.step(Vec4(u(rng), u(rng), u(rng), u(rng)));
      CHECK(env.cursor().index >= last);
      last = env.cursor().index;
    }
  }
}

TEST_CASE("fixed actions replay identically under a fixed seed") {
  AppConfig cfg = quiet_config();
  cfg.dynamics.randomization.randomize_drag = true;
  cfg.dynamics.randomization.randomize_command = true;
  cfg.dynamics.randomization.randomize_latency = true;

  std::vector<Vec4> actions;
  Rng action_rng(17);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int i = 0; i < 10; ++i) {
    actions.emplace_back(u(action_rng), u(action_rng), u(action_rng),
                         u(action_rng));
  }

  const auto rollout = [&](std::uint64_t seed) {
    Environment env(cfg, seed);
    std::vector<std::pair<Observation, double>> trace;
    env.reset();
    for (const auto& a : actions) {
      if (env.done()) break;
      const StepResult res = env.step(a);
      trace.emplace_back(res.obs, res.reward.total);
    }
    return trace;
  };

  const auto a = rollout(42), b = rollout(42), c = rollout(43);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second == b[i].second);
  }
  // A different seed gives a different randomized episode.
  bool any_diff = false;
  for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i) {
    if (a[i].first != c[i].first) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("identically seeded environments stay identical when interleaved") {
  AppConfig cfg = quiet_config();
  cfg.dynamics.randomization.randomize_drag = true;
  cfg.dynamics.randomization.randomize_command = true;
  Environment env_a(cfg, 99), env_b(cfg, 99);
  env_a.reset();
  env_b.reset();
  Rng rng(19);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    const Vec4 action(u(rng), u(rng), u(rng), u(rng));
    if (env_a.done()) {
      env_a.reset();
      env_b.reset();
    }
    const StepResult ra = env_a.step(action);
    const StepResult rb = env_b.step(action);
    CHECK(ra.obs == rb.obs);
    CHECK(ra.reward.total == rb.reward.total);
    CHECK(ra.done == rb.done);
  }
}

TEST_CASE("out-of-range actions are clamped and counted") {
  AppConfig cfg = quiet_config();
  Environment env(cfg, 1);
  env.reset();
  env.step(Vec4(1.5, -2.0, 0.0, 0.0));
  CHECK(env.info().action_warnings == 2);
  // In-range slop under the tolerance is not counted.
  env.reset();
  env.step(Vec4(1.0005, 0.0, 0.0, 0.0));
  CHECK(env.info().action_warnings == 0);
}

TEST_CASE("episode info JSON round trip") {
  AppConfig cfg = quiet_config();
  cfg.episode.max_steps = 30;
  Environment env(cfg, 5);
  env.reset();
  Rng rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (!env.done()) env.step(Vec4(u(rng), u(rng), u(rng), u(rng)));
  const EpisodeInfo& info = env.info();
  const EpisodeInfo back = EpisodeInfo::from_json(info.to_json());
  CHECK(back.steps == info.steps);
  CHECK(back.flight_time == info.flight_time);
  CHECK(back.termination == info.termination);
  CHECK(back.completed == info.completed);
  CHECK(back.passes.size() == info.passes.size());
}

TEST_CASE("gate speed range resamples oscillation per episode") {
  AppConfig cfg = quiet_config();
  cfg.track.waypoints[0].osc_amplitude = 1.5;
  cfg.episode.gate_speed_range = {0.0, 1.0};
  Environment env(cfg, 8);
  std::vector<double> speeds;
  for (int i = 0; i < 20; ++i) {
    env.reset();
    speeds.push_back(env.track().waypoints[0].osc_speed);
  }
  for (double s : speeds) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK(*std::max_element(speeds.begin(), speeds.end()) >
        *std::min_element(speeds.begin(), speeds.end()));
}

TEST_CASE("mid-track reset targets the nearest upcoming waypoint") {
  AppConfig cfg = quiet_config();
  cfg.track = Track::fixture("barrelroll").with_gate_speed(0.0);
  Environment env(cfg, 2);
  QuadState s0;
  s0.p = Vec3(7.0, 0.0, 3.0);  // past gates 0 and 1, before gate 2
  env.reset_from(s0);
  CHECK(env.cursor().index == 2);
}
