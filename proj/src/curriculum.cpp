#include "aerobat/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace aerobat {

namespace {

constexpr char kSnapshotMagic[] = "abrs";
constexpr std::uint32_t kSnapshotVersion = 1;

void write_raw(std::ostream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& in, void* data, std::size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("reset-set snapshot truncated");
}

void write_state(std::ostream& out, const ResetState& rs) {
  double buf[14] = {rs.state.p.x(),     rs.state.p.y(),     rs.state.p.z(),
                    rs.state.q.w(),     rs.state.q.x(),     rs.state.q.y(),
                    rs.state.q.z(),     rs.state.v.x(),     rs.state.v.y(),
                    rs.state.v.z(),     rs.state.omega.x(), rs.state.omega.y(),
                    rs.state.omega.z(), rs.thrust};
  write_raw(out, buf, sizeof(buf));
}

ResetState read_state(std::istream& in) {
  double buf[14];
  read_raw(in, buf, sizeof(buf));
  ResetState rs;
  rs.state.p = Vec3(buf[0], buf[1], buf[2]);
  rs.state.q = Quat(buf[3], buf[4], buf[5], buf[6]);
  rs.state.v = Vec3(buf[7], buf[8], buf[9]);
  rs.state.omega = Vec3(buf[10], buf[11], buf[12]);
  rs.thrust = buf[13];
  return rs;
}

}  // namespace

void ResetSets::absorb(const std::vector<ResetState>& states) {
  for (const auto& s : states) {
    buffer.push_back(s);
    while (buffer.size() > buffer_capacity) buffer.pop_front();
  }
}

void ResetSets::save(std::ostream& out) const {
  write_raw(out, kSnapshotMagic, 4);
  write_raw(out, &kSnapshotVersion, sizeof(kSnapshotVersion));
  double header[8] = {start.center.x(),  start.center.y(), start.center.z(),
                      start.half_extent, start.yaw_min,    start.yaw_max,
                      start.speed_min,   start.speed_max};
  write_raw(out, header, sizeof(header));
  const std::uint64_t cap = buffer_capacity;
  write_raw(out, &cap, sizeof(cap));
  double probs[2] = {rho1, rho2};
  write_raw(out, probs, sizeof(probs));
  const std::uint64_t n_curr = current.size();
  write_raw(out, &n_curr, sizeof(n_curr));
  for (const auto& s : current) write_state(out, s);
  const std::uint64_t n_buf = buffer.size();
  write_raw(out, &n_buf, sizeof(n_buf));
  for (const auto& s : buffer) write_state(out, s);
}

ResetSets ResetSets::load(std::istream& in) {
  char magic[4];
  read_raw(in, magic, 4);
  if (std::string(magic, 4) != kSnapshotMagic) {
    throw std::runtime_error("not a reset-set snapshot");
  }
  std::uint32_t version = 0;
  read_raw(in, &version, sizeof(version));
  if (version != kSnapshotVersion) {
    throw std::runtime_error("unsupported reset-set snapshot version");
  }
  ResetSets sets;
  double header[8];
  read_raw(in, header, sizeof(header));
  sets.start.center = Vec3(header[0], header[1], header[2]);
  sets.start.half_extent = header[3];
  sets.start.yaw_min = header[4];
  sets.start.yaw_max = header[5];
  sets.start.speed_min = header[6];
  sets.start.speed_max = header[7];
  std::uint64_t cap = 0;
  read_raw(in, &cap, sizeof(cap));
  sets.buffer_capacity = cap;
  double probs[2];
  read_raw(in, probs, sizeof(probs));
  sets.rho1 = probs[0];
  sets.rho2 = probs[1];
  std::uint64_t n_curr = 0;
  read_raw(in, &n_curr, sizeof(n_curr));
  sets.current.reserve(n_curr);
  for (std::uint64_t i = 0; i < n_curr; ++i) sets.current.push_back(read_state(in));
  std::uint64_t n_buf = 0;
  read_raw(in, &n_buf, sizeof(n_buf));
  for (std::uint64_t i = 0; i < n_buf; ++i) sets.buffer.push_back(read_state(in));
  return sets;
}

std::vector<GoalState> extract_goals(const Track& track, double speed_min,
                                     double speed_max, double cone_half_angle,
                                     int per_gate, Rng& rng) {
  if (per_gate < 1) throw std::invalid_argument("extract_goals: per_gate >= 1");
  std::uniform_real_distribution<double> speed_draw(speed_min, speed_max);
  std::uniform_real_distribution<double> azimuth(0.0, 2.0 * M_PI);
  const double cos_max = std::cos(std::clamp(cone_half_angle, 0.0, M_PI));
  std::uniform_real_distribution<double> cos_draw(cos_max, 1.0);

  std::vector<GoalState> goals;
  goals.reserve(track.waypoints.size() * static_cast<std::size_t>(per_gate));
  for (const auto& w : track.waypoints) {
    for (int i = 0; i < per_gate; ++i) {
      // Direction uniform on the spherical cap around local +X.
      const double c = cos_draw(rng);
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      const double phi = azimuth(rng);
      const Vec3 dir_local(c, s * std::cos(phi), s * std::sin(phi));
      GoalState g;
      g.position = w.position;
      g.orientation = w.orientation;
      g.velocity = speed_draw(rng) * (w.orientation * dir_local);
      goals.push_back(g);
    }
  }
  return goals;
}

FlatState state_to_flat(const GoalState& goal, double thrust_accel) {
  if (!(thrust_accel > 0.0 && thrust_accel <= kThrustMax)) {
    throw std::invalid_argument("state_to_flat: thrust must be in (0, 20]");
  }
  FlatState flat;
  flat.p = goal.position;
  flat.v = goal.velocity;
  flat.a = goal.orientation * Vec3(0.0, 0.0, thrust_accel) + kGravityVec;
  return flat;
}

std::vector<FlatState> expand_flats(const FlatState& flat,
                                    const ExpansionParams& params, Rng& rng) {
  if (params.steps < 1) throw std::invalid_argument("expand_flats: steps >= 1");
  std::uniform_real_distribution<double> jerk_draw(-params.jerk_max,
                                                   params.jerk_max);
  std::vector<FlatState> out;
  out.reserve(params.steps);
  FlatState cur = flat;
  const double dt = params.dt;
  for (int k = 0; k < params.steps; ++k) {
    FlatState prev;
    bool ok = false;
    for (int attempt = 0; attempt <= params.max_retries; ++attempt) {
      const Vec3 jerk(jerk_draw(rng), jerk_draw(rng), jerk_draw(rng));
      prev.a = cur.a - jerk * dt;
      prev.v = cur.v - prev.a * dt - 0.5 * jerk * dt * dt;
      prev.p = cur.p - prev.v * dt - 0.5 * prev.a * dt * dt -
               jerk * dt * dt * dt / 6.0;
      if ((prev.a - kGravityVec).norm() >= params.min_thrust_accel) {
        ok = true;
        break;
      }
    }
    if (!ok) break;  // degenerate thrust region, stop expanding
    out.push_back(prev);
    cur = prev;
  }
  return out;
}

QuadState flat_to_state(const FlatState& flat) {
  const Vec3 thrust = flat.a - kGravityVec;
  const double norm = thrust.norm();
  if (norm < 1e-9) {
    throw std::invalid_argument("flat_to_state: thrust direction undefined");
  }
  const Vec3 z_b = thrust / norm;

  Vec3 heading = flat.v - flat.v.dot(z_b) * z_b;
  if (heading.norm() < 1e-6) {
    heading = Vec3::UnitX() - Vec3::UnitX().dot(z_b) * z_b;
    if (heading.norm() < 1e-6) {
      heading = Vec3::UnitY() - Vec3::UnitY().dot(z_b) * z_b;
    }
  }
  const Vec3 x_b = heading.normalized();
  const Vec3 y_b = z_b.cross(x_b);

  Eigen::Matrix3d rot;
  rot.col(0) = x_b;
  rot.col(1) = y_b;
  rot.col(2) = z_b;

  QuadState s;
  s.p = flat.p;
  s.q = Quat(rot).normalized();
  s.v = flat.v;
  s.omega.setZero();
  return s;
}

std::vector<std::size_t> select_percentile_band(const Eigen::VectorXd& values,
                                                double lo_pct, double hi_pct,
                                                std::size_t min_count) {
  const std::size_t n = static_cast<std::size_t>(values.size());
  if (n == 0) return {};
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());

  double lo = lo_pct;
  double hi = hi_pct;
  while (true) {
    const auto lo_idx = static_cast<std::size_t>(
        std::clamp(std::floor(n * lo / 100.0), 0.0, double(n - 1)));
    auto hi_idx = static_cast<std::size_t>(
        std::clamp(std::ceil(n * hi / 100.0), 1.0, double(n)));
    if (hi_idx <= lo_idx) hi_idx = lo_idx + 1;
    const double v_lo = sorted[lo_idx];
    const double v_hi = sorted[hi_idx - 1];

    std::vector<std::size_t> selected;
    for (std::size_t i = 0; i < n; ++i) {
      if (values[i] >= v_lo && values[i] <= v_hi) selected.push_back(i);
    }
    if (selected.size() >= std::min(min_count, n) ||
        (lo <= 0.0 && hi >= 100.0)) {
      return selected;
    }
    lo = std::max(0.0, lo - 5.0);
    hi = std::min(100.0, hi + 5.0);
  }
}

ResetState sample_reset(const ResetSets& sets, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double rho = uniform(rng);
  if (rho < sets.rho1 && !sets.current.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0,
                                                    sets.current.size() - 1);
    return sets.current[pick(rng)];
  }
  if (rho < sets.rho1 + sets.rho2 && !sets.buffer.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, sets.buffer.size() - 1);
    return sets.buffer[pick(rng)];
  }
  ResetState rs;
  rs.state = sample_start_state(sets.start, rng);
  rs.thrust = kGravity;
  return rs;
}

}  // namespace aerobat
