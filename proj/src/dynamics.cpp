#include "aerobat/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace aerobat {

void LatencyBuffer::push(double t, const Command& cmd) {
  if (!entries_.empty() && t <= entries_.back().first) {
    throw std::invalid_argument("latency buffer timestamps must increase");
  }
  entries_.emplace_back(t, cmd);
}

void LatencyBuffer::prune(double horizon) {
  if (entries_.empty()) return;
  const double cutoff = entries_.back().first - horizon;
  while (entries_.size() > 1 && entries_.front().first < cutoff) {
    entries_.pop_front();
  }
}

void LatencyBuffer::prefill(double now, double span, double spacing,
                            const Command& cmd) {
  entries_.clear();
  const int n = static_cast<int>(std::ceil(span / spacing)) + 1;
  for (int i = n; i >= 1; --i) {
    entries_.emplace_back(now - i * spacing, cmd);
  }
}

Vec3 quat_rotate(const Quat& q, const Vec3& v) {
  if (!q.coeffs().allFinite() || !v.allFinite()) {
    throw std::invalid_argument("quat_rotate: non-finite input");
  }
  return q * v;
}

Vec3 apply_drag(const Quat& q, const Vec3& v, const DragModel& drag) {
  if (!q.coeffs().allFinite() || !v.allFinite()) {
    throw std::invalid_argument("apply_drag: non-finite input");
  }
  const Vec3 v_body = q.conjugate() * v;
  const Vec3 decel_body = drag.coeffs.cwiseProduct(v_body) * v.norm();
  return -(q * decel_body);
}

Vec3 inner_loop_rates(const Vec3& omega, const Vec3& omega_cmd, double dt,
                      double tau_rate) {
  const double alpha = std::min(dt / tau_rate, 1.0);
  return omega + alpha * (omega_cmd - omega);
}

QuadState step(const QuadState& state, const Command& cmd, double dt,
               const DragModel& drag, const RandomizationConfig& rand,
               double tau_rate, Rng& rng) {
  double thrust = cmd.thrust();
  Vec3 rates_cmd = cmd.rates();
  if (rand.randomize_command && rand.command_jitter > 0.0) {
    std::uniform_real_distribution<double> jitter(-rand.command_jitter,
                                                  rand.command_jitter);
    thrust *= 1.0 + jitter(rng);
    for (int i = 0; i < 3; ++i) rates_cmd[i] *= 1.0 + jitter(rng);
  }

  QuadState next;
  next.omega = inner_loop_rates(state.omega, rates_cmd, dt, tau_rate);

  const Vec3 accel = state.q * Vec3(0.0, 0.0, thrust) + kGravityVec +
                     apply_drag(state.q, state.v, drag);
  next.v = state.v + accel * dt;
  next.p = state.p + state.v * dt + 0.5 * accel * dt * dt;

  // q_dot = 1/2 q (x) (0, omega), body-frame rates.
  const Quat omega_quat(0.0, next.omega.x(), next.omega.y(), next.omega.z());
  const Quat dq = state.q * omega_quat;
  Quat q(state.q.w() + 0.5 * dt * dq.w(), state.q.x() + 0.5 * dt * dq.x(),
         state.q.y() + 0.5 * dt * dq.y(), state.q.z() + 0.5 * dt * dq.z());
  q.normalize();
  next.q = q;

  if (!next.finite()) {
    throw SimulationDivergence("dynamics step produced non-finite state",
                               next);
  }
  return next;
}

Command effective_command(const LatencyBuffer& buf, double now, double t0,
                          double t_latency) {
  // Nanosecond slack keeps window membership stable when timestamps land
  // exactly on the half-open boundary after float rounding.
  constexpr double kEdge = 1e-9;
  const double hi = now - t0 + kEdge;
  const double lo = hi - t_latency;

  Vec4 sum = Vec4::Zero();
  int count = 0;
  const std::pair<double, Command>* newest_before = nullptr;
  for (const auto& entry : buf.entries()) {
    if (entry.first > lo && entry.first <= hi) {
      sum += entry.second.as_vec();
      ++count;
    }
    if (entry.first <= hi &&
        (newest_before == nullptr || entry.first > newest_before->first)) {
      newest_before = &entry;
    }
  }
  if (count > 0) {
    const Vec4 mean = sum / count;
    return Command(mean[0], mean.tail<3>());
  }
  if (newest_before != nullptr) return newest_before->second;
  throw std::runtime_error(
      "effective_command: no command at or before the window");
}

DragModel sample_drag(const DragModel& nominal, const RandomizationConfig& rand,
                      Rng& rng) {
  if (!rand.randomize_drag || rand.drag_jitter <= 0.0) return nominal;
  std::uniform_real_distribution<double> jitter(-rand.drag_jitter,
                                                rand.drag_jitter);
  DragModel out;
  for (int i = 0; i < 3; ++i) {
    out.coeffs[i] = nominal.coeffs[i] * (1.0 + jitter(rng));
  }
  return out;
}

double sample_latency_offset(const RandomizationConfig& rand, Rng& rng) {
  if (!rand.randomize_latency) return 0.5 * (rand.t0_min + rand.t0_max);
  std::uniform_real_distribution<double> draw(rand.t0_min, rand.t0_max);
  return draw(rng);
}

}  // namespace aerobat
