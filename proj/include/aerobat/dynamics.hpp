#pragma once

#include <deque>
#include <stdexcept>
#include <utility>

#include "aerobat/types.hpp"

namespace aerobat {

// Diagonal parasitic-drag coefficients (1/m), expressed in the body frame.
struct DragModel {
  Vec3 coeffs{0.02, 0.02, 0.04};
};

// Domain-randomization knobs. Fractions are relative perturbation bounds,
// latency times are in seconds.
struct RandomizationConfig {
  double drag_jitter = 0.5;
  double command_jitter = 0.2;
  double t0_min = 0.004;
  double t0_max = 0.036;
  double t_latency = 0.080;
  bool randomize_drag = true;
  bool randomize_command = true;
  bool randomize_latency = true;
};

// Inertia matrix and gravity. The body-rate action space bypasses the torque
// equation, so J is kept for completeness but unused by the default path.
struct InertiaParams {
  Eigen::Matrix3d inertia =
      Eigen::Vector3d(0.007, 0.007, 0.012).asDiagonal();
  Vec3 gravity = kGravityVec;
};

// Integrator and inner-loop parameters.
struct DynamicsParams {
  double substep_dt = 0.0025;
  int substeps = 4;
  double tau_rate = 0.05;
  DragModel drag;
  RandomizationConfig randomization;
};

// Thrown when integration produces non-finite values; carries the state that
// triggered it.
class SimulationDivergence : public std::runtime_error {
 public:
  SimulationDivergence(const std::string& what, QuadState state)
      : std::runtime_error(what), state(std::move(state)) {}
  QuadState state;
};

// History of commands issued to the vehicle, used to model actuation latency
// by averaging over a past window.
class LatencyBuffer {
 public:
  // Timestamps must be strictly increasing.
  void push(double t, const Command& cmd);
  void clear() { entries_.clear(); }
  // Drops entries older than `horizon` behind the newest timestamp.
  void prune(double horizon);
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::deque<std::pair<double, Command>>& entries() const {
    return entries_;
  }
  // Fills the buffer backward from `now` at `spacing` so a window of length
  // `span` ending at `now` is covered.
  void prefill(double now, double span, double spacing, const Command& cmd);

 private:
  std::deque<std::pair<double, Command>> entries_;
};

// Rotates v from body to world frame. Throws on non-finite input.
Vec3 quat_rotate(const Quat& q, const Vec3& v);

// Drag acceleration -q (x) D (x) q^-1 ||v|| v in the world frame.
Vec3 apply_drag(const Quat& q, const Vec3& v, const DragModel& drag);

// First-order body-rate response toward the setpoint, clamped per axis so a
// large step never overshoots the target.
Vec3 inner_loop_rates(const Vec3& omega, const Vec3& omega_cmd, double dt,
                      double tau_rate);

// Advances the state by one physics substep. Command jitter (when enabled) is
// applied multiplicatively per channel before integration. The translational
// update is exact for constant acceleration over the substep; the quaternion
// is advanced by its kinematic equation and renormalized.
QuadState step(const QuadState& state, const Command& cmd, double dt,
               const DragModel& drag, const RandomizationConfig& rand,
               double tau_rate, Rng& rng);

// Mean of the commands in the window (now - t0 - t_latency, now - t0]. Falls
// back to the newest command at or before now - t0 when the window holds no
// samples; throws if the buffer has no usable entry at all.
Command effective_command(const LatencyBuffer& buf, double now, double t0,
                          double t_latency);

// Per-episode draws.
DragModel sample_drag(const DragModel& nominal, const RandomizationConfig& rand,
                      Rng& rng);
double sample_latency_offset(const RandomizationConfig& rand, Rng& rng);

}  // namespace aerobat
