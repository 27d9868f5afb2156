#pragma once

#include <optional>
#include <utility>

#include "aerobat/track.hpp"
#include "aerobat/types.hpp"

namespace aerobat {

enum class RewardMode { kSparse, kShaped };

struct RewardWeights {
  double w_aer = 1.0;
  double w_act = -0.0005;
  double w_act_change = -0.01;
  // The yaw term is itself negative (minus arccos), so its weight is
  // positive for the sum to penalize misalignment.
  double w_yaw = 0.02;
  double a = 2.0;  // activation constants, a > b > 0
  double b = 1.0;
  double c = 5.0;  // completion bonus
  double w_sp = 1.0;  // shaping weights, shaped mode only
  double w_sq = 0.5;
};

struct RewardBreakdown {
  double r_aer = 0.0;
  double r_act = 0.0;
  double r_act_change = 0.0;
  double r_yaw = 0.0;
  double r_rs = 0.0;
  double total = 0.0;

  // Weighted sum without the shaping term, the quantity reported during
  // evaluation regardless of training mode.
  double original(const RewardWeights& w) const {
    return w.w_aer * r_aer + w.w_act * r_act + w.w_act_change * r_act_change +
           w.w_yaw * r_yaw;
  }
};

// Piecewise linear/exponential score: (a - x) for x > a - b, else
// b - 1 + e^(a - x - b). Continuous and C1 at the junction, decreasing in x.
double activation(double x, double a, double b);

// Angle between the two body-Z axes, radians in [0, pi].
double attitude_error(const Quat& desired, const Quat& actual);

// Gate-pass reward: zero unless crossed, otherwise F(p_error) + F(theta_error)
// + c with p_error = ||local|| and theta_error the body-Z misalignment.
double aerobatic_reward(const Vec3& local, const Quat& q_drone,
                        const WaypointPose& pose, bool crossed,
                        const RewardWeights& weights);

// (r_act, r_act_change): summed |commanded rates| and the L2 change between
// consecutive commands in normalized action units (physical difference scaled
// by the reciprocal channel amplitudes).
std::pair<double, double> smoothness_rewards(const Command& u,
                                             const Command& u_last,
                                             const Vec4& inv_amplitude);

// Negative angle between the body-frame velocity's X-O-Y projection and the
// body X axis; zero when the projection is negligible.
double yaw_reward(const Vec3& v_body);

// Dense progress shaping, shaped mode only.
double shaping_reward(double p_err_last, double p_err, double theta_err_last,
                      double theta_err, double w_sp, double w_sq);

RewardBreakdown total_reward(double r_aer, double r_act, double r_act_change,
                             double r_yaw, std::optional<double> r_rs,
                             const RewardWeights& weights, RewardMode mode);

}  // namespace aerobat
