#include "aerobat/reward.hpp"

#include <algorithm>
#include <cmath>

namespace aerobat {

namespace {
constexpr double kProjectionEps = 1e-3;  // m/s
}

double activation(double x, double a, double b) {
  if (x > a - b) return a - x;
  return b - 1.0 + std::exp(a - x - b);
}

double attitude_error(const Quat& desired, const Quat& actual) {
  const Vec3 z_desired = desired * Vec3::UnitZ();
  const Vec3 z_actual = actual * Vec3::UnitZ();
  const double cosine = std::clamp(z_desired.dot(z_actual), -1.0, 1.0);
  return std::acos(cosine);
}

double aerobatic_reward(const Vec3& local, const Quat& q_drone,
                        const WaypointPose& pose, bool crossed,
                        const RewardWeights& weights) {
  if (!crossed) return 0.0;
  const double p_error = local.norm();
  const double theta_error = attitude_error(pose.orientation, q_drone);
  return activation(p_error, weights.a, weights.b) +
         activation(theta_error, weights.a, weights.b) + weights.c;
}

std::pair<double, double> smoothness_rewards(const Command& u,
                                             const Command& u_last,
                                             const Vec4& inv_amplitude) {
  const double r_act = u.rates().cwiseAbs().sum();
  const Vec4 delta =
      (u.as_vec() - u_last.as_vec()).cwiseProduct(inv_amplitude);
  return {r_act, delta.norm()};
}

double yaw_reward(const Vec3& v_body) {
  const Eigen::Vector2d projection(v_body.x(), v_body.y());
  const double norm = projection.norm();
  if (norm < kProjectionEps) return 0.0;
  const double cosine = std::clamp(projection.x() / norm, -1.0, 1.0);
  return -std::acos(cosine);
}

double shaping_reward(double p_err_last, double p_err, double theta_err_last,
                      double theta_err, double w_sp, double w_sq) {
  return w_sp * (p_err_last - p_err) + w_sq * (theta_err_last - theta_err);
}

RewardBreakdown total_reward(double r_aer, double r_act, double r_act_change,
                             double r_yaw, std::optional<double> r_rs,
                             const RewardWeights& weights, RewardMode mode) {
  RewardBreakdown out;
  out.r_aer = r_aer;
  out.r_act = r_act;
  out.r_act_change = r_act_change;
  out.r_yaw = r_yaw;
  out.total = weights.w_aer * r_aer + weights.w_act * r_act +
              weights.w_act_change * r_act_change + weights.w_yaw * r_yaw;
  if (mode == RewardMode::kShaped && r_rs.has_value()) {
    out.r_rs = *r_rs;
    out.total += out.r_rs;
  }
  return out;
}

}  // namespace aerobat
