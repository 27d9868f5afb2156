#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <random>

namespace aerobat {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Quat = Eigen::Quaterniond;
using Rng = std::mt19937_64;

constexpr double kGravity = 9.81;
inline const Vec3 kGravityVec{0.0, 0.0, -kGravity};

// Command limits: thrust in m/s^2, rates in rad/s.
constexpr double kThrustMin = 0.0;
constexpr double kThrustMax = 20.0;
constexpr double kRollPitchRateMax = 5.0;
constexpr double kYawRateMax = 3.14;

// Full rigid-body state: world-frame position/velocity, world<-body unit
// quaternion, body-frame angular velocity.
struct QuadState {
  Vec3 p{Vec3::Zero()};
  Quat q{1.0, 0.0, 0.0, 0.0};
  Vec3 v{Vec3::Zero()};
  Vec3 omega{Vec3::Zero()};

  bool finite() const {
    return p.allFinite() && q.coeffs().allFinite() && v.allFinite() &&
           omega.allFinite();
  }
};

// Mass-normalized collective thrust plus body-rate setpoints. Clamped to the
// actuation limits on construction, so a Command is always valid.
class Command {
 public:
  Command() = default;

  Command(double thrust, const Vec3& rates)
      : thrust_(std::clamp(thrust, kThrustMin, kThrustMax)),
        rates_(std::clamp(rates.x(), -kRollPitchRateMax, kRollPitchRateMax),
               std::clamp(rates.y(), -kRollPitchRateMax, kRollPitchRateMax),
               std::clamp(rates.z(), -kYawRateMax, kYawRateMax)) {}

  static Command hover() { return Command(kGravity, Vec3::Zero()); }

  double thrust() const { return thrust_; }
  const Vec3& rates() const { return rates_; }

  Vec4 as_vec() const {
    return Vec4(thrust_, rates_.x(), rates_.y(), rates_.z());
  }

 private:
  double thrust_ = kGravity;
  Vec3 rates_{Vec3::Zero()};
};

// Rotation of a vector from body frame to world frame.
inline Vec3 rotate(const Quat& q, const Vec3& v) { return q * v; }

// Canonical quaternion sign (w >= 0), removing the double-cover ambiguity.
inline Quat canonical(const Quat& q) {
  if (q.w() < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  return q;
}

}  // namespace aerobat
