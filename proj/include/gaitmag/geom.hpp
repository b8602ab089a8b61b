#pragma once

#include <cmath>

namespace gaitmag {

/// Position (meters) or field vector (model units).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3&) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Hamilton quaternion, w + xi + yj + zk.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }

  constexpr bool operator==(const Quaternion&) const = default;
  constexpr double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  bool finite() const {
    return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

/// Intrinsic Z-Y-X angles in radians. yaw in (-pi, pi], pitch in [-pi/2, pi/2],
/// roll in (-pi, pi].
struct EulerAngles {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
};

struct EulerConversion {
  EulerAngles angles;
  /// Pitch within 1e-6 rad of +-pi/2; roll is reported as 0 and the whole
  /// heading is folded into yaw.
  bool gimbal_lock = false;
};

/// Unit norm with the sign fixed so that w >= 0.
Quaternion normalize(const Quaternion& q);

constexpr Quaternion conjugate(const Quaternion& q) { return {q.w, -q.x, -q.y, -q.z}; }

/// Normalized Hamilton product a * b.
Quaternion quat_mul(const Quaternion& a, const Quaternion& b);

/// Rotates v by the unit quaternion q (q v q*).
Vec3 rotate_vec(const Quaternion& q, const Vec3& v);

/// Orientation of the Rx module relative to the Tx module when both are
/// given relative to earth; rotates Rx-frame vectors into the Tx frame.
Quaternion relative_orientation(const Quaternion& q_tx, const Quaternion& q_rx);

EulerConversion quat_to_euler(const Quaternion& q);
Quaternion euler_to_quat(const EulerAngles& e);

/// Rotation angle between two orientations, in [0, pi].
double angle_between(const Quaternion& a, const Quaternion& b);

}  // namespace gaitmag
