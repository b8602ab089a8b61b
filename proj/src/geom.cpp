#include "gaitmag/geom.hpp"

#include <algorithm>
#include <numbers>

namespace gaitmag {

namespace {

constexpr double kGimbalTolerance = 1e-6;

Quaternion hamilton(const Quaternion& a, const Quaternion& b) {
  return {
      a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
  };
}

double wrap_half_open(double angle) {
  // atan2 can return exactly -pi; the declared range is (-pi, pi].
  return angle <= -std::numbers::pi ? angle + 2.0 * std::numbers::pi : angle;
}

}  // namespace

Quaternion normalize(const Quaternion& q) {
  const double n = q.norm();
  const double s = (q.w < 0.0 ? -1.0 : 1.0) / n;
  return {q.w * s, q.x * s, q.y * s, q.z * s};
}

Quaternion quat_mul(const Quaternion& a, const Quaternion& b) { return normalize(hamilton(a, b)); }

Vec3 rotate_vec(const Quaternion& q, const Vec3& v) {
  // v' = v + 2w (u x v) + 2 u x (u x v), u = vector part.
  const Vec3 u{q.x, q.y, q.z};
  const Vec3 t = u.cross(v) * 2.0;
  return v + t * q.w + u.cross(t);
}

Quaternion relative_orientation(const Quaternion& q_tx, const Quaternion& q_rx) {
  return quat_mul(conjugate(q_tx), q_rx);
}

EulerConversion quat_to_euler(const Quaternion& q_in) {
  const Quaternion q = normalize(q_in);
  const double sin_pitch = std::clamp(2.0 * (q.w * q.y - q.x * q.z), -1.0, 1.0);
  EulerConversion out;
  out.angles.pitch = std::asin(sin_pitch);
  if (std::numbers::pi / 2.0 - std::abs(out.angles.pitch) < kGimbalTolerance) {
    out.gimbal_lock = true;
    out.angles.roll = 0.0;
    // With roll pinned to zero, R01 = -sin(yaw) and R11 = cos(yaw) for either sign of pitch.
    const double r01 = 2.0 * (q.x * q.y - q.w * q.z);
    const double r11 = 1.0 - 2.0 * (q.x * q.x + q.z * q.z);
    out.angles.yaw = wrap_half_open(std::atan2(-r01, r11));
    return out;
  }
  out.angles.yaw =
      wrap_half_open(std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z)));
  out.angles.roll =
      wrap_half_open(std::atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y)));
  return out;
}

Quaternion euler_to_quat(const EulerAngles& e) {
  const double cy = std::cos(e.yaw * 0.5), sy = std::sin(e.yaw * 0.5);
  const double cp = std::cos(e.pitch * 0.5), sp = std::sin(e.pitch * 0.5);
  const double cr = std::cos(e.roll * 0.5), sr = std::sin(e.roll * 0.5);
  return normalize({
      cr * cp * cy + sr * sp * sy,
      sr * cp * cy - cr * sp * sy,
      cr * sp * cy + sr * cp * sy,
      cr * cp * sy - sr * sp * cy,
  });
}

double angle_between(const Quaternion& a, const Quaternion& b) {
  // atan2 form keeps precision for tiny angles where acos(dot) does not.
  const Quaternion d = hamilton(conjugate(normalize(a)), normalize(b));
  const double vec = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
  return 2.0 * std::atan2(vec, std::abs(d.w));
}

}  // namespace gaitmag
