#pragma once

#include <cmath>
#include <numbers>

#include "gaitmag/geom.hpp"
#include "gaitmag/rng.hpp"

namespace gaitmag::testing {

// Uniform random rotation (Shoemake).
inline Quaternion random_quat(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t1 = 2.0 * std::numbers::pi * u2, t2 = 2.0 * std::numbers::pi * u3;
  return normalize({b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2)});
}

inline Vec3 random_vec(Rng& rng, double scale = 1.0) {
  return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

// Uniform direction times a radius drawn uniformly in [r_lo, r_hi].
inline Vec3 random_point(Rng& rng, double r_lo, double r_hi) {
  Vec3 d;
  do {
    d = random_vec(rng);
  } while (d.norm() < 1e-3 || d.norm() > 1.0);
  return d / d.norm() * rng.uniform(r_lo, r_hi);
}

// Row-major 3x3 rotation matrix of a unit quaternion, written out from the
// textbook formula rather than through rotate_vec.
struct Mat3 {
  double m[3][3];
  Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  Mat3 operator*(const Mat3& o) const {
    Mat3 r{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) r.m[i][j] += m[i][k] * o.m[k][j];
    return r;
  }
};

inline Mat3 rotation_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
           {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
           {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
}

inline Mat3 rot_x(double a) { return {{{1, 0, 0}, {0, std::cos(a), -std::sin(a)}, {0, std::sin(a), std::cos(a)}}}; }
inline Mat3 rot_y(double a) { return {{{std::cos(a), 0, std::sin(a)}, {0, 1, 0}, {-std::sin(a), 0, std::cos(a)}}}; }
inline Mat3 rot_z(double a) { return {{{std::cos(a), -std::sin(a), 0}, {std::sin(a), std::cos(a), 0}, {0, 0, 1}}}; }

inline double vdist(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Same rotation regardless of quaternion sign.
inline double qdist(const Quaternion& a, const Quaternion& b) { return 1.0 - std::abs(a.dot(b)); }

}  // namespace gaitmag::testing
