#include "gaitmag/magmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "gaitmag/error.hpp"

namespace gaitmag {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr int kMaxNewtonSteps = 5;

using Mat3 = std::array<std::array<double, 3>, 3>;

// |B| = M/(4 pi r^3) * sqrt(27u^2 - 15u + 4) with u = cos^2(polar angle).
double shape_factor(double u) { return std::sqrt(27.0 * u * u - 15.0 * u + 4.0); }

// Bz/|B| as a function of u; strictly increasing on [0, 1] from -1 to 1.
double axial_ratio(double u) { return 2.0 * (3.0 * u - 1.0) / shape_factor(u); }

Mat3 field_jacobian(const Vec3& p, double moment) {
  const double r2 = p.dot(p);
  const double r = std::sqrt(r2);
  const double inv5 = 1.0 / (r2 * r2 * r);
  const double inv7 = inv5 / r2;
  const double s = moment / kFourPi;
  const double h = 2.0 * (2.0 * p.z * p.z - p.x * p.x - p.y * p.y);
  const double x = p.x, y = p.y, z = p.z;
  Mat3 j{};
  j[0] = {3.0 * z * inv5 - 15.0 * x * x * z * inv7, -15.0 * x * y * z * inv7,
          3.0 * x * inv5 - 15.0 * x * z * z * inv7};
  j[1] = {-15.0 * x * y * z * inv7, 3.0 * z * inv5 - 15.0 * y * y * z * inv7,
          3.0 * y * inv5 - 15.0 * y * z * z * inv7};
  j[2] = {-4.0 * x * inv5 - 5.0 * x * h * inv7, -4.0 * y * inv5 - 5.0 * y * h * inv7,
          8.0 * z * inv5 - 5.0 * z * h * inv7};
  for (auto& row : j)
    for (double& v : row) v *= s;
  return j;
}

bool solve3(const Mat3& a, const Vec3& rhs, Vec3& out) {
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  if (!std::isfinite(det) || det == 0.0) return false;
  const double b[3] = {rhs.x, rhs.y, rhs.z};
  double res[3];
  for (int col = 0; col < 3; ++col) {
    Mat3 m = a;
    for (int row = 0; row < 3; ++row) m[row][col] = b[row];
    res[col] = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
               det;
  }
  out = {res[0], res[1], res[2]};
  return out.finite();
}

Vec3 field_unchecked(const Vec3& p, double moment) {
  const double r2 = p.dot(p);
  const double r5 = r2 * r2 * std::sqrt(r2);
  const double s = moment / (kFourPi * r5);
  return {3.0 * p.x * p.z * s, 3.0 * p.y * p.z * s,
          2.0 * (2.0 * p.z * p.z - p.x * p.x - p.y * p.y) * s};
}

// Root of (27g^2 - 36)u^2 + (24 - 15g^2)u + (4g^2 - 4) = 0 lying in [0, 1]
// that satisfies the unsquared relation axial_ratio(u) = g.
double solve_cos2(double g) {
  const double g2 = g * g;
  const double a = 27.0 * g2 - 36.0;
  const double b = 24.0 - 15.0 * g2;
  const double c = 4.0 * g2 - 4.0;
  // The discriminant factors as g^2 (288 - 207 g^2).
  const double sq = std::abs(g) * std::sqrt(std::max(0.0, 288.0 - 207.0 * g2));
  const double q = -0.5 * (b + sq);  // b >= 9, so no cancellation
  std::array<double, 2> roots{q / a, q != 0.0 ? c / q : q / a};
  double best = std::clamp(roots[0], 0.0, 1.0);
  double best_err = std::abs(axial_ratio(best) - g);
  const double alt = std::clamp(roots[1], 0.0, 1.0);
  if (std::abs(axial_ratio(alt) - g) < best_err) best = alt;
  return best;
}

}  // namespace

void DipoleParams::validate() const {
  if (!(moment > 0.0) || !std::isfinite(moment))
    throw Error(ErrorCode::InvalidConfig, "dipole moment must be positive");
  if (!(r_min > 0.0) || !(r_max > r_min) || !std::isfinite(r_max))
    throw Error(ErrorCode::InvalidConfig, "tracking range requires 0 < r_min < r_max");
}

Vec3 forward_field(const Vec3& p, const DipoleParams& params) {
  const double r = p.norm();
  if (!(r >= params.r_min))
    throw Error(ErrorCode::DegeneratePosition,
                "|p| = " + std::to_string(r) + " m is inside r_min = " + std::to_string(params.r_min));
  return field_unchecked(p, params.moment);
}

double min_field_magnitude(const DipoleParams& params) {
  // min over u of sqrt(27u^2 - 15u + 4) is sqrt(23/12), reached at u = 5/18.
  const double r3 = params.r_max * params.r_max * params.r_max;
  return params.moment / (kFourPi * r3) * std::sqrt(23.0 / 12.0);
}

double max_field_magnitude(const DipoleParams& params) {
  const double r3 = params.r_min * params.r_min * params.r_min;
  return params.moment / (kFourPi * r3) * 4.0;
}

FieldInversion invert_field(const Vec3& b_tx, const DipoleParams& params, const HalfSpace& hs) {
  const double nrm = hs.normal.norm();
  if (std::abs(nrm - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidConfig, "half-space normal must be a unit vector");
  const double magnitude = b_tx.norm();
  const double lo = min_field_magnitude(params);
  const double hi = max_field_magnitude(params);
  if (!std::isfinite(magnitude) || magnitude < lo || magnitude > hi)
    throw Error(ErrorCode::OutOfRange, "|B| = " + std::to_string(magnitude) + " outside [" +
                                           std::to_string(lo) + ", " + std::to_string(hi) + "]");

  const double g = std::clamp(b_tx.z / magnitude, -1.0, 1.0);
  const double u = solve_cos2(g);
  const double r = std::cbrt(params.moment * shape_factor(u) / (kFourPi * magnitude));

  FieldInversion out;
  const double horizontal = std::hypot(b_tx.x, b_tx.y);
  double azimuth = 0.0;
  if (horizontal == 0.0)
    out.ambiguous_azimuth = true;
  else
    azimuth = std::atan2(b_tx.y, b_tx.x);  // the z >= 0 branch makes 3Mz/(4 pi r^5) positive
  const double rho = r * std::sqrt(std::max(0.0, 1.0 - u));
  Vec3 p{rho * std::cos(azimuth), rho * std::sin(azimuth), r * std::sqrt(u)};

  // Safeguarded Newton polish on the forward model.
  auto residual = [&](const Vec3& q) { return field_unchecked(q, params.moment) - b_tx; };
  Vec3 res = residual(p);
  double res_norm = res.norm();
  for (int it = 0; it < kMaxNewtonSteps && res_norm > 1e-15 * magnitude; ++it) {
    Vec3 step;
    if (!solve3(field_jacobian(p, params.moment), -res, step)) break;
    bool accepted = false;
    for (int halving = 0; halving < 8; ++halving) {
      const Vec3 trial = p + step;
      const Vec3 trial_res = residual(trial);
      const double trial_norm = trial_res.norm();
      if (trial_norm < res_norm) {
        p = trial;
        res = trial_res;
        res_norm = trial_norm;
        accepted = true;
        break;
      }
      step = step * 0.5;
    }
    if (!accepted) break;
    out.newton_iterations = it + 1;
  }

  if (p.dot(hs.normal) < 0.0) p = -p;
  const double pr = p.norm();
  if (pr < params.r_min * (1.0 - 1e-9) || pr > params.r_max * (1.0 + 1e-9))
    throw Error(ErrorCode::OutOfRange,
                "recovered range " + std::to_string(pr) + " m outside tracking range");
  out.position = p;
  return out;
}

Vec3 resolve_frame(const Measurement& m) {
  return rotate_vec(relative_orientation(m.q_tx, m.q_rx), m.b_rx);
}

Pose track(const Measurement& m, const DipoleParams& params, const HalfSpace& hs) {
  const Quaternion rel = relative_orientation(m.q_tx, m.q_rx);
  const Vec3 b_tx = rotate_vec(rel, m.b_rx);
  return {invert_field(b_tx, params, hs).position, rel};
}

}  // namespace gaitmag
