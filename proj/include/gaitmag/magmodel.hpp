#pragma once

#include "gaitmag/geom.hpp"

namespace gaitmag {

/// Point-source dipole of moment `moment` at the Tx origin, pointing along +z
/// of the Tx frame. The tracking range bounds the positions the inverse solver
/// will accept and, through the field model, the admissible field magnitudes.
struct DipoleParams {
  double moment = 1.0;
  double r_min = 0.05;  // m
  double r_max = 1.5;   // m

  void validate() const;
};

/// Field measurement from one Rx together with both module orientations
/// (each relative to earth).
struct Measurement {
  Vec3 b_rx;
  Quaternion q_rx;
  Quaternion q_tx;
  double t = 0.0;
};

/// Rx pose in the Tx frame.
struct Pose {
  Vec3 position;
  Quaternion orientation;
};

/// The dipole field is symmetric under p -> -p; the half-space
/// {p : p . normal >= 0} picks the physical solution.
struct HalfSpace {
  Vec3 normal{0.0, 0.0, 1.0};
};

struct FieldInversion {
  Vec3 position;
  /// Field lies on the dipole axis or in the equatorial plane, where the
  /// azimuth of the source point is undetermined; azimuth 0 is returned.
  bool ambiguous_azimuth = false;
  int newton_iterations = 0;
};

/// (Bx, By, Bz) = M/(4 pi r^5) * (3xz, 3yz, 2(2z^2 - x^2 - y^2)).
/// Throws DegeneratePosition when |p| < r_min.
Vec3 forward_field(const Vec3& p, const DipoleParams& params);

/// Admissible |B| interval over the tracking range.
double min_field_magnitude(const DipoleParams& params);
double max_field_magnitude(const DipoleParams& params);

/// Closed-form inverse of forward_field followed by at most five safeguarded
/// Newton steps. Throws OutOfRange when |b_tx| lies outside the admissible
/// interval.
FieldInversion invert_field(const Vec3& b_tx, const DipoleParams& params, const HalfSpace& hs = {});

/// Rotates the Rx-frame field into the Tx frame.
Vec3 resolve_frame(const Measurement& m);

Pose track(const Measurement& m, const DipoleParams& params, const HalfSpace& hs = {});

}  // namespace gaitmag
