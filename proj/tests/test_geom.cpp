#include <doctest.h>

#include <numbers>

#include "gaitmag/geom.hpp"
#include "support.hpp"

using namespace gaitmag;
using namespace gaitmag::testing;

namespace {
constexpr double kPi = std::numbers::pi;
const Quaternion kYaw90{std::sqrt(0.5), 0.0, 0.0, std::sqrt(0.5)};
}  // namespace

TEST_CASE("quat_mul identity and inverse") {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Quaternion q = random_quat(rng);
    CHECK(qdist(quat_mul(Quaternion::identity(), q), q) < 1e-15);
    const Quaternion e = quat_mul(q, conjugate(q));
    CHECK(e.w == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(e.x) + std::abs(e.y) + std::abs(e.z) < 1e-15);
  }
}

TEST_CASE("quat_mul matches the 4x4 left-multiplication matrix") {
  Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion a = random_quat(rng), b = random_quat(rng);
    const double L[4][4] = {{a.w, -a.x, -a.y, -a.z}, {a.x, a.w, -a.z, a.y}, {a.y, a.z, a.w, -a.x}, {a.z, -a.y, a.x, a.w}};
    const double bv[4] = {b.w, b.x, b.y, b.z};
    double r[4] = {};
    for (int row = 0; row < 4; ++row)
      for (int k = 0; k < 4; ++k) r[row] += L[row][k] * bv[k];
    const Quaternion expect = normalize({r[0], r[1], r[2], r[3]});
    const Quaternion got = quat_mul(a, b);
    CHECK(std::abs(got.w - expect.w) < 1e-14);
    CHECK(std::abs(got.x - expect.x) < 1e-14);
    CHECK(std::abs(got.y - expect.y) < 1e-14);
    CHECK(std::abs(got.z - expect.z) < 1e-14);
    CHECK(got.w >= 0.0);
  }
}

TEST_CASE("quat_mul is associative") {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion a = random_quat(rng), b = random_quat(rng), c = random_quat(rng);
    CHECK(qdist(quat_mul(quat_mul(a, b), c), quat_mul(a, quat_mul(b, c))) < 1e-12);
  }
}

TEST_CASE("normalize gives unit norm with w >= 0") {
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const Quaternion n = normalize(q);
    CHECK(std::abs(n.norm() - 1.0) < 1e-9);
    CHECK(n.w >= 0.0);
  }
}

TEST_CASE("rotate_vec fixed cases") {
  const Vec3 v = rotate_vec(Quaternion::identity(), {1, 2, 3});
  CHECK(v == Vec3{1, 2, 3});
  const Vec3 r = rotate_vec(kYaw90, {1, 0, 0});
  CHECK(r.x == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.y == doctest::Approx(1.0));
  CHECK(r.z == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("rotate_vec matches the rotation-matrix oracle and is an isometry") {
  Rng rng(15);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion q = random_quat(rng);
    const Vec3 a = random_vec(rng, 3.0), b = random_vec(rng, 3.0);
    const Vec3 ra = rotate_vec(q, a), rb = rotate_vec(q, b);
    CHECK(vdist(ra, rotation_matrix(q) * a) < 1e-14 * (1 + a.norm()));
    CHECK(std::abs(ra.norm() - a.norm()) <= 1e-12 * a.norm());
    CHECK(std::abs(ra.dot(rb) - a.dot(b)) < 1e-12 * (1 + a.norm() * b.norm()));
  }
}

TEST_CASE("relative_orientation") {
  Rng rng(16);
  for (int i = 0; i < 1000; ++i) {
    const Quaternion tx = random_quat(rng), rx = random_quat(rng);
    CHECK(qdist(relative_orientation(tx, tx), Quaternion::identity()) < 1e-15);
    CHECK(qdist(relative_orientation(Quaternion::identity(), rx), rx) < 1e-15);
    const Vec3 v = random_vec(rng);
    const Vec3 composed = rotate_vec(conjugate(tx), rotate_vec(rx, v));
    CHECK(vdist(rotate_vec(relative_orientation(tx, rx), v), composed) < 1e-14);
  }
}

TEST_CASE("quat_to_euler fixed cases") {
  const EulerConversion id = quat_to_euler(Quaternion::identity());
  CHECK(id.angles.yaw == 0.0);
  CHECK(id.angles.pitch == 0.0);
  CHECK(id.angles.roll == 0.0);
  CHECK_FALSE(id.gimbal_lock);
  const EulerAngles e = quat_to_euler(kYaw90).angles;
  CHECK(e.yaw == doctest::Approx(kPi / 2));
  CHECK(e.pitch == doctest::Approx(0.0));
  CHECK(e.roll == doctest::Approx(0.0));
}

TEST_CASE("euler_to_quat follows intrinsic ZYX: R = Rz(yaw) Ry(pitch) Rx(roll)") {
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    const EulerAngles e{rng.uniform(-kPi, kPi), rng.uniform(-1.5, 1.5), rng.uniform(-kPi, kPi)};
    const Mat3 expect = rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
    const Mat3 got = rotation_matrix(euler_to_quat(e));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(std::abs(got.m[r][c] - expect.m[r][c]) < 1e-14);
  }
}

TEST_CASE("Euler round trip over uniform random rotations") {
  Rng rng(18);
  int tested = 0;
  while (tested < 1000) {
    const Quaternion q = random_quat(rng);
    const EulerConversion c = quat_to_euler(q);
    CHECK(c.angles.yaw > -kPi);
    CHECK(c.angles.yaw <= kPi);
    CHECK(c.angles.roll > -kPi);
    CHECK(c.angles.roll <= kPi);
    CHECK(std::abs(c.angles.pitch) <= kPi / 2);
    if (std::abs(c.angles.pitch) >= 1.4) continue;
    ++tested;
    const Quaternion back = euler_to_quat(c.angles);
    CHECK(std::abs(q.dot(back)) > 1 - 1e-9);
    CHECK(angle_between(q, back) < 1e-7);
    // Angles themselves survive the trip.
    const EulerAngles again = quat_to_euler(back).angles;
    CHECK(std::abs(std::remainder(again.yaw - c.angles.yaw, 2 * kPi)) < 1e-7);
    CHECK(std::abs(again.pitch - c.angles.pitch) < 1e-7);
    CHECK(std::abs(std::remainder(again.roll - c.angles.roll, 2 * kPi)) < 1e-7);
  }
}

TEST_CASE("gimbal lock folds heading into yaw") {
  for (double pitch : {kPi / 2, -kPi / 2}) {
    for (double yaw : {-2.0, 0.3, 1.0}) {
      for (double roll : {0.0, 0.4}) {
        const Quaternion q = euler_to_quat({yaw, pitch, roll});
        const EulerConversion c = quat_to_euler(q);
        CHECK(c.gimbal_lock);
        CHECK(c.angles.roll == 0.0);
        // The reported angles must still describe the same rotation.
        CHECK(angle_between(euler_to_quat(c.angles), q) < 1e-6);
      }
    }
  }
  CHECK_FALSE(quat_to_euler(euler_to_quat({0.1, kPi / 2 - 1e-3, 0.2})).gimbal_lock);
}

TEST_CASE("angle_between") {
  CHECK(angle_between(Quaternion::identity(), kYaw90) == doctest::Approx(kPi / 2));
  const Quaternion neg{-kYaw90.w, -kYaw90.x, -kYaw90.y, -kYaw90.z};
  CHECK(angle_between(kYaw90, neg) < 1e-15);
  const Quaternion tiny = euler_to_quat({1e-9, 0, 0});
  CHECK(angle_between(Quaternion::identity(), tiny) == doctest::Approx(1e-9).epsilon(1e-6));
}
