#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include "gaitmag/error.hpp"
#include "gaitmag/pipeline.hpp"
#include "support.hpp"

using namespace gaitmag;
using namespace gaitmag::testing;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::Io;
}

PacketRecord pose_packet(double t, int rx, double v) {
  return {t, rx, PosePayload{{v, 0, 0}, Quaternion::identity()}};
}

RxSeries series(std::vector<double> t, std::vector<double> v) {
  RxSeries s;
  s.t = std::move(t);
  s.values = Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return s;
}

// Two-subject cohort shared by the dataset tests; generated once.
const fs::path& small_cohort() {
  static const fs::path dir = [] {
    CohortConfig cfg;
    cfg.out_dir = fs::temp_directory_path() / "gaitmag_test_pipeline_cohort";
    fs::remove_all(cfg.out_dir);
    gen_cohort(2, cfg);
    return cfg.out_dir;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("golden feature layout") {
  CHECK(feature_names(Modality::Magnetic) ==
        std::vector<std::string>{"left_x", "left_y", "left_z", "left_yaw", "left_pitch", "left_roll", "right_x",
                                 "right_y", "right_z", "right_yaw", "right_pitch", "right_roll"});
  CHECK(feature_names(Modality::Imu) ==
        std::vector<std::string>{"left_gyro_x",   "left_gyro_y",   "left_gyro_z",   "left_accel_x",
                                 "left_accel_y",  "left_accel_z",  "left_magno_x",  "left_magno_y",
                                 "left_magno_z",  "right_gyro_x",  "right_gyro_y",  "right_gyro_z",
                                 "right_accel_x", "right_accel_y", "right_accel_z", "right_magno_x",
                                 "right_magno_y", "right_magno_z"});
  CHECK(rx_channel_count(Modality::Magnetic) == 7);
  CHECK(rx_channel_count(Modality::Imu) == 9);
}

TEST_CASE("deinterleave") {
  const std::vector<PacketRecord> p{pose_packet(0, 1, 10), pose_packet(1, 2, 20), pose_packet(2, 2, 30),
                                    pose_packet(3, 1, 40)};
  const auto [left, right] = deinterleave(p, Modality::Magnetic);
  CHECK(left.t == std::vector<double>{0, 3});
  CHECK(right.t == std::vector<double>{1, 2});
  CHECK(left.values(0, 0) == 10);
  CHECK(left.values(1, 0) == 40);
  CHECK(right.values(1, 0) == 30);
  CHECK(left.values.cols() == 7);
  CHECK(left.values(0, 3) == 1.0);  // qw

  const auto [el, er] = deinterleave({}, Modality::Imu);
  CHECK(el.size() == 0);
  CHECK(er.size() == 0);

  CHECK(code_of([] { deinterleave({pose_packet(0, 3, 0)}, Modality::Magnetic); }) == ErrorCode::UnknownRxId);
  CHECK(code_of([] { deinterleave({pose_packet(0, 1, 0)}, Modality::Imu); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("deinterleave a simulated recording") {
  const Manifest m = read_manifest(small_cohort() / "manifest.csv");
  const auto e = m.select(Modality::Magnetic).front();
  const auto [left, right] = deinterleave(read_packet_log(m.root / e.path, Modality::Magnetic), Modality::Magnetic);
  CHECK(std::abs(static_cast<double>(left.size()) - 3000.0) <= 150.0);
  CHECK(std::abs(static_cast<double>(right.size()) - 3000.0) <= 150.0);
}

TEST_CASE("union_grid") {
  const std::vector<double> a{0, 1, 3}, b{1, 2, 5};
  CHECK(union_grid(a, b) == std::vector<double>{0, 1, 2, 3, 5});
  CHECK(union_grid(a, {}) == a);
}

TEST_CASE("fill_gaps: linear midpoint and end holding") {
  const std::vector<double> grid{-0.01, 0.0, 0.1, 0.2, 0.21};
  const RxSeries out = fill_gaps(series({0, 0.2}, {0, 2}), grid);
  REQUIRE(out.size() == 5);
  CHECK(out.values(0, 0) == 0.0);
  CHECK(out.values(2, 0) == 1.0);
  CHECK(out.values(4, 0) == 2.0);
  CHECK(out.t == grid);
}

TEST_CASE("fill_gaps: quaternion midpoint against slerp") {
  RxSeries s;
  s.t = {0.0, 0.2};
  s.values.resize(2, 4);
  const Quaternion yaw90 = euler_to_quat({std::numbers::pi / 2, 0, 0});
  s.values.row(0) << 1, 0, 0, 0;
  // Opposite sign on purpose: the fill must align signs first.
  s.values.row(1) << -yaw90.w, -yaw90.x, -yaw90.y, -yaw90.z;
  const std::vector<double> grid{0.0, 0.05, 0.1, 0.15, 0.2};
  const RxSeries out = fill_gaps(s, grid, 0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto r = out.values.row(static_cast<Eigen::Index>(i));
    const Quaternion q{r(0), r(1), r(2), r(3)};
    CHECK(q.norm() == doctest::Approx(1.0).epsilon(1e-12));
    // slerp oracle: a pure yaw rotation by grid[i] * 90 degrees
    const double yaw = quat_to_euler(q).angles.yaw;
    CHECK(std::abs(yaw - grid[i] * 5 * std::numbers::pi / 2) < std::numbers::pi / 180);
  }
  CHECK(std::abs(quat_to_euler({out.values(2, 0), out.values(2, 1), out.values(2, 2), out.values(2, 3)}).angles.yaw -
                 std::numbers::pi / 4) < 1e-12);
}

TEST_CASE("fill_gaps: gaps beyond 250 ms are rejected") {
  CHECK_NOTHROW(fill_gaps(series({0, 0.2, 0.4}, {0, 1, 2}), std::vector<double>{0, 0.1, 0.4}));
  CHECK(code_of([] { fill_gaps(series({0, 0.3}, {0, 1}), std::vector<double>{0, 0.15, 0.3}); }) ==
        ErrorCode::TooSparse);
  CHECK(code_of([] { fill_gaps(series({0}, {0}), std::vector<double>{0}); }) == ErrorCode::TooSparse);
  // A grid reaching 300 ms past the last sample is a gap too.
  CHECK(code_of([] { fill_gaps(series({0, 0.1}, {0, 1}), std::vector<double>{0, 0.4}); }) == ErrorCode::TooSparse);
}

TEST_CASE("median filter") {
  Eigen::MatrixXd spike(5, 1);
  spike << 0, 0, 9, 0, 0;
  CHECK(median_filter(spike)(2, 0) == 0.0);
  const Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(20, 3, 4.5);
  CHECK(median_filter(flat) == flat);

  Rng rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(40)), c = 1 + static_cast<int>(rng.below(3));
    Eigen::MatrixXd x(n, c);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) x(i, j) = std::round(rng.normal() * 3);  // ties included
    const Eigen::MatrixXd y = median_filter(x, 5);
    for (int i = 0; i < n; ++i) {
      const int half = std::min({2, i, n - 1 - i});
      for (int j = 0; j < c; ++j) {
        std::vector<double> w;
        for (int k = i - half; k <= i + half; ++k) w.push_back(x(k, j));
        std::sort(w.begin(), w.end());
        CHECK(y(i, j) == w[w.size() / 2]);
      }
    }
  }
}

TEST_CASE("resample") {
  Rng rng(82);
  std::vector<double> t;
  for (int i = 0; i < 2990; ++i) t.push_back(10.0 * i / 2989.0 + (i > 0 && i < 2989 ? rng.uniform(-1e-3, 1e-3) : 0.0));
  Eigen::MatrixXd ramp(2990, 2);
  for (int i = 0; i < 2990; ++i) ramp.row(i) << 3.0 * t[static_cast<std::size_t>(i)] - 1.0, -t[static_cast<std::size_t>(i)];
  const FrameSeries out = resample(t, ramp, 3000);
  REQUIRE(out.size() == 3000);
  CHECK(out.rate_hz == doctest::Approx(2999.0 / 10.0));
  for (Eigen::Index i = 0; i < 3000; ++i) {
    const double ti = out.t0 + static_cast<double>(i) / out.rate_hz;
    CHECK(out.channels(i, 0) == doctest::Approx(3.0 * ti - 1.0).epsilon(1e-12));
    CHECK(out.channels(i, 1) == doctest::Approx(-ti).epsilon(1e-12));
  }

  std::vector<double> uniform(3000);
  Eigen::MatrixXd x(3000, 1);
  for (int i = 0; i < 3000; ++i) {
    uniform[static_cast<std::size_t>(i)] = i / 300.0;
    x(i, 0) = rng.normal();
  }
  const FrameSeries same = resample(uniform, x, 3000);
  CHECK((same.channels - x).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("quaternion channels to Euler") {
  Eigen::MatrixXd x(3, 5);
  x.row(0) << 7, 1, 0, 0, 0;
  const Quaternion yaw90 = euler_to_quat({std::numbers::pi / 2, 0, 0});
  x.row(1) << 7, yaw90.w, yaw90.x, yaw90.y, yaw90.z;
  x.row(2) << 7, yaw90.w, yaw90.x, yaw90.y, yaw90.z;
  const std::vector<int> cols{1};
  const Eigen::MatrixXd e = quat_channels_to_euler(x, cols);
  REQUIRE(e.cols() == 4);
  CHECK(e(0, 0) == 7);
  CHECK(e.row(0).tail(3).isZero());
  CHECK(e(1, 1) == doctest::Approx(std::numbers::pi / 2));
  CHECK(e(2, 1) == doctest::Approx(std::numbers::pi / 2));

  Rng rng(83);
  Eigen::MatrixXd q(500, 4);
  for (int i = 0; i < 500; ++i) {
    Quaternion r;
    do {
      r = random_quat(rng);
    } while (std::abs(quat_to_euler(r).angles.pitch) >= 1.4);
    q.row(i) << r.w, r.x, r.y, r.z;
  }
  const std::vector<int> c0{0};
  const Eigen::MatrixXd a = quat_channels_to_euler(q, c0);
  for (int i = 0; i < 500; ++i) {
    const Quaternion back = euler_to_quat({a(i, 0), a(i, 1), a(i, 2)});
    CHECK(angle_between(back, {q(i, 0), q(i, 1), q(i, 2), q(i, 3)}) < 1e-7);
  }
}

TEST_CASE("yaw is unwrapped across the pi boundary") {
  Eigen::MatrixXd q(200, 4);
  for (int i = 0; i < 200; ++i) {
    const Quaternion r = euler_to_quat({0.05 * i, 0.1, 0.0});
    q.row(i) << r.w, r.x, r.y, r.z;
  }
  const std::vector<int> c0{0};
  const Eigen::MatrixXd a = quat_channels_to_euler(q, c0);
  for (int i = 0; i < 200; ++i) CHECK(a(i, 0) == doctest::Approx(0.05 * i).epsilon(1e-9));
}

TEST_CASE("lowpass requires the 300 Hz grid") {
  FrameSeries s;
  s.channels = Eigen::MatrixXd::Constant(100, 2, 3.0);
  CHECK((lowpass(s).channels.array() - 3.0).abs().maxCoeff() < 1e-6 * 3.0);
  s.rate_hz = 299.0;
  CHECK(code_of([&] { lowpass(s); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("segment counts") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(3000, 12);
  CHECK(window_slide(600) == 300);
  CHECK(window_slide(500) == 250);
  CHECK(window_slide(100) == 50);
  const auto w600 = segment(x, 600), w500 = segment(x, 500);
  CHECK(w600.size() == 9);
  CHECK(w500.size() == 11);
  CHECK(w500[3] == x.middleRows(750, 500));
  CHECK(w600.back() == x.bottomRows(600));
  CHECK(code_of([] { segment(Eigen::MatrixXd::Zero(500, 1), 600); }) == ErrorCode::SeriesTooShort);
}

TEST_CASE("normalize window") {
  Eigen::MatrixXd w(3, 2);
  w << 2, 5, 4, 5, 6, 5;
  const Eigen::MatrixXd n = normalize_window(w);
  CHECK(n(0, 0) == 0.0);
  CHECK(n(1, 0) == 0.5);
  CHECK(n(2, 0) == 1.0);
  CHECK(n.col(1).isZero());

  Rng rng(84);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd x(20 + static_cast<int>(rng.below(50)), 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal(rng.uniform(-100, 100), 10);
    const Eigen::MatrixXd y = normalize_window(x);
    for (Eigen::Index c = 0; c < 4; ++c) {
      CHECK(y.col(c).minCoeff() == 0.0);
      CHECK(y.col(c).maxCoeff() == 1.0);
    }
  }
}

TEST_CASE("preprocess a simulated recording") {
  const Manifest m = read_manifest(small_cohort() / "manifest.csv");
  for (Modality mod : {Modality::Magnetic, Modality::Imu}) {
    const auto e = m.select(mod).front();
    const FrameSeries s = preprocess_recording(read_packet_log(m.root / e.path, mod), mod, e.duration_s);
    CHECK(s.size() == 3000);
    CHECK(s.rate_hz == 300.0);
    CHECK(s.names == feature_names(mod));
    CHECK(s.channels.allFinite());
  }
}

TEST_CASE("build_dataset counts, ranges and determinism") {
  const Manifest m = read_manifest(small_cohort() / "manifest.csv");
  const Dataset a = build_dataset(m, Modality::Magnetic, 500, SplitSpec{});
  CHECK(a.n_features == 12);
  CHECK(a.feature_names == feature_names(Modality::Magnetic));
  CHECK(a.class_counts() == std::vector<std::size_t>{132, 132, 132, 132});  // 2 x 6 x 11
  CHECK(a.indices(Split::Train).size() == 422);  // round(528 * 0.8)
  CHECK(a.indices(Split::Val).size() == 53);
  CHECK(a.indices(Split::Test).size() == 53);
  for (float v : a.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  const Dataset b = build_dataset(m, Modality::Magnetic, 500, SplitSpec{});
  CHECK(a.data == b.data);
  CHECK(a.split == b.split);

  SplitSpec other;
  other.shuffle_seed = 2;
  CHECK(build_dataset(m, Modality::Magnetic, 500, other).split != a.split);

  Manifest shuffled = m;
  Rng rng(85);
  rng.shuffle(shuffled.entries.begin(), shuffled.entries.end());
  const Dataset c = build_dataset(shuffled, Modality::Magnetic, 500, SplitSpec{});
  CHECK(c.data == a.data);
  CHECK(c.labels == a.labels);

  const Dataset imu = build_dataset(m, Modality::Imu, 600, SplitSpec{});
  CHECK(imu.n_features == 18);
  CHECK(imu.class_counts() == std::vector<std::size_t>{108, 108, 108, 108});  // 2 x 6 x 9
}

TEST_CASE("build_dataset by subject holds out whole subjects") {
  const Manifest m = read_manifest(small_cohort() / "manifest.csv");
  SplitSpec s{50, 0, 50, 1, true};
  const Dataset d = build_dataset(m, Modality::Magnetic, 600, s);
  int split_of[3] = {-1, -1, -1};
  for (std::size_t i = 0; i < d.size(); ++i) {
    int& seen = split_of[d.subject_ids[i]];
    if (seen < 0) seen = static_cast<int>(d.split[i]);
    CHECK(seen == static_cast<int>(d.split[i]));
  }
  CHECK(split_of[1] != split_of[2]);
}

TEST_CASE("build_dataset errors") {
  Manifest m = read_manifest(small_cohort() / "manifest.csv");
  for (ManifestEntry& e : m.entries)
    if (e.modality == Modality::Magnetic) e.activity.clear();
  CHECK(code_of([&] { build_dataset(m, Modality::Magnetic, 500, SplitSpec{}); }) == ErrorCode::LabelMissing);
  SplitSpec bad{80, 10, 5};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("dataset file round trip and header") {
  const Manifest m = read_manifest(small_cohort() / "manifest.csv");
  const Dataset d = build_dataset(m, Modality::Imu, 500, SplitSpec{});
  const fs::path path = fs::temp_directory_path() / "gaitmag_test_dataset.bin";
  save_dataset(path, d);
  const std::string bytes = slurp(path);
  REQUIRE(bytes.size() > 64);
  CHECK(bytes.substr(0, 8) == "GMDSET01");
  std::uint32_t u32[4];
  std::memcpy(u32, bytes.data() + 8, sizeof u32);
  CHECK(u32[0] == 1);    // version
  CHECK(u32[1] == 1);    // modality: IMU
  CHECK(u32[2] == 500);  // window_len
  CHECK(u32[3] == 18);   // n_features
  std::uint64_t n;
  std::memcpy(&n, bytes.data() + 24, sizeof n);
  CHECK(n == d.size());

  const Dataset back = load_dataset(path);
  CHECK(back.modality == d.modality);
  CHECK(back.feature_names == d.feature_names);
  CHECK(back.data == d.data);
  CHECK(back.labels == d.labels);
  CHECK(back.subject_ids == d.subject_ids);
  CHECK(back.recording_ids == d.recording_ids);
  CHECK(back.split == d.split);
  CHECK(back.config == d.config);
  save_dataset(path.string() + ".2", back);
  CHECK(slurp(path.string() + ".2") == bytes);

  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << bytes.substr(0, bytes.size() / 2);
  }
  CHECK(code_of([&] { load_dataset(path); }) == ErrorCode::Parse);
  fs::remove(path);
  fs::remove(path.string() + ".2");
}

TEST_CASE("select_features keeps the requested columns") {
  const Manifest m = read_manifest(small_cohort() / "manifest.csv");
  const Dataset d = build_dataset(m, Modality::Magnetic, 600, SplitSpec{});
  const std::vector<int> cols{3, 4, 5, 9, 10, 11};
  const Dataset o = d.select_features(cols);
  CHECK(o.n_features == 6);
  CHECK(o.feature_names ==
        std::vector<std::string>{"left_yaw", "left_pitch", "left_roll", "right_yaw", "right_pitch", "right_roll"});
  const auto w = d.window(17), v = o.window(17);
  for (int t = 0; t < 600; ++t)
    for (int k = 0; k < 6; ++k) CHECK(v[static_cast<std::size_t>(t * 6 + k)] == w[static_cast<std::size_t>(t * 12 + cols[static_cast<std::size_t>(k)])]);
  CHECK(o.split == d.split);
}
