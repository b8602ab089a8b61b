#include "gaitmag/simgait.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gaitmag/error.hpp"
#include "gaitmag/rng.hpp"

namespace gaitmag {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double frac(double v) { return v - std::floor(v); }

// Cubic Hermite on [0, 1].
double hermite(double s, double p0, double m0, double p1, double m1) {
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * p1 +
         (s3 - s2) * m1;
}

// Raised cosine, zero value and slope at both ends, peak 1 at s = 0.5.
double raised(double s) { return 0.5 * (1.0 - std::cos(kTwoPi * s)); }

// Toe-off plantarflexion followed by dorsiflexion before heel strike.
double pitch_bump(double s) { return -std::sin(kTwoPi * s) * raised(s); }

struct Kinematics {
  double cadence;
  double step;
  double lift;
  double stance;
  double pitch;
  double bob;
  double lean;
};

Kinematics activity_kinematics(const SubjectProfile& p, const ActivityParams& a) {
  Kinematics k{p.cadence_hz, p.step_length_m, p.foot_lift_m, p.stance_fraction,
               p.swing_pitch_rad, p.pelvis_bob_m, p.trunk_lean_rad};
  switch (a.activity) {
    case Activity::W:
      break;
    case Activity::WW:
      k.step *= 1.0 - a.weight_effect;
      k.lift *= 1.0 - a.weight_effect;
      k.cadence *= 1.0 - kWeightCadenceDrop * a.weight_effect;
      k.stance += kWeightStanceGain * a.weight_effect;
      k.lean += kWeightLeanRad * a.weight_effect;
      break;
    case Activity::J:
      k.cadence *= 2.0;
      k.lift *= 2.0;
      k.stance -= 0.2;
      k.pitch *= 1.3;
      k.bob *= 2.0;
      break;
    case Activity::M:
      k.step = 0.0;
      k.pitch *= 0.3;
      break;
  }
  return k;
}

Quaternion rotation_vector_quat(const Vec3& r) {
  const double angle = r.norm();
  if (angle < 1e-300) return Quaternion::identity();
  const Vec3 axis = r / angle;
  const double s = std::sin(angle * 0.5);
  return normalize({std::cos(angle * 0.5), axis.x * s, axis.y * s, axis.z * s});
}

Quaternion random_rotation(Rng& rng, double sigma) {
  if (sigma <= 0.0) return Quaternion::identity();
  return rotation_vector_quat({rng.normal(0, sigma), rng.normal(0, sigma), rng.normal(0, sigma)});
}

Vec3 gaussian_vec(Rng& rng, double sigma) {
  if (sigma <= 0.0) return {};
  return {rng.normal(0, sigma), rng.normal(0, sigma), rng.normal(0, sigma)};
}

Quaternion nlerp(const Quaternion& a, Quaternion b, double w) {
  if (a.dot(b) < 0.0) b = {-b.w, -b.x, -b.y, -b.z};
  return normalize({a.w + (b.w - a.w) * w, a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w,
                    a.z + (b.z - a.z) * w});
}

Vec3 lerp(const Vec3& a, const Vec3& b, double w) { return a + (b - a) * w; }

// Jittered, strictly increasing sample times for one Rx stream.
std::vector<double> jittered_times(double duration, double rate_hz, double jitter_frac, Rng& rng) {
  const auto n = static_cast<std::size_t>(std::llround(duration * rate_hz));
  const double period = 1.0 / rate_hz;
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) {
    double j = jitter_frac > 0.0 ? rng.normal(0.0, jitter_frac * period) : 0.0;
    j = std::clamp(j, -0.45 * period, 0.45 * period);
    t[k] = static_cast<double>(k) * period + j;
  }
  return t;
}

std::string recording_name(int subject, Activity a, int rep) {
  std::ostringstream os;
  os << 's' << (subject < 10 ? "0" : "") << subject << '_' << activity_name(a) << "_r" << rep << ".csv";
  return os.str();
}

}  // namespace

std::string_view activity_name(Activity a) {
  switch (a) {
    case Activity::J: return "J";
    case Activity::M: return "M";
    case Activity::W: return "W";
    case Activity::WW: return "WW";
  }
  return "?";
}

Activity parse_activity(std::string_view s) {
  if (s == "J") return Activity::J;
  if (s == "M") return Activity::M;
  if (s == "W") return Activity::W;
  if (s == "WW") return Activity::WW;
  throw Error(ErrorCode::LabelMissing,
              s.empty() ? std::string("activity label is empty") : "unknown activity '" + std::string(s) + "'");
}

void SubjectProfile::validate() const {
  if (!(cadence_hz >= 0.5 && cadence_hz <= 4.0))
    throw Error(ErrorCode::InvalidConfig, "cadence_hz must lie in [0.5, 4]");
  if (!(step_length_m >= 0.0 && step_length_m <= 1.2))
    throw Error(ErrorCode::InvalidConfig, "step_length_m must lie in [0, 1.2]");
  if (!(foot_lift_m >= 0.01 && foot_lift_m <= 0.5))
    throw Error(ErrorCode::InvalidConfig, "foot_lift_m must lie in [0.01, 0.5]");
  if (!(stance_fraction > 0.25 && stance_fraction < 0.9))
    throw Error(ErrorCode::InvalidConfig, "stance_fraction must lie in (0.25, 0.9)");
  if (!(leg_length_m > 0.3 && leg_length_m < 1.4))
    throw Error(ErrorCode::InvalidConfig, "leg_length_m must lie in (0.3, 1.4)");
}

void ActivityParams::validate() const {
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "duration_s must be positive");
  if (!(weight_effect >= 0.0 && weight_effect <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "weight_effect must lie in [0, 1]");
}

FootState TruthTrace::sample(int foot, double t) const {
  const auto& v = feet.at(static_cast<std::size_t>(foot));
  const double pos = (t - t0) * rate_hz;
  if (pos <= 0.0) return v.front();
  const auto last = static_cast<double>(v.size() - 1);
  if (pos >= last) return v.back();
  const auto i = static_cast<std::size_t>(pos);
  const double w = pos - static_cast<double>(i);
  const FootState& a = v[i];
  const FootState& b = v[i + 1];
  return {lerp(a.position, b.position, w), nlerp(a.orientation, b.orientation, w),
          lerp(a.earth_position, b.earth_position, w),
          nlerp(a.earth_orientation, b.earth_orientation, w)};
}

TruthTrace gen_trajectory(const SubjectProfile& profile, const ActivityParams& act) {
  profile.validate();
  act.validate();
  const Kinematics k = activity_kinematics(profile, act);

  TruthTrace trace;
  trace.rate_hz = 1000.0;
  trace.t0 = -kTraceMargin;
  trace.duration_s = act.duration_s;
  trace.tx_orientation = euler_to_quat({0.0, k.lean, 0.0});
  const auto n = static_cast<std::size_t>(std::llround((act.duration_s + 2 * kTraceMargin) * trace.rate_hz)) + 1;

  // Waist speed that keeps the stance foot fixed on the ground.
  const double speed = k.step * k.cadence / k.stance;
  const double tangent = -k.step * (1.0 - k.stance) / k.stance;

  for (int foot = 0; foot < 2; ++foot) {
    const double side = foot == 0 ? -1.0 : 1.0;
    const double offset = foot == 0 ? 0.0 : 0.5;
    auto& out = trace.feet[static_cast<std::size_t>(foot)];
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = trace.time(i);
      const double cycles = k.cadence * t + act.start_phase;
      const double phase = frac(cycles + offset);

      double x_rel = 0.0, lift = 0.0, lateral = 0.0, pitch = 0.0, roll = 0.0;
      if (phase < k.stance) {
        x_rel = 0.5 * k.step - k.step * phase / k.stance;
      } else {
        const double s = (phase - k.stance) / (1.0 - k.stance);
        x_rel = hermite(s, -0.5 * k.step, tangent, 0.5 * k.step, tangent);
        lift = k.lift * raised(s);
        lateral = 0.015 * raised(s);
        pitch = k.pitch * pitch_bump(s);
        roll = 0.1 * k.pitch * raised(s);
      }
      const double bob = k.bob * std::cos(kTwoPi * 2.0 * cycles);
      const double y = side * (0.5 * profile.step_width_m + lateral);

      FootState& st = out[i];
      st.earth_position = {x_rel + speed * t, y, -lift};
      st.earth_orientation = euler_to_quat({side * profile.toe_out_rad, pitch, side * roll});
      const Vec3 upright{x_rel, y, profile.leg_length_m + bob - lift};
      st.position = rotate_vec(conjugate(trace.tx_orientation), upright);
      st.orientation = relative_orientation(trace.tx_orientation, st.earth_orientation);
    }
  }
  return trace;
}

NoiseSpec NoiseSpec::none() {
  NoiseSpec n;
  n.field_rel_sigma = 0.0;
  n.orientation_sigma_rad = 0.0;
  n.jitter_frac = 0.0;
  n.p_drop = 0.0;
  n.accel_sigma = n.gyro_sigma = n.magno_sigma = 0.0;
  n.accel_bias_sigma = n.gyro_bias_sigma = n.magno_bias_sigma = 0.0;
  return n;
}

void NoiseSpec::validate() const {
  const double all[] = {field_rel_sigma, orientation_sigma_rad, jitter_frac, accel_sigma,
                        gyro_sigma, magno_sigma, accel_bias_sigma, gyro_bias_sigma, magno_bias_sigma};
  for (double v : all)
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "noise sigmas must be >= 0");
  if (!(p_drop >= 0.0 && p_drop < 1.0)) throw Error(ErrorCode::InvalidConfig, "p_drop must lie in [0, 1)");
  if (jitter_frac > 0.45) throw Error(ErrorCode::InvalidConfig, "jitter_frac must be <= 0.45");
}

SensorBias draw_bias(std::uint64_t noise_seed, const NoiseSpec& noise) {
  Rng rng(derive_seed(noise_seed, 0xb1a5));
  SensorBias b;
  for (std::size_t f = 0; f < 2; ++f) {
    b.gyro[f] = gaussian_vec(rng, noise.gyro_bias_sigma);
    b.accel[f] = gaussian_vec(rng, noise.accel_bias_sigma);
    b.magno[f] = gaussian_vec(rng, noise.magno_bias_sigma);
  }
  return b;
}

Vec3 earth_field() {
  const double dip = std::numbers::pi / 3.0;
  return {std::cos(dip), 0.0, std::sin(dip)};
}

std::vector<FieldPacket> synth_field(const TruthTrace& trace, const DipoleParams& params,
                                     const NoiseSpec& noise, double rate_hz, std::uint64_t seed,
                                     bool with_truth) {
  if (!(rate_hz >= 100.0 && rate_hz <= 1000.0))
    throw Error(ErrorCode::InvalidConfig, "rate_hz must lie in [100, 1000]");
  noise.validate();
  params.validate();
  std::vector<FieldPacket> out;
  for (int foot = 0; foot < 2; ++foot) {
    Rng rng(derive_seed(seed, 0xf1e1d, static_cast<std::uint64_t>(foot)));
    for (double t : jittered_times(trace.duration_s, rate_hz, noise.jitter_frac, rng)) {
      const bool dropped = noise.p_drop > 0.0 && rng.bernoulli(noise.p_drop);
      const FootState st = trace.sample(foot, t);
      Vec3 b_tx = forward_field(st.position, params);
      b_tx += gaussian_vec(rng, noise.field_rel_sigma * b_tx.norm());
      const Quaternion q_rx = quat_mul(st.earth_orientation, random_rotation(rng, noise.orientation_sigma_rad));
      const Quaternion q_tx = quat_mul(trace.tx_orientation, random_rotation(rng, noise.orientation_sigma_rad));
      if (dropped) continue;
      FieldPacket p;
      p.t = t;
      p.rx_id = foot + 1;
      // The coil senses the physical field in its true frame; the reported
      // orientations carry the estimation error.
      p.b_rx = rotate_vec(conjugate(st.orientation), b_tx);
      p.q_rx = q_rx;
      p.q_tx = q_tx;
      if (with_truth) p.truth = PosePayload{st.position, st.orientation};
      out.push_back(p);
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const FieldPacket& a, const FieldPacket& b) {
    return a.t < b.t || (a.t == b.t && a.rx_id < b.rx_id);
  });
  return out;
}

std::vector<PacketRecord> synth_magnetic(const TruthTrace& trace, const DipoleParams& params,
                                         const NoiseSpec& noise, double rate_hz, std::uint64_t seed,
                                         const HalfSpace& hs) {
  std::vector<PacketRecord> out;
  for (const FieldPacket& fp : synth_field(trace, params, noise, rate_hz, seed)) {
    Pose pose;
    try {
      pose = track({fp.b_rx, fp.q_rx, fp.q_tx, fp.t}, params, hs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfRange) throw;
      continue;  // the device emits nothing when the solve fails
    }
    out.push_back({fp.t, fp.rx_id, PosePayload{pose.position, pose.orientation}});
  }
  return out;
}

std::vector<PacketRecord> synth_imu(const TruthTrace& trace, const NoiseSpec& noise, double rate_hz,
                                    std::uint64_t seed, const SensorBias& bias) {
  if (!(rate_hz >= 100.0 && rate_hz <= 1000.0))
    throw Error(ErrorCode::InvalidConfig, "rate_hz must lie in [100, 1000]");
  noise.validate();
  const std::size_t n = trace.size();
  if (n < 3) throw Error(ErrorCode::InvalidConfig, "truth trace too short for differentiation");
  const double h = 1.0 / trace.rate_hz;
  const Vec3 gravity{0.0, 0.0, kGravity};
  const Vec3 field = earth_field();
  const double field_sigma = noise.magno_sigma * field.norm();

  std::vector<PacketRecord> out;
  for (int foot = 0; foot < 2; ++foot) {
    const auto f = static_cast<std::size_t>(foot);
    const auto& v = trace.feet[f];
    // Noise-free body-frame signals on the dense grid; central differences,
    // one sample in from each end.
    std::vector<ImuPayload> dense(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
      const Vec3 acc =
          (v[c + 1].earth_position - v[c].earth_position * 2.0 + v[c - 1].earth_position) / (h * h);
      const Quaternion delta = quat_mul(conjugate(v[c - 1].earth_orientation), v[c + 1].earth_orientation);
      const Vec3 axis{delta.x, delta.y, delta.z};
      const double s = axis.norm();
      Vec3 omega{};
      if (s > 0.0) omega = axis * (2.0 * std::atan2(s, delta.w) / (s * 2.0 * h));
      const Quaternion to_body = conjugate(v[i].earth_orientation);
      dense[i] = {omega, rotate_vec(to_body, acc - gravity), rotate_vec(to_body, field)};
    }

    Rng rng(derive_seed(seed, 0x1a0, f));
    for (double t : jittered_times(trace.duration_s, rate_hz, noise.jitter_frac, rng)) {
      const bool dropped = noise.p_drop > 0.0 && rng.bernoulli(noise.p_drop);
      const double pos = std::clamp((t - trace.t0) * trace.rate_hz, 0.0, static_cast<double>(n - 1));
      const auto i = std::min(static_cast<std::size_t>(pos), n - 2);
      const double w = pos - static_cast<double>(i);
      ImuPayload p{lerp(dense[i].gyro, dense[i + 1].gyro, w), lerp(dense[i].accel, dense[i + 1].accel, w),
                   lerp(dense[i].magno, dense[i + 1].magno, w)};
      p.gyro += bias.gyro[f] + gaussian_vec(rng, noise.gyro_sigma);
      p.accel += bias.accel[f] + gaussian_vec(rng, noise.accel_sigma);
      p.magno += bias.magno[f] + gaussian_vec(rng, field_sigma);
      if (dropped) continue;
      out.push_back({t, foot + 1, p});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const PacketRecord& a, const PacketRecord& b) {
    return a.t < b.t || (a.t == b.t && a.rx_id < b.rx_id);
  });
  return out;
}

void CohortConfig::validate() const {
  if (recordings_per_activity < 1)
    throw Error(ErrorCode::InvalidConfig, "recordings_per_activity must be >= 1");
  if (!(duration_s > 0.0)) throw Error(ErrorCode::InvalidConfig, "duration_s must be positive");
  if (!(rate_hz >= 100.0 && rate_hz <= 1000.0))
    throw Error(ErrorCode::InvalidConfig, "rate_hz must lie in [100, 1000]");
  if (!(weight_effect >= 0.0 && weight_effect <= 1.0))
    throw Error(ErrorCode::InvalidConfig, "weight_effect must lie in [0, 1]");
  if (!magnetic && !imu) throw Error(ErrorCode::InvalidConfig, "no modality enabled");
  noise.validate();
  dipole.validate();
}

std::vector<ManifestEntry> Manifest::select(Modality m) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.modality == m) out.push_back(e);
  return out;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  os << kManifestHeader << '\n';
  for (const auto& e : manifest.entries)
    os << e.subject_id << ',' << e.activity << ',' << modality_name(e.modality) << ',' << e.rep << ','
       << e.path << ',' << e.seed << ',' << format_double(e.duration_s) << '\n';
  if (!os) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Manifest m;
  m.root = path.parent_path();
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(is, line) || line != kManifestHeader)
    throw Error(ErrorCode::Parse, path.string() + ":1: expected header '" + std::string(kManifestHeader) + "'");
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (cells.size() != 7) throw Error(ErrorCode::Parse, where + "expected 7 columns");
    ManifestEntry e;
    try {
      e.subject_id = std::stoi(cells[0]);
      e.activity = cells[1];
      e.modality = parse_modality(cells[2]);
      e.rep = std::stoi(cells[3]);
      e.path = cells[4];
      e.seed = std::stoull(cells[5]);
      e.duration_s = std::stod(cells[6]);
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, where + "malformed row");
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

SubjectProfile make_subject(std::uint64_t master_seed, int subject_id) {
  Rng rng(derive_seed(master_seed, 0x5b1ec7, static_cast<std::uint64_t>(subject_id)));
  SubjectProfile p;
  p.subject_id = subject_id;
  p.cadence_hz = rng.uniform(0.8, 1.0);
  p.step_length_m = rng.uniform(0.5, 0.7);
  p.foot_lift_m = rng.uniform(0.08, 0.14);
  p.stance_fraction = rng.uniform(0.57, 0.63);
  p.step_width_m = rng.uniform(0.15, 0.25);
  p.leg_length_m = rng.uniform(0.85, 0.98);
  p.swing_pitch_rad = rng.uniform(0.3, 0.45);
  p.toe_out_rad = rng.uniform(0.03, 0.15);
  p.trunk_lean_rad = rng.normal(0.0, 0.03);
  p.pelvis_bob_m = rng.uniform(0.015, 0.03);
  p.noise_seed = derive_seed(master_seed, 0x9015e, static_cast<std::uint64_t>(subject_id));
  return p;
}

Manifest gen_cohort(int n_subjects, const CohortConfig& config) {
  if (n_subjects < 1) throw Error(ErrorCode::InvalidConfig, "n_subjects must be >= 1");
  config.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + config.out_dir.string() + ": " + ec.message());
  auto make_dir = [&](const char* name) {
    fs::create_directories(config.out_dir / name, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + (config.out_dir / name).string() + ": " + ec.message());
  };
  if (config.magnetic) make_dir("magnetic");
  if (config.imu) make_dir("imu");
  if (config.field_logs) make_dir("field");

  Manifest manifest;
  manifest.root = config.out_dir;
  for (int subject = 1; subject <= n_subjects; ++subject) {
    const SubjectProfile base = make_subject(config.master_seed, subject);
    const SensorBias bias = draw_bias(base.noise_seed, config.noise);
    for (Activity activity : kActivities) {
      const auto a = static_cast<std::uint64_t>(activity);
      for (int rep = 1; rep <= config.recordings_per_activity; ++rep) {
        const auto r = static_cast<std::uint64_t>(rep);
        const auto s = static_cast<std::uint64_t>(subject);
        // Trial-to-trial variation around the subject's own gait.
        Rng trial(derive_seed(config.master_seed, s, a, r, 1));
        SubjectProfile profile = base;
        profile.cadence_hz *= 1.0 + trial.normal(0.0, 0.02);
        profile.step_length_m *= 1.0 + trial.normal(0.0, 0.03);
        profile.foot_lift_m *= 1.0 + trial.normal(0.0, 0.03);
        ActivityParams act{activity, config.duration_s, config.weight_effect, trial.uniform()};
        const TruthTrace trace = gen_trajectory(profile, act);
        const std::string name = recording_name(subject, activity, rep);

        if (config.magnetic) {
          const std::uint64_t seed = derive_seed(config.master_seed, s, a, r, 2);
          write_packet_log(config.out_dir / "magnetic" / name, Modality::Magnetic,
                           synth_magnetic(trace, config.dipole, config.noise, config.rate_hz, seed,
                                          config.half_space));
          manifest.entries.push_back({subject, std::string(activity_name(activity)), Modality::Magnetic, rep,
                                      "magnetic/" + name, seed, config.duration_s});
          if (config.field_logs)
            write_field_log(config.out_dir / "field" / name,
                            synth_field(trace, config.dipole, config.noise, config.rate_hz, seed, true));
        }
        if (config.imu) {
          const std::uint64_t seed = derive_seed(config.master_seed, s, a, r, 3);
          write_packet_log(config.out_dir / "imu" / name, Modality::Imu,
                           synth_imu(trace, config.noise, config.rate_hz, seed, bias));
          manifest.entries.push_back({subject, std::string(activity_name(activity)), Modality::Imu, rep,
                                      "imu/" + name, seed, config.duration_s});
        }
      }
    }
  }
  write_manifest(config.out_dir / "manifest.csv", manifest);
  return manifest;
}

}  // namespace gaitmag
