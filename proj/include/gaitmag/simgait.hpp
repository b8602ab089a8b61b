#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gaitmag/geom.hpp"
#include "gaitmag/magmodel.hpp"
#include "gaitmag/packets.hpp"

namespace gaitmag {

/// Activity labels; the numeric value is the class index used by the classifiers.
enum class Activity : int { J = 0, M = 1, W = 2, WW = 3 };

inline constexpr std::array<Activity, 4> kActivities{Activity::J, Activity::M, Activity::W,
                                                      Activity::WW};

std::string_view activity_name(Activity a);
/// Throws LabelMissing for empty or unknown names.
Activity parse_activity(std::string_view s);

/// Per-subject gait parameters. Frames: the Tx (waist) frame and the earth
/// frame both use x forward, y right, z down.
struct SubjectProfile {
  int subject_id = 1;
  double cadence_hz = 0.9;     // gait cycles per second, per foot
  double step_length_m = 0.6;  // peak-to-peak forward excursion of a foot relative to the waist
  double foot_lift_m = 0.12;
  std::uint64_t noise_seed = 0;

  double stance_fraction = 0.6;
  double step_width_m = 0.2;
  double leg_length_m = 0.9;     // waist to ground
  double swing_pitch_rad = 0.35;
  double toe_out_rad = 0.08;
  double trunk_lean_rad = 0.0;   // Tx frame pitch relative to upright
  double pelvis_bob_m = 0.02;

  void validate() const;
};

struct ActivityParams {
  Activity activity = Activity::W;
  double duration_s = 10.0;
  /// Fractional reduction of step length and lift for WW; also drives the
  /// cadence drop, the longer stance and the forward trunk lean.
  double weight_effect = 0.07;
  /// Gait phase of the left foot at t = 0, in cycles.
  double start_phase = 0.0;

  void validate() const;
};

/// Kinematic effect of the backpack per unit weight_effect.
inline constexpr double kWeightCadenceDrop = 0.3;
inline constexpr double kWeightStanceGain = 0.3;
inline constexpr double kWeightLeanRad = 1.5;

struct FootState {
  Vec3 position;               // Tx frame
  Quaternion orientation;      // relative to Tx
  Vec3 earth_position;         // earth frame
  Quaternion earth_orientation;  // foot to earth
};

/// Dense ground truth for both feet. feet[0] is the left foot (Rx1), feet[1]
/// the right foot (Rx2). Sample i sits at t0 + i / rate_hz.
struct TruthTrace {
  double rate_hz = 1000.0;
  double t0 = 0.0;
  double duration_s = 0.0;  // nominal recording length; samples extend past it on both ends
  Quaternion tx_orientation;  // Tx to earth
  std::array<std::vector<FootState>, 2> feet;

  std::size_t size() const { return feet[0].size(); }
  double time(std::size_t i) const { return t0 + static_cast<double>(i) / rate_hz; }
  /// Linear interpolation (normalized lerp for orientations), clamped at the ends.
  FootState sample(int foot, double t) const;
};

/// Generator margin before 0 and after duration_s so jittered timestamps
/// stay inside the trace.
inline constexpr double kTraceMargin = 0.1;

TruthTrace gen_trajectory(const SubjectProfile& profile, const ActivityParams& act);

struct NoiseSpec {
  double field_rel_sigma = 2e-3;        // per-component, relative to |B|
  double orientation_sigma_rad = 0.5 * 3.14159265358979323846 / 180.0;
  double jitter_frac = 0.1;             // timestamp sigma as a fraction of the period
  double p_drop = 0.02;
  double accel_sigma = 0.05;            // m/s^2
  double gyro_sigma = 0.005;            // rad/s
  double magno_sigma = 0.005;           // fraction of |earth field|
  double accel_bias_sigma = 0.02;
  double gyro_bias_sigma = 0.002;
  double magno_bias_sigma = 0.002;

  static NoiseSpec none();
  void validate() const;
};

/// Constant per-subject IMU offsets, one set per foot.
struct SensorBias {
  std::array<Vec3, 2> gyro{};
  std::array<Vec3, 2> accel{};
  std::array<Vec3, 2> magno{};
};

SensorBias draw_bias(std::uint64_t noise_seed, const NoiseSpec& noise);

inline constexpr double kGravity = 9.81;
/// Unit earth field in the earth frame (60 degree dip).
Vec3 earth_field();

/// Field-space packets for both feet: the physical field at the true position,
/// measured in the Rx frame with field noise, plus noisy module orientations.
/// Jittered, thinned by i.i.d. drops and merged by timestamp.
std::vector<FieldPacket> synth_field(const TruthTrace& trace, const DipoleParams& params,
                                     const NoiseSpec& noise, double rate_hz, std::uint64_t seed,
                                     bool with_truth = false);

/// Tracked pose packets: synth_field followed by the tracker, so field noise
/// enters the pose exactly where it does on the device.
std::vector<PacketRecord> synth_magnetic(const TruthTrace& trace, const DipoleParams& params,
                                         const NoiseSpec& noise, double rate_hz, std::uint64_t seed,
                                         const HalfSpace& hs = {});

std::vector<PacketRecord> synth_imu(const TruthTrace& trace, const NoiseSpec& noise, double rate_hz,
                                    std::uint64_t seed, const SensorBias& bias = {});

struct CohortConfig {
  std::uint64_t master_seed = 7;
  std::filesystem::path out_dir = "cohort";
  int recordings_per_activity = 6;
  double duration_s = 10.0;
  double rate_hz = 300.0;
  double weight_effect = 0.07;
  NoiseSpec noise;
  DipoleParams dipole;
  HalfSpace half_space;
  bool magnetic = true;
  bool imu = true;
  bool field_logs = false;  // also write raw field-space logs with truth columns

  void validate() const;
};

struct ManifestEntry {
  int subject_id = 0;
  std::string activity;  // "J", "M", "W", "WW"
  Modality modality = Modality::Magnetic;
  int rep = 0;
  std::string path;  // relative to the manifest directory
  std::uint64_t seed = 0;
  double duration_s = 10.0;
};

struct Manifest {
  std::filesystem::path root;  // directory the entry paths are relative to
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> select(Modality m) const;
};

inline constexpr std::string_view kManifestHeader = "subject_id,activity,modality,rep,path,seed,duration_s";

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

/// Deterministic per-subject parameters drawn from the master seed.
SubjectProfile make_subject(std::uint64_t master_seed, int subject_id);

/// Writes recordings_per_activity recordings per subject, activity and enabled
/// modality plus manifest.csv into config.out_dir. A pure function of
/// (n_subjects, config).
Manifest gen_cohort(int n_subjects, const CohortConfig& config);

}  // namespace gaitmag
