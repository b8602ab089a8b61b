#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gaitmag/packets.hpp"
#include "gaitmag/simgait.hpp"

namespace gaitmag {

inline constexpr double kPipelineRate = 300.0;
inline constexpr double kMaxGapSeconds = 0.25;

/// Timestamped multichannel samples of one Rx before resampling. Magnetic
/// channels are x y z qw qx qy qz, IMU channels gx gy gz ax ay az mx my mz.
struct RxSeries {
  std::vector<double> t;
  Eigen::MatrixXd values;  // rows = samples

  std::size_t size() const { return t.size(); }
};

/// Uniform series: sample i sits at t0 + i / rate_hz.
struct FrameSeries {
  double t0 = 0.0;
  double rate_hz = kPipelineRate;
  Eigen::MatrixXd channels;
  std::vector<std::string> names;

  std::size_t size() const { return static_cast<std::size_t>(channels.rows()); }
};

/// Column names of the final per-recording feature matrix (12 magnetic, 18 IMU).
std::vector<std::string> feature_names(Modality m);
/// Channels carried by one Rx packet (7 magnetic, 9 IMU).
int rx_channel_count(Modality m);

/// Splits a merged packet stream into left (rx 1) and right (rx 2) series.
/// Throws UnknownRxId for any other id and ShapeMismatch when a payload does
/// not match the modality.
std::pair<RxSeries, RxSeries> deinterleave(const std::vector<PacketRecord>& packets, Modality m);

/// Sorted union of two timestamp lists with exact duplicates removed.
std::vector<double> union_grid(std::span<const double> a, std::span<const double> b);

/// Linear interpolation of `s` onto `grid`, holding the end values outside
/// the sampled span. Columns [quat_col, quat_col + 4) are treated as a
/// quaternion: sign-aligned to the previous sample, interpolated
/// component-wise and renormalized. Pass quat_col < 0 for none. Throws
/// TooSparse when fewer than 2 samples exist or when two consecutive
/// samples, or a grid end and the nearest sample, are more than max_gap apart.
RxSeries fill_gaps(const RxSeries& s, std::span<const double> grid, int quat_col = -1,
                   double max_gap = kMaxGapSeconds);

/// Per-column sliding median; the window shrinks symmetrically at the edges.
Eigen::MatrixXd median_filter(const Eigen::MatrixXd& x, int window = 5);

/// Linear resampling onto n_out points evenly spanning [t.front(), t.back()].
FrameSeries resample(std::span<const double> t, const Eigen::MatrixXd& x, std::size_t n_out);

/// Replaces each 4-column quaternion block starting at the given columns by
/// yaw, pitch, roll. Yaw is unwrapped along time.
Eigen::MatrixXd quat_channels_to_euler(const Eigen::MatrixXd& x, std::span<const int> quat_cols);

/// Zero-phase elliptic low-pass per column. Throws InvalidConfig unless the
/// series rate is 300 Hz.
FrameSeries lowpass(const FrameSeries& s);

/// Slide 300 for 600-sample windows, 250 for 500, window_len / 2 otherwise.
int window_slide(int window_len);
/// Throws SeriesTooShort when the series is shorter than one window.
std::vector<Eigen::MatrixXd> segment(const Eigen::MatrixXd& x, int window_len);

/// Column min-max scaling to [0, 1]; constant columns become zero.
Eigen::MatrixXd normalize_window(const Eigen::MatrixXd& w);

/// Whole per-recording chain: deinterleave, fill, median, resample to
/// round(duration_s * 300) rows, Euler conversion (magnetic), low-pass.
FrameSeries preprocess_recording(const std::vector<PacketRecord>& packets, Modality m,
                                 double duration_s);

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct SplitSpec {
  int train = 80;
  int val = 10;
  int test = 10;
  std::uint64_t shuffle_seed = 1;
  bool by_subject = false;  // hold out whole subjects instead of windows

  void validate() const;
};

/// Window tensors in canonical recording order (subject, activity, rep),
/// windows of one recording consecutive. Each window is window_len x
/// n_features, row-major, float32.
struct Dataset {
  Modality modality = Modality::Magnetic;
  int window_len = 500;
  int n_features = 0;
  std::vector<std::string> feature_names;
  SplitSpec split_spec;
  std::vector<float> data;
  std::vector<int> labels;
  std::vector<int> subject_ids;
  std::vector<int> recording_ids;
  std::vector<Split> split;
  /// Free-form key=value lines describing how the dataset was produced.
  std::string config;

  std::size_t size() const { return labels.size(); }
  std::size_t window_size() const { return static_cast<std::size_t>(window_len) * n_features; }
  std::span<const float> window(std::size_t i) const {
    return {data.data() + i * window_size(), window_size()};
  }
  std::vector<std::size_t> indices(Split s) const;
  /// Per-class window counts, indexed by label.
  std::vector<std::size_t> class_counts() const;
  /// Keeps only the listed feature columns, in the given order.
  Dataset select_features(std::span<const int> cols) const;
};

/// Processes every manifest entry of modality `m` and assigns splits. By
/// window: the window index list is shuffled with shuffle_seed and cut at
/// round(n * train / 100) and round(n * (train + val) / 100). By subject: the
/// subject list is shuffled and cut the same way.
Dataset build_dataset(const Manifest& manifest, Modality m, int window_len, const SplitSpec& split);

void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace gaitmag
