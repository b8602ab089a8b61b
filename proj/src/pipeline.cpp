#include "gaitmag/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <tuple>

#include "gaitmag/error.hpp"
#include "gaitmag/filter.hpp"
#include "gaitmag/rng.hpp"

namespace gaitmag {

namespace {

constexpr std::array<const char*, 6> kMagneticFeatures{"x", "y", "z", "yaw", "pitch", "roll"};
constexpr std::array<const char*, 9> kImuFeatures{"gyro_x",  "gyro_y",  "gyro_z",  "accel_x", "accel_y",
                                                  "accel_z", "magno_x", "magno_y", "magno_z"};

void put_row(Eigen::MatrixXd& m, Eigen::Index r, const PacketRecord& p, Modality mod) {
  if (mod == Modality::Magnetic) {
    const auto* pose = std::get_if<PosePayload>(&p.payload);
    if (!pose) throw Error(ErrorCode::ShapeMismatch, "IMU payload in a magnetic stream");
    const Quaternion& q = pose->orientation;
    m.row(r) << pose->position.x, pose->position.y, pose->position.z, q.w, q.x, q.y, q.z;
  } else {
    const auto* imu = std::get_if<ImuPayload>(&p.payload);
    if (!imu) throw Error(ErrorCode::ShapeMismatch, "pose payload in an IMU stream");
    m.row(r) << imu->gyro.x, imu->gyro.y, imu->gyro.z, imu->accel.x, imu->accel.y, imu->accel.z,
        imu->magno.x, imu->magno.y, imu->magno.z;
  }
}

double median_of(std::vector<double>& buf) {
  const std::size_t n = buf.size();
  const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(buf.begin(), mid, buf.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(buf.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

std::vector<std::string> feature_names(Modality m) {
  std::vector<std::string> out;
  for (const char* side : {"left", "right"}) {
    if (m == Modality::Magnetic) {
      for (const char* f : kMagneticFeatures) out.push_back(std::string(side) + "_" + f);
    } else {
      for (const char* f : kImuFeatures) out.push_back(std::string(side) + "_" + f);
    }
  }
  return out;
}

int rx_channel_count(Modality m) { return m == Modality::Magnetic ? 7 : 9; }

std::pair<RxSeries, RxSeries> deinterleave(const std::vector<PacketRecord>& packets, Modality m) {
  std::size_t n[2] = {0, 0};
  for (const PacketRecord& p : packets) {
    if (p.rx_id != 1 && p.rx_id != 2)
      throw Error(ErrorCode::UnknownRxId, "rx_id " + std::to_string(p.rx_id));
    ++n[p.rx_id - 1];
  }
  const int c = rx_channel_count(m);
  std::pair<RxSeries, RxSeries> out;
  RxSeries* s[2] = {&out.first, &out.second};
  for (int k = 0; k < 2; ++k) {
    s[k]->t.reserve(n[k]);
    s[k]->values.resize(static_cast<Eigen::Index>(n[k]), c);
  }
  for (const PacketRecord& p : packets) {
    RxSeries& dst = *s[p.rx_id - 1];
    put_row(dst.values, static_cast<Eigen::Index>(dst.t.size()), p, m);
    dst.t.push_back(p.t);
  }
  return out;
}

std::vector<double> union_grid(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RxSeries fill_gaps(const RxSeries& s, std::span<const double> grid, int quat_col, double max_gap) {
  const std::size_t n = s.size();
  if (n < 2) throw Error(ErrorCode::TooSparse, "need at least 2 samples, got " + std::to_string(n));
  for (std::size_t i = 1; i < n; ++i) {
    if (s.t[i] < s.t[i - 1]) throw Error(ErrorCode::Parse, "timestamps decrease");
    if (s.t[i] - s.t[i - 1] > max_gap)
      throw Error(ErrorCode::TooSparse, "gap of " + std::to_string(s.t[i] - s.t[i - 1]) + " s at t=" +
                                            std::to_string(s.t[i - 1]));
  }
  if (!grid.empty() && (s.t.front() - grid.front() > max_gap || grid.back() - s.t.back() > max_gap))
    throw Error(ErrorCode::TooSparse, "series does not cover the target grid");

  // Sign-continuous copy of the quaternion block.
  Eigen::MatrixXd v = s.values;
  if (quat_col >= 0) {
    for (std::size_t i = 1; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      if (v.row(r).segment(quat_col, 4).dot(v.row(r - 1).segment(quat_col, 4)) < 0.0)
        v.block(r, quat_col, 1, 4) *= -1.0;
    }
  }

  RxSeries out;
  out.t.assign(grid.begin(), grid.end());
  out.values.resize(static_cast<Eigen::Index>(grid.size()), v.cols());
  std::size_t j = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    while (j + 2 < n && s.t[j + 1] <= t) ++j;
    const double t0 = s.t[j], t1 = s.t[j + 1];
    double a = t1 > t0 ? (t - t0) / (t1 - t0) : 0.0;
    a = std::clamp(a, 0.0, 1.0);
    const auto r = static_cast<Eigen::Index>(g);
    out.values.row(r) = (1.0 - a) * v.row(static_cast<Eigen::Index>(j)) + a * v.row(static_cast<Eigen::Index>(j + 1));
    if (quat_col >= 0) {
      const double qn = out.values.block(r, quat_col, 1, 4).norm();
      out.values.block(r, quat_col, 1, 4) /= qn;
    }
  }
  return out;
}

Eigen::MatrixXd median_filter(const Eigen::MatrixXd& x, int window) {
  if (window < 1 || window % 2 == 0)
    throw Error(ErrorCode::InvalidConfig, "median window must be odd and positive");
  const Eigen::Index n = x.rows();
  const Eigen::Index half = window / 2;
  Eigen::MatrixXd out(n, x.cols());
  std::vector<double> buf;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index h = std::min({half, i, n - 1 - i});
      buf.assign(x.col(c).data() + (i - h), x.col(c).data() + (i + h + 1));
      out(i, c) = median_of(buf);
    }
  }
  return out;
}

FrameSeries resample(std::span<const double> t, const Eigen::MatrixXd& x, std::size_t n_out) {
  if (t.size() < 2 || static_cast<Eigen::Index>(t.size()) != x.rows())
    throw Error(ErrorCode::ShapeMismatch, "resample needs at least 2 timestamped rows");
  if (n_out < 2) throw Error(ErrorCode::InvalidConfig, "resample needs n_out >= 2");
  const double t_first = t.front(), t_last = t.back();
  FrameSeries out;
  out.t0 = t_first;
  const double step = (t_last - t_first) / static_cast<double>(n_out - 1);
  out.rate_hz = 1.0 / step;
  out.channels.resize(static_cast<Eigen::Index>(n_out), x.cols());
  std::size_t j = 0;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double q = i + 1 == n_out ? t_last : t_first + static_cast<double>(i) * step;
    while (j + 2 < t.size() && t[j + 1] <= q) ++j;
    const double t0 = t[j], t1 = t[j + 1];
    double a = t1 > t0 ? std::clamp((q - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
    // Grid points that land on a sample up to rounding take it verbatim.
    const double snap = 1e-9 * step;
    if (std::abs(q - t0) <= snap) a = 0.0;
    else if (std::abs(q - t1) <= snap) a = 1.0;
    const auto r = static_cast<Eigen::Index>(i);
    if (a == 0.0) {
      out.channels.row(r) = x.row(static_cast<Eigen::Index>(j));
    } else if (a == 1.0) {
      out.channels.row(r) = x.row(static_cast<Eigen::Index>(j + 1));
    } else {
      out.channels.row(r) =
          (1.0 - a) * x.row(static_cast<Eigen::Index>(j)) + a * x.row(static_cast<Eigen::Index>(j + 1));
    }
  }
  return out;
}

Eigen::MatrixXd quat_channels_to_euler(const Eigen::MatrixXd& x, std::span<const int> quat_cols) {
  const Eigen::Index n = x.rows();
  const Eigen::Index out_cols = x.cols() - static_cast<Eigen::Index>(quat_cols.size());
  Eigen::MatrixXd out(n, out_cols);
  Eigen::Index dst = 0;
  Eigen::Index src = 0;
  for (std::size_t k = 0; k <= quat_cols.size(); ++k) {
    const Eigen::Index stop = k < quat_cols.size() ? quat_cols[k] : x.cols();
    if (stop < src || stop + (k < quat_cols.size() ? 4 : 0) > x.cols())
      throw Error(ErrorCode::ShapeMismatch, "quaternion columns out of order or out of range");
    const Eigen::Index len = stop - src;
    out.middleCols(dst, len) = x.middleCols(src, len);
    dst += len;
    src = stop;
    if (k == quat_cols.size()) break;
    double prev_yaw = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Quaternion q{x(i, src), x(i, src + 1), x(i, src + 2), x(i, src + 3)};
      const EulerAngles e = quat_to_euler(q).angles;
      double yaw = e.yaw;
      if (i > 0) yaw = prev_yaw + std::remainder(yaw - prev_yaw, 2.0 * std::numbers::pi);
      prev_yaw = yaw;
      out(i, dst) = yaw;
      out(i, dst + 1) = e.pitch;
      out(i, dst + 2) = e.roll;
    }
    dst += 3;
    src += 4;
  }
  return out;
}

FrameSeries lowpass(const FrameSeries& s) {
  if (std::abs(s.rate_hz - kLowpassSampleRate) > 1e-6 * kLowpassSampleRate)
    throw Error(ErrorCode::InvalidConfig, "low-pass coefficients are fixed for 300 Hz, series is at " +
                                              std::to_string(s.rate_hz) + " Hz");
  FrameSeries out = s;
  std::vector<double> col(s.size());
  for (Eigen::Index c = 0; c < s.channels.cols(); ++c) {
    Eigen::VectorXd::Map(col.data(), s.channels.rows()) = s.channels.col(c);
    const std::vector<double> y = sos_filtfilt(kEllipticLowpass, col);
    out.channels.col(c) = Eigen::VectorXd::Map(y.data(), s.channels.rows());
  }
  return out;
}

int window_slide(int window_len) {
  if (window_len == 600) return 300;
  if (window_len == 500) return 250;
  return std::max(1, window_len / 2);
}

std::vector<Eigen::MatrixXd> segment(const Eigen::MatrixXd& x, int window_len) {
  if (window_len < 1) throw Error(ErrorCode::InvalidConfig, "window length must be positive");
  if (x.rows() < window_len)
    throw Error(ErrorCode::SeriesTooShort, std::to_string(x.rows()) + " samples, window " +
                                               std::to_string(window_len));
  const int slide = window_slide(window_len);
  std::vector<Eigen::MatrixXd> out;
  for (Eigen::Index start = 0; start + window_len <= x.rows(); start += slide)
    out.emplace_back(x.middleRows(start, window_len));
  return out;
}

Eigen::MatrixXd normalize_window(const Eigen::MatrixXd& w) {
  Eigen::MatrixXd out(w.rows(), w.cols());
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    const double lo = w.col(c).minCoeff();
    const double hi = w.col(c).maxCoeff();
    if (hi > lo) {
      out.col(c) = ((w.col(c).array() - lo) / (hi - lo)).matrix();
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

FrameSeries preprocess_recording(const std::vector<PacketRecord>& packets, Modality m, double duration_s) {
  auto [left, right] = deinterleave(packets, m);
  const int quat_col = m == Modality::Magnetic ? 3 : -1;
  if (left.size() < 2 || right.size() < 2)
    throw Error(ErrorCode::TooSparse, "recording has fewer than 2 packets for one foot");
  const std::vector<double> grid = union_grid(left.t, right.t);
  const RxSeries l = fill_gaps(left, grid, quat_col);
  const RxSeries r = fill_gaps(right, grid, quat_col);

  const int c = rx_channel_count(m);
  Eigen::MatrixXd both(static_cast<Eigen::Index>(grid.size()), 2 * c);
  both.leftCols(c) = l.values;
  both.rightCols(c) = r.values;
  both = median_filter(both, 5);

  const auto n_out = static_cast<std::size_t>(std::llround(duration_s * kPipelineRate));
  FrameSeries fs = resample(grid, both, n_out);
  // The grid spans the recording only approximately; the sample rate is
  // nominal by construction.
  fs.rate_hz = kPipelineRate;
  if (m == Modality::Magnetic) {
    const int cols[2] = {3, 3 + c};
    fs.channels = quat_channels_to_euler(fs.channels, cols);
  }
  fs.names = feature_names(m);
  return lowpass(fs);
}

void SplitSpec::validate() const {
  if (train < 0 || val < 0 || test < 0 || train + val + test != 100)
    throw Error(ErrorCode::InvalidConfig, "split ratios must be non-negative and sum to 100");
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == s) out.push_back(i);
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> out(kActivities.size(), 0);
  for (int l : labels) ++out.at(static_cast<std::size_t>(l));
  return out;
}

Dataset Dataset::select_features(std::span<const int> cols) const {
  if (cols.empty()) throw Error(ErrorCode::InvalidConfig, "feature subset is empty");
  for (int c : cols)
    if (c < 0 || c >= n_features)
      throw Error(ErrorCode::ShapeMismatch, "feature column " + std::to_string(c) + " out of range");
  Dataset out = *this;
  out.n_features = static_cast<int>(cols.size());
  out.feature_names.clear();
  for (int c : cols) out.feature_names.push_back(feature_names[static_cast<std::size_t>(c)]);
  out.data.assign(size() * out.window_size(), 0.0f);
  for (std::size_t w = 0; w < size(); ++w) {
    const float* src = data.data() + w * window_size();
    float* dst = out.data.data() + w * out.window_size();
    for (int r = 0; r < window_len; ++r)
      for (std::size_t k = 0; k < cols.size(); ++k)
        dst[r * out.n_features + static_cast<int>(k)] = src[r * n_features + cols[k]];
  }
  return out;
}

Dataset build_dataset(const Manifest& manifest, Modality m, int window_len, const SplitSpec& split) {
  split.validate();
  if (window_len < 2) throw Error(ErrorCode::InvalidConfig, "window length must be at least 2");

  std::vector<ManifestEntry> entries = manifest.select(m);
  for (const ManifestEntry& e : entries)
    if (e.activity.empty())
      throw Error(ErrorCode::LabelMissing, "manifest entry " + e.path + " has no activity");
  // Canonical order makes the result independent of manifest row order.
  std::vector<std::pair<std::tuple<int, int, int, std::string>, ManifestEntry>> keyed;
  for (const ManifestEntry& e : entries)
    keyed.push_back({{e.subject_id, static_cast<int>(parse_activity(e.activity)), e.rep, e.path}, e});
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  Dataset ds;
  ds.modality = m;
  ds.window_len = window_len;
  ds.feature_names = feature_names(m);
  ds.n_features = static_cast<int>(ds.feature_names.size());
  ds.split_spec = split;

  int rec_id = 0;
  for (const auto& [key, e] : keyed) {
    const auto packets = read_packet_log(manifest.root / e.path, m);
    FrameSeries fs;
    try {
      fs = preprocess_recording(packets, m, e.duration_s);
    } catch (const Error& err) {
      throw Error(err.code(), e.path + ": " + err.what());
    }
    for (const Eigen::MatrixXd& w : segment(fs.channels, window_len)) {
      const Eigen::MatrixXd nw = normalize_window(w);
      const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = nw.cast<float>();
      ds.data.insert(ds.data.end(), rm.data(), rm.data() + rm.size());
      ds.labels.push_back(std::get<1>(key));
      ds.subject_ids.push_back(e.subject_id);
      ds.recording_ids.push_back(rec_id);
    }
    ++rec_id;
  }

  const std::size_t n = ds.size();
  ds.split.assign(n, Split::Test);
  Rng rng(split.shuffle_seed);
  auto cut = [&](std::size_t total) {
    const auto a = static_cast<std::size_t>(std::llround(static_cast<double>(total) * split.train / 100.0));
    const auto b =
        static_cast<std::size_t>(std::llround(static_cast<double>(total) * (split.train + split.val) / 100.0));
    return std::pair{a, b};
  };
  auto tag = [](std::size_t pos, std::pair<std::size_t, std::size_t> c) {
    return pos < c.first ? Split::Train : pos < c.second ? Split::Val : Split::Test;
  };
  if (!split.by_subject) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    const auto c = cut(n);
    for (std::size_t pos = 0; pos < n; ++pos) ds.split[order[pos]] = tag(pos, c);
  } else {
    std::vector<int> subjects(ds.subject_ids.begin(), ds.subject_ids.end());
    std::sort(subjects.begin(), subjects.end());
    subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
    rng.shuffle(subjects.begin(), subjects.end());
    const auto c = cut(subjects.size());
    std::map<int, Split> which;
    for (std::size_t pos = 0; pos < subjects.size(); ++pos) which[subjects[pos]] = tag(pos, c);
    for (std::size_t i = 0; i < n; ++i) ds.split[i] = which[ds.subject_ids[i]];
  }

  ds.config = "modality=" + std::string(modality_name(m)) + "\nwindow_len=" + std::to_string(window_len) +
              "\nsplit=" + std::to_string(split.train) + ":" + std::to_string(split.val) + ":" +
              std::to_string(split.test) + "\nshuffle_seed=" + std::to_string(split.shuffle_seed) +
              "\nby_subject=" + (split.by_subject ? "true" : "false") + "\n";
  return ds;
}

// Dataset container, all integers little-endian:
//   "GMDSET01", u32 version, u32 modality, u32 window_len, u32 n_features,
//   u64 n_windows, u32 train, u32 val, u32 test, u64 shuffle_seed, u32 by_subject,
//   n_features x (u32 len, bytes), u32 len + config bytes,
//   n_windows x (i32 label, i32 subject, i32 recording, u8 split),
//   n_windows * window_len * n_features f32.
namespace {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

constexpr char kMagic[8] = {'G', 'M', 'D', 'S', 'E', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_str(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(ErrorCode::Parse, "dataset file truncated");
  return v;
}

std::string get_str(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n > (1u << 24)) throw Error(ErrorCode::Parse, "dataset string too long");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw Error(ErrorCode::Parse, "dataset file truncated");
  return s;
}

}  // namespace

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os.write(kMagic, 8);
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, ds.modality == Modality::Magnetic ? 0 : 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.window_len));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.n_features));
  put<std::uint64_t>(os, ds.size());
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.split_spec.train));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.split_spec.val));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.split_spec.test));
  put<std::uint64_t>(os, ds.split_spec.shuffle_seed);
  put<std::uint32_t>(os, ds.split_spec.by_subject ? 1 : 0);
  for (const std::string& name : ds.feature_names) put_str(os, name);
  put_str(os, ds.config);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    put<std::int32_t>(os, ds.labels[i]);
    put<std::int32_t>(os, ds.subject_ids[i]);
    put<std::int32_t>(os, ds.recording_ids[i]);
    put<std::uint8_t>(os, static_cast<std::uint8_t>(ds.split[i]));
  }
  os.write(reinterpret_cast<const char*>(ds.data.data()),
           static_cast<std::streamsize>(ds.data.size() * sizeof(float)));
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw Error(ErrorCode::Parse, path.string() + " is not a dataset file");
  if (get<std::uint32_t>(is) != kVersion) throw Error(ErrorCode::Parse, "unsupported dataset version");
  Dataset ds;
  const auto mod = get<std::uint32_t>(is);
  if (mod > 1) throw Error(ErrorCode::Parse, "bad modality tag");
  ds.modality = mod == 0 ? Modality::Magnetic : Modality::Imu;
  ds.window_len = static_cast<int>(get<std::uint32_t>(is));
  ds.n_features = static_cast<int>(get<std::uint32_t>(is));
  const auto n = get<std::uint64_t>(is);
  ds.split_spec.train = static_cast<int>(get<std::uint32_t>(is));
  ds.split_spec.val = static_cast<int>(get<std::uint32_t>(is));
  ds.split_spec.test = static_cast<int>(get<std::uint32_t>(is));
  ds.split_spec.shuffle_seed = get<std::uint64_t>(is);
  ds.split_spec.by_subject = get<std::uint32_t>(is) != 0;
  if (ds.window_len <= 0 || ds.n_features <= 0 || n > (1ull << 32))
    throw Error(ErrorCode::Parse, "implausible dataset shape");
  for (int i = 0; i < ds.n_features; ++i) ds.feature_names.push_back(get_str(is));
  ds.config = get_str(is);
  ds.labels.resize(n);
  ds.subject_ids.resize(n);
  ds.recording_ids.resize(n);
  ds.split.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = get<std::int32_t>(is);
    ds.subject_ids[i] = get<std::int32_t>(is);
    ds.recording_ids[i] = get<std::int32_t>(is);
    const auto s = get<std::uint8_t>(is);
    if (s > 2) throw Error(ErrorCode::Parse, "bad split tag");
    if (ds.labels[i] < 0 || ds.labels[i] > 3) throw Error(ErrorCode::Parse, "bad label");
    ds.split[i] = static_cast<Split>(s);
  }
  ds.data.resize(n * ds.window_size());
  is.read(reinterpret_cast<char*>(ds.data.data()), static_cast<std::streamsize>(ds.data.size() * sizeof(float)));
  if (!is) throw Error(ErrorCode::Parse, "dataset file truncated");
  return ds;
}

}  // namespace gaitmag
