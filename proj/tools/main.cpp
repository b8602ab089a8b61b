// gaitmag command-line driver: simulate -> preprocess -> train/eval/ablate/compare.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "gaitmag/error.hpp"
#include "gaitmag/eval.hpp"
#include "gaitmag/magmodel.hpp"
#include "gaitmag/nn/model.hpp"
#include "gaitmag/packets.hpp"
#include "gaitmag/pipeline.hpp"
#include "gaitmag/simgait.hpp"

namespace fs = std::filesystem;
using namespace gaitmag;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

bool g_quiet = false;

void note(const std::string& s) {
  if (!g_quiet) std::cerr << s << '\n';
}

// One process per output directory. The lock dies with the process.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    const fs::path p = dir / ".gaitmag.lock";
    fd_ = ::open(p.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::Io, "cannot create lock file " + p.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::Io, "another gaitmag process is writing to " + dir.string());
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  int fd_ = -1;
};

// Directory that will hold `file`, created if missing.
fs::path ensure_parent(const fs::path& file) {
  const fs::path p = file.parent_path().empty() ? fs::path(".") : file.parent_path();
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os << text;
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::string file_hash(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

// Options echo their defaults; floating values print with full round-trip precision.
template <class T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& v, const std::string& desc) {
  CLI::Option* o = app->add_option(name, v, desc);
  if constexpr (std::is_floating_point_v<T>) {
    o->default_str(shortest(v));
  } else {
    o->capture_default_str();
  }
  return o;
}

CLI::Option* flag(CLI::App* app, const std::string& name, bool& v, const std::string& desc) {
  return app->add_flag(name, v, desc)->default_str("false");
}

// Effective settings of one subcommand as an INI section that --config reads back.
std::string echo_config(const CLI::App* sub) {
  std::ostringstream os;
  os << "[" << sub->get_name() << "]\n";
  for (const CLI::Option* o : sub->get_options()) {
    if (o->get_lnames().empty() || o->get_lnames().front() == "help") continue;
    const std::string key = o->get_lnames().front();
    std::vector<std::string> vals = o->reduced_results();
    if (vals.empty() && !o->get_default_str().empty()) vals = {o->get_default_str()};
    if (vals.empty()) continue;
    os << key << "=";
    if (o->count() == 0 && vals.front().front() == '[') {  // container default such as [a,b]
      vals = CLI::detail::split(vals.front().substr(1, vals.front().size() - 2), ',');
    }
    if (vals.size() > 1) os << "[";
    for (std::size_t i = 0; i < vals.size(); ++i) os << (i ? "," : "") << '"' << vals[i] << '"';
    if (vals.size() > 1) os << "]";
    os << "\n";
  }
  return os.str();
}

struct ModelOpts {
  nn::ModelConfig model;
  nn::TrainConfig train;
  std::string arch = "lstm";
};

void add_model_options(CLI::App* app, ModelOpts& m) {
  opt(app, "--arch", m.arch, "Model architecture")->check(CLI::IsMember({"lstm", "cnn"}));
  opt(app, "--lstm-units", m.model.lstm_units, "LSTM hidden units");
  opt(app, "--lstm-dense", m.model.lstm_dense, "Dense width after the LSTM");
  opt(app, "--conv1-filters", m.model.conv1_filters, "CNN first conv filters");
  opt(app, "--conv2-filters", m.model.conv2_filters, "CNN second conv filters");
  opt(app, "--conv-kernel", m.model.conv1_kernel, "CNN conv kernel length (both convs)");
  opt(app, "--pool1-time", m.model.pool1_time, "CNN first pool size along time");
  opt(app, "--pool2-time", m.model.pool2_time, "CNN second pool size along time");
  opt(app, "--pool-lanes", m.model.pool1_lanes, "CNN pool size across features (both pools)");
  opt(app, "--cnn-dense", m.model.cnn_dense, "CNN dense width");
  opt(app, "--dropout", m.model.dropout, "CNN dropout rate");
  opt(app, "--epochs", m.train.epochs, "Training epochs");
  opt(app, "--batch", m.train.batch_size, "Mini-batch size");
  opt(app, "--lr", m.train.lr, "Adam learning rate");
  opt(app, "--clip-norm", m.train.clip_norm, "Global gradient norm cap, 0 disables");
}

// Copies the shared-width flags into the fields they stand for and validates.
nn::ModelConfig resolved_model(ModelOpts& m, const Dataset& data) {
  m.model.arch = nn::parse_arch(m.arch);
  m.model.conv2_kernel = m.model.conv1_kernel;
  m.model.pool2_lanes = m.model.pool1_lanes;
  nn::ModelConfig mc = fit_model(m.model, data);
  mc.validate();
  m.train.validate();
  return mc;
}

void validate_window(int w) {
  if (w != 500 && w != 600) throw Error(ErrorCode::InvalidConfig, "window length must be 500 or 600");
}

// ---- simulate

struct SimulateOpts {
  int subjects = 12;
  CohortConfig cohort;
  std::string out = "cohort";
  bool no_imu = false;
  bool no_magnetic = false;
};

void cmd_simulate(SimulateOpts& o, const CLI::App* sub) {
  o.cohort.out_dir = o.out;
  o.cohort.imu = !o.no_imu;
  o.cohort.magnetic = !o.no_magnetic;
  if (o.subjects < 1) throw Error(ErrorCode::InvalidConfig, "need at least one subject");
  o.cohort.validate();
  fs::create_directories(o.out);
  DirLock lock(o.out);
  Manifest m = gen_cohort(o.subjects, o.cohort);
  write_text(fs::path(o.out) / "config.ini", echo_config(sub));
  std::size_t n_mag = 0, n_imu = 0;
  for (const ManifestEntry& e : m.entries) (e.modality == Modality::Magnetic ? n_mag : n_imu)++;
  std::cout << (fs::path(o.out) / "manifest.csv").string() << "\n"
            << n_mag << " magnetic and " << n_imu << " IMU recordings\n";
}

// ---- track

struct TrackOpts {
  std::string input;
  std::string out;
  DipoleParams dipole;
};

void cmd_track(TrackOpts& o, const CLI::App* sub) {
  o.dipole.validate();
  const std::vector<FieldPacket> packets = read_field_log(fs::path(o.input));
  DirLock lock(ensure_parent(o.out));
  std::vector<PacketRecord> poses;
  poses.reserve(packets.size());
  std::size_t skipped = 0;
  bool all_truth = !packets.empty();
  double max_pos = 0.0, sum_pos = 0.0, max_ang = 0.0;
  for (const FieldPacket& p : packets) {
    Pose pose;
    try {
      pose = track({p.b_rx, p.q_rx, p.q_tx, p.t}, o.dipole);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfRange && e.code() != ErrorCode::DegeneratePosition) throw;
      ++skipped;
      continue;
    }
    poses.push_back({p.t, p.rx_id, PosePayload{pose.position, pose.orientation}});
    if (!p.truth) {
      all_truth = false;
      continue;
    }
    const double d = (pose.position - p.truth->position).norm();
    max_pos = std::max(max_pos, d);
    sum_pos += d;
    max_ang = std::max(max_ang, angle_between(pose.orientation, p.truth->orientation));
  }
  write_packet_log(fs::path(o.out), Modality::Magnetic, poses);
  write_text(o.out + ".ini", echo_config(sub));
  std::cout << poses.size() << " poses written to " << o.out;
  if (skipped) std::cout << " (" << skipped << " packets outside the tracking range skipped)";
  std::cout << "\n";
  if (all_truth && !poses.empty()) {
    std::cout << "position error: max " << format_double(max_pos) << " m, mean "
              << format_double(sum_pos / static_cast<double>(poses.size())) << " m\n"
              << "orientation error: max " << format_double(max_ang) << " rad\n";
  }
}

// ---- preprocess

struct PreprocessOpts {
  std::string manifest;
  std::string modality = "magnetic";
  int window_len = 500;
  SplitSpec split;
  std::string out;
};

void cmd_preprocess(PreprocessOpts& o, const CLI::App* sub) {
  const Modality m = parse_modality(o.modality);
  validate_window(o.window_len);
  o.split.validate();
  const Manifest man = read_manifest(o.manifest);
  Dataset ds = build_dataset(man, m, o.window_len, o.split);
  ds.config = echo_config(sub);
  DirLock lock(ensure_parent(o.out));
  save_dataset(o.out, ds);
  std::cout << ds.size() << " windows of " << ds.window_len << " x " << ds.n_features << "; per activity";
  const auto counts = ds.class_counts();
  for (Activity a : kActivities) std::cout << " " << activity_name(a) << "=" << counts[static_cast<std::size_t>(a)];
  std::cout << "; train/val/test " << ds.indices(Split::Train).size() << "/" << ds.indices(Split::Val).size() << "/"
            << ds.indices(Split::Test).size() << "\nfnv1a " << file_hash(o.out) << "  " << o.out << "\n";
}

// ---- train

struct TrainOpts {
  std::string dataset;
  std::string out;
  ModelOpts m;
  bool with_val = false;
};

void cmd_train(TrainOpts& o, const CLI::App* sub) {
  const Dataset ds = load_dataset(o.dataset);
  const nn::ModelConfig mc = resolved_model(o.m, ds);
  std::vector<std::size_t> fit = ds.indices(Split::Train);
  const std::vector<std::size_t> val = ds.indices(Split::Val);
  if (o.with_val) {
    fit.insert(fit.end(), val.begin(), val.end());
    std::sort(fit.begin(), fit.end());
  }
  DirLock lock(ensure_parent(o.out));
  const nn::Model model = nn::train(mc, o.m.train, ds, fit);
  for (std::size_t e = 0; e < model.history.size(); ++e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "epoch %zu loss %.4f accuracy %.4f", e + 1, model.history[e].loss,
                  model.history[e].accuracy);
    note(buf);
  }
  if (model.diverged) throw Error(ErrorCode::InvalidConfig, "training diverged; lower --lr");
  nn::save_model(o.out, model);
  write_text(o.out + ".ini", echo_config(sub));
  std::cout << "model written to " << o.out << " (" << model.params.size() << " parameters)\n";
  if (!o.with_val && !val.empty()) {
    const Eigen::MatrixXd p = nn::predict(model, ds, val);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      Eigen::Index k;
      p.row(static_cast<Eigen::Index>(i)).maxCoeff(&k);
      ok += static_cast<int>(k) == ds.labels[val[i]];
    }
    std::printf("validation accuracy %.4f\n", static_cast<double>(ok) / static_cast<double>(val.size()));
  }
}

// ---- reports

struct ReportOpts {
  std::string out = "report";
  int runs = 8;
  std::uint64_t seed = 1;
  bool plots = false;
  ModelOpts m;
};

void validate_runs(int runs) {
  if (runs < 2) throw Error(ErrorCode::InvalidConfig, "--runs must be at least 2");
}

void add_report_options(CLI::App* app, ReportOpts& o) {
  opt(app, "--out", o.out, "Report directory (created)");
  opt(app, "--runs", o.runs, "Repeated training runs");
  opt(app, "--seed", o.seed, "First training seed; runs use seed .. seed + runs - 1");
  flag(app, "--plots", o.plots, "Also write ROC curves of the run closest to the mean as CSV and SVG");
  add_model_options(app, o.m);
}

std::string roc_svg(const RunReport& r) {
  static const char* colors[kClasses] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"320\" height=\"320\" viewBox=\"-0.1 -0.1 1.4 1.2\">\n"
     << "<g transform=\"matrix(1 0 0 -1 0 1)\" fill=\"none\" stroke-width=\"0.006\">\n"
     << "<rect width=\"1\" height=\"1\" stroke=\"#888\"/>\n<path d=\"M0 0L1 1\" stroke=\"#bbb\"/>\n";
  for (int k = 0; k < kClasses; ++k) {
    os << "<polyline stroke=\"" << colors[k] << "\" points=\"";
    const RocCurve& c = r.roc[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < c.fpr.size(); ++i) os << (i ? " " : "") << c.fpr[i] << "," << c.tpr[i];
    os << "\"/>\n";
  }
  os << "</g>\n";
  for (int k = 0; k < kClasses; ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s AUC %.3f", std::string(activity_name(static_cast<Activity>(k))).c_str(),
                  r.roc[static_cast<std::size_t>(k)].auc);
    os << "<text x=\"1.03\" y=\"" << 0.1 + 0.08 * k << "\" font-size=\"0.05\" fill=\"" << colors[k] << "\">" << buf
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_plots(const fs::path& dir, const std::string& stem, const RunReport& r) {
  std::ostringstream csv;
  csv << "class,threshold,fpr,tpr\n";
  for (int k = 0; k < kClasses; ++k) {
    const RocCurve& c = r.roc[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < c.fpr.size(); ++i)
      csv << activity_name(static_cast<Activity>(k)) << ","
          << (std::isinf(c.thresholds[i]) ? std::string("inf") : format_double(c.thresholds[i])) << ","
          << format_double(c.fpr[i]) << "," << format_double(c.tpr[i]) << "\n";
  }
  write_text(dir / (stem + "_roc.csv"), csv.str());
  write_text(dir / (stem + "_roc.svg"), roc_svg(r));
}

void write_report(const fs::path& dir, nlohmann::json j, const std::string& text, const CLI::App* sub) {
  const std::string cfg = echo_config(sub);
  j["config"] = cfg;
  write_text(dir / "report.json", j.dump(2) + "\n");
  write_text(dir / "report.txt", text);
  write_text(dir / "config.ini", cfg);
}

Progress progress_sink() {
  return [](const std::string& s) { note(s); };
}

// ---- eval

struct EvalOpts {
  std::string dataset;
  std::string model;
  ReportOpts r;
};

void cmd_eval(EvalOpts& o, const CLI::App* sub) {
  const Dataset ds = load_dataset(o.dataset);
  if (!o.model.empty()) {
    const nn::Model model = nn::load_model(o.model);
    const RunReport r = evaluate(model, ds, ds.indices(Split::Test));
    fs::create_directories(o.r.out);
    DirLock lock(o.r.out);
    std::ostringstream text;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s: test accuracy %.2f %%\n", o.model.c_str(), 100.0 * r.accuracy);
    text << buf;
    write_report(o.r.out, nlohmann::json(r), text.str(), sub);
    if (o.r.plots) write_plots(o.r.out, "model", r);
    std::cout << text.str();
    return;
  }
  const nn::ModelConfig mc = resolved_model(o.r.m, ds);
  validate_runs(o.r.runs);
  fs::create_directories(o.r.out);
  DirLock lock(o.r.out);
  const AggregateReport agg = repeated_runs(ds, mc, o.r.m.train, o.r.runs, o.r.seed, progress_sink());
  const std::string text = text_report(agg);
  write_report(o.r.out, nlohmann::json(agg), text, sub);
  if (o.r.plots && !agg.runs[agg.closest].failed) write_plots(o.r.out, "closest", agg.runs[agg.closest]);
  std::cout << text;
}

// ---- ablate

struct AblateOpts {
  std::string dataset;
  ReportOpts r;
};

void cmd_ablate(AblateOpts& o, const CLI::App* sub) {
  const Dataset ds = load_dataset(o.dataset);
  const nn::ModelConfig mc = resolved_model(o.r.m, ds);
  validate_runs(o.r.runs);
  if (ds.modality != Modality::Magnetic)
    throw Error(ErrorCode::InvalidConfig, "ablation needs the 12-feature magnetic dataset");
  fs::create_directories(o.r.out);
  DirLock lock(o.r.out);
  const AblationReport rep = ablation(ds, mc, o.r.m.train, o.r.runs, o.r.seed, progress_sink());
  const std::string text = text_report(rep);
  write_report(o.r.out, nlohmann::json(rep), text, sub);
  if (o.r.plots)
    for (std::size_t k = 0; k < rep.subsets.size(); ++k) {
      const AggregateReport& a = rep.subsets[k];
      if (!a.runs[a.closest].failed)
        write_plots(o.r.out, std::string(subset_name(static_cast<FeatureSubset>(k))), a.runs[a.closest]);
    }
  std::cout << text;
}

// ---- compare

struct CompareOpts {
  std::vector<std::string> mag;
  std::vector<std::string> imu;
  std::vector<std::string> archs{"lstm", "cnn"};
  ReportOpts r;
};

void cmd_compare(CompareOpts& o, const CLI::App* sub) {
  if (o.mag.size() != o.imu.size())
    throw Error(ErrorCode::InvalidConfig, "give one --imu dataset per --mag dataset");
  std::vector<Dataset> mag, imu;
  for (const std::string& p : o.mag) mag.push_back(load_dataset(p));
  for (const std::string& p : o.imu) imu.push_back(load_dataset(p));
  std::vector<nn::Arch> archs;
  for (const std::string& a : o.archs) archs.push_back(nn::parse_arch(a));
  for (nn::Arch a : archs) {
    o.r.m.arch = std::string(nn::arch_name(a));
    for (const Dataset& d : mag) resolved_model(o.r.m, d);
  }
  const nn::ModelConfig base = o.r.m.model;
  validate_runs(o.r.runs);
  fs::create_directories(o.r.out);
  DirLock lock(o.r.out);
  const CompareReport rep = modality_compare(mag, imu, archs, base, o.r.m.train, o.r.runs, o.r.seed, progress_sink());
  const std::string text = text_report(rep);
  write_report(o.r.out, nlohmann::json(rep), text, sub);
  std::cout << text;
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::LabelMissing:
    case ErrorCode::MismatchedCohort:
      return kExitInvalid;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gait activity recognition from magnetic tracking and IMU data: simulate a cohort, "
               "preprocess it into windows, train and evaluate CNN/LSTM classifiers."};
  app.set_config("--config", "", "INI file with one [section] per command; flags override its values");
  app.add_flag("-q,--quiet", g_quiet, "Suppress progress messages on stderr");
  app.require_subcommand(1);
  app.fallthrough();

  SimulateOpts sim;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic cohort of packet logs plus manifest.csv");
  opt(s, "--subjects", sim.subjects, "Number of subjects");
  opt(s, "--seed", sim.cohort.master_seed, "Master seed");
  opt(s, "--out", sim.out, "Output directory (created)");
  opt(s, "--recordings", sim.cohort.recordings_per_activity, "Recordings per subject and activity");
  opt(s, "--duration", sim.cohort.duration_s, "Recording length in seconds");
  opt(s, "--rate", sim.cohort.rate_hz, "Packet rate per foot in Hz");
  opt(s, "--weight-effect", sim.cohort.weight_effect, "Gait change under the backpack, in [0, 1]");
  opt(s, "--field-noise", sim.cohort.noise.field_rel_sigma, "Field noise sigma relative to |B|");
  opt(s, "--orientation-noise", sim.cohort.noise.orientation_sigma_rad, "Module orientation noise sigma in radians");
  opt(s, "--jitter", sim.cohort.noise.jitter_frac, "Timestamp jitter sigma as a fraction of the period");
  opt(s, "--p-drop", sim.cohort.noise.p_drop, "Packet drop probability");
  opt(s, "--moment", sim.cohort.dipole.moment, "Dipole moment");
  flag(s, "--no-imu", sim.no_imu, "Skip the IMU recordings");
  flag(s, "--no-magnetic", sim.no_magnetic, "Skip the magnetic recordings");
  flag(s, "--field-logs", sim.cohort.field_logs, "Also write raw field logs with truth columns");

  TrackOpts trk;
  auto* t = app.add_subcommand("track", "Recover foot poses from a raw field log");
  opt(t, "--input", trk.input, "Field log CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--out", trk.out, "Pose CSV to write")->required();
  opt(t, "--moment", trk.dipole.moment, "Dipole moment");
  opt(t, "--r-min", trk.dipole.r_min, "Closest trackable range in m");
  opt(t, "--r-max", trk.dipole.r_max, "Farthest trackable range in m");

  PreprocessOpts pre;
  auto* p = app.add_subcommand("preprocess", "Turn a cohort into a windowed, split dataset file");
  opt(p, "--manifest", pre.manifest, "Cohort manifest.csv")->required()->check(CLI::ExistingFile);
  opt(p, "--modality", pre.modality, "Sensor modality")->check(CLI::IsMember({"magnetic", "imu"}));
  opt(p, "--window-len", pre.window_len, "Window length in samples (500 or 600)");
  opt(p, "--train", pre.split.train, "Training percentage");
  opt(p, "--val", pre.split.val, "Validation percentage");
  opt(p, "--test", pre.split.test, "Test percentage");
  opt(p, "--split-seed", pre.split.shuffle_seed, "Seed of the split shuffle");
  flag(p, "--by-subject", pre.split.by_subject, "Hold out whole subjects instead of windows");
  opt(p, "--out", pre.out, "Dataset file to write")->required();

  TrainOpts tr;
  auto* r = app.add_subcommand("train", "Train one model on a dataset's training split");
  r->add_option("--dataset", tr.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  r->add_option("--out", tr.out, "Model file to write")->required();
  opt(r, "--seed", tr.m.train.seed, "Training seed");
  flag(r, "--with-val", tr.with_val, "Train on train + validation windows");
  add_model_options(r, tr.m);

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "Repeated training runs scored on the test split, or one saved model");
  opt(e, "--dataset", ev.dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  e->add_option("--model", ev.model, "Score this saved model instead of training")->check(CLI::ExistingFile);
  add_report_options(e, ev.r);

  AblateOpts ab;
  auto* a = app.add_subcommand("ablate", "Position-only, orientation-only and combined feature runs");
  a->add_option("--dataset", ab.dataset, "Magnetic dataset file")->required()->check(CLI::ExistingFile);
  add_report_options(a, ab.r);

  CompareOpts cmp;
  auto* c = app.add_subcommand("compare", "Magnetic vs IMU datasets from the same cohort");
  c->add_option("--mag", cmp.mag, "Magnetic dataset files")->required()->check(CLI::ExistingFile);
  c->add_option("--imu", cmp.imu, "IMU dataset files, paired with --mag in order")
      ->required()
      ->check(CLI::ExistingFile);
  opt(c, "--archs", cmp.archs, "Architectures to compare")->check(CLI::IsMember({"lstm", "cnn"}));
  add_report_options(c, cmp.r);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitInvalid;
  }

  try {
    if (s->parsed()) cmd_simulate(sim, s);
    if (t->parsed()) cmd_track(trk, t);
    if (p->parsed()) cmd_preprocess(pre, p);
    if (r->parsed()) cmd_train(tr, r);
    if (e->parsed()) cmd_eval(ev, e);
    if (a->parsed()) cmd_ablate(ab, a);
    if (c->parsed()) cmd_compare(cmp, c);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return exit_code(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
