#include "gaitmag/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "gaitmag/error.hpp"

namespace gaitmag {

RocCurve roc_curve(std::span<const double> scores, std::span<const char> positive) {
  if (scores.size() != positive.size())
    throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in length");
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), char{1}));
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::EmptyClass, "ROC needs positives and negatives");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve r;
  r.fpr.push_back(0.0);
  r.tpr.push_back(0.0);
  r.thresholds.push_back(std::numeric_limits<double>::infinity());
  std::size_t tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double thr = scores[order[k]];
    // Tied scores cross the threshold together.
    for (; k < order.size() && scores[order[k]] == thr; ++k) (positive[order[k]] ? tp : fp)++;
    r.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
    r.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
    r.thresholds.push_back(thr);
  }
  for (std::size_t i = 1; i < r.fpr.size(); ++i)
    r.auc += (r.fpr[i] - r.fpr[i - 1]) * 0.5 * (r.tpr[i] + r.tpr[i - 1]);
  return r;
}

PairAccuracy pair_accuracy(const Confusion& c, int a, int b) {
  PairAccuracy p;
  const double within = static_cast<double>(c[a][a] + c[a][b] + c[b][a] + c[b][b]);
  p.restricted = within > 0 ? static_cast<double>(c[a][a] + c[b][b]) / within : 0.0;
  const auto row = [&](int k) {
    return static_cast<double>(std::accumulate(c[k].begin(), c[k].end(), 0L));
  };
  const double ra = row(a), rb = row(b);
  p.mean_recall = 0.5 * ((ra > 0 ? c[a][a] / ra : 0.0) + (rb > 0 ? c[b][b] / rb : 0.0));
  return p;
}

RunReport evaluate_probs(const Eigen::MatrixXd& probs, std::span<const int> labels) {
  if (probs.cols() != kClasses || static_cast<std::size_t>(probs.rows()) != labels.size())
    throw Error(ErrorCode::ShapeMismatch, "probabilities must be [n, 4] with one label per row");
  RunReport r;
  std::array<long, kClasses> support{};
  for (int l : labels) {
    if (l < 0 || l >= kClasses) throw Error(ErrorCode::ShapeMismatch, "label out of range");
    ++support[static_cast<std::size_t>(l)];
  }
  for (int k = 0; k < kClasses; ++k)
    if (support[static_cast<std::size_t>(k)] == 0)
      throw Error(ErrorCode::EmptyClass, "no test windows for class " + std::to_string(k));

  long correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index pred;
    probs.row(i).maxCoeff(&pred);
    const int y = labels[static_cast<std::size_t>(i)];
    ++r.confusion[y][pred];
    if (pred == y) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
  for (int k = 0; k < kClasses; ++k) {
    long predicted = 0;
    for (int t = 0; t < kClasses; ++t) predicted += r.confusion[t][k];
    r.precision[k] = predicted > 0 ? static_cast<double>(r.confusion[k][k]) / predicted : 0.0;
    r.recall[k] = static_cast<double>(r.confusion[k][k]) / support[k];
    std::vector<double> s(labels.size());
    std::vector<char> pos(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s[i] = probs(static_cast<Eigen::Index>(i), k);
      pos[i] = labels[i] == k ? 1 : 0;
    }
    r.roc[k] = roc_curve(s, pos);
  }
  r.w_ww = pair_accuracy(r.confusion, static_cast<int>(Activity::W), static_cast<int>(Activity::WW));
  return r;
}

RunReport evaluate(const nn::Model& model, const Dataset& data, std::span<const std::size_t> test) {
  const Eigen::MatrixXd probs = nn::predict(model, data, test);
  std::vector<int> labels;
  labels.reserve(test.size());
  for (std::size_t i : test) labels.push_back(data.labels[i]);
  return evaluate_probs(probs, labels);
}

nn::ModelConfig fit_model(const nn::ModelConfig& base, const Dataset& data) {
  nn::ModelConfig m = base;
  m.window_len = data.window_len;
  m.n_features = data.n_features;
  return m;
}

AggregateReport repeated_runs(const Dataset& data, const nn::ModelConfig& model, const nn::TrainConfig& train,
                              int n, std::uint64_t base_seed, const Progress& progress) {
  if (n < 2) throw Error(ErrorCode::InvalidConfig, "repeated runs need n >= 2");
  const nn::ModelConfig mc = fit_model(model, data);
  mc.validate();
  train.validate();

  AggregateReport agg;
  agg.modality = std::string(modality_name(data.modality));
  agg.window_len = data.window_len;
  agg.model = mc;
  agg.train = train;
  agg.tag = agg.modality + "/" + std::string(nn::arch_name(mc.arch)) + "/" + std::to_string(data.window_len);

  std::vector<std::size_t> fit = data.indices(Split::Train);
  const std::vector<std::size_t> val = data.indices(Split::Val);
  fit.insert(fit.end(), val.begin(), val.end());
  std::sort(fit.begin(), fit.end());
  const std::vector<std::size_t> test = data.indices(Split::Test);

  for (int i = 0; i < n; ++i) {
    nn::TrainConfig tc = train;
    tc.seed = base_seed + static_cast<std::uint64_t>(i);
    RunReport r;
    try {
      const nn::Model m = nn::train(mc, tc, data, fit);
      if (m.diverged) {
        r.failed = true;
        r.error = "training diverged";
      } else {
        r = evaluate(m, data, test);
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::EmptyClass || e.code() == ErrorCode::ShapeMismatch) throw;
      r = RunReport{};
      r.failed = true;
      r.error = e.what();
    }
    r.seed = tc.seed;
    if (progress) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s run %d/%d seed %llu: %s", agg.tag.c_str(), i + 1, n,
                    static_cast<unsigned long long>(tc.seed),
                    r.failed ? r.error.c_str() : (std::to_string(r.accuracy)).c_str());
      progress(buf);
    }
    agg.runs.push_back(std::move(r));
  }

  std::vector<const RunReport*> ok;
  for (const RunReport& r : agg.runs) {
    if (r.failed) {
      ++agg.n_failed;
    } else {
      ok.push_back(&r);
    }
  }
  if (ok.empty()) return agg;
  double sum = 0.0;
  for (const RunReport* r : ok) sum += r->accuracy;
  agg.mean_accuracy = sum / static_cast<double>(ok.size());
  double ss = 0.0;
  for (const RunReport* r : ok) ss += (r->accuracy - agg.mean_accuracy) * (r->accuracy - agg.mean_accuracy);
  agg.std_accuracy = std::sqrt(ss / static_cast<double>(ok.size()));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < agg.runs.size(); ++i) {
    const RunReport& r = agg.runs[i];
    if (r.failed) continue;
    const double d = std::abs(r.accuracy - agg.mean_accuracy);
    if (d < best || (d == best && r.seed < agg.runs[agg.closest].seed)) {
      best = d;
      agg.closest = i;
    }
  }
  for (const RunReport* r : ok) {
    agg.w_ww_mean.restricted += r->w_ww.restricted / static_cast<double>(ok.size());
    agg.w_ww_mean.mean_recall += r->w_ww.mean_recall / static_cast<double>(ok.size());
    for (int k = 0; k < kClasses; ++k) agg.auc_mean[k] += r->roc[k].auc / static_cast<double>(ok.size());
  }
  return agg;
}

std::string_view subset_name(FeatureSubset s) {
  switch (s) {
    case FeatureSubset::Position:
      return "position";
    case FeatureSubset::Orientation:
      return "orientation";
    case FeatureSubset::Both:
      return "both";
  }
  return "?";
}

std::vector<int> subset_columns(FeatureSubset s) {
  switch (s) {
    case FeatureSubset::Position:
      return {0, 1, 2, 6, 7, 8};
    case FeatureSubset::Orientation:
      return {3, 4, 5, 9, 10, 11};
    case FeatureSubset::Both:
      break;
  }
  return {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
}

AblationReport ablation(const Dataset& data, const nn::ModelConfig& model, const nn::TrainConfig& train, int n,
                        std::uint64_t base_seed, const Progress& progress) {
  if (data.modality != Modality::Magnetic || data.n_features != 12)
    throw Error(ErrorCode::InvalidConfig, "ablation needs the 12-feature magnetic dataset");
  AblationReport out;
  const std::array<FeatureSubset, 3> subsets{FeatureSubset::Position, FeatureSubset::Orientation,
                                             FeatureSubset::Both};
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    const std::vector<int> cols = subset_columns(subsets[k]);
    const Dataset sub = subsets[k] == FeatureSubset::Both ? data : data.select_features(cols);
    nn::ModelConfig mc = model;
    if (subsets[k] != FeatureSubset::Both) {
      mc.pool1_lanes = 1;
      mc.pool2_lanes = 1;
    }
    out.subsets[k] = repeated_runs(sub, mc, train, n, base_seed, progress);
    out.subsets[k].tag += "/" + std::string(subset_name(subsets[k]));
  }
  return out;
}

void check_same_cohort(const Dataset& a, const Dataset& b) {
  // One (subject, label) pair per recording, in canonical order.
  auto recordings = [](const Dataset& d) {
    std::vector<std::pair<int, int>> out;
    int last = -1;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.recording_ids[i] != last) {
        out.emplace_back(d.subject_ids[i], d.labels[i]);
        last = d.recording_ids[i];
      }
    }
    return out;
  };
  if (recordings(a) != recordings(b))
    throw Error(ErrorCode::MismatchedCohort, "datasets were not built from the same subjects and activities");
}

CompareReport modality_compare(std::span<const Dataset> mag, std::span<const Dataset> imu,
                               std::span<const nn::Arch> archs, const nn::ModelConfig& base,
                               const nn::TrainConfig& train, int n, std::uint64_t base_seed,
                               const Progress& progress) {
  if (mag.size() != imu.size()) throw Error(ErrorCode::InvalidConfig, "need one IMU dataset per magnetic dataset");
  CompareReport out;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    if (mag[i].modality != Modality::Magnetic || imu[i].modality != Modality::Imu)
      throw Error(ErrorCode::InvalidConfig, "dataset modalities are swapped or repeated");
    if (mag[i].window_len != imu[i].window_len)
      throw Error(ErrorCode::InvalidConfig, "paired datasets differ in window length");
    check_same_cohort(mag[i], imu[i]);
    for (nn::Arch arch : archs) {
      nn::ModelConfig mc = base;
      mc.arch = arch;
      CompareCell cell;
      cell.arch = arch;
      cell.window_len = mag[i].window_len;
      cell.magnetic = repeated_runs(mag[i], mc, train, n, base_seed, progress);
      cell.imu = repeated_runs(imu[i], mc, train, n, base_seed, progress);
      cell.accuracy_gap = cell.magnetic.mean_accuracy - cell.imu.mean_accuracy;
      cell.w_ww_gap = cell.magnetic.w_ww_mean.restricted - cell.imu.w_ww_mean.restricted;
      cell.w_ww_recall_gap = cell.magnetic.w_ww_mean.mean_recall - cell.imu.w_ww_mean.mean_recall;
      out.cells.push_back(std::move(cell));
    }
  }
  return out;
}

// Serialization

void to_json(nlohmann::json& j, const RocCurve& r) {
  nlohmann::json thr = nlohmann::json::array();
  for (double t : r.thresholds) {
    if (std::isinf(t)) {
      thr.push_back("inf");
    } else {
      thr.push_back(t);
    }
  }
  j = {{"fpr", r.fpr}, {"tpr", r.tpr}, {"thresholds", thr}, {"auc", r.auc}};
}

void from_json(const nlohmann::json& j, RocCurve& r) {
  j.at("fpr").get_to(r.fpr);
  j.at("tpr").get_to(r.tpr);
  r.thresholds.clear();
  for (const auto& t : j.at("thresholds")) {
    r.thresholds.push_back(t.is_string() ? std::numeric_limits<double>::infinity() : t.get<double>());
  }
  j.at("auc").get_to(r.auc);
}

void to_json(nlohmann::json& j, const RunReport& r) {
  j = {{"seed", r.seed}, {"failed", r.failed}};
  if (r.failed) {
    j["error"] = r.error;
    return;
  }
  j["accuracy"] = r.accuracy;
  j["confusion"] = r.confusion;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  nlohmann::json roc = nlohmann::json::object();
  for (Activity a : kActivities) roc[std::string(activity_name(a))] = r.roc[static_cast<std::size_t>(a)];
  j["roc"] = roc;
  j["w_ww"] = {{"restricted_accuracy", r.w_ww.restricted}, {"mean_recall", r.w_ww.mean_recall}};
}

void from_json(const nlohmann::json& j, RunReport& r) {
  r = RunReport{};
  j.at("seed").get_to(r.seed);
  j.at("failed").get_to(r.failed);
  if (r.failed) {
    j.at("error").get_to(r.error);
    return;
  }
  j.at("accuracy").get_to(r.accuracy);
  j.at("confusion").get_to(r.confusion);
  j.at("precision").get_to(r.precision);
  j.at("recall").get_to(r.recall);
  for (Activity a : kActivities)
    r.roc[static_cast<std::size_t>(a)] = j.at("roc").at(std::string(activity_name(a))).get<RocCurve>();
  j.at("w_ww").at("restricted_accuracy").get_to(r.w_ww.restricted);
  j.at("w_ww").at("mean_recall").get_to(r.w_ww.mean_recall);
}

void to_json(nlohmann::json& j, const AggregateReport& r) {
  nlohmann::json auc = nlohmann::json::object();
  for (Activity a : kActivities) auc[std::string(activity_name(a))] = r.auc_mean[static_cast<std::size_t>(a)];
  j = {{"tag", r.tag},
       {"modality", r.modality},
       {"window_len", r.window_len},
       {"model", r.model.to_text()},
       {"train", r.train.to_text()},
       {"n_runs", r.runs.size()},
       {"n_failed", r.n_failed},
       {"mean_accuracy", r.mean_accuracy},
       {"std_accuracy", r.std_accuracy},
       {"closest_to_mean_seed", r.runs.empty() ? 0 : r.runs[r.closest].seed},
       {"w_ww_mean", {{"restricted_accuracy", r.w_ww_mean.restricted}, {"mean_recall", r.w_ww_mean.mean_recall}}},
       {"auc_mean", auc},
       {"runs", r.runs}};
}

void to_json(nlohmann::json& j, const AblationReport& r) {
  j = nlohmann::json::object();
  for (std::size_t k = 0; k < r.subsets.size(); ++k)
    j[std::string(subset_name(static_cast<FeatureSubset>(k)))] = r.subsets[k];
}

void to_json(nlohmann::json& j, const CompareReport& r) {
  j = {{"cells", nlohmann::json::array()}};
  for (const CompareCell& c : r.cells) {
    j["cells"].push_back({{"arch", nn::arch_name(c.arch)},
                 {"window_len", c.window_len},
                 {"accuracy_gap", c.accuracy_gap},
                 {"w_ww_restricted_gap", c.w_ww_gap},
                 {"w_ww_recall_gap", c.w_ww_recall_gap},
                 {"magnetic", c.magnetic},
                 {"imu", c.imu}});
  }
}

namespace {

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

void confusion_table(std::ostream& os, const Confusion& c) {
  os << "        J     M     W    WW   (rows true, columns predicted)\n";
  for (Activity a : kActivities) {
    char buf[64];
    const auto& row = c[static_cast<std::size_t>(a)];
    std::snprintf(buf, sizeof buf, "%-4s%6ld%6ld%6ld%6ld\n", std::string(activity_name(a)).c_str(), row[0], row[1],
                  row[2], row[3]);
    os << buf;
  }
}

}  // namespace

std::string text_report(const AggregateReport& r) {
  std::ostringstream os;
  os << r.tag << ": " << r.runs.size() - static_cast<std::size_t>(r.n_failed) << " of " << r.runs.size()
     << " runs ok\n";
  os << "  accuracy " << pct(r.mean_accuracy) << " +- " << pct(r.std_accuracy) << " %\n";
  os << "  W/WW restricted " << pct(r.w_ww_mean.restricted) << " %, mean recall " << pct(r.w_ww_mean.mean_recall)
     << " %\n";
  os << "  AUC";
  for (Activity a : kActivities) {
    char buf[32];
    std::snprintf(buf, sizeof buf, " %s %.4f", std::string(activity_name(a)).c_str(),
                  r.auc_mean[static_cast<std::size_t>(a)]);
    os << buf;
  }
  os << '\n';
  for (const RunReport& run : r.runs) {
    os << "  seed " << run.seed << ": " << (run.failed ? "failed (" + run.error + ")" : pct(run.accuracy) + " %")
       << '\n';
  }
  if (!r.runs.empty() && !r.runs[r.closest].failed) {
    os << "  closest to mean: seed " << r.runs[r.closest].seed << '\n';
    confusion_table(os, r.runs[r.closest].confusion);
  }
  return os.str();
}

std::string text_report(const AblationReport& r) {
  std::string out;
  for (const AggregateReport& a : r.subsets) out += text_report(a);
  return out;
}

std::string text_report(const CompareReport& r) {
  std::ostringstream os;
  os << "arch  window  magnetic          imu               gap     W/WW gap\n";
  for (const CompareCell& c : r.cells) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-5s %6d  %6.2f +- %5.2f  %6.2f +- %5.2f  %+6.2f  %+6.2f\n",
                  std::string(nn::arch_name(c.arch)).c_str(), c.window_len, 100 * c.magnetic.mean_accuracy,
                  100 * c.magnetic.std_accuracy, 100 * c.imu.mean_accuracy, 100 * c.imu.std_accuracy,
                  100 * c.accuracy_gap, 100 * c.w_ww_gap);
    os << buf;
  }
  for (const CompareCell& c : r.cells) os << text_report(c.magnetic) << text_report(c.imu);
  return os.str();
}

}  // namespace gaitmag
