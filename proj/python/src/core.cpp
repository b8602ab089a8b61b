#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <json.hpp>

#include "gaitmag/error.hpp"
#include "gaitmag/eval.hpp"
#include "gaitmag/filter.hpp"
#include "gaitmag/geom.hpp"
#include "gaitmag/magmodel.hpp"
#include "gaitmag/nn/model.hpp"
#include "gaitmag/packets.hpp"
#include "gaitmag/pipeline.hpp"
#include "gaitmag/simgait.hpp"

namespace py = pybind11;
using namespace gaitmag;

namespace {

using V3 = std::array<double, 3>;
using Q4 = std::array<double, 4>;  // w, x, y, z

Vec3 vec(const V3& a) { return {a[0], a[1], a[2]}; }
V3 arr(const Vec3& v) { return {v.x, v.y, v.z}; }
Quaternion quat(const Q4& a) { return {a[0], a[1], a[2], a[3]}; }
Q4 arr(const Quaternion& q) { return {q.w, q.x, q.y, q.z}; }

DipoleParams dipole(double moment, double r_min, double r_max) {
  DipoleParams p;
  p.moment = moment;
  p.r_min = r_min;
  p.r_max = r_max;
  return p;
}

// Windows as a read-only (n, window_len, n_features) float32 view on the dataset.
py::array_t<float> windows(const Dataset& d, py::object owner) {
  using S = py::ssize_t;
  const S n = static_cast<S>(d.size()), l = d.window_len, f = d.n_features;
  const S w = sizeof(float);
  py::array_t<float> a({n, l, f}, {w * l * f, w * f, w}, d.data.data(), owner);
  a.attr("flags").attr("writeable") = false;
  return a;
}

std::vector<std::size_t> split_indices(const Dataset& d, const std::string& s) {
  if (s == "train") return d.indices(Split::Train);
  if (s == "val") return d.indices(Split::Val);
  if (s == "test") return d.indices(Split::Test);
  if (s == "train+val") {
    auto a = d.indices(Split::Train);
    const auto b = d.indices(Split::Val);
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    return a;
  }
  throw Error(ErrorCode::InvalidConfig, "split must be train, val, test or train+val");
}

nn::ModelConfig model_config(const Dataset& d, const std::string& arch, int lstm_units) {
  nn::ModelConfig mc;
  mc.arch = nn::parse_arch(arch);
  mc.lstm_units = lstm_units;
  return fit_model(mc, d);
}

nn::TrainConfig train_config(int epochs, int batch_size, double lr, std::uint64_t seed) {
  nn::TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.lr = lr;
  tc.seed = seed;
  return tc;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of gaitmag";

  py::register_exception<Error>(m, "GaitmagError", PyExc_RuntimeError);

  m.def(
      "forward_field", [](const V3& p, double moment) { return arr(forward_field(vec(p), dipole(moment, 0.05, 1.5))); },
      py::arg("position"), py::arg("moment") = 1.0);
  m.def(
      "invert_field",
      [](const V3& b, double moment, double r_min, double r_max) {
        return arr(invert_field(vec(b), dipole(moment, r_min, r_max)).position);
      },
      py::arg("field"), py::arg("moment") = 1.0, py::arg("r_min") = 0.05, py::arg("r_max") = 1.5);
  m.def(
      "track",
      [](const V3& b_rx, const Q4& q_rx, const Q4& q_tx, double moment) {
        const Pose p = track({vec(b_rx), quat(q_rx), quat(q_tx), 0.0}, dipole(moment, 0.05, 1.5));
        return std::make_pair(arr(p.position), arr(p.orientation));
      },
      py::arg("b_rx"), py::arg("q_rx"), py::arg("q_tx"), py::arg("moment") = 1.0,
      "Rx position and orientation in the Tx frame; quaternions are (w, x, y, z).");
  m.def(
      "quat_to_euler",
      [](const Q4& q) {
        const EulerAngles e = quat_to_euler(quat(q)).angles;
        return V3{e.yaw, e.pitch, e.roll};
      },
      py::arg("q"), "Intrinsic ZYX angles (yaw, pitch, roll).");
  m.def(
      "euler_to_quat", [](const V3& e) { return arr(euler_to_quat({e[0], e[1], e[2]})); }, py::arg("ypr"));
  m.def(
      "lowpass",
      [](const std::vector<double>& x) { return sos_filtfilt(kEllipticLowpass, x); }, py::arg("x"),
      "Zero-phase 15 Hz elliptic low-pass for 300 Hz samples.");

  m.def(
      "gen_cohort",
      [](int n_subjects, const std::filesystem::path& out_dir, std::uint64_t seed, double weight_effect,
         int recordings) {
        CohortConfig c;
        c.out_dir = out_dir;
        c.master_seed = seed;
        c.weight_effect = weight_effect;
        c.recordings_per_activity = recordings;
        gen_cohort(n_subjects, c);
        return out_dir / "manifest.csv";
      },
      py::arg("n_subjects"), py::arg("out_dir"), py::arg("seed") = 7, py::arg("weight_effect") = 0.07,
      py::arg("recordings") = 6, "Writes a synthetic cohort and returns the manifest path.");

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("modality", [](const Dataset& d) { return std::string(modality_name(d.modality)); })
      .def_readonly("window_len", &Dataset::window_len)
      .def_readonly("n_features", &Dataset::n_features)
      .def_readonly("feature_names", &Dataset::feature_names)
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("subject_ids", &Dataset::subject_ids)
      .def_readonly("config", &Dataset::config)
      .def_property_readonly("windows", [](py::object self) { return windows(self.cast<const Dataset&>(), self); })
      .def("indices", &split_indices, py::arg("split"))
      .def("class_counts", &Dataset::class_counts)
      .def("__len__", &Dataset::size);

  m.def(
      "build_dataset",
      [](const std::filesystem::path& manifest, const std::string& modality, int window_len, std::uint64_t split_seed) {
        SplitSpec s;
        s.shuffle_seed = split_seed;
        return build_dataset(read_manifest(manifest), parse_modality(modality), window_len, s);
      },
      py::arg("manifest"), py::arg("modality") = "magnetic", py::arg("window_len") = 500, py::arg("split_seed") = 1);
  m.def("save_dataset", &save_dataset, py::arg("path"), py::arg("dataset"));
  m.def("load_dataset", &load_dataset, py::arg("path"));

  py::class_<nn::Model>(m, "Model")
      .def_property_readonly("arch", [](const nn::Model& x) { return std::string(nn::arch_name(x.config.arch)); })
      .def_property_readonly("n_params", [](const nn::Model& x) { return x.params.size(); })
      .def_property_readonly("loss_history",
                             [](const nn::Model& x) {
                               std::vector<double> l;
                               for (const auto& e : x.history) l.push_back(e.loss);
                               return l;
                             })
      .def_readonly("diverged", &nn::Model::diverged);

  m.def(
      "train",
      [](const Dataset& d, const std::string& arch, const std::string& split, int epochs, int batch_size, double lr,
         std::uint64_t seed, int lstm_units) {
        py::gil_scoped_release release;
        return nn::train(model_config(d, arch, lstm_units), train_config(epochs, batch_size, lr, seed), d,
                         split_indices(d, split));
      },
      py::arg("dataset"), py::arg("arch") = "lstm", py::arg("split") = "train", py::arg("epochs") = 40,
      py::arg("batch_size") = 32, py::arg("lr") = 1e-3, py::arg("seed") = 1, py::arg("lstm_units") = 32);
  m.def(
      "predict",
      [](const nn::Model& model, const Dataset& d, const std::string& split) {
        return nn::predict(model, d, split_indices(d, split));
      },
      py::arg("model"), py::arg("dataset"), py::arg("split") = "test", "Class probabilities, one row per window.");
  m.def("save_model", &nn::save_model, py::arg("path"), py::arg("model"));
  m.def("load_model", &nn::load_model, py::arg("path"));

  m.def(
      "evaluate_json",
      [](const nn::Model& model, const Dataset& d) {
        return nlohmann::json(evaluate(model, d, d.indices(Split::Test))).dump();
      },
      py::arg("model"), py::arg("dataset"));
  m.def(
      "repeated_runs_json",
      [](const Dataset& d, const std::string& arch, int runs, std::uint64_t seed, int epochs, int batch_size,
         double lr, int lstm_units) {
        py::gil_scoped_release release;
        const AggregateReport r = repeated_runs(d, model_config(d, arch, lstm_units),
                                                train_config(epochs, batch_size, lr, seed), runs, seed);
        return nlohmann::json(r).dump();
      },
      py::arg("dataset"), py::arg("arch") = "lstm", py::arg("runs") = 8, py::arg("seed") = 1, py::arg("epochs") = 40,
      py::arg("batch_size") = 32, py::arg("lr") = 1e-3, py::arg("lstm_units") = 32);
  m.def(
      "roc_auc",
      [](const std::vector<double>& scores, const std::vector<int>& positive) {
        std::vector<char> p(positive.begin(), positive.end());
        return roc_curve(scores, p).auc;
      },
      py::arg("scores"), py::arg("positive"));
}
