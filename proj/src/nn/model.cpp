#include "gaitmag/nn/model.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "gaitmag/error.hpp"

namespace gaitmag::nn {

std::string_view arch_name(Arch a) { return a == Arch::Cnn ? "cnn" : "lstm"; }

Arch parse_arch(std::string_view s) {
  if (s == "cnn" || s == "CNN") return Arch::Cnn;
  if (s == "lstm" || s == "LSTM") return Arch::Lstm;
  throw Error(ErrorCode::InvalidConfig, "unknown architecture '" + std::string(s) + "'");
}

namespace {

void positive(int v, const char* name) {
  if (v <= 0) throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be positive");
}

std::map<std::string, std::string> parse_kv(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::istringstream is{std::string(text)};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Parse, "expected key=value, got '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

template <class V>
void take(const std::map<std::string, std::string>& kv, const char* key, V& out) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  const std::string& s = it->second;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorCode::Parse, std::string("bad value for ") + key + ": '" + s + "'");
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

void ModelConfig::validate() const {
  positive(window_len, "window_len");
  positive(n_features, "n_features");
  positive(n_classes, "n_classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout must be in [0, 1)");
  if (arch == Arch::Cnn) {
    for (auto [v, n] : {std::pair{conv1_filters, "conv1_filters"}, {conv1_kernel, "conv1_kernel"},
                        {pool1_time, "pool1_time"}, {pool1_lanes, "pool1_lanes"},
                        {conv2_filters, "conv2_filters"}, {conv2_kernel, "conv2_kernel"},
                        {pool2_time, "pool2_time"}, {pool2_lanes, "pool2_lanes"}, {cnn_dense, "cnn_dense"}})
      positive(v, n);
    if (n_features % 2 != 0)
      throw Error(ErrorCode::InvalidConfig, "CNN needs an even feature count (left and right feet)");
  } else {
    positive(lstm_units, "lstm_units");
    positive(lstm_dense, "lstm_dense");
  }
  // Shape propagation reports the first layer that does not fit.
  try {
    Network<float> probe(*this);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "arch=" << arch_name(arch) << "\nwindow_len=" << window_len << "\nn_features=" << n_features
     << "\nn_classes=" << n_classes;
  if (arch == Arch::Cnn) {
    os << "\nconv1_filters=" << conv1_filters << "\nconv1_kernel=" << conv1_kernel << "\npool1_time=" << pool1_time
       << "\npool1_lanes=" << pool1_lanes << "\nconv2_filters=" << conv2_filters << "\nconv2_kernel="
       << conv2_kernel << "\npool2_time=" << pool2_time << "\npool2_lanes=" << pool2_lanes
       << "\ncnn_dense=" << cnn_dense << "\ndropout=" << fmt(dropout);
  } else {
    os << "\nlstm_units=" << lstm_units << "\nlstm_dense=" << lstm_dense;
  }
  os << '\n';
  return os.str();
}

ModelConfig ModelConfig::from_text(std::string_view text) {
  const auto kv = parse_kv(text);
  ModelConfig c;
  if (auto it = kv.find("arch"); it != kv.end()) c.arch = parse_arch(it->second);
  take(kv, "window_len", c.window_len);
  take(kv, "n_features", c.n_features);
  take(kv, "n_classes", c.n_classes);
  take(kv, "conv1_filters", c.conv1_filters);
  take(kv, "conv1_kernel", c.conv1_kernel);
  take(kv, "pool1_time", c.pool1_time);
  take(kv, "pool1_lanes", c.pool1_lanes);
  take(kv, "conv2_filters", c.conv2_filters);
  take(kv, "conv2_kernel", c.conv2_kernel);
  take(kv, "pool2_time", c.pool2_time);
  take(kv, "pool2_lanes", c.pool2_lanes);
  take(kv, "cnn_dense", c.cnn_dense);
  take(kv, "dropout", c.dropout);
  take(kv, "lstm_units", c.lstm_units);
  take(kv, "lstm_dense", c.lstm_dense);
  return c;
}

void TrainConfig::validate() const {
  positive(batch_size, "batch_size");
  if (epochs < 0) throw Error(ErrorCode::InvalidConfig, "epochs must be non-negative");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorCode::InvalidConfig, "lr must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorCode::InvalidConfig, "Adam betas must be in [0, 1)");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidConfig, "Adam eps must be positive");
  if (!(clip_norm >= 0.0) || !std::isfinite(clip_norm))
    throw Error(ErrorCode::InvalidConfig, "clip_norm must be finite and >= 0");
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "batch_size=" << batch_size << "\nepochs=" << epochs << "\nlr=" << fmt(lr) << "\nbeta1=" << fmt(beta1)
     << "\nbeta2=" << fmt(beta2) << "\neps=" << fmt(eps) << "\nclip_norm=" << fmt(clip_norm) << "\nseed=" << seed << '\n';
  return os.str();
}

// Network

template <class T>
Network<T>::Network(const ModelConfig& cfg, std::uint64_t dropout_seed) : cfg_(cfg) {
  Shape s{cfg.window_len, cfg.n_features};
  auto add = [&](std::unique_ptr<Layer<T>> layer) {
    s = layer->output_shape(s);
    layers_.push_back(std::move(layer));
  };
  if (cfg.arch == Arch::Cnn) {
    add(std::make_unique<FeetAsChannels<T>>());
    add(std::make_unique<Conv1d<T>>(2, cfg.conv1_filters, cfg.conv1_kernel));
    add(std::make_unique<Relu<T>>());
    add(std::make_unique<MaxPool<T>>(cfg.pool1_time, cfg.pool1_lanes));
    add(std::make_unique<Conv1d<T>>(cfg.conv1_filters, cfg.conv2_filters, cfg.conv2_kernel));
    add(std::make_unique<Relu<T>>());
    add(std::make_unique<MaxPool<T>>(cfg.pool2_time, cfg.pool2_lanes));
    add(std::make_unique<Flatten<T>>());
    add(std::make_unique<Dense<T>>(s[0], cfg.cnn_dense));
    add(std::make_unique<Relu<T>>());
    add(std::make_unique<Dropout<T>>(cfg.dropout, dropout_seed));
    add(std::make_unique<Dense<T>>(cfg.cnn_dense, cfg.n_classes));
  } else {
    add(std::make_unique<Lstm<T>>(cfg.n_features, cfg.lstm_units));
    add(std::make_unique<Dense<T>>(cfg.lstm_units, cfg.lstm_dense));
    add(std::make_unique<Relu<T>>());
    add(std::make_unique<Dense<T>>(cfg.lstm_dense, cfg.n_classes));
  }
  acts_.resize(layers_.size());
}

template <class T>
std::vector<Param<T>> Network<T>::params() {
  std::vector<Param<T>> out;
  for (auto& l : layers_)
    for (auto& p : l->params()) out.push_back(p);
  return out;
}

template <class T>
std::size_t Network<T>::param_count() {
  std::size_t n = 0;
  for (auto& p : params()) n += p.value->size();
  return n;
}

template <class T>
void Network<T>::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

template <class T>
const Tensor<T>& Network<T>::forward(const Tensor<T>& x, bool training) {
  if (x.shape.size() != 3 || x.dim(1) != cfg_.window_len || x.dim(2) != cfg_.n_features)
    throw Error(ErrorCode::ShapeMismatch, "network input " + shape_str(x.shape) + ", expected [B, " +
                                              std::to_string(cfg_.window_len) + ", " +
                                              std::to_string(cfg_.n_features) + "]");
  const Tensor<T>* in = &x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->forward(*in, acts_[i], training);
    in = &acts_[i];
  }
  return acts_.back();
}

template <class T>
void Network<T>::backward(const Tensor<T>& dlogits) {
  const Tensor<T>* g = &dlogits;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    Tensor<T>& out = (g == &grad_a_) ? grad_b_ : grad_a_;
    layers_[i]->backward(*g, out);
    g = &out;
  }
}

template <class T>
std::vector<double> Network<T>::flat_params() {
  std::vector<double> out;
  for (auto& p : params()) out.insert(out.end(), p.value->begin(), p.value->end());
  return out;
}

template <class T>
void Network<T>::set_flat_params(std::span<const double> flat) {
  if (flat.size() != param_count())
    throw Error(ErrorCode::ShapeMismatch, "parameter count " + std::to_string(flat.size()) + " != " +
                                              std::to_string(param_count()));
  std::size_t k = 0;
  for (auto& p : params())
    for (T& v : *p.value) v = static_cast<T>(flat[k++]);
}

template class Network<float>;
template class Network<double>;

// Training

namespace {

using Scalar = float;

void fill_batch(const Dataset& data, std::span<const std::size_t> idx, Tensor<Scalar>& x, std::vector<int>& y) {
  x.resize({static_cast<int>(idx.size()), data.window_len, data.n_features});
  y.resize(idx.size());
  const std::size_t w = data.window_size();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto src = data.window(idx[k]);
    std::copy(src.begin(), src.end(), x.data.begin() + static_cast<std::ptrdiff_t>(k * w));
    y[k] = data.labels[idx[k]];
  }
}

void check_shape(const ModelConfig& m, const Dataset& data) {
  if (m.window_len != data.window_len || m.n_features != data.n_features)
    throw Error(ErrorCode::ShapeMismatch, "model expects windows " + std::to_string(m.window_len) + "x" +
                                              std::to_string(m.n_features) + ", dataset has " +
                                              std::to_string(data.window_len) + "x" +
                                              std::to_string(data.n_features));
}

}  // namespace

Model train(const ModelConfig& mc, const TrainConfig& cfg, const Dataset& data,
            std::span<const std::size_t> indices) {
  mc.validate();
  cfg.validate();
  check_shape(mc, data);
  if (indices.empty()) throw Error(ErrorCode::InvalidConfig, "empty training set");

  Network<Scalar> net(mc, derive_seed(cfg.seed, 3));
  Rng init_rng(derive_seed(cfg.seed, 2));
  Rng order_rng(derive_seed(cfg.seed, 1));
  net.init(init_rng);

  auto params = net.params();
  std::vector<Buffer<Scalar>> m(params.size()), v(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    m[k].assign(params[k].value->size(), 0.0f);
    v[k].assign(params[k].value->size(), 0.0f);
  }

  Model out;
  out.config = mc;
  out.train = cfg;
  std::vector<std::size_t> order(indices.begin(), indices.end());
  Tensor<Scalar> x, dlogits;
  std::vector<int> y;
  RowMat<Scalar> dl;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs && !out.diverged; ++epoch) {
    order_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
      fill_batch(data, std::span(order).subspan(start, n), x, y);
      const Tensor<Scalar>& logits = net.forward(x, true);
      const double loss = softmax_cross_entropy<Scalar>(logits.mat(), y, &dl);
      if (!std::isfinite(loss)) {
        out.diverged = true;
        break;
      }
      loss_sum += loss * static_cast<double>(n);
      for (std::size_t r = 0; r < n; ++r) {
        Eigen::Index arg;
        logits.mat().row(static_cast<Eigen::Index>(r)).maxCoeff(&arg);
        if (arg == y[r]) ++correct;
      }
      dlogits.shape = logits.shape;
      dlogits.data.assign(dl.data(), dl.data() + dl.size());
      net.backward(dlogits);

      if (cfg.clip_norm > 0.0) {
        double sq = 0.0;
        for (auto& p : params)
          for (Scalar g : *p.grad) sq += static_cast<double>(g) * g;
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm) {
          const auto scale = static_cast<Scalar>(cfg.clip_norm / norm);
          for (auto& p : params)
            for (Scalar& g : *p.grad) g *= scale;
        }
      }

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      const auto b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
      const auto step_size = static_cast<Scalar>(cfg.lr * std::sqrt(bc2) / bc1);
      const auto eps_hat = static_cast<Scalar>(cfg.eps * std::sqrt(bc2));
      for (std::size_t k = 0; k < params.size(); ++k) {
        Buffer<Scalar>& w = *params[k].value;
        const Buffer<Scalar>& g = *params[k].grad;
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[k][i] = b1 * m[k][i] + (1.0f - b1) * g[i];
          v[k][i] = b2 * v[k][i] + (1.0f - b2) * g[i] * g[i];
          w[i] -= step_size * m[k][i] / (std::sqrt(v[k][i]) + eps_hat);
        }
      }
    }
    if (out.diverged) break;
    out.history.push_back({loss_sum / static_cast<double>(order.size()),
                           static_cast<double>(correct) / static_cast<double>(order.size())});
  }
  out.params = net.flat_params();
  return out;
}

Eigen::MatrixXd predict(const Model& model, const Dataset& data, std::span<const std::size_t> indices) {
  check_shape(model.config, data);
  Network<Scalar> net(model.config);
  net.set_flat_params(model.params);
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(indices.size()), model.config.n_classes);
  constexpr std::size_t kBatch = 128;
  Tensor<Scalar> x;
  std::vector<int> y;
  for (std::size_t start = 0; start < indices.size(); start += kBatch) {
    const std::size_t n = std::min(indices.size() - start, kBatch);
    fill_batch(data, indices.subspan(start, n), x, y);
    const Eigen::MatrixXd logits = net.forward(x, false).mat().cast<double>();
    probs.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) =
        softmax<double>(logits);
  }
  return probs;
}

// Model file, little-endian:
//   "GMMODEL1", u32 version, u32 len + model config text, u32 len + train
//   config text, u32 diverged, u32 n_epochs, n_epochs x (f64 loss, f64
//   accuracy), u64 n_params, n_params x f64.
namespace {

constexpr char kModelMagic[8] = {'G', 'M', 'M', 'O', 'D', 'E', 'L', '1'};
constexpr std::uint32_t kModelVersion = 1;

template <class V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

void put_str(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <class V>
V get(std::istream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw Error(ErrorCode::Parse, "model file truncated");
  return v;
}

std::string get_str(std::istream& is) {
  const auto n = get<std::uint32_t>(is);
  if (n > (1u << 20)) throw Error(ErrorCode::Parse, "model config text too long");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw Error(ErrorCode::Parse, "model file truncated");
  return s;
}

TrainConfig train_from_text(std::string_view text) {
  const auto kv = parse_kv(text);
  TrainConfig c;
  take(kv, "batch_size", c.batch_size);
  take(kv, "epochs", c.epochs);
  take(kv, "lr", c.lr);
  take(kv, "beta1", c.beta1);
  take(kv, "beta2", c.beta2);
  take(kv, "eps", c.eps);
  take(kv, "clip_norm", c.clip_norm);
  take(kv, "seed", c.seed);
  return c;
}

}  // namespace

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot write " + path.string());
  os.write(kModelMagic, 8);
  put<std::uint32_t>(os, kModelVersion);
  put_str(os, model.config.to_text());
  put_str(os, model.train.to_text());
  put<std::uint32_t>(os, model.diverged ? 1 : 0);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(model.history.size()));
  for (const EpochStats& e : model.history) {
    put<double>(os, e.loss);
    put<double>(os, e.accuracy);
  }
  put<std::uint64_t>(os, model.params.size());
  os.write(reinterpret_cast<const char*>(model.params.data()),
           static_cast<std::streamsize>(model.params.size() * sizeof(double)));
  if (!os) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kModelMagic, 8) != 0)
    throw Error(ErrorCode::Parse, path.string() + " is not a model file");
  if (get<std::uint32_t>(is) != kModelVersion) throw Error(ErrorCode::Parse, "unsupported model version");
  Model m;
  m.config = ModelConfig::from_text(get_str(is));
  m.train = train_from_text(get_str(is));
  m.diverged = get<std::uint32_t>(is) != 0;
  const auto n_epochs = get<std::uint32_t>(is);
  for (std::uint32_t e = 0; e < n_epochs; ++e) {
    EpochStats s;
    s.loss = get<double>(is);
    s.accuracy = get<double>(is);
    m.history.push_back(s);
  }
  const auto n = get<std::uint64_t>(is);
  if (n > (1ull << 28)) throw Error(ErrorCode::Parse, "implausible parameter count");
  m.params.resize(n);
  is.read(reinterpret_cast<char*>(m.params.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw Error(ErrorCode::Parse, "model file truncated");
  m.config.validate();
  if (Network<float>(m.config).param_count() != n)
    throw Error(ErrorCode::Parse, "parameter count does not match the stored configuration");
  return m;
}

}  // namespace gaitmag::nn
