#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gaitmag/nn/layers.hpp"
#include "gaitmag/pipeline.hpp"

namespace gaitmag::nn {

enum class Arch { Cnn, Lstm };

std::string_view arch_name(Arch a);
Arch parse_arch(std::string_view s);

/// CNN: feet as channels -> conv(k) -> relu -> pool(pool1_time, pool1_lanes)
/// -> conv(k) -> relu -> pool(pool2_time, pool2_lanes) -> flatten -> dense ->
/// relu -> dropout -> dense(n_classes).
/// LSTM: lstm(units) -> dense -> relu -> dense(n_classes).
struct ModelConfig {
  Arch arch = Arch::Lstm;
  int window_len = 500;
  int n_features = 12;
  int n_classes = 4;

  int conv1_filters = 32;
  int conv1_kernel = 5;
  int pool1_time = 5;
  int pool1_lanes = 2;
  int conv2_filters = 64;
  int conv2_kernel = 5;
  int pool2_time = 9;
  int pool2_lanes = 2;
  int cnn_dense = 64;
  double dropout = 0.5;

  // 32 units: 64 costs ~2.5x the time per epoch with no accuracy gain on 500-step windows.
  int lstm_units = 32;
  int lstm_dense = 32;

  void validate() const;
  /// key=value lines, one per field.
  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
};

struct TrainConfig {
  int batch_size = 32;
  int epochs = 40;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Gradients are rescaled so their global L2 norm is at most clip_norm
  /// before each Adam step; 0 disables clipping.
  double clip_norm = 1.0;
  std::uint64_t seed = 1;

  void validate() const;
  std::string to_text() const;
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Layer stack for one architecture, templated on the arithmetic type so the
/// gradient checks can run in double while training runs in float.
template <class T>
class Network {
 public:
  explicit Network(const ModelConfig& cfg, std::uint64_t dropout_seed = 0);

  const ModelConfig& config() const { return cfg_; }
  std::vector<std::unique_ptr<Layer<T>>>& layers() { return layers_; }
  std::vector<Param<T>> params();
  std::size_t param_count();
  void init(Rng& rng);

  /// x is [B, window_len, n_features]; returns logits [B, n_classes].
  const Tensor<T>& forward(const Tensor<T>& x, bool training);
  /// Back-propagates d loss / d logits; parameter gradients land in params().
  void backward(const Tensor<T>& dlogits);

  std::vector<double> flat_params();
  void set_flat_params(std::span<const double> flat);

 private:
  ModelConfig cfg_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<Tensor<T>> acts_;
  Tensor<T> grad_a_, grad_b_;
};

/// Trained parameters with the configuration that produced them.
struct Model {
  ModelConfig config;
  TrainConfig train;
  std::vector<double> params;
  std::vector<EpochStats> history;
  bool diverged = false;
};

/// Mini-batch Adam on the listed windows. Training arithmetic is float32;
/// the epoch order, initialization and dropout masks derive from cfg.seed.
/// Stops early with diverged = true when the loss turns non-finite.
Model train(const ModelConfig& model, const TrainConfig& cfg, const Dataset& data,
            std::span<const std::size_t> indices);

/// Class probabilities [n, n_classes] for the listed windows, dropout off.
Eigen::MatrixXd predict(const Model& model, const Dataset& data, std::span<const std::size_t> indices);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace gaitmag::nn
