#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gaitmag/nn/tensor.hpp"
#include "gaitmag/rng.hpp"

namespace gaitmag::nn {

/// A parameter block and its gradient, both owned by the layer.
template <class T>
struct Param {
  std::string name;
  Buffer<T>* value;
  Buffer<T>* grad;
};

/// Layers cache what they need during forward; backward must follow the
/// matching forward call. x and y carry the batch dimension first.
/// Parameter gradients are overwritten, not accumulated.
template <class T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual std::string name() const = 0;
  /// Output shape for a per-sample input shape (no batch dimension). Throws
  /// ShapeMismatch naming the offending dimension.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual void forward(const Tensor<T>& x, Tensor<T>& y, bool training) = 0;
  virtual void backward(const Tensor<T>& dy, Tensor<T>& dx) = 0;
  virtual std::vector<Param<T>> params() { return {}; }
  virtual void init(Rng& /*rng*/) {}
};

/// y = x W + b over [B, in].
template <class T>
class Dense : public Layer<T> {
 public:
  Dense(int in, int out);
  std::string name() const override { return "dense"; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;
  std::vector<Param<T>> params() override;
  void init(Rng& rng) override;

  int in, out;
  Buffer<T> w, b, dw, db;  // w is [in, out] row-major

 private:
  Tensor<T> x_;
};

template <class T>
class Relu : public Layer<T> {
 public:
  std::string name() const override { return "relu"; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;

 private:
  Tensor<T> y_;
};

/// Valid, stride-1 convolution along time, applied independently to every
/// lane with shared weights: [B, T, L, Cin] -> [B, T-k+1, L, Cout]. Weight
/// layout [k * Cin, Cout] with row index j * Cin + c for tap j, channel c.
template <class T>
class Conv1d : public Layer<T> {
 public:
  Conv1d(int c_in, int c_out, int kernel);
  std::string name() const override { return "conv1d"; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;
  std::vector<Param<T>> params() override;
  void init(Rng& rng) override;

  int c_in, c_out, kernel;
  Buffer<T> w, b, dw, db;

 private:
  Shape in_shape_;
  RowMat<T> cols_;  // im2col patches, rows (b, t, l)
};

/// Non-overlapping max pooling over (time, lane): [B, T, L, C] ->
/// [B, T / kt, L / kl, C], trailing remainders dropped.
template <class T>
class MaxPool : public Layer<T> {
 public:
  MaxPool(int kt, int kl);
  std::string name() const override { return "maxpool"; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;

  int kt, kl;

 private:
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
};

/// [B, T, 2n] with left-foot columns first -> [B, T, n, 2]: lanes are the
/// per-foot features, channels the two feet.
template <class T>
class FeetAsChannels : public Layer<T> {
 public:
  std::string name() const override { return "feet_as_channels"; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;

 private:
  Shape in_shape_;
};

template <class T>
class Flatten : public Layer<T> {
 public:
  std::string name() const override { return "flatten"; }
  Shape output_shape(const Shape& in) const override { return {static_cast<int>(nn::numel(in))}; }
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;

 private:
  Shape in_shape_;
};

/// Inverted dropout; identity at inference.
template <class T>
class Dropout : public Layer<T> {
 public:
  Dropout(double rate, std::uint64_t seed);
  std::string name() const override { return "dropout"; }
  Shape output_shape(const Shape& in) const override { return in; }
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;
  void reseed(std::uint64_t seed) { rng_ = Rng(seed); }

  double rate;

 private:
  Rng rng_;
  Buffer<T> mask_;
};

/// Single-direction LSTM over [B, T, F] (trailing dimensions after time are
/// flattened into F), returning the last hidden state [B, H]. Gate order
/// i, f, g, o in the 4H columns of wx [F, 4H], wh [H, 4H] and b [4H].
template <class T>
class Lstm : public Layer<T> {
 public:
  Lstm(int in, int hidden);
  std::string name() const override { return "lstm"; }
  Shape output_shape(const Shape& in) const override;
  void forward(const Tensor<T>& x, Tensor<T>& y, bool training) override;
  void backward(const Tensor<T>& dy, Tensor<T>& dx) override;
  std::vector<Param<T>> params() override;
  /// Glorot-uniform weights, forget-gate bias 1.
  void init(Rng& rng) override;

  int in, hidden;
  Buffer<T> wx, wh, b, dwx, dwh, db;

 private:
  Shape in_shape_;
  int batch_ = 0, steps_ = 0;
  RowMat<T> gates_;   // activated gates, rows (b, t)
  RowMat<T> h_prev_;  // h_{t-1}, rows (b, t)
  RowMat<T> c_;       // c_t, rows (b, t)
  Tensor<T> x_;
};

/// Row-wise softmax.
template <class T>
RowMat<T> softmax(const Eigen::Ref<const RowMat<T>>& logits);

/// Mean cross-entropy over the batch; writes d loss / d logits = (p - onehot) / B.
template <class T>
double softmax_cross_entropy(const Eigen::Ref<const RowMat<T>>& logits, std::span<const int> labels,
                             RowMat<T>* dlogits);

}  // namespace gaitmag::nn
