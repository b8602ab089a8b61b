#include "gaitmag/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gaitmag/error.hpp"

namespace gaitmag::nn {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace {

template <class T>
using Strided = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;

void require(bool ok, const std::string& layer, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, layer + ": " + what);
}

template <class T>
void glorot(Buffer<T>& w, int fan_in, int fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (T& v : w) v = static_cast<T>(rng.uniform(-a, a));
}

}  // namespace

// Dense

template <class T>
Dense<T>::Dense(int in_, int out_)
    : in(in_), out(out_), w(static_cast<std::size_t>(in_) * out_), b(out_), dw(w.size()), db(out_) {
  require(in > 0 && out > 0, "dense", "sizes must be positive");
}

template <class T>
Shape Dense<T>::output_shape(const Shape& s) const {
  require(static_cast<int>(nn::numel(s)) == in, "dense",
          "input features " + shape_str(s) + " != in " + std::to_string(in));
  return {out};
}

template <class T>
void Dense<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
  const int batch = x.dim(0);
  require(static_cast<int>(x.numel() / batch) == in, "dense", "input features != in");
  x_ = x;
  y.resize({batch, out});
  CMatMap<T> W(w.data(), in, out);
  y.mat().noalias() = x.mat() * W;
  y.mat().rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.data(), out);
}

template <class T>
void Dense<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  CMatMap<T> W(w.data(), in, out);
  MatMap<T>(dw.data(), in, out).noalias() = x_.mat().transpose() * dy.mat();
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(db.data(), out) = dy.mat().colwise().sum();
  dx.resize(x_.shape);
  dx.mat().noalias() = dy.mat() * W.transpose();
}

template <class T>
std::vector<Param<T>> Dense<T>::params() {
  return {{"w", &w, &dw}, {"b", &b, &db}};
}

template <class T>
void Dense<T>::init(Rng& rng) {
  glorot(w, in, out, rng);
  std::fill(b.begin(), b.end(), T(0));
}

// Relu

template <class T>
void Relu<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
  y.shape = x.shape;
  y.data.resize(x.numel());
  for (std::size_t i = 0; i < x.numel(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  y_ = y;
}

template <class T>
void Relu<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  dx.shape = dy.shape;
  dx.data.resize(dy.numel());
  for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[i] = y_.data[i] > T(0) ? dy.data[i] : T(0);
}

// Conv1d

template <class T>
Conv1d<T>::Conv1d(int ci, int co, int k)
    : c_in(ci),
      c_out(co),
      kernel(k),
      w(static_cast<std::size_t>(k) * ci * co),
      b(co),
      dw(w.size()),
      db(co) {
  require(ci > 0 && co > 0 && k > 0, "conv1d", "sizes must be positive");
}

template <class T>
Shape Conv1d<T>::output_shape(const Shape& s) const {
  require(s.size() == 3, "conv1d", "expects [time, lanes, channels], got " + shape_str(s));
  require(s[2] == c_in, "conv1d", "channels " + std::to_string(s[2]) + " != c_in " + std::to_string(c_in));
  require(s[0] >= kernel, "conv1d", "time " + std::to_string(s[0]) + " < kernel " + std::to_string(kernel));
  return {s[0] - kernel + 1, s[1], c_out};
}

template <class T>
void Conv1d<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
  require(x.shape.size() == 4, "conv1d", "expects [batch, time, lanes, channels]");
  in_shape_ = x.shape;
  const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const int batch = x.dim(0), steps = x.dim(1), lanes = x.dim(2), t_out = os[0];
  const Eigen::Index rows = static_cast<Eigen::Index>(batch) * t_out * lanes;
  cols_.resize(rows, static_cast<Eigen::Index>(kernel) * c_in);
  Eigen::Index r = 0;
  for (int bi = 0; bi < batch; ++bi)
    for (int t = 0; t < t_out; ++t)
      for (int l = 0; l < lanes; ++l, ++r) {
        T* dst = cols_.row(r).data();
        for (int j = 0; j < kernel; ++j) {
          const T* src = x.data.data() + ((static_cast<std::size_t>(bi) * steps + t + j) * lanes + l) * c_in;
          std::copy(src, src + c_in, dst + j * c_in);
        }
      }
  y.resize({batch, t_out, lanes, c_out});
  CMatMap<T> W(w.data(), static_cast<Eigen::Index>(kernel) * c_in, c_out);
  MatMap<T> Y = y.mat(rows, c_out);
  Y.noalias() = cols_ * W;
  Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.data(), c_out);
}

template <class T>
void Conv1d<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  const int batch = in_shape_[0], steps = in_shape_[1], lanes = in_shape_[2];
  const int t_out = steps - kernel + 1;
  const Eigen::Index rows = static_cast<Eigen::Index>(batch) * t_out * lanes;
  CMatMap<T> dY = dy.mat(rows, c_out);
  CMatMap<T> W(w.data(), static_cast<Eigen::Index>(kernel) * c_in, c_out);
  MatMap<T>(dw.data(), static_cast<Eigen::Index>(kernel) * c_in, c_out).noalias() = cols_.transpose() * dY;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(db.data(), c_out) = dY.colwise().sum();
  const RowMat<T> dcols = dY * W.transpose();
  dx.resize(in_shape_);
  Eigen::Index r = 0;
  for (int bi = 0; bi < batch; ++bi)
    for (int t = 0; t < t_out; ++t)
      for (int l = 0; l < lanes; ++l, ++r) {
        const T* src = dcols.row(r).data();
        for (int j = 0; j < kernel; ++j) {
          T* dst = dx.data.data() + ((static_cast<std::size_t>(bi) * steps + t + j) * lanes + l) * c_in;
          for (int c = 0; c < c_in; ++c) dst[c] += src[j * c_in + c];
        }
      }
}

template <class T>
std::vector<Param<T>> Conv1d<T>::params() {
  return {{"w", &w, &dw}, {"b", &b, &db}};
}

template <class T>
void Conv1d<T>::init(Rng& rng) {
  glorot(w, kernel * c_in, kernel * c_out, rng);
  std::fill(b.begin(), b.end(), T(0));
}

// MaxPool

template <class T>
MaxPool<T>::MaxPool(int kt_, int kl_) : kt(kt_), kl(kl_) {
  require(kt > 0 && kl > 0, "maxpool", "pool sizes must be positive");
}

template <class T>
Shape MaxPool<T>::output_shape(const Shape& s) const {
  require(s.size() == 3, "maxpool", "expects [time, lanes, channels], got " + shape_str(s));
  require(s[0] >= kt, "maxpool", "time " + std::to_string(s[0]) + " < pool " + std::to_string(kt));
  require(s[1] >= kl, "maxpool", "lanes " + std::to_string(s[1]) + " < pool " + std::to_string(kl));
  return {s[0] / kt, s[1] / kl, s[2]};
}

template <class T>
void MaxPool<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
  require(x.shape.size() == 4, "maxpool", "expects [batch, time, lanes, channels]");
  in_shape_ = x.shape;
  const Shape os = output_shape({x.dim(1), x.dim(2), x.dim(3)});
  const int batch = x.dim(0), steps = x.dim(1), lanes = x.dim(2), ch = x.dim(3);
  y.resize({batch, os[0], os[1], ch});
  argmax_.assign(y.numel(), 0);
  std::size_t o = 0;
  for (int bi = 0; bi < batch; ++bi)
    for (int to = 0; to < os[0]; ++to)
      for (int lo = 0; lo < os[1]; ++lo)
        for (int c = 0; c < ch; ++c, ++o) {
          std::size_t best = 0;
          T best_v = -std::numeric_limits<T>::infinity();
          for (int dt = 0; dt < kt; ++dt)
            for (int dl = 0; dl < kl; ++dl) {
              const std::size_t idx =
                  ((static_cast<std::size_t>(bi) * steps + to * kt + dt) * lanes + lo * kl + dl) * ch + c;
              if (x.data[idx] > best_v) {
                best_v = x.data[idx];
                best = idx;
              }
            }
          y.data[o] = best_v;
          argmax_[o] = best;
        }
}

template <class T>
void MaxPool<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  dx.resize(in_shape_);
  for (std::size_t o = 0; o < dy.numel(); ++o) dx.data[argmax_[o]] += dy.data[o];
}

// FeetAsChannels

template <class T>
Shape FeetAsChannels<T>::output_shape(const Shape& s) const {
  require(s.size() == 2, "feet_as_channels", "expects [time, features], got " + shape_str(s));
  require(s[1] % 2 == 0, "feet_as_channels", "features " + std::to_string(s[1]) + " not split into two feet");
  return {s[0], s[1] / 2, 2};
}

template <class T>
void FeetAsChannels<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
  require(x.shape.size() == 3, "feet_as_channels", "expects [batch, time, features]");
  in_shape_ = x.shape;
  const int batch = x.dim(0), steps = x.dim(1), f = x.dim(2), n = f / 2;
  output_shape({steps, f});
  y.resize({batch, steps, n, 2});
  for (std::size_t row = 0; row < static_cast<std::size_t>(batch) * steps; ++row) {
    const T* src = x.data.data() + row * f;
    T* dst = y.data.data() + row * f;
    for (int l = 0; l < n; ++l) {
      dst[2 * l] = src[l];
      dst[2 * l + 1] = src[n + l];
    }
  }
}

template <class T>
void FeetAsChannels<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  dx.resize(in_shape_);
  const int batch = in_shape_[0], steps = in_shape_[1], f = in_shape_[2], n = f / 2;
  for (std::size_t row = 0; row < static_cast<std::size_t>(batch) * steps; ++row) {
    const T* src = dy.data.data() + row * f;
    T* dst = dx.data.data() + row * f;
    for (int l = 0; l < n; ++l) {
      dst[l] = src[2 * l];
      dst[n + l] = src[2 * l + 1];
    }
  }
}

// Flatten

template <class T>
void Flatten<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
  in_shape_ = x.shape;
  y.shape = {x.dim(0), static_cast<int>(x.numel() / x.dim(0))};
  y.data = x.data;
}

template <class T>
void Flatten<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  dx.shape = in_shape_;
  dx.data = dy.data;
}

// Dropout

template <class T>
Dropout<T>::Dropout(double r, std::uint64_t seed) : rate(r), rng_(seed) {
  if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::InvalidConfig, "dropout rate must be in [0, 1)");
}

template <class T>
void Dropout<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool training) {
  y.shape = x.shape;
  y.data = x.data;
  mask_.assign(x.numel(), T(1));
  if (!training || rate == 0.0) return;
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (std::size_t i = 0; i < x.numel(); ++i) {
    mask_[i] = rng_.uniform() < rate ? T(0) : keep;
    y.data[i] *= mask_[i];
  }
}

template <class T>
void Dropout<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  dx.shape = dy.shape;
  dx.data.resize(dy.numel());
  for (std::size_t i = 0; i < dy.numel(); ++i) dx.data[i] = dy.data[i] * mask_[i];
}

// Lstm

template <class T>
Lstm<T>::Lstm(int in_, int h)
    : in(in_),
      hidden(h),
      wx(static_cast<std::size_t>(in_) * 4 * h),
      wh(static_cast<std::size_t>(h) * 4 * h),
      b(4 * static_cast<std::size_t>(h)),
      dwx(wx.size()),
      dwh(wh.size()),
      db(b.size()) {
  require(in > 0 && hidden > 0, "lstm", "sizes must be positive");
}

template <class T>
Shape Lstm<T>::output_shape(const Shape& s) const {
  require(s.size() >= 2, "lstm", "expects [time, features...], got " + shape_str(s));
  const int f = static_cast<int>(nn::numel(s) / s[0]);
  require(f == in, "lstm", "features " + std::to_string(f) + " != in " + std::to_string(in));
  return {hidden};
}

template <class T>
void Lstm<T>::forward(const Tensor<T>& x, Tensor<T>& y, bool) {
  require(x.shape.size() >= 3, "lstm", "expects [batch, time, features...]");
  in_shape_ = x.shape;
  batch_ = x.dim(0);
  steps_ = x.dim(1);
  output_shape(Shape(x.shape.begin() + 1, x.shape.end()));
  x_ = x;
  const int H = hidden, G = 4 * hidden;
  const Eigen::Index rows = static_cast<Eigen::Index>(batch_) * steps_;

  gates_.resize(rows, G);
  gates_.noalias() = x.mat(rows, in) * CMatMap<T>(wx.data(), in, G);
  gates_.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(b.data(), G);
  h_prev_.resize(rows, H);
  c_.resize(rows, H);

  CMatMap<T> Wh(wh.data(), H, G);
  RowMat<T> h = RowMat<T>::Zero(batch_, H);
  RowMat<T> c = RowMat<T>::Zero(batch_, H);
  for (int t = 0; t < steps_; ++t) {
    Strided<T> gt(gates_.data() + static_cast<Eigen::Index>(t) * G, batch_, G,
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(steps_) * G));
    Strided<T> hp(h_prev_.data() + static_cast<Eigen::Index>(t) * H, batch_, H,
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(steps_) * H));
    Strided<T> ct(c_.data() + static_cast<Eigen::Index>(t) * H, batch_, H,
                  Eigen::OuterStride<>(static_cast<Eigen::Index>(steps_) * H));
    hp = h;
    gt.noalias() += h * Wh;
    gt.leftCols(2 * H) = gt.leftCols(2 * H).array().logistic().matrix();
    gt.middleCols(2 * H, H) = gt.middleCols(2 * H, H).array().tanh().matrix();
    gt.rightCols(H) = gt.rightCols(H).array().logistic().matrix();
    c.array() = gt.middleCols(H, H).array() * c.array() + gt.leftCols(H).array() * gt.middleCols(2 * H, H).array();
    ct = c;
    h.array() = gt.rightCols(H).array() * c.array().tanh();
  }
  y.resize({batch_, H});
  y.mat() = h;
}

template <class T>
void Lstm<T>::backward(const Tensor<T>& dy, Tensor<T>& dx) {
  const int H = hidden, G = 4 * hidden;
  const Eigen::Index rows = static_cast<Eigen::Index>(batch_) * steps_;
  RowMat<T> dA(rows, G);
  CMatMap<T> Wh(wh.data(), H, G);
  RowMat<T> dh = dy.mat();
  RowMat<T> dc = RowMat<T>::Zero(batch_, H);
  RowMat<T> zero = RowMat<T>::Zero(batch_, H);
  const Eigen::OuterStride<> sg(static_cast<Eigen::Index>(steps_) * G);
  const Eigen::OuterStride<> sh(static_cast<Eigen::Index>(steps_) * H);
  for (int t = steps_ - 1; t >= 0; --t) {
    Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>> gt(gates_.data() + static_cast<Eigen::Index>(t) * G,
                                                            batch_, G, sg);
    Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>> ct(c_.data() + static_cast<Eigen::Index>(t) * H,
                                                            batch_, H, sh);
    Strided<T> da(dA.data() + static_cast<Eigen::Index>(t) * G, batch_, G, sg);
    const auto i = gt.leftCols(H).array();
    const auto f = gt.middleCols(H, H).array();
    const auto g = gt.middleCols(2 * H, H).array();
    const auto o = gt.rightCols(H).array();
    const auto tc = ct.array().tanh().eval();
    dc.array() += dh.array() * o * (T(1) - tc.square());
    if (t > 0) {
      Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>> cp(
          c_.data() + static_cast<Eigen::Index>(t - 1) * H, batch_, H, sh);
      da.middleCols(H, H).array() = dc.array() * cp.array() * f * (T(1) - f);
    } else {
      da.middleCols(H, H).setZero();
    }
    da.leftCols(H).array() = dc.array() * g * i * (T(1) - i);
    da.middleCols(2 * H, H).array() = dc.array() * i * (T(1) - g.square());
    da.rightCols(H).array() = dh.array() * tc * o * (T(1) - o);
    dc.array() *= f;
    dh.noalias() = da * Wh.transpose();
  }
  MatMap<T>(dwh.data(), H, G).noalias() = h_prev_.transpose() * dA;
  MatMap<T>(dwx.data(), in, G).noalias() = x_.mat(rows, in).transpose() * dA;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(db.data(), G) = dA.colwise().sum();
  dx.resize(in_shape_);
  dx.mat(rows, in).noalias() = dA * CMatMap<T>(wx.data(), in, G).transpose();
}

template <class T>
std::vector<Param<T>> Lstm<T>::params() {
  return {{"wx", &wx, &dwx}, {"wh", &wh, &dwh}, {"b", &b, &db}};
}

template <class T>
void Lstm<T>::init(Rng& rng) {
  glorot(wx, in, 4 * hidden, rng);
  glorot(wh, hidden, 4 * hidden, rng);
  std::fill(b.begin(), b.end(), T(0));
  std::fill(b.begin() + hidden, b.begin() + 2 * hidden, T(1));
}

// Loss

template <class T>
RowMat<T> softmax(const Eigen::Ref<const RowMat<T>>& logits) {
  RowMat<T> p = logits;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    p.row(r).array() -= p.row(r).maxCoeff();
    p.row(r) = p.row(r).array().exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

template <class T>
double softmax_cross_entropy(const Eigen::Ref<const RowMat<T>>& logits, std::span<const int> labels,
                             RowMat<T>* dlogits) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw Error(ErrorCode::ShapeMismatch, "labels " + std::to_string(labels.size()) + " != batch " +
                                              std::to_string(n));
  double loss = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= logits.cols()) throw Error(ErrorCode::ShapeMismatch, "label out of range");
    const double m = static_cast<double>(logits.row(r).maxCoeff());
    double s = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) s += std::exp(static_cast<double>(logits(r, c)) - m);
    loss += std::log(s) + m - static_cast<double>(logits(r, y));
  }
  if (dlogits) {
    *dlogits = softmax<T>(logits);
    for (Eigen::Index r = 0; r < n; ++r) (*dlogits)(r, labels[static_cast<std::size_t>(r)]) -= T(1);
    *dlogits /= static_cast<T>(n);
  }
  return loss / static_cast<double>(n);
}

#define GAITMAG_INSTANTIATE(T)                                                                        \
  template class Dense<T>;                                                                            \
  template class Relu<T>;                                                                             \
  template class Conv1d<T>;                                                                           \
  template class MaxPool<T>;                                                                          \
  template class FeetAsChannels<T>;                                                                   \
  template class Flatten<T>;                                                                          \
  template class Dropout<T>;                                                                          \
  template class Lstm<T>;                                                                             \
  template RowMat<T> softmax<T>(const Eigen::Ref<const RowMat<T>>&);                                  \
  template double softmax_cross_entropy<T>(const Eigen::Ref<const RowMat<T>>&, std::span<const int>, \
                                           RowMat<T>*);

GAITMAG_INSTANTIATE(float)
GAITMAG_INSTANTIATE(double)

}  // namespace gaitmag::nn
