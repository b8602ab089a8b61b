#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/StdVector>

namespace gaitmag::nn {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1},
                         [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
}

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatMap = Eigen::Map<RowMat<T>>;
template <class T>
using CMatMap = Eigen::Map<const RowMat<T>>;

/// Storage for activations and parameters. Aligned to Eigen's packet size so
/// every map vectorizes the same way regardless of where the heap put it;
/// otherwise results can differ in the last bit from run to run.
template <class T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

/// Dense row-major tensor. Activations are laid out [batch, ...].
template <class T>
struct Tensor {
  Shape shape;
  Buffer<T> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(nn::numel(shape), T(0)) {}

  void resize(const Shape& s) {
    shape = s;
    data.assign(nn::numel(shape), T(0));
  }
  std::size_t numel() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  /// View as [shape[0], rest].
  MatMap<T> mat() { return {data.data(), shape.at(0), static_cast<Eigen::Index>(numel() / shape.at(0))}; }
  CMatMap<T> mat() const {
    return {data.data(), shape.at(0), static_cast<Eigen::Index>(numel() / shape.at(0))};
  }
  MatMap<T> mat(Eigen::Index rows, Eigen::Index cols) { return {data.data(), rows, cols}; }
  CMatMap<T> mat(Eigen::Index rows, Eigen::Index cols) const { return {data.data(), rows, cols}; }
};

}  // namespace gaitmag::nn
