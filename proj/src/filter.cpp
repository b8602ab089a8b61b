#include "gaitmag/filter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace gaitmag {

namespace {

struct State {
  double z1 = 0.0, z2 = 0.0;
};

// Steady-state section states for a constant input of `level`.
std::vector<State> steady_state(std::span<const Biquad> sections, double level) {
  std::vector<State> st(sections.size());
  double in = level;
  for (std::size_t k = 0; k < sections.size(); ++k) {
    const Biquad& s = sections[k];
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double out = gain * in;
    st[k].z2 = s.b2 * in - s.a2 * out;
    st[k].z1 = s.b1 * in - s.a1 * out + st[k].z2;
    in = out;
  }
  return st;
}

void run(std::span<const Biquad> sections, std::vector<State>& st, std::vector<double>& x) {
  for (double& v : x) {
    double in = v;
    for (std::size_t k = 0; k < sections.size(); ++k) {
      const Biquad& s = sections[k];
      const double out = s.b0 * in + st[k].z1;
      st[k].z1 = s.b1 * in - s.a1 * out + st[k].z2;
      st[k].z2 = s.b2 * in - s.a2 * out;
      in = out;
    }
    v = in;
  }
}

}  // namespace

std::vector<double> sos_filter(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  std::vector<State> st(sections.size());
  run(sections, st, y);
  return y;
}

std::vector<double> sos_filtfilt(std::span<const Biquad> sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t pad = std::min<std::size_t>(3 * (2 * sections.size() + 1), n - 1);

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  auto st = steady_state(sections, ext.front());
  run(sections, st, ext);
  std::reverse(ext.begin(), ext.end());
  st = steady_state(sections, ext.front());
  run(sections, st, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

double sos_gain(std::span<const Biquad> sections, double hz, double fs) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * hz / fs);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const Biquad& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::abs(h);
}

}  // namespace gaitmag
