#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "seqtraj/numerics.hpp"

namespace testutil {

inline std::size_t pick(seqtraj::Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

inline seqtraj::Matrix random_stochastic(seqtraj::Rng& rng, std::size_t rows, std::size_t cols,
                                         double spread = 1.0) {
  seqtraj::Matrix m(rows, cols);
  for (std::size_t t = 0; t < rows; ++t) {
    std::vector<double> logits(cols);
    for (auto& v : logits) v = spread * rng.normal();
    seqtraj::softmax(logits, m.row(t));
  }
  return m;
}

inline seqtraj::Matrix random_normal(seqtraj::Rng& rng, std::size_t rows, std::size_t cols) {
  seqtraj::Matrix m(rows, cols);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

// Central differences of f with respect to every entry of `x`.
inline std::vector<double> numeric_gradient(std::span<double> x, const std::function<double()>& f,
                                            double h = 1e-6) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return scale == 0.0 ? diff : diff / scale;
}

inline double max_abs_diff(const seqtraj::Matrix& a, const seqtraj::Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

}  // namespace testutil
