#pragma once

#include <boost/math/special_functions/legendre.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace cgolab {

/// Gauss-Legendre rule on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const QuadratureRule& gauss_legendre(int pts) {
  if (pts < 1 || pts > 200) throw std::invalid_argument("gauss_legendre: pts must be in [1, 200]");
  static std::mutex m;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(m);
  auto it = cache.find(pts);
  if (it != cache.end()) return it->second;
  QuadratureRule r;
  const auto zeros = boost::math::legendre_p_zeros<double>(pts);  // nonnegative zeros, ascending
  for (double z : zeros) {
    const double d = boost::math::legendre_p_prime<double>(pts, z);
    const double w = 2.0 / ((1.0 - z * z) * d * d);
    if (z == 0.0) {
      r.nodes.push_back(0.0);
      r.weights.push_back(w);
    } else {
      r.nodes.push_back(z);
      r.weights.push_back(w);
      r.nodes.push_back(-z);
      r.weights.push_back(w);
    }
  }
  return cache.emplace(pts, std::move(r)).first->second;
}

/// Composite Gauss-Legendre nodes and weights on [a, b] with `panels` equal panels.
inline QuadratureRule composite_gauss_legendre(double a, double b, int panels, int pts) {
  const auto& base = gauss_legendre(pts);
  QuadratureRule out;
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      out.nodes.push_back(c + 0.5 * h * base.nodes[i]);
      out.weights.push_back(0.5 * h * base.weights[i]);
    }
  }
  return out;
}

}  // namespace cgolab
