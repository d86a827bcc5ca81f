#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fplab {

struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1,1], Newton iteration on P_k.
inline QuadRule gauss_legendre(int k) {
  if (k < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
  QuadRule r;
  r.nodes.resize(k);
  r.weights.resize(k);
  const int m = (k + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (k + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < k; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = k * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = -x;
    r.nodes[k - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    r.weights[i] = w;
    r.weights[k - 1 - i] = w;
  }
  return r;
}

inline QuadRule gauss_legendre_on(double a, double b, int k) {
  QuadRule r = gauss_legendre(k);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < k; ++i) {
    r.nodes[i] = mid + half * r.nodes[i];
    r.weights[i] *= half;
  }
  return r;
}

// A quadrature panel [a,b] with a Gauss-Legendre rule of `points` nodes.
struct Panel {
  double a;
  double b;
  int points;
};

// Composite rule over consecutive panels; node order follows panel order.
inline QuadRule composite_rule(const std::vector<Panel>& panels) {
  QuadRule out;
  for (const auto& p : panels) {
    QuadRule r = gauss_legendre_on(p.a, p.b, p.points);
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  }
  return out;
}

}  // namespace fplab
