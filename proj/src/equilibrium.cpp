#include "fplab/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fplab {

// ---------------------------------------------------------------- PotentialFn

PotentialFn PotentialFn::zero(double R) {
  PotentialFn f;
  f.R_ = R;
  f.is_poly_ = true;
  f.poly_ = NCPolynomial(1);
  return f;
}

PotentialFn PotentialFn::from_poly(const NCPolynomial& p, double R) {
  if (p.nvars() > 1)
    throw std::invalid_argument("PotentialFn: polynomial must be single-variable");
  if (!p.is_selfadjoint())
    throw std::invalid_argument("PotentialFn: potential must be real on [-R,R]");
  PotentialFn f;
  f.R_ = R;
  f.is_poly_ = true;
  f.poly_ = p;
  return f;
}

PotentialFn PotentialFn::tabulated(std::vector<double> xs, std::vector<double> ys, double R) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("PotentialFn: need at least two tabulated points");
  PotentialFn f;
  f.R_ = R;
  f.is_poly_ = false;
  f.xs_ = std::move(xs);
  f.ys_ = std::move(ys);
  // Fritsch-Carlson slopes: no overshoot beyond the local data range
  const size_t n = f.xs_.size();
  std::vector<double> d(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) d[i] = (f.ys_[i + 1] - f.ys_[i]) / (f.xs_[i + 1] - f.xs_[i]);
  f.slopes_.resize(n);
  f.slopes_[0] = d[0];
  f.slopes_[n - 1] = d[n - 2];
  for (size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      f.slopes_[i] = 0.0;
    } else {
      double w1 = 2.0 * (f.xs_[i + 1] - f.xs_[i]) + (f.xs_[i] - f.xs_[i - 1]);
      double w2 = (f.xs_[i + 1] - f.xs_[i]) + 2.0 * (f.xs_[i] - f.xs_[i - 1]);
      f.slopes_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  return f;
}

double PotentialFn::operator()(double t) const {
  if (is_poly_) {
    if (poly_.is_zero()) return 0.0;
    return poly_.eval_scalar(t).real();
  }
  if (t <= xs_.front()) return ys_.front() + slopes_.front() * (t - xs_.front());
  if (t >= xs_.back()) return ys_.back() + slopes_.back() * (t - xs_.back());
  size_t hi = std::upper_bound(xs_.begin(), xs_.end(), t) - xs_.begin();
  size_t lo = hi - 1;
  double h = xs_[hi] - xs_[lo];
  double u = (t - xs_[lo]) / h;
  double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  double h10 = u * (1 - u) * (1 - u);
  double h01 = u * u * (3 - 2 * u);
  double h11 = u * u * (u - 1);
  return h00 * ys_[lo] + h10 * h * slopes_[lo] + h01 * ys_[hi] + h11 * h * slopes_[hi];
}

// ---------------------------------------------------------------- solver

namespace {

double weighted_median(std::vector<std::pair<double, double>> vw) {
  std::sort(vw.begin(), vw.end());
  double total = 0.0;
  for (auto& [v, w] : vw) total += w;
  double acc = 0.0;
  for (auto& [v, w] : vw) {
    acc += w;
    if (acc >= 0.5 * total) return v;
  }
  return vw.back().first;
}

struct Residuals {
  double F;
  double on_max;
  double off_min;
};

Residuals frostman_residuals(const std::vector<double>& hv, const std::vector<double>& twoU,
                             const std::vector<double>& w, double support_cutoff) {
  std::vector<std::pair<double, double>> vw;
  for (size_t i = 0; i < w.size(); ++i)
    if (w[i] > support_cutoff) vw.emplace_back(hv[i] - twoU[i], w[i]);
  Residuals r{0.0, 0.0, 0.0};
  if (vw.empty()) return r;
  r.F = weighted_median(vw);
  double on = 0.0;
  double off = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < w.size(); ++i) {
    double field = hv[i] - twoU[i] - r.F;
    if (w[i] > support_cutoff)
      on = std::max(on, std::abs(field));
    else
      off = std::min(off, field);
  }
  r.on_max = on;
  r.off_min = std::isfinite(off) ? off : 0.0;
  return r;
}

}  // namespace

EquilibriumResult solve_equilibrium(const PotentialFn& h, const EquilibriumOptions& opts) {
  const int m = opts.grid;
  if (m < 200) throw std::invalid_argument("solve_equilibrium: grid must have >= 200 nodes");
  const double R = h.radius();
  const double dx = 2.0 * R / m;

  std::vector<double> x(m), hv(m);
  for (int i = 0; i < m; ++i) {
    x[i] = -R + (i + 0.5) * dx;
    hv[i] = h(x[i]);
  }

  // symmetric log kernel from the exact cell-pair integrals
  const std::vector<double> kern = cell_pair_kernel(m, dx);
  std::vector<double> K(static_cast<size_t>(m) * m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) K[static_cast<size_t>(i) * m + j] = kern[std::abs(i - j)];
  auto kcol = [&](int j) { return &K[static_cast<size_t>(j) * m]; };

  // state: weights w, gradient g = -h + 2Kw, quad = w'Kw, hw = h.w
  std::vector<double> w(m, 1.0 / m), g(m), twoKw(m);
  auto refresh = [&](double& quad, double& hw) {
    std::fill(twoKw.begin(), twoKw.end(), 0.0);
    for (int j = 0; j < m; ++j) {
      if (w[j] == 0.0) continue;
      const double* col = kcol(j);
      const double wj = w[j];
      for (int i = 0; i < m; ++i) twoKw[i] += wj * col[i];
    }
    quad = 0.0;
    hw = 0.0;
    for (int i = 0; i < m; ++i) {
      quad += w[i] * twoKw[i];
      twoKw[i] *= 2.0;
      g[i] = -hv[i] + twoKw[i];
      hw += w[i] * hv[i];
    }
  };
  double quad = 0.0, hw = 0.0;
  refresh(quad, hw);

  const double support_cutoff = opts.support_threshold / m;
  EquilibriumResult res;
  double last_obj = -std::numeric_limits<double>::infinity();
  long it = 0;
  bool converged = false;

  for (; it < opts.max_iters; ++it) {
    // FW vertex: node maximizing the gradient; away vertex: support minimizer
    int jmax = 0, amin = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (g[i] > gmax) {
        gmax = g[i];
        jmax = i;
      }
      if (w[i] > 0.0 && g[i] < gmin) {
        gmin = g[i];
        amin = i;
      }
    }
    const double gw = -hw + 2.0 * quad;
    const double fw_gap = gmax - gw;
    const double away_gap = gw - gmin;

    if (it % opts.check_interval == 0) {
      double obj = -hw + quad;
      auto r = frostman_residuals(hv, twoKw, w, support_cutoff);
      if (r.on_max < opts.frostman_tol && r.off_min > -opts.frostman_tol &&
          std::abs(obj - last_obj) < opts.objective_tol && it > 0) {
        converged = true;
        break;
      }
      last_obj = obj;
    }
    if (fw_gap < 1e-14 && away_gap < 1e-14) {
      converged = true;
      break;
    }

    if (fw_gap >= away_gap || amin < 0) {
      // d = e_j - w
      const double kwj = 0.5 * twoKw[jmax];
      const double curv = K[static_cast<size_t>(jmax) * m + jmax] - 2.0 * kwj + quad;
      double t = 1.0;
      if (curv < 0.0) t = std::clamp(-fw_gap / (2.0 * curv), 0.0, 1.0);
      if (t == 0.0) t = 1e-16;
      for (int i = 0; i < m; ++i) w[i] *= (1.0 - t);
      w[jmax] += t;
      quad = (1.0 - t) * (1.0 - t) * quad + 2.0 * t * (1.0 - t) * kwj +
             t * t * K[static_cast<size_t>(jmax) * m + jmax];
      hw = (1.0 - t) * hw + t * hv[jmax];
      const double* col = kcol(jmax);
      for (int i = 0; i < m; ++i) {
        twoKw[i] = (1.0 - t) * twoKw[i] + 2.0 * t * col[i];
        g[i] = -hv[i] + twoKw[i];
      }
    } else {
      // away step, d = w - e_a, feasible up to t = w_a / (1 - w_a)
      const double wa = w[amin];
      if (wa >= 1.0) break;  // single-vertex iterate, nothing to move away from
      const double tmax = wa / (1.0 - wa);
      const double kwa = 0.5 * twoKw[amin];
      const double curv = quad - 2.0 * kwa + K[static_cast<size_t>(amin) * m + amin];
      double t = tmax;
      if (curv < 0.0) t = std::clamp(-away_gap / (2.0 * curv), 0.0, tmax);
      bool drop = (t >= tmax);
      for (int i = 0; i < m; ++i) w[i] *= (1.0 + t);
      w[amin] -= t;
      if (drop) w[amin] = 0.0;
      quad = (1.0 + t) * (1.0 + t) * quad - 2.0 * t * (1.0 + t) * kwa +
             t * t * K[static_cast<size_t>(amin) * m + amin];
      hw = (1.0 + t) * hw - t * hv[amin];
      const double* col = kcol(amin);
      for (int i = 0; i < m; ++i) {
        twoKw[i] = (1.0 + t) * twoKw[i] - 2.0 * t * col[i];
        g[i] = -hv[i] + twoKw[i];
      }
    }

    if ((it & 8191) == 8191) refresh(quad, hw);  // control floating point drift
  }

  refresh(quad, hw);
  auto r = frostman_residuals(hv, twoKw, w, support_cutoff);

  res.sigma.R = R;
  res.sigma.nodes = x;
  res.sigma.weights = w;
  res.sigma.kind = DensityKind::Custom;
  res.pressure = -hw + quad + chi_offset();
  res.objective = -hw + quad;
  res.frostman_constant = r.F;
  res.residual_on_support = r.on_max;
  res.residual_off_support = r.off_min;
  res.iterations = it;
  res.converged = converged;
  res.h_values = hv;
  res.potential2 = twoKw;
  return res;
}

ChiLegendreResult chi_via_legendre(const DiscreteMeasure& mu, double R,
                                   const EquilibriumOptions& opts) {
  const int m = opts.grid;
  std::vector<double> xs(m), ys(m);
  const double dx = 2.0 * R / m;
  for (int i = 0; i < m; ++i) {
    xs[i] = -R + (i + 0.5) * dx;
    ys[i] = 2.0 * potential(mu, xs[i]);
  }
  PotentialFn hstar = PotentialFn::tabulated(xs, ys, R);
  ChiLegendreResult out;
  out.equilibrium = solve_equilibrium(hstar, opts);
  // mu(h*) = 2 Sigma(mu) holds exactly for the discretized pairing
  out.value = 2.0 * log_energy(mu) + out.equilibrium.pressure;
  out.is_upper_bound = true;
  return out;
}

std::string equilibrium_to_csv(const EquilibriumResult& r) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "# pressure=%.17g frostman=%.17g residual_on=%.3e residual_off=%.3e "
                "iterations=%ld converged=%d\n",
                r.pressure, r.frostman_constant, r.residual_on_support, r.residual_off_support,
                r.iterations, r.converged ? 1 : 0);
  out += buf;
  out += "node,weight,h,two_potential\n";
  for (size_t i = 0; i < r.sigma.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", r.sigma.nodes[i],
                  r.sigma.weights[i], r.h_values[i], r.potential2[i]);
    out += buf;
  }
  return out;
}

}  // namespace fplab
