#include "fplab/measures.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fplab/quadrature.hpp"

namespace fplab {

std::string density_kind_name(DensityKind k) {
  switch (k) {
    case DensityKind::Semicircle: return "semicircle";
    case DensityKind::Arcsine: return "arcsine";
    case DensityKind::Uniform: return "uniform";
    case DensityKind::Custom: return "custom";
  }
  return "custom";
}

DensityKind density_kind_from_name(const std::string& name) {
  if (name == "semicircle") return DensityKind::Semicircle;
  if (name == "arcsine") return DensityKind::Arcsine;
  if (name == "uniform") return DensityKind::Uniform;
  if (name == "custom") return DensityKind::Custom;
  throw std::invalid_argument("unknown density kind '" + name + "'");
}

double DiscreteMeasure::cell_width() const {
  if (nodes.size() < 2) return 2.0 * R;
  return nodes[1] - nodes[0];
}

void DiscreteMeasure::validate(double tol) const {
  if (nodes.size() != weights.size() || nodes.empty())
    throw std::invalid_argument("DiscreteMeasure: node/weight size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (weights[i] < -tol) throw std::invalid_argument("DiscreteMeasure: negative weight");
    if (i > 0 && nodes[i] <= nodes[i - 1])
      throw std::invalid_argument("DiscreteMeasure: nodes not strictly increasing");
    if (std::abs(nodes[i]) > R + 1e-9)
      throw std::invalid_argument("DiscreteMeasure: node outside [-R,R]");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > tol)
    throw std::invalid_argument("DiscreteMeasure: weights do not sum to 1");
}

namespace {

double arcsine_cdf(double x, double R) {
  double u = std::clamp(x / R, -1.0, 1.0);
  return 0.5 + std::asin(u) / M_PI;
}

double semicircle_cdf(double x, double m, double r) {
  double u = std::clamp((x - m) / r, -1.0, 1.0);
  return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / M_PI;
}

double uniform_cdf(double x, double a, double b) {
  return std::clamp((x - a) / (b - a), 0.0, 1.0);
}

DiscreteMeasure from_cdf(const std::function<double(double)>& cdf, double lo, double hi,
                         int gridsize, double enclosing_R, DensityKind kind,
                         std::vector<double> params) {
  if (gridsize < 1) throw std::invalid_argument("make_measure: gridsize must be >= 1");
  double glo = lo, ghi = hi;
  double R = std::max(std::abs(lo), std::abs(hi));
  if (enclosing_R > 0.0) {
    if (lo < -enclosing_R - 1e-12 || hi > enclosing_R + 1e-12)
      throw std::invalid_argument("make_measure: density support exceeds [-R,R]");
    glo = -enclosing_R;
    ghi = enclosing_R;
    R = enclosing_R;
  }
  DiscreteMeasure mu;
  mu.R = R;
  mu.kind = kind;
  mu.params = std::move(params);
  mu.nodes.resize(gridsize);
  mu.weights.resize(gridsize);
  const double dx = (ghi - glo) / gridsize;
  double total = 0.0;
  for (int i = 0; i < gridsize; ++i) {
    mu.nodes[i] = glo + (i + 0.5) * dx;
    mu.weights[i] = cdf(glo + (i + 1) * dx) - cdf(glo + i * dx);
    if (mu.weights[i] < 0.0) mu.weights[i] = 0.0;
    total += mu.weights[i];
  }
  for (auto& w : mu.weights) w /= total;
  return mu;
}

}  // namespace

DiscreteMeasure make_measure(DensityKind kind, const std::vector<double>& params, int gridsize,
                             double enclosing_R) {
  switch (kind) {
    case DensityKind::Arcsine: {
      if (params.size() != 1 || params[0] <= 0.0)
        throw std::invalid_argument("arcsine requires params {R > 0}");
      double R = params[0];
      return from_cdf([R](double x) { return arcsine_cdf(x, R); }, -R, R, gridsize, enclosing_R,
                      kind, params);
    }
    case DensityKind::Semicircle: {
      if (params.size() != 2 || params[1] <= 0.0)
        throw std::invalid_argument("semicircle requires params {m, r > 0}");
      double m = params[0], r = params[1];
      return from_cdf([m, r](double x) { return semicircle_cdf(x, m, r); }, m - r, m + r, gridsize,
                      enclosing_R, kind, params);
    }
    case DensityKind::Uniform: {
      if (params.size() != 2 || params[0] >= params[1])
        throw std::invalid_argument("uniform requires params {a, b} with a < b");
      double a = params[0], b = params[1];
      return from_cdf([a, b](double x) { return uniform_cdf(x, a, b); }, a, b, gridsize,
                      enclosing_R, kind, params);
    }
    case DensityKind::Custom:
      throw std::invalid_argument("use make_custom_measure for custom densities");
  }
  throw std::invalid_argument("make_measure: unknown kind");
}

DiscreteMeasure make_custom_measure(const std::function<double(double)>& density, double lo,
                                    double hi, int gridsize, double enclosing_R) {
  QuadRule cell_rule = gauss_legendre(16);
  auto cdf_mass = [&](double a, double b) {
    double s = 0.0;
    for (size_t i = 0; i < cell_rule.nodes.size(); ++i) {
      double x = 0.5 * (a + b) + 0.5 * (b - a) * cell_rule.nodes[i];
      s += 0.5 * (b - a) * cell_rule.weights[i] * density(x);
    }
    return s;
  };
  // accumulate an approximate CDF, then reuse the generic path
  double glo = lo, ghi = hi;
  if (enclosing_R > 0.0) {
    if (lo < -enclosing_R - 1e-12 || hi > enclosing_R + 1e-12)
      throw std::invalid_argument("make_custom_measure: support exceeds [-R,R]");
    glo = -enclosing_R;
    ghi = enclosing_R;
  }
  DiscreteMeasure mu;
  mu.R = enclosing_R > 0.0 ? enclosing_R : std::max(std::abs(lo), std::abs(hi));
  mu.kind = DensityKind::Custom;
  const int m = gridsize;
  mu.nodes.resize(m);
  mu.weights.resize(m);
  const double dx = (ghi - glo) / m;
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    mu.nodes[i] = glo + (i + 0.5) * dx;
    double a = std::max(glo + i * dx, lo), b = std::min(glo + (i + 1) * dx, hi);
    mu.weights[i] = b > a ? std::max(0.0, cdf_mass(a, b)) : 0.0;
    total += mu.weights[i];
  }
  if (total <= 0.0) throw std::invalid_argument("make_custom_measure: density integrates to zero");
  for (auto& w : mu.weights) w /= total;
  return mu;
}

namespace {

// H'' (t) = log|t|; second differences of H give the exact cell-pair integral
// (1/dx^2) iint log|x-y| over cells k apart as log(dx) + H(k+1)+H(k-1)-2H(k).
double log_kernel_h(double t) {
  if (t == 0.0) return 0.0;
  return 0.25 * t * t * (2.0 * std::log(std::abs(t)) - 3.0);
}

}  // namespace

// Exact cell-pair kernel on uniform grids; k = 0 reduces to log(dx) - 3/2,
// the closed-form diagonal self-interaction.
std::vector<double> cell_pair_kernel(size_t m, double dx) {
  std::vector<double> k(m);
  const double ld = std::log(dx);
  for (size_t d = 0; d < m; ++d) {
    const double t = static_cast<double>(d);
    k[d] = ld + log_kernel_h(t + 1.0) + log_kernel_h(t - 1.0) - 2.0 * log_kernel_h(t);
  }
  return k;
}

double log_energy(const DiscreteMeasure& mu) {
  const size_t m = mu.size();
  const double dx = mu.cell_width();
  const std::vector<double> kern = cell_pair_kernel(m, dx);
  double s = 0.0;
  for (size_t i = 0; i < m; ++i) {
    const double wi = mu.weights[i];
    if (wi == 0.0) continue;
    s += wi * wi * kern[0];
    for (size_t j = i + 1; j < m; ++j) {
      const double wj = mu.weights[j];
      if (wj == 0.0) continue;
      s += 2.0 * wi * wj * kern[j - i];
    }
  }
  return s;
}

double chi(const DiscreteMeasure& mu) { return log_energy(mu) + chi_offset(); }

double moment(const DiscreteMeasure& mu, int k) {
  if (k < 0) throw std::invalid_argument("moment: k must be >= 0");
  if (k == 0) return 1.0;
  double s = 0.0;
  for (size_t i = 0; i < mu.size(); ++i) s += mu.weights[i] * std::pow(mu.nodes[i], k);
  return s;
}

double potential(const DiscreteMeasure& mu, double x) {
  // exact per-cell integral (1/dx) int_a^b log|x-y| dy = (G(x-a) - G(x-b))/dx
  // with G(t) = t (log|t| - 1); valid inside and outside the cell
  auto G = [](double t) { return t == 0.0 ? 0.0 : t * (std::log(std::abs(t)) - 1.0); };
  const double dx = mu.cell_width();
  double s = 0.0;
  for (size_t j = 0; j < mu.size(); ++j) {
    const double wj = mu.weights[j];
    if (wj == 0.0) continue;
    const double lo = mu.nodes[j] - 0.5 * dx, hi = mu.nodes[j] + 0.5 * dx;
    s += wj * (G(x - lo) - G(x - hi)) / dx;
  }
  return s;
}

DiscreteMeasure scale_measure(const DiscreteMeasure& mu, double s) {
  if (s <= 0.0) throw std::invalid_argument("scale_measure: s must be positive");
  DiscreteMeasure out = mu;
  out.R = mu.R * s;
  for (auto& x : out.nodes) x *= s;
  for (auto& p : out.params) p *= s;
  return out;
}

DiscreteMeasure mix_measures(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, double alpha) {
  if (mu1.size() != mu2.size() || std::abs(mu1.R - mu2.R) > 1e-12)
    throw std::invalid_argument("mix_measures: measures live on different grids");
  DiscreteMeasure out = mu1;
  out.kind = DensityKind::Custom;
  out.params.clear();
  for (size_t i = 0; i < out.size(); ++i)
    out.weights[i] = alpha * mu1.weights[i] + (1.0 - alpha) * mu2.weights[i];
  return out;
}

std::string measure_to_csv(const DiscreteMeasure& mu) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof(buf), "# R=%.17g kind=%s gridsize=%zu\n", mu.R,
                density_kind_name(mu.kind).c_str(), mu.size());
  out += buf;
  out += "node,weight\n";
  for (size_t i = 0; i < mu.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", mu.nodes[i], mu.weights[i]);
    out += buf;
  }
  return out;
}

DiscreteMeasure measure_from_csv(const std::string& csv) {
  DiscreteMeasure mu;
  std::stringstream ss(csv);
  std::string line;
  bool have_header = false;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::stringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "R") mu.R = std::stod(val);
        if (key == "kind") mu.kind = density_kind_from_name(val);
      }
      have_header = true;
      continue;
    }
    if (line == "node,weight") continue;
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("measure_from_csv: malformed row '" + line + "'");
    mu.nodes.push_back(std::stod(line.substr(0, comma)));
    mu.weights.push_back(std::stod(line.substr(comma + 1)));
  }
  if (!have_header) throw std::invalid_argument("measure_from_csv: missing header");
  return mu;
}

}  // namespace fplab
