#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace fplab {

// chi(mu) = Sigma(mu) + 1/2 log(2 pi) + 3/4, natural logarithm throughout.
inline double chi_offset() { return 0.5 * std::log(2.0 * M_PI) + 0.75; }

enum class DensityKind { Semicircle, Arcsine, Uniform, Custom };

std::string density_kind_name(DensityKind k);
DensityKind density_kind_from_name(const std::string& name);

// Probability measure on [-R,R] discretized on a uniform cell grid. Nodes are
// cell midpoints; weights are the exact cell masses of the labeled density.
struct DiscreteMeasure {
  double R = 0.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  DensityKind kind = DensityKind::Custom;
  std::vector<double> params;  // semicircle: {m, r}; arcsine: {R}; uniform: {a, b}

  size_t size() const { return nodes.size(); }
  double cell_width() const;
  void validate(double tol = 1e-12) const;
};

// Cell weights are analytic CDF differences, never midpoint density values.
// Grid spans the density support; `enclosing_R`, when positive, embeds the
// grid in [-enclosing_R, enclosing_R] instead (support must fit).
DiscreteMeasure make_measure(DensityKind kind, const std::vector<double>& params,
                             int gridsize, double enclosing_R = 0.0);

// Tabulated density on [lo,hi]; cell masses by fine quadrature, normalized.
DiscreteMeasure make_custom_measure(const std::function<double(double)>& density, double lo,
                                    double hi, int gridsize, double enclosing_R = 0.0);

// Exact uniform-grid pair kernel: entry d holds the mean of log|x-y| over two
// cells d apart; d = 0 is the closed-form diagonal self-interaction.
std::vector<double> cell_pair_kernel(size_t m, double dx);

// Sigma(mu) = iint log|x-y| dmu dmu. The diagonal cell self-interaction uses
// the closed-form integral of log|x-y| over the cell square.
double log_energy(const DiscreteMeasure& mu);

double chi(const DiscreteMeasure& mu);

double moment(const DiscreteMeasure& mu, int k);

// U_mu(x) = int log|x-y| dmu(y); the cell containing x is integrated analytically.
double potential(const DiscreteMeasure& mu, double x);

// Pushforward under t -> s*t (s > 0); log_energy shifts by exactly log s.
DiscreteMeasure scale_measure(const DiscreteMeasure& mu, double s);

// Mixture alpha*mu1 + (1-alpha)*mu2 of measures on a common grid.
DiscreteMeasure mix_measures(const DiscreteMeasure& mu1, const DiscreteMeasure& mu2, double alpha);

std::string measure_to_csv(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_csv(const std::string& csv);

}  // namespace fplab
