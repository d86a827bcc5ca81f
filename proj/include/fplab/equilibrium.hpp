#pragma once

#include <string>
#include <vector>

#include "fplab/measures.hpp"
#include "fplab/ncpoly.hpp"

namespace fplab {

// Real potential on [-R,R]: a single-variable polynomial or a tabulated
// function with monotone cubic (Fritsch-Carlson) interpolation.
class PotentialFn {
 public:
  static PotentialFn zero(double R);
  static PotentialFn from_poly(const NCPolynomial& p, double R);
  static PotentialFn tabulated(std::vector<double> xs, std::vector<double> ys, double R);

  double operator()(double t) const;
  double radius() const { return R_; }
  bool is_polynomial() const { return is_poly_; }
  const NCPolynomial& poly() const { return poly_; }

 private:
  double R_ = 0.0;
  bool is_poly_ = true;
  NCPolynomial poly_;
  std::vector<double> xs_, ys_, slopes_;
};

struct EquilibriumOptions {
  int grid = 800;
  long max_iters = 4000000;
  double frostman_tol = 1e-6;
  double objective_tol = 1e-10;
  // support = weight above this multiple of the uniform cell mass
  double support_threshold = 1e-9;
  long check_interval = 1024;
};

struct EquilibriumResult {
  DiscreteMeasure sigma;
  double pressure = 0.0;           // pi_R(h) = -sigma(h) + chi(sigma)
  double frostman_constant = 0.0;  // F with h - 2 U sigma = F on the support
  double residual_on_support = 0.0;
  double residual_off_support = 0.0;  // min of h - 2U - F off the support
  long iterations = 0;
  bool converged = false;
  double objective = 0.0;
  std::vector<double> h_values;    // h at the grid nodes
  std::vector<double> potential2;  // 2 U_sigma at the grid nodes
};

// Maximizes -mu(h) + chi(mu) over the weight simplex on a uniform grid by
// conditional gradient with away steps and exact line search.
EquilibriumResult solve_equilibrium(const PotentialFn& h, const EquilibriumOptions& opts = {});

struct ChiLegendreResult {
  double value = 0.0;         // mu(h*) + pi_R(h*) at the candidate dual h* = 2 U_mu
  bool is_upper_bound = true;  // always an upper bound of the infimum in (chi as inf)
  EquilibriumResult equilibrium;
};

ChiLegendreResult chi_via_legendre(const DiscreteMeasure& mu, double R,
                                   const EquilibriumOptions& opts = {});

// CSV rows (node, weight, h, 2U) followed by a summary comment record.
std::string equilibrium_to_csv(const EquilibriumResult& r);

}  // namespace fplab
