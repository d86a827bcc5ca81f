#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fplab/equilibrium.hpp"
#include "fplab/matrixmc.hpp"
#include "fplab/momentspec.hpp"
#include "fplab/ncpoly.hpp"

namespace fplab {

// pi_R-hat of selfadjoint polynomials; exact (equilibrium) or Monte Carlo.
class PressureBackend {
 public:
  struct Value {
    double value = 0.0;
    double se = 0.0;
    bool exact = false;
  };
  virtual ~PressureBackend() = default;
  virtual Value pressure(const NCPolynomial& p) const = 0;
  virtual double radius() const = 0;
  virtual int ambient_nvars() const = 0;
};

// Exact single-variable backend: every separable block must be univariate and
// is solved by the equilibrium module; unused ambient variables contribute
// pi_R(0) each (finite-n additivity is exact for L = 1 splits).
class EquilibriumBackend : public PressureBackend {
 public:
  EquilibriumBackend(double R, int ambient_nvars, EquilibriumOptions opts = {});
  Value pressure(const NCPolynomial& p) const override;
  double radius() const override { return R_; }
  int ambient_nvars() const override { return N_; }

 private:
  double R_;
  int N_;
  EquilibriumOptions opts_;
  mutable std::map<std::string, Value> cache_;
};

// Monte Carlo backend over an n-ladder with 1/n^2 extrapolation (a single n
// reports that value directly).
class MonteCarloBackend : public PressureBackend {
 public:
  MonteCarloBackend(double R, int ambient_nvars, std::vector<int> ns, Schedule sched,
                    uint64_t seed, int jobs = 1);
  Value pressure(const NCPolynomial& p) const override;
  double radius() const override { return R_; }
  int ambient_nvars() const override { return N_; }

 private:
  double R_;
  int N_;
  std::vector<int> ns_;
  Schedule sched_;
  uint64_t seed_;
  int jobs_;
  mutable std::map<std::string, Value> cache_;
};

struct EtaCandidate {
  NCPolynomial p;
  double mu_p = 0.0;
  double pressure = 0.0;
  double pressure_se = 0.0;
  double total = 0.0;  // mu(p) + pi_R-hat(p)
};

struct EtaEstimate {
  std::vector<EtaCandidate> candidates;
  double minimum = 0.0;
  double minimum_se = 0.0;
  size_t argmin = 0;
  bool upper_bound = true;  // a finite family can only overestimate the inf
};

// min over the family of mu(p) + pi_R-hat(p); upper bound of eta_R(mu).
EtaEstimate eta_upper(const MomentSpec& mu, const std::vector<NCPolynomial>& family, double R,
                      const PressureBackend& backend);

// Single-variable convenience: the measure's moments feed the pairing.
EtaEstimate eta_upper(const DiscreteMeasure& mu, const std::vector<NCPolynomial>& family, double R,
                      const PressureBackend& backend);

MomentSpec moment_spec_from_measure(const DiscreteMeasure& mu, int degree);

// Symmetrized monomial family with coefficients tuned by coordinate descent
// against the backend; the default family knob for eta_upper.
std::vector<NCPolynomial> default_eta_family(const MomentSpec& mu, double R,
                                             const PressureBackend& backend, int max_degree = 4,
                                             int starts = 2, int rounds = 2);

enum class ViolationKind { Positivity, Boundedness, Traciality, Normalization };

std::string violation_kind_name(ViolationKind k);

struct Certificate {
  ViolationKind kind;
  NCPolynomial direction;          // selfadjoint direction polynomial
  double decrease_rate = 0.0;      // objective drops by alpha * rate
  std::vector<double> alphas;      // doubling sequence
  std::vector<double> objectives;  // strictly decreasing upper bounds
  std::string detail;
};

struct CertificateBudget {
  double floor_drop = 1e3;  // stop once the objective fell this far below pi(0)
  double tol = 1e-8;
  int max_doublings = 64;
};

// Searches the four Lemma-style construction families; none means mu passed
// every check at this budget.
std::optional<Certificate> divergence_certificate(const MomentSpec& mu, double R,
                                                  const CertificateBudget& budget = {});

// (beta/eps^2) sum_{1<=|w|<=r} (w - t_w 1) (x) (w - t_w 1)^*
TensorPolynomial penalty_polynomial(const MomentSpec& target, int r, double eps, double beta);

struct ChiPenaltyParams {
  int r = 2;
  double eps = 0.25;
  std::vector<double> betas = {10.0};  // ascending
  std::vector<int> ns = {8, 16, 32};
  double s0_scale = 1e-4;  // first panel ends at s0_scale / n^2
  int panels_per_decade = 2;
  int nodes_per_panel = 4;
  int chains = 2;
  int warmup_sweeps = 800;
  int node_warmup = 150;
  int sample_sweeps = 1200;
  int thin = 2;
  int jobs = 1;
};

struct ChiPenaltyPoint {
  double beta = 0.0;
  double chi_hat = 0.0;  // extrapolated over the n ladder
  double se = 0.0;
  double slack = 0.0;  // log(1 + e^{-chi-beta} (R sqrt(pi/2) e^{3/4})^N)
  std::vector<PerNRecord> per_n;
};

struct ChiPenaltyResult {
  std::vector<ChiPenaltyPoint> points;  // one per requested beta
  bool mixing_ok = true;
};

// chi-hat via the tensor pressure of the penalty polynomial: thermodynamic
// integration in the penalty strength s over composite geometric panels.
// Estimates for nested beta values share every panel, so chi-hat(beta) is
// exactly nonincreasing in beta on identical seeds.
ChiPenaltyResult estimate_chi_penalty(const MomentSpec& target, double R,
                                      const ChiPenaltyParams& params, uint64_t seed);

struct GapCandidate {
  std::string label;
  double mu_h0 = 0.0;
  double eta = 0.0;
  double eta_se = 0.0;
  double gap = 0.0;  // pi(h0) - (-mu(h0) + eta(mu)); >= 0 up to estimator error
  double gap_se = 0.0;
};

struct DualityGapReport {
  double pressure_h0 = 0.0;
  double pressure_se = 0.0;
  std::vector<GapCandidate> candidates;
  size_t best = 0;  // smallest gap: approximate equilibrium tracial state
};

// The eta family per candidate always contains 0 and h0 plus the extras.
DualityGapReport duality_gap(const NCPolynomial& h0,
                             const std::vector<std::pair<std::string, MomentSpec>>& candidates,
                             double R, const PressureBackend& backend,
                             const std::vector<NCPolynomial>& extra_family = {});

// Mixed moments of free centered semicircular variables (one variance per
// variable) by the non-crossing pairing recursion.
double free_semicircular_moment(const Word& w, const std::vector<double>& variances);
MomentSpec free_semicircular_spec(int nvars, int degree, const std::vector<double>& variances);

}  // namespace fplab
