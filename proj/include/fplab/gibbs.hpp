#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fplab/momentspec.hpp"
#include "fplab/quadrature.hpp"
#include "fplab/rng.hpp"
#include "fplab/ncpoly.hpp"

namespace fplab {

// Energy whose Gibbs weight exp(-n^2 * scale * energy(A)) the chain targets.
// Eigenvalues of every tuple member are maintained by the walker (the ball
// check needs them), so single-variable energies can avoid matrix products.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;
  virtual int nvars() const = 0;
  virtual double energy(const std::vector<Matrix>& mats,
                        const std::vector<Eigen::VectorXd>& eigs) const = 0;
  // True when the energy is a symmetric function of one matrix's spectrum;
  // such targets factor into (eigenvalue law) x Haar and a walker on
  // eigenvalues samples the same marginal far more effectively.
  virtual bool eigenvalue_only() const { return false; }
  virtual double energy_from_eigenvalues(const Eigen::VectorXd&) const {
    throw std::logic_error("EnergyModel: no eigenvalue-only evaluation");
  }
};

class PolyEnergy : public EnergyModel {
 public:
  PolyEnergy(NCPolynomial h, int N);
  int nvars() const override { return N_; }
  double energy(const std::vector<Matrix>& mats,
                const std::vector<Eigen::VectorXd>& eigs) const override;
  bool eigenvalue_only() const override { return N_ == 1 && single_var_; }
  double energy_from_eigenvalues(const Eigen::VectorXd& lam) const override;

 private:
  NCPolynomial h_;
  int N_ = 1;
  bool single_var_ = false;
  std::vector<double> coeffs_;  // real coefficient view for the fast path
};

// (1/eps^2) sum_w |tr_n(w(A)) - target(w)|^2 over words of degree 1..r; the
// tensor-square penalty evaluated through word traces.
class PenaltyEnergy : public EnergyModel {
 public:
  PenaltyEnergy(MomentSpec target, int r, double eps);
  int nvars() const override { return target_.nvars; }
  double energy(const std::vector<Matrix>& mats,
                const std::vector<Eigen::VectorXd>& eigs) const override;
  bool eigenvalue_only() const override { return target_.nvars == 1; }
  double energy_from_eigenvalues(const Eigen::VectorXd& lam) const override;
  const std::vector<Word>& words() const { return words_; }

 private:
  MomentSpec target_;
  std::vector<Word> words_;
  std::vector<double> targets_;
  double inv_eps2_ = 1.0;
};

struct ChainConfig {
  int warmup_sweeps = 2000;  // step adaptation happens only here
  int sample_sweeps = 4000;
  int thin = 2;               // sweeps per kept energy sample
  double target_acceptance = 0.3;
  double init_step = 0.0;  // 0 -> R / (n + 1)
  int record_states = 0;   // keep up to this many thinned MatrixTuple states
};

// Metropolis walker on the product of norm balls. One sweep proposes an
// entrywise Hermitian Gaussian update of every tuple member; proposals
// leaving a ball are rejected so the restricted reference measure is exact.
// The Gibbs weight is exp(-n^2 * scale * energy); scale may change between
// sweeps (thermodynamic integration anneals it upward).
class MatrixWalker {
 public:
  MatrixWalker(const EnergyModel& model, int n, double R, uint64_t seed,
               double init_step = 0.0, double target_acceptance = 0.3);

  void set_scale(double scale) { scale_ = scale; }
  double scale() const { return scale_; }
  // replaces the current tuple (ball membership is re-validated)
  void set_state(const std::vector<Matrix>& mats);
  void sweep(bool adapt);
  double energy() const { return e_cur_; }  // model units
  const std::vector<Matrix>& mats() const { return mats_; }
  double step() const { return steps_[0]; }
  void reset_counters() { proposals_ = 0; accepts_ = 0; }
  double acceptance() const {
    return proposals_ ? static_cast<double>(accepts_) / proposals_ : 0.0;
  }

 private:
  const EnergyModel& model_;
  int n_;
  int N_;
  double R_;
  double scale_ = 1.0;
  double target_acceptance_;
  Rng rng_;
  std::vector<Matrix> mats_;
  std::vector<Eigen::VectorXd> eigs_;
  std::vector<double> steps_;
  double e_cur_ = 0.0;
  long proposals_ = 0;
  long accepts_ = 0;
  Matrix noise_, prop_;
  Eigen::VectorXd prop_eigs_;
};

struct GibbsChain {
  int n = 0;
  int N = 1;
  double R = 0.0;
  double scale = 1.0;
  std::vector<double> energy_series;  // model units, one per kept sample
  std::vector<MatrixTuple> states;    // recorded thinned states
  std::vector<Matrix> final_state;    // last visited tuple, used for resume
  double acceptance = 0.0;            // post-adaptation acceptance rate
  double step = 0.0;
  double ess = 0.0;
  uint64_t seed = 0;
  bool mixing_ok = true;
};

// Binary checkpoint with a versioned header; loading restores the chain
// bit-exactly, and resume_chain extends it from the stored final state.
void save_chain_checkpoint(const GibbsChain& chain, const std::string& path);
GibbsChain load_chain_checkpoint(const std::string& path);

// Continues sampling from checkpoint.final_state with a fresh stream; the
// result appends to the checkpoint's series and is deterministic given
// (checkpoint, seed).
GibbsChain resume_chain(const GibbsChain& checkpoint, const NCPolynomial& h0,
                        const ChainConfig& config, uint64_t seed);

// Metropolis-Hastings on the product of norm balls: entrywise Hermitian
// Gaussian proposals per tuple member, proposals leaving any ball rejected
// so the restricted reference measure is preserved.
GibbsChain run_mh_chain(const EnergyModel& model, int n, double R, double scale,
                        const ChainConfig& config, uint64_t seed);

// Gibbs ensemble chain for a selfadjoint polynomial potential h0.
GibbsChain run_chain(const NCPolynomial& h0, int N, int n, double R, const ChainConfig& config,
                     uint64_t seed);

// mu_{R,n}^{h0} truncated to words of degree <= r: averages word traces over
// recorded states, enforcing reversal symmetry.
MomentSpec estimate_state(const GibbsChain& chain, int r);

struct EntropyResult {
  double entropy = 0.0;  // S(lambda_{R,n}^{h0}) = P_{R,n}(h0) + n^2 mu(h0)
  double se = 0.0;
  double scaled = 0.0;  // (1/n^2) S + (N/2) log n
  double scaled_se = 0.0;
  double pressure = 0.0;
  double mu_h0 = 0.0;
  bool exact = false;
  bool mixing_ok = true;
};

struct EntropyConfig {
  // forwarded to the annealed thermodynamic-integration pass
  std::vector<Panel> panels = {{0.0, 1.0, 16}};
  int chains = 2;
  int warmup_sweeps = 1000;
  int node_warmup = 300;
  int sample_sweeps = 1500;
  int thin = 2;
  int jobs = 1;
};

EntropyResult boltzmann_entropy(const NCPolynomial& h0, int N, int n, double R,
                                const EntropyConfig& config, uint64_t seed);

struct CorrespondenceReport {
  // (a) Descartes at n = 1: pushforward of Lebesgue x Lebesgue is planar Lebesgue
  double ks2d_pvalue = 0.0;
  // (a) at n: Gaussian-weighted statistics of X = A1 + iA2, product vs direct
  double descartes_stat_z = 0.0;
  // (b) measure of {||X|| <= r}: direct MC vs C_n * Lambda_n positive-part MC
  double polar_direct = 0.0;
  double polar_direct_se = 0.0;
  double polar_via_cn = 0.0;
  double polar_via_cn_se = 0.0;
  double polar_z = 0.0;  // discrepancy in combined standard errors
  bool pass = true;
};

double log_polar_constant(int n);  // log C_n = log pi^{n(n+1)/2} / (2^{n(n-1)/2} prod j!)

CorrespondenceReport polar_descartes_check(int n, double r, long samples, uint64_t seed);

}  // namespace fplab
