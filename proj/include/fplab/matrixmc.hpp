#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fplab/gibbs.hpp"
#include "fplab/momentspec.hpp"
#include "fplab/ncpoly.hpp"
#include "fplab/quadrature.hpp"
#include "fplab/rng.hpp"

namespace fplab {

// log Lambda_n((M_n^sa)_R), exact: n^2 log R plus the unit-ball constant from
// the Selberg integral of the squared Vandermonde, all in log-gamma space.
double log_ball_volume(int n, double R);

// Scaled limit of (1/n^2) log Lambda_n(ball_R) + (1/2) log n as n -> infinity.
inline double log_ball_volume_limit(double R) {
  return std::log(R) + 0.5 * std::log(M_PI / 2.0) + 0.75;
}

struct BallSamplerDiagnostics {
  double ess = 0.0;         // effective sample size of sum lambda_i^2
  double acceptance = 0.0;  // eigenvalue walker acceptance rate
};

// One uniform draw from the norm ball is eigenvalues from the squared
// Vandermonde density on [-R,R]^n conjugated by an independent Haar unitary.
std::vector<Matrix> sample_uniform_ball(int n, double R, int count, uint64_t seed,
                                        BallSamplerDiagnostics* diag = nullptr);

// Eigenvalue-only version (enough for conjugation-invariant statistics).
std::vector<std::vector<double>> sample_ball_eigenvalues(int n, double R, int count, uint64_t seed,
                                                         BallSamplerDiagnostics* diag = nullptr);

Matrix haar_unitary(int n, Rng& rng);

// Thermodynamic-integration schedule. Each chain anneals through the
// quadrature nodes in order, warm-starting every node from the previous one;
// chains are independent tasks, so results never depend on the worker count.
struct Schedule {
  std::vector<Panel> panels = {{0.0, 1.0, 16}};
  int chains = 2;
  int warmup_sweeps = 1000;  // first node only
  int node_warmup = 300;     // re-equilibration after each anneal step
  int sample_sweeps = 1500;  // per node
  int thin = 2;
  double rhat_threshold = 1.05;
};

struct NodeStat {
  double beta = 0.0;
  double weight = 0.0;
  double mean = 0.0;   // <tr_n h>_beta
  double se = 0.0;
  double rhat = 1.0;
  double acceptance = 0.0;
};

// Raw annealed-chain output for one quadrature node.
struct TiNodeData {
  double beta = 0.0;
  double weight = 0.0;
  std::vector<std::vector<double>> chain_series;  // energy samples per chain
  std::vector<double> chain_acceptance;
};

// Runs `sched.chains` independent annealed walkers over the rule's nodes and
// returns per-node energy series in node order.
std::vector<TiNodeData> run_annealed_ti(const EnergyModel& model, int n, double R,
                                        const QuadRule& rule, const Schedule& sched,
                                        uint64_t seed, int jobs);

struct MicroPressureResult {
  double value = 0.0;  // P_{R,n}(h)
  double se = 0.0;
  double scaled = 0.0;  // (1/n^2) P + (N/2) log n
  double scaled_se = 0.0;
  int n = 0;
  int N = 0;
  double R = 0.0;
  bool mixing_ok = true;
  bool exact = false;  // no Monte Carlo content (h constant)
  std::vector<NodeStat> nodes;
};

// P_{R,n}(h) = N log Lambda_n(ball_R) - n^2 int_0^1 <tr_n h>_beta dbeta, with
// Gibbs chains per quadrature node. The constant term of h is handled
// analytically; variable-separable blocks are estimated independently and
// summed (exact finite-n additivity), seeded per block ordinal.
MicroPressureResult estimate_micro_pressure(const NCPolynomial& h, int N, int n, double R,
                                            const Schedule& sched, uint64_t seed, int jobs = 1,
                                            bool split_blocks = true);

// Single-block estimator used by the block decomposition; exposed so exact
// additivity can be exercised against standalone runs.
MicroPressureResult estimate_micro_pressure_block(const NCPolynomial& h_block, int n, double R,
                                                  const Schedule& sched, uint64_t seed,
                                                  int jobs = 1);

inline uint64_t block_seed(uint64_t master, int block_ordinal) {
  return derive_seed(master, 0x626c6b00ULL + static_cast<uint64_t>(block_ordinal));
}

// Coupled dilation pair: P_{R1,n}(h((R/R1)X)) shares the Gibbs integral with
// P_{R,n}(h) because scaling the ball is an exact reparametrization, so the
// difference is the volume term n^2 N log(R1/R) with zero statistical error.
struct DilationPair {
  MicroPressureResult base;     // P_{R,n}(h)
  MicroPressureResult dilated;  // P_{R1,n}(rho_{R,R1} h)
};
DilationPair micro_pressure_dilation_pair(const NCPolynomial& h, int N, int n, double R, double R1,
                                          const Schedule& sched, uint64_t seed, int jobs = 1);

struct PerNRecord {
  int n = 0;
  double scaled = 0.0;  // (1/n^2) P_{R,n} + (N/2) log n
  double se = 0.0;
};

struct PressureEstimate {
  std::string h_text;
  double R = 0.0;
  int N = 0;
  std::vector<PerNRecord> records;
  double extrapolated = 0.0;  // c0 of the c0 + c1/n^2 fit
  double extrapolated_se = 0.0;
  double c1 = 0.0;
  double fit_residual = 0.0;
  uint64_t seed = 0;
};

// Weighted least squares fit c0 + c1/n^2; weights 1/se^2, or n^4 when the
// records are exact. Requires >= 3 distinct n.
PressureEstimate extrapolate_pressure(const std::vector<PerNRecord>& records);

struct MicrostateSpecParams {
  MomentSpec target;
  double eps = 0.1;
  double R = 1.0;
};

struct MicrostateVolumeResult {
  double log_volume = 0.0;  // N log Lambda_n(ball) + log(hit fraction)
  double se = 0.0;          // on the log scale
  long hits = 0;
  long samples = 0;
  bool empty = false;          // no hits observed
  double upper_bound = 0.0;    // 95% rule-of-three bound when empty
};

// Hit-or-miss estimate of log Lambda^(x)N (Gamma_R(target; n, r, eps)).
MicrostateVolumeResult microstate_volume(const MicrostateSpecParams& spec, int n, long samples,
                                         uint64_t seed);

}  // namespace fplab
