#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fplab/diagnostics.hpp"
#include "fplab/gibbs.hpp"
#include "fplab/matrixmc.hpp"
#include "fplab/quadrature.hpp"
#include "testutil.hpp"

using namespace fplab;

namespace {

NCPolynomial half_square() {
  NCPolynomial p(1);
  p.add_term(Word({0, 0}), Complex(0.5, 0.0));
  return p;
}

// E[sum lambda^2] for the log-gas density prop. to prod (l_i-l_j)^2
// exp(-c n sum l_i^2) on [-R,R]^n by the Stieltjes procedure: build the
// recurrence of the orthonormal polynomials for the weight exp(-c n x^2) on
// [-R,R] from a fine quadrature grid, then sum the kernel contributions.
double loggas_tr2_oracle(int n, double R, double c) {
  QuadRule grid = gauss_legendre_on(-R, R, 1200);
  const size_t m = grid.nodes.size();
  std::vector<double> w(m);
  for (size_t q = 0; q < m; ++q)
    w[q] = grid.weights[q] * std::exp(-c * n * grid.nodes[q] * grid.nodes[q]);

  std::vector<double> pk(m, 0.0), pkm1(m, 0.0);
  double norm0 = 0.0;
  for (size_t q = 0; q < m; ++q) norm0 += w[q];
  for (size_t q = 0; q < m; ++q) pk[q] = 1.0 / std::sqrt(norm0);

  double total = 0.0;
  double akm1 = 0.0;
  for (int k = 0; k < n; ++k) {
    double x2 = 0.0;
    for (size_t q = 0; q < m; ++q) x2 += w[q] * grid.nodes[q] * grid.nodes[q] * pk[q] * pk[q];
    total += x2;
    // next orthonormal polynomial: x phi_k = a_k phi_{k+1} + a_{k-1} phi_{k-1}
    std::vector<double> next(m);
    double nrm2 = 0.0;
    for (size_t q = 0; q < m; ++q) {
      next[q] = grid.nodes[q] * pk[q] - akm1 * pkm1[q];
    }
    // orthogonalize against phi_k as well (b_k = 0 by symmetry, kept for safety)
    double bk = 0.0;
    for (size_t q = 0; q < m; ++q) bk += w[q] * next[q] * pk[q];
    for (size_t q = 0; q < m; ++q) {
      next[q] -= bk * pk[q];
      nrm2 += w[q] * next[q] * next[q];
    }
    const double ak = std::sqrt(nrm2);
    if (ak < 1e-150) break;
    for (size_t q = 0; q < m; ++q) next[q] /= ak;
    pkm1 = pk;
    pk = next;
    akm1 = ak;
  }
  return total;
}

}  // namespace

TEST_CASE("zero potential chain reproduces uniform-ball statistics") {
  const int n = 8;
  const double R = 2.0;
  NCPolynomial sq(1);
  sq.add_term(Word({0, 0}), Complex(1.0, 0.0));
  // scale 0 turns the Gibbs weight off: the chain samples the uniform ball
  // and records tr A^2 through the energy series
  PolyEnergy model(sq, 1);
  ChainConfig cfg;
  cfg.warmup_sweeps = 500;
  cfg.sample_sweeps = 8000;
  cfg.thin = 4;
  auto uni = run_mh_chain(model, n, R, 0.0, cfg, 53);
  CHECK(uni.acceptance > 0.1);
  CHECK(uni.acceptance < 0.9);

  auto draws = sample_ball_eigenvalues(n, R, 2500, 54);
  std::vector<double> ref;
  for (const auto& lam : draws) {
    double s = 0.0;
    for (double l : lam) s += l * l;
    ref.push_back(s / n);
  }
  const double m1 = mean_of(uni.energy_series), se1 = mcmc_stderr(uni.energy_series);
  const double m2 = mean_of(ref), se2 = mcmc_stderr(ref);
  CHECK(std::abs(m1 - m2) < 3.0 * std::sqrt(se1 * se1 + se2 * se2));
}

TEST_CASE("quadratic potential chain matches the log-gas oracle at n = 16") {
  const int n = 16;
  const double R = 3.0;
  ChainConfig cfg;
  cfg.warmup_sweeps = 3000;
  cfg.sample_sweeps = 20000;
  cfg.thin = 5;
  auto chain = run_chain(half_square(), 1, n, R, cfg, 99);
  CHECK(chain.mixing_ok);
  CHECK(chain.acceptance > 0.1);
  CHECK(chain.acceptance < 0.9);
  // E[tr_n A^2] under exp(-n^2 tr_n A^2/2) = exp(-(n/2) Tr A^2)
  const double oracle = loggas_tr2_oracle(n, R, 0.5) / n;
  const double mean_tr2 = 2.0 * mean_of(chain.energy_series);  // energy is tr A^2 / 2
  const double se = 2.0 * mcmc_stderr(chain.energy_series);
  CHECK(oracle == doctest::Approx(1.0).epsilon(0.02));  // 1 + O(1/n^2)
  CHECK(std::abs(mean_tr2 - oracle) < 3.0 * se);
  CHECK(se < 0.05);
}

TEST_CASE("detailed balance arithmetic on proposal pairs") {
  // the log acceptance ratio of a move and of its reversal cancel exactly
  const int n = 2;
  PolyEnergy model(half_square(), 1);
  Rng rng(7);
  for (int t = 0; t < 25; ++t) {
    MatrixTuple a = testutil::random_tuple(1, n, 1.5, rng);
    MatrixTuple b = testutil::random_tuple(1, n, 1.5, rng);
    std::vector<Eigen::VectorXd> ea(1), eb(1);
    Eigen::SelfAdjointEigenSolver<Matrix> sa(a.mat(0)), sb(b.mat(0));
    ea[0] = sa.eigenvalues();
    eb[0] = sb.eigenvalues();
    const double de_fwd = model.energy(b.mats(), eb) - model.energy(a.mats(), ea);
    const double de_bwd = model.energy(a.mats(), ea) - model.energy(b.mats(), eb);
    const double n2s = static_cast<double>(n) * n;
    CHECK(-n2s * de_fwd == n2s * de_bwd);  // bitwise negation
  }
}

TEST_CASE("estimate_state: uniform scalar moments") {
  ChainConfig cfg;
  cfg.warmup_sweeps = 300;
  cfg.sample_sweeps = 20000;
  cfg.thin = 4;
  cfg.record_states = 2000;
  NCPolynomial zero(1);
  auto chain = run_chain(zero, 1, 1, 2.0, cfg, 300);
  auto spec = estimate_state(chain, 2);
  // uniform on [-2,2]: E X = 0, E X^2 = 4/3
  CHECK(std::abs(spec.value(Word({0}))) < 3.0 * spec.error(Word({0})));
  CHECK(std::abs(spec.value(Word({0, 0})) - 4.0 / 3.0) < 3.0 * spec.error(Word({0, 0})));
  CHECK(spec.value(Word::one()) == 1.0);
  CHECK(spec.validate(2.0));
}

TEST_CASE("estimate_state enforces reversal symmetry exactly") {
  NCPolynomial h(2);
  h.add_term(Word({0, 0}), Complex(0.5, 0.0));
  h.add_term(Word({1, 1}), Complex(0.5, 0.0));
  h.add_term(Word({0, 1}), Complex(0.1, 0.0));
  h.add_term(Word({1, 0}), Complex(0.1, 0.0));
  ChainConfig cfg;
  cfg.warmup_sweeps = 400;
  cfg.sample_sweeps = 2000;
  cfg.thin = 4;
  cfg.record_states = 150;
  auto chain = run_chain(h, 2, 4, 1.5, cfg, 301);
  auto spec = estimate_state(chain, 3);
  for (const auto& [w, v] : spec.values) {
    CHECK(v == spec.value(w.reversed()));
    CHECK(std::abs(v) <= std::pow(1.5, static_cast<double>(w.degree())) + 1e-9);
  }
  CHECK(spec.value(Word({0, 0})) > 0.0);
  CHECK(spec.value(Word({1, 1})) > 0.0);
}

TEST_CASE("all recorded states stay inside the norm ball") {
  ChainConfig cfg;
  cfg.warmup_sweeps = 200;
  cfg.sample_sweeps = 1000;
  cfg.thin = 2;
  cfg.record_states = 100;
  auto chain = run_chain(half_square(), 1, 6, 1.0, cfg, 17);
  REQUIRE_FALSE(chain.states.empty());
  for (const auto& st : chain.states)
    CHECK(MatrixTuple::op_norm(st.mat(0)) <= 1.0 + 1e-9);  // hard constraint
}

TEST_CASE("boltzmann entropy: exact cases and the quadratic benchmark") {
  EntropyConfig cfg;
  cfg.panels = {{0.0, 1.0, 16}};
  cfg.chains = 2;
  cfg.warmup_sweeps = 600;
  cfg.sample_sweeps = 3000;
  cfg.thin = 2;

  // h0 = 0: S is exactly the log reference volume
  NCPolynomial zero(1);
  auto r0 = boltzmann_entropy(zero, 1, 8, 2.0, cfg, 5);
  CHECK(r0.exact);
  CHECK(r0.entropy == log_ball_volume(8, 2.0));

  // h0 = c 1: the constant cancels between P and n^2 mu(h0), bitwise
  NCPolynomial c = NCPolynomial::constant(Complex(0.4, 0.0), 1);
  auto rc = boltzmann_entropy(c, 1, 8, 2.0, cfg, 5);
  CHECK(rc.entropy == r0.entropy);
  CHECK(rc.exact);

  // h0 = t^2/2 at n = 16: scaled entropy near chi(semicircle)
  auto rq = boltzmann_entropy(half_square(), 1, 16, 3.0, cfg, 77);
  CHECK(rq.mixing_ok);
  CHECK(std::abs(rq.scaled - 1.4189385332046727) < 0.02);
}

TEST_CASE("entropy upper bound: S <= log reference volume for h0 >= 0") {
  // via the identity S = P + n^2 mu(h0) at n = 4; h0 = t^2 >= 0 on the ball
  NCPolynomial sq(1);
  sq.add_term(Word({0, 0}), Complex(1.0, 0.0));
  EntropyConfig cfg;
  cfg.panels = {{0.0, 1.0, 16}};
  cfg.chains = 2;
  cfg.warmup_sweeps = 500;
  cfg.sample_sweeps = 3000;
  cfg.thin = 2;
  auto r = boltzmann_entropy(sq, 1, 4, 1.5, cfg, 11);
  CHECK(r.entropy < log_ball_volume(4, 1.5));
  auto r0 = boltzmann_entropy(NCPolynomial(1), 1, 4, 1.5, cfg, 11);
  CHECK(r0.entropy == log_ball_volume(4, 1.5));  // equality iff h0 = 0 on the ball
}

TEST_CASE("polar and Descartes correspondences") {
  // n = 1: C_1 = pi exactly and the disc measure matches
  auto r1 = polar_descartes_check(1, 1.0, 2000, 9);
  CHECK(std::exp(log_polar_constant(1)) == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(r1.polar_direct == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(r1.polar_via_cn == doctest::Approx(M_PI).epsilon(1e-12));
  CHECK(r1.ks2d_pvalue > 0.01);
  CHECK(r1.pass);

  // n = 2: the two estimates of the measure of {||X|| <= 1} agree
  auto r2 = polar_descartes_check(2, 1.0, 300000, 10);
  CHECK(std::abs(r2.polar_z) < 3.0);
  CHECK(std::abs(r2.descartes_stat_z) < 4.0);
  CHECK(r2.pass);
}

TEST_CASE("log polar constant formula") {
  // C_n = pi^{n(n+1)/2} / (2^{n(n-1)/2} prod_{j<n} j!)
  CHECK(log_polar_constant(1) == doctest::Approx(std::log(M_PI)).epsilon(1e-14));
  CHECK(log_polar_constant(2) ==
        doctest::Approx(3.0 * std::log(M_PI) - std::log(2.0)).epsilon(1e-14));
  CHECK(log_polar_constant(3) ==
        doctest::Approx(6.0 * std::log(M_PI) - 4.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("chain checkpoints round trip and resume deterministically") {
  ChainConfig cfg;
  cfg.warmup_sweeps = 200;
  cfg.sample_sweeps = 800;
  cfg.thin = 2;
  cfg.record_states = 40;
  auto chain = run_chain(half_square(), 1, 5, 2.0, cfg, 808);
  REQUIRE_FALSE(chain.final_state.empty());

  const std::string path = "/tmp/fplab_chain.ckpt";
  save_chain_checkpoint(chain, path);
  auto loaded = load_chain_checkpoint(path);
  CHECK(loaded.n == chain.n);
  CHECK(loaded.N == chain.N);
  CHECK(loaded.R == chain.R);
  CHECK(loaded.scale == chain.scale);
  CHECK(loaded.seed == chain.seed);
  REQUIRE(loaded.energy_series.size() == chain.energy_series.size());
  for (size_t i = 0; i < chain.energy_series.size(); ++i)
    CHECK(loaded.energy_series[i] == chain.energy_series[i]);  // bitwise
  REQUIRE(loaded.states.size() == chain.states.size());
  CHECK((loaded.final_state[0] - chain.final_state[0]).cwiseAbs().maxCoeff() == 0.0);

  // resume extends the series from the stored state, deterministically
  ChainConfig more;
  more.warmup_sweeps = 0;
  more.sample_sweeps = 400;
  more.thin = 2;
  auto ext1 = resume_chain(loaded, half_square(), more, 909);
  auto ext2 = resume_chain(loaded, half_square(), more, 909);
  CHECK(ext1.energy_series.size() == chain.energy_series.size() + 200);
  REQUIRE(ext1.energy_series.size() == ext2.energy_series.size());
  for (size_t i = 0; i < ext1.energy_series.size(); ++i)
    CHECK(ext1.energy_series[i] == ext2.energy_series[i]);
  for (const auto& m : ext1.final_state)
    CHECK(MatrixTuple::op_norm(m) <= 2.0 + 1e-9);

  // corrupted magic is rejected
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOTMAGIC junk";
  }
  CHECK_THROWS_AS(load_chain_checkpoint(path), std::runtime_error);
}

TEST_CASE("moment tables export to csv and back") {
  ChainConfig cfg;
  cfg.warmup_sweeps = 200;
  cfg.sample_sweeps = 1200;
  cfg.thin = 3;
  cfg.record_states = 80;
  auto chain = run_chain(half_square(), 1, 4, 1.5, cfg, 66);
  auto spec = estimate_state(chain, 3);
  auto back = moment_spec_from_csv(moment_spec_to_csv(spec));
  REQUIRE(back.values.size() == spec.values.size());
  for (const auto& [w, v] : spec.values) {
    CHECK(back.value(w) == v);
    CHECK(back.error(w) == spec.error(w));
  }
}
