#include "fplab/gibbs.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "fplab/diagnostics.hpp"
#include "fplab/matrixmc.hpp"
#include "fplab/rng.hpp"

namespace fplab {

// ---------------------------------------------------------------- energies

namespace {

Complex word_trace_raw(const Word& w, const std::vector<Matrix>& mats) {
  const int n = static_cast<int>(mats[0].rows());
  if (w.is_one()) return Complex(1.0, 0.0);
  Matrix prod = mats[w.letters[0]];
  for (size_t i = 1; i < w.letters.size(); ++i) prod = prod * mats[w.letters[i]];
  return prod.trace() / static_cast<double>(n);
}

double poly_trace_raw(const NCPolynomial& p, const std::vector<Matrix>& mats) {
  Complex acc(0.0, 0.0);
  std::map<Word, Complex> cache;
  for (const auto& [w, c] : p.terms()) {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, word_trace_raw(w, mats)).first;
    acc += c * it->second;
  }
  return acc.real();
}

double horner_mean(const std::vector<double>& coeffs, const Eigen::VectorXd& eigs) {
  double s = 0.0;
  for (int i = 0; i < eigs.size(); ++i) {
    double v = 0.0;
    const double x = eigs(i);
    for (size_t k = coeffs.size(); k-- > 0;) v = v * x + coeffs[k];
    s += v;
  }
  return s / static_cast<double>(eigs.size());
}

}  // namespace

PolyEnergy::PolyEnergy(NCPolynomial h, int N) : h_(std::move(h)), N_(N) {
  if (!h_.is_selfadjoint()) throw std::invalid_argument("PolyEnergy: h must be selfadjoint");
  single_var_ = h_.nvars() <= 1;
  if (single_var_) {
    for (Complex c : h_.one_var_coeffs()) coeffs_.push_back(c.real());
  }
}

double PolyEnergy::energy(const std::vector<Matrix>& mats,
                          const std::vector<Eigen::VectorXd>& eigs) const {
  if (single_var_) return coeffs_.empty() ? 0.0 : horner_mean(coeffs_, eigs[0]);
  return poly_trace_raw(h_, mats);
}

double PolyEnergy::energy_from_eigenvalues(const Eigen::VectorXd& lam) const {
  return coeffs_.empty() ? 0.0 : horner_mean(coeffs_, lam);
}

PenaltyEnergy::PenaltyEnergy(MomentSpec target, int r, double eps) : target_(std::move(target)) {
  if (eps <= 0.0) throw std::invalid_argument("PenaltyEnergy: eps must be positive");
  words_ = words_up_to(target_.nvars, r);
  for (const auto& w : words_) targets_.push_back(target_.value(w));  // throws when missing
  inv_eps2_ = 1.0 / (eps * eps);
}

double PenaltyEnergy::energy_from_eigenvalues(const Eigen::VectorXd& lam) const {
  const int n = static_cast<int>(lam.size());
  const int r = static_cast<int>(words_.back().degree());
  std::vector<double> ps(r + 1, 0.0);
  std::vector<double> acc(n, 1.0);
  for (int k = 1; k <= r; ++k) {
    double t = 0.0;
    for (int i = 0; i < n; ++i) {
      acc[i] *= lam(i);
      t += acc[i];
    }
    ps[k] = t / n;
  }
  double s = 0.0;
  for (size_t wi = 0; wi < words_.size(); ++wi) {
    const double d = ps[words_[wi].degree()] - targets_[wi];
    s += d * d;
  }
  return inv_eps2_ * s;
}

double PenaltyEnergy::energy(const std::vector<Matrix>& mats,
                             const std::vector<Eigen::VectorXd>& eigs) const {
  double s = 0.0;
  if (target_.nvars == 1) {
    const auto& lam = eigs[0];
    const int n = static_cast<int>(lam.size());
    // power sums tr_n X^k, k = 1..r
    std::vector<double> ps(words_.size() + 2, 0.0);
    const int r = static_cast<int>(words_.back().degree());
    std::vector<double> acc(n, 1.0);
    for (int k = 1; k <= r; ++k) {
      double t = 0.0;
      for (int i = 0; i < n; ++i) {
        acc[i] *= lam(i);
        t += acc[i];
      }
      ps[k] = t / n;
    }
    for (size_t wi = 0; wi < words_.size(); ++wi) {
      const double d = ps[words_[wi].degree()] - targets_[wi];
      s += d * d;
    }
  } else {
    std::map<Word, Complex> cache;
    for (size_t wi = 0; wi < words_.size(); ++wi) {
      auto it = cache.find(words_[wi]);
      if (it == cache.end()) it = cache.emplace(words_[wi], word_trace_raw(words_[wi], mats)).first;
      s += std::norm(it->second - Complex(targets_[wi], 0.0));
    }
  }
  return inv_eps2_ * s;
}

// ---------------------------------------------------------------- MH chain

namespace {

void hermitian_noise(Matrix& h, int n, double step, Rng& rng) {
  for (int i = 0; i < n; ++i) h(i, i) = Complex(step * rng.normal(), 0.0);
  const double off = step / std::sqrt(2.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      Complex z(off * rng.normal(), off * rng.normal());
      h(i, j) = z;
      h(j, i) = std::conj(z);
    }
}

}  // namespace

MatrixWalker::MatrixWalker(const EnergyModel& model, int n, double R, uint64_t seed,
                           double init_step, double target_acceptance)
    : model_(model),
      n_(n),
      N_(model.nvars()),
      R_(R),
      target_acceptance_(target_acceptance),
      rng_(seed),
      noise_(n, n),
      prop_(n, n),
      prop_eigs_(n) {
  mats_.resize(N_);
  eigs_.resize(N_);
  // start from independent uniform-ball draws
  for (int i = 0; i < N_; ++i) {
    auto draw = sample_uniform_ball(n, R, 1, derive_seed(seed, 0x1a17 + i));
    mats_[i] = draw[0];
    Eigen::SelfAdjointEigenSolver<Matrix> es(mats_[i], Eigen::EigenvaluesOnly);
    eigs_[i] = es.eigenvalues();
  }
  e_cur_ = model_.energy(mats_, eigs_);
  steps_.assign(N_, init_step > 0.0 ? init_step : R / (n + 1.0));
}

void MatrixWalker::set_state(const std::vector<Matrix>& mats) {
  if (static_cast<int>(mats.size()) != N_)
    throw std::invalid_argument("MatrixWalker::set_state: tuple size mismatch");
  for (int i = 0; i < N_; ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(mats[i], Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    if (std::max(std::abs(ev(0)), std::abs(ev(n_ - 1))) > R_ + 1e-9)
      throw std::invalid_argument("MatrixWalker::set_state: state leaves the norm ball");
    mats_[i] = mats[i];
    eigs_[i] = ev;
  }
  e_cur_ = model_.energy(mats_, eigs_);
}

void MatrixWalker::sweep(bool adapt) {
  const double n2 = static_cast<double>(n_) * n_;
  for (int i = 0; i < N_; ++i) {
    hermitian_noise(noise_, n_, steps_[i], rng_);
    prop_ = mats_[i] + noise_;
    Eigen::SelfAdjointEigenSolver<Matrix> es(prop_, Eigen::EigenvaluesOnly);
    prop_eigs_ = es.eigenvalues();
    ++proposals_;
    bool accepted = false;
    // leaving the ball is rejected outright: the restricted reference
    // measure stays exact
    if (std::max(std::abs(prop_eigs_(0)), std::abs(prop_eigs_(n_ - 1))) <= R_) {
      std::swap(mats_[i], prop_);
      std::swap(eigs_[i], prop_eigs_);
      const double e_new = model_.energy(mats_, eigs_);
      const double logr = -n2 * scale_ * (e_new - e_cur_);
      if (logr >= 0.0 || rng_.uniform01() < std::exp(logr)) {
        e_cur_ = e_new;
        accepted = true;
        ++accepts_;
      } else {
        std::swap(mats_[i], prop_);
        std::swap(eigs_[i], prop_eigs_);
      }
    }
    if (adapt) {
      steps_[i] *= std::exp(0.05 * ((accepted ? 1.0 : 0.0) - target_acceptance_));
      steps_[i] = std::clamp(steps_[i], 1e-7 * R_, 2.0 * R_);
    }
  }
}

GibbsChain run_mh_chain(const EnergyModel& model, int n, double R, double scale,
                        const ChainConfig& config, uint64_t seed) {
  MatrixWalker walker(model, n, R, seed, config.init_step, config.target_acceptance);
  walker.set_scale(scale);
  for (int s = 0; s < config.warmup_sweeps; ++s) walker.sweep(true);

  walker.reset_counters();
  GibbsChain chain;
  chain.n = n;
  chain.N = model.nvars();
  chain.R = R;
  chain.scale = scale;
  chain.seed = seed;

  const int kept = config.sample_sweeps / config.thin;
  chain.energy_series.reserve(kept);
  const int state_every =
      config.record_states > 0 ? std::max(1, kept / config.record_states) : 0;
  for (int s = 0; s < config.sample_sweeps; ++s) {
    walker.sweep(false);
    if ((s + 1) % config.thin == 0) {
      chain.energy_series.push_back(walker.energy());
      if (state_every > 0 && (chain.energy_series.size() % state_every) == 0 &&
          static_cast<int>(chain.states.size()) < config.record_states) {
        chain.states.emplace_back(walker.mats(), R, 1e-6);
      }
    }
  }
  chain.final_state = walker.mats();
  chain.acceptance = walker.acceptance();
  chain.step = walker.step();
  chain.ess = effective_sample_size(chain.energy_series);
  chain.mixing_ok = chain.acceptance > 0.02;
  return chain;
}

GibbsChain run_chain(const NCPolynomial& h0, int N, int n, double R, const ChainConfig& config,
                     uint64_t seed) {
  if (!h0.is_selfadjoint()) throw std::invalid_argument("run_chain: h0 must be selfadjoint");
  if (h0.nvars() > N) throw std::invalid_argument("run_chain: h0 uses more than N variables");
  PolyEnergy model(h0, N);
  return run_mh_chain(model, n, R, 1.0, config, seed);
}

MomentSpec estimate_state(const GibbsChain& chain, int r) {
  if (chain.states.empty())
    throw std::invalid_argument("estimate_state: chain has no recorded states");
  const int N = chain.N;
  std::vector<Word> words = words_up_to(N, r);
  MomentSpec spec(N, r);
  spec.provenance = "chain";
  std::map<Word, std::vector<double>> series;
  for (const auto& st : chain.states) {
    std::map<Word, Complex> cache;
    for (const auto& w : words) {
      if (series.count(w) == 0) series[w] = {};
      auto it = cache.find(w);
      if (it == cache.end()) it = cache.emplace(w, word_trace(w, st)).first;
      series[w].push_back(it->second.real());
    }
  }
  // traciality symmetrization: average each word with its reversal
  for (const auto& w : words) {
    Word rev = w.reversed();
    if (rev < w) continue;  // handle each unordered pair once
    const auto& a = series[w];
    const auto& b = series[rev];
    std::vector<double> sym(a.size());
    for (size_t i = 0; i < a.size(); ++i) sym[i] = 0.5 * (a[i] + b[i]);
    const double m = mean_of(sym);
    const double se = mcmc_stderr(sym);
    spec.set(w, m, se);
    if (!(w == rev)) spec.set(rev, m, se);
  }
  return spec;
}

EntropyResult boltzmann_entropy(const NCPolynomial& h0, int N, int n, double R,
                                const EntropyConfig& config, uint64_t seed) {
  if (!h0.is_selfadjoint())
    throw std::invalid_argument("boltzmann_entropy: h0 must be selfadjoint");
  if (h0.nvars() > N)
    throw std::invalid_argument("boltzmann_entropy: h0 uses more than N variables");
  const double n2 = static_cast<double>(n) * n;
  const NCPolynomial core = h0.without_constant();  // constants cancel between P and n^2 mu(h0)

  EntropyResult res;
  if (core.is_zero()) {
    res.entropy = N * log_ball_volume(n, R);
    res.scaled = res.entropy / n2 + 0.5 * N * std::log(static_cast<double>(n));
    res.exact = true;
    return res;
  }

  Schedule sched;
  sched.panels = config.panels;
  sched.chains = config.chains;
  sched.warmup_sweeps = config.warmup_sweeps;
  sched.node_warmup = config.node_warmup;
  sched.sample_sweeps = config.sample_sweeps;
  sched.thin = config.thin;

  // one annealed pass per separable block: the quadrature nodes integrate
  // P, and an extra zero-weight node at beta = 1 reads off mu_{R,n}^{h0}(h0)
  double pressure = N * log_ball_volume(n, R), pressure_var = 0.0;
  double mu = 0.0, mu_var = 0.0;
  auto blocks = core.separable_blocks();
  for (size_t b = 0; b < blocks.size(); ++b) {
    PolyEnergy model(blocks[b].second, blocks[b].second.nvars());
    QuadRule rule = composite_rule(sched.panels);
    rule.nodes.push_back(1.0);
    rule.weights.push_back(0.0);
    auto nodes =
        run_annealed_ti(model, n, R, rule, sched, block_seed(seed, static_cast<int>(b)),
                        config.jobs);
    for (size_t k = 0; k + 1 < nodes.size(); ++k) {
      double m = 0.0, se2 = 0.0;
      for (const auto& s : nodes[k].chain_series) {
        m += mean_of(s);
        const double se = mcmc_stderr(s);
        se2 += se * se;
      }
      const double M = static_cast<double>(nodes[k].chain_series.size());
      m /= M;
      se2 /= M * M;
      pressure -= n2 * nodes[k].weight * m;
      pressure_var += n2 * n2 * nodes[k].weight * nodes[k].weight * se2;
      if (split_rhat(nodes[k].chain_series) > sched.rhat_threshold) res.mixing_ok = false;
    }
    const auto& last = nodes.back();
    double m = 0.0, se2 = 0.0;
    for (const auto& s : last.chain_series) {
      m += mean_of(s);
      const double se = mcmc_stderr(s);
      se2 += se * se;
    }
    const double M = static_cast<double>(last.chain_series.size());
    mu += m / M;
    mu_var += se2 / (M * M);
    if (split_rhat(last.chain_series) > sched.rhat_threshold) res.mixing_ok = false;
  }

  res.pressure = pressure;
  res.mu_h0 = mu;
  res.entropy = pressure + n2 * mu;
  res.se = std::sqrt(pressure_var + n2 * n2 * mu_var);
  res.scaled = res.entropy / n2 + 0.5 * N * std::log(static_cast<double>(n));
  res.scaled_se = res.se / n2;
  return res;
}

// ------------------------------------------------- measure correspondences

double log_polar_constant(int n) {
  double s = 0.5 * n * (n + 1) * std::log(M_PI) - 0.5 * n * (n - 1) * std::log(2.0);
  for (int j = 1; j <= n - 1; ++j) s -= std::lgamma(j + 1.0);
  return s;
}

namespace {

// two-sample z score for means
double z_score(double m1, double se1, double m2, double se2) {
  return (m1 - m2) / std::sqrt(se1 * se1 + se2 * se2 + 1e-300);
}

// Fasano-Franceschini style 2-d Kolmogorov-Smirnov p value approximation
double ks2d_pvalue(const std::vector<std::pair<double, double>>& xy,
                   const std::function<double(double, double)>& cdf) {
  const size_t n = xy.size();
  double d = 0.0;
  for (const auto& [x, y] : xy) {
    // empirical quadrant counts at (x,y)
    double q11 = 0, q12 = 0, q21 = 0, q22 = 0;
    for (const auto& [u, v] : xy) {
      if (u <= x && v <= y) ++q11;
      else if (u <= x) ++q12;
      else if (v <= y) ++q21;
      else ++q22;
    }
    const double f = cdf(x, y);
    d = std::max(d, std::abs(q11 / n - f));
  }
  const double en = std::sqrt(static_cast<double>(n));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  double p = 0.0;
  for (int j = 1; j <= 100; ++j) p += 2.0 * ((j % 2) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

double opnorm2x2(const Matrix& x) {
  // largest singular value of a 2x2 complex matrix, closed form
  const Matrix g = x.adjoint() * x;
  const double t = g.trace().real();
  const double d = std::max(0.0, (g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)).real());
  const double disc = std::max(0.0, 0.25 * t * t - d);
  return std::sqrt(0.5 * t + std::sqrt(disc));
}

}  // namespace

CorrespondenceReport polar_descartes_check(int n, double r, long samples, uint64_t seed) {
  if (n > 4) throw std::invalid_argument("polar_descartes_check: n must be <= 4");
  CorrespondenceReport rep;
  Rng rng(seed);

  if (n == 1) {
    // (a) at n = 1: (a1,a2) uniform on a Lebesgue box maps to the uniform
    // complex box; 2-d KS against the product CDF
    const long m = std::min<long>(samples, 1500);
    std::vector<std::pair<double, double>> xy;
    xy.reserve(m);
    for (long i = 0; i < m; ++i) {
      double a1 = rng.uniform(-1.0, 1.0), a2 = rng.uniform(-1.0, 1.0);
      Complex x(a1, a2);
      xy.emplace_back(x.real(), x.imag());
    }
    rep.ks2d_pvalue = ks2d_pvalue(
        xy, [](double x, double y) { return 0.25 * (x + 1.0) * (y + 1.0); });
    // (b) exact at n = 1: area of the disc of radius r vs C_1 * Lambda_1([0, r^2])
    rep.polar_direct = M_PI * r * r;
    rep.polar_via_cn = std::exp(log_polar_constant(1)) * r * r;
    rep.polar_z = 0.0;
    rep.pass = rep.ks2d_pvalue > 0.01 &&
               std::abs(rep.polar_direct - rep.polar_via_cn) < 1e-12;
    return rep;
  }

  // (a) Gaussian probe of the Descartes correspondence: X = A1 + iA2 with
  // GUE-distributed A1, A2 must match a matrix with all 2n^2 Lebesgue
  // coordinates standard normal. Compare mean of tr X*X (expected n per
  // normalized trace... use Tr X*X / n^2, expectation 1 either way).
  {
    const long m = samples / 4;
    std::vector<double> prod_stat, direct_stat;
    prod_stat.reserve(m);
    direct_stat.reserve(m);
    for (long s = 0; s < m; ++s) {
      Matrix a1(n, n), a2(n, n), x(n, n);
      for (auto* mp : {&a1, &a2}) {
        Matrix& a = *mp;
        for (int i = 0; i < n; ++i) a(i, i) = Complex(rng.normal(), 0.0);
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            Complex z(rng.normal() / std::sqrt(2.0), rng.normal() / std::sqrt(2.0));
            a(i, j) = z;
            a(j, i) = std::conj(z);
          }
      }
      x = a1 + Complex(0.0, 1.0) * a2;
      prod_stat.push_back((x.adjoint() * x).trace().real() / (n * n));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x(i, j) = Complex(rng.normal(), rng.normal());
      direct_stat.push_back((x.adjoint() * x).trace().real() / (n * n));
    }
    rep.descartes_stat_z = z_score(mean_of(prod_stat), mcmc_stderr(prod_stat),
                                   mean_of(direct_stat), mcmc_stderr(direct_stat));
  }

  // (b) Lambda-hat measure of {||X|| <= r} two ways (n = 2 closed-form norms)
  if (n == 2) {
    // direct: entries of X in the complex box [-r,r]^2 per entry
    long hits = 0;
    const long m = samples;
    Matrix x(2, 2);
    for (long s = 0; s < m; ++s) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          x(i, j) = Complex(rng.uniform(-r, r), rng.uniform(-r, r));
      if (opnorm2x2(x) <= r) ++hits;
    }
    const double box_vol = std::pow(2.0 * r, 8);
    double p = static_cast<double>(hits) / m;
    rep.polar_direct = box_vol * p;
    rep.polar_direct_se = box_vol * std::sqrt(p * (1.0 - p) / m);

    // via C_n: Lambda_2 measure of {A >= 0, ||A|| <= r^2}; diagonal in
    // [0, r^2], off-diagonal bounded by r^2
    long hits2 = 0;
    const double r2 = r * r;
    for (long s = 0; s < m; ++s) {
      double a = rng.uniform(0.0, r2), b = rng.uniform(0.0, r2);
      Complex c(rng.uniform(-r2, r2), rng.uniform(-r2, r2));
      const double mid = 0.5 * (a + b);
      const double rad = std::sqrt(0.25 * (a - b) * (a - b) + std::norm(c));
      if (mid - rad >= 0.0 && mid + rad <= r2) ++hits2;
    }
    // Lambda_2 box volume: 2^{n(n-1)/2} * Lebesgue = 2 * r2^2 * (2 r2)^2
    const double box2 = 2.0 * r2 * r2 * (2.0 * r2) * (2.0 * r2);
    double p2 = static_cast<double>(hits2) / m;
    rep.polar_via_cn = std::exp(log_polar_constant(2)) * box2 * p2;
    rep.polar_via_cn_se =
        std::exp(log_polar_constant(2)) * box2 * std::sqrt(p2 * (1.0 - p2) / m);
    rep.polar_z = z_score(rep.polar_direct, rep.polar_direct_se, rep.polar_via_cn,
                          rep.polar_via_cn_se);
  }

  rep.pass = std::abs(rep.descartes_stat_z) < 4.0 && std::abs(rep.polar_z) < 3.0;
  return rep;
}

}  // namespace fplab

namespace fplab {

// ------------------------------------------------------------- checkpoints

namespace {

constexpr char kCheckpointMagic[9] = "FPLCHKPT";
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("chain checkpoint: truncated file");
  return v;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      put(out, m(i, j).real());
      put(out, m(i, j).imag());
    }
}

Matrix get_matrix(std::istream& in, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double re = get<double>(in);
      const double im = get<double>(in);
      m(i, j) = Complex(re, im);
    }
  return m;
}

}  // namespace

void save_chain_checkpoint(const GibbsChain& chain, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("chain checkpoint: cannot write " + path);
  out.write(kCheckpointMagic, 8);
  put(out, kCheckpointVersion);
  put(out, static_cast<int32_t>(chain.n));
  put(out, static_cast<int32_t>(chain.N));
  put(out, chain.R);
  put(out, chain.scale);
  put(out, chain.acceptance);
  put(out, chain.step);
  put(out, chain.ess);
  put(out, chain.seed);
  put(out, static_cast<uint8_t>(chain.mixing_ok ? 1 : 0));
  put(out, static_cast<uint64_t>(chain.energy_series.size()));
  for (double e : chain.energy_series) put(out, e);
  put(out, static_cast<uint64_t>(chain.states.size()));
  for (const auto& st : chain.states)
    for (int i = 0; i < chain.N; ++i) put_matrix(out, st.mat(i));
  put(out, static_cast<uint8_t>(chain.final_state.empty() ? 0 : 1));
  for (const auto& m : chain.final_state) put_matrix(out, m);
}

GibbsChain load_chain_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("chain checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw std::runtime_error("chain checkpoint: bad magic");
  const uint32_t version = get<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("chain checkpoint: unsupported version");
  GibbsChain chain;
  chain.n = get<int32_t>(in);
  chain.N = get<int32_t>(in);
  chain.R = get<double>(in);
  chain.scale = get<double>(in);
  chain.acceptance = get<double>(in);
  chain.step = get<double>(in);
  chain.ess = get<double>(in);
  chain.seed = get<uint64_t>(in);
  chain.mixing_ok = get<uint8_t>(in) != 0;
  const uint64_t len = get<uint64_t>(in);
  chain.energy_series.resize(len);
  for (uint64_t i = 0; i < len; ++i) chain.energy_series[i] = get<double>(in);
  const uint64_t nstates = get<uint64_t>(in);
  for (uint64_t s = 0; s < nstates; ++s) {
    std::vector<Matrix> mats;
    for (int i = 0; i < chain.N; ++i) mats.push_back(get_matrix(in, chain.n));
    chain.states.emplace_back(std::move(mats), chain.R, 1e-6);
  }
  if (get<uint8_t>(in)) {
    for (int i = 0; i < chain.N; ++i) chain.final_state.push_back(get_matrix(in, chain.n));
  }
  return chain;
}

GibbsChain resume_chain(const GibbsChain& checkpoint, const NCPolynomial& h0,
                        const ChainConfig& config, uint64_t seed) {
  if (checkpoint.final_state.empty())
    throw std::invalid_argument("resume_chain: checkpoint has no final state");
  PolyEnergy model(h0, checkpoint.N);
  MatrixWalker walker(model, checkpoint.n, checkpoint.R, seed,
                      checkpoint.step > 0.0 ? checkpoint.step : config.init_step,
                      config.target_acceptance);
  walker.set_scale(checkpoint.scale);
  walker.set_state(checkpoint.final_state);
  for (int s = 0; s < config.warmup_sweeps; ++s) walker.sweep(true);
  walker.reset_counters();

  GibbsChain chain = checkpoint;
  chain.seed = seed;
  const int kept = config.sample_sweeps / config.thin;
  const int state_every = config.record_states > 0 ? std::max(1, kept / config.record_states) : 0;
  int appended = 0;
  for (int s = 0; s < config.sample_sweeps; ++s) {
    walker.sweep(false);
    if ((s + 1) % config.thin == 0) {
      chain.energy_series.push_back(walker.energy());
      ++appended;
      if (state_every > 0 && appended % state_every == 0 &&
          static_cast<int>(chain.states.size()) <
              config.record_states + static_cast<int>(checkpoint.states.size())) {
        chain.states.emplace_back(walker.mats(), chain.R, 1e-6);
      }
    }
  }
  chain.final_state = walker.mats();
  chain.acceptance = walker.acceptance();
  chain.step = walker.step();
  chain.ess = effective_sample_size(chain.energy_series);
  chain.mixing_ok = chain.acceptance > 0.02;
  return chain;
}

// ------------------------------------------------------------ moment tables

std::string moment_spec_to_csv(const MomentSpec& spec) {
  char buf[160];
  std::string out = "word,value,stderr\n";
  for (const auto& [w, v] : spec.values) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", w.to_string().c_str(), v,
                  spec.error(w));
    out += buf;
  }
  return out;
}

MomentSpec moment_spec_from_csv(const std::string& csv) {
  MomentSpec spec;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line == "word,value,stderr") continue;
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::invalid_argument("moment_spec_from_csv: malformed row '" + line + "'");
    Word w = Word::parse(line.substr(0, c1));
    const double v = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    const double e = std::stod(line.substr(c2 + 1));
    if (w.is_one()) {
      spec.values[w] = v;
      if (e != 0.0) spec.errors[w] = e;
    } else {
      spec.set(w, v, e);
    }
  }
  return spec;
}

}  // namespace fplab
