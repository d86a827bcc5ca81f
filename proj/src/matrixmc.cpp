#include "fplab/matrixmc.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fplab/diagnostics.hpp"
#include "fplab/gibbs.hpp"
#include "fplab/taskpool.hpp"

namespace fplab {

// -------------------------------------------------------------- exact volume

double log_ball_volume(int n, double R) {
  if (n < 1) throw std::invalid_argument("log_ball_volume: n must be >= 1");
  if (R <= 0.0) throw std::invalid_argument("log_ball_volume: R must be positive");
  // Lambda_n(ball_R) = (2R)^{n^2} K_n S_n with the squared-Vandermonde Selberg
  // integral S_n = prod_{j=0}^{n-1} j! j! (j+1)! / (n+j)! over [0,1]^n and the
  // angular constant K_n = (2 pi)^{n(n-1)/2} / prod_{j=1}^{n} j!.
  double s = static_cast<double>(n) * n * std::log(2.0 * R);
  s += 0.5 * n * (n - 1) * std::log(2.0 * M_PI);
  for (int j = 1; j <= n; ++j) s -= std::lgamma(j + 1.0);
  for (int j = 0; j < n; ++j)
    s += 2.0 * std::lgamma(j + 1.0) + std::lgamma(j + 2.0) - std::lgamma(n + j + 1.0);
  return s;
}

// ------------------------------------------------------- eigenvalue sampler

namespace {

// Metropolis walker for the density prop. to prod_{i<j} (l_i - l_j)^2 times
// exp(-n^2 scale e(lambda)) on [-R,R]^n; with e = 0 this is the eigenvalue
// law of the uniform norm-ball ensemble.
class EigenvalueWalker {
 public:
  EigenvalueWalker(int n, double R, uint64_t seed, const EnergyModel* model = nullptr)
      : n_(n), R_(R), rng_(seed), lam_(n), lam_vec_(n), step_(1.6 * R / (n + 1.0)),
        model_(model) {
    for (int i = 0; i < n; ++i) {
      lam_[i] = R * std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * n));
      lam_vec_(i) = lam_[i];
    }
    if (model_) e_cur_ = model_->energy_from_eigenvalues(lam_vec_);
    for (int s = 0; s < 60 + 4 * n; ++s) sweep(true);
  }

  void set_scale(double s) { scale_ = s; }
  double energy() const { return e_cur_; }

  void sweep(bool adapt = false) {
    const double n2 = static_cast<double>(n_) * n_;
    int accepted = 0;
    for (int i = 0; i < n_; ++i) {
      const double cur = lam_[i];
      const double prop = cur + step_ * rng_.normal();
      ++proposals_;
      if (std::abs(prop) > R_) continue;
      double logr = 0.0;
      bool coincide = false;
      for (int j = 0; j < n_; ++j) {
        if (j == i) continue;
        const double dn = std::abs(prop - lam_[j]);
        const double dd = std::abs(cur - lam_[j]);
        if (dn == 0.0) {
          coincide = true;
          break;
        }
        logr += 2.0 * (std::log(dn) - std::log(dd));
      }
      if (coincide) continue;
      double e_new = e_cur_;
      if (model_ && scale_ != 0.0) {
        lam_vec_(i) = prop;
        e_new = model_->energy_from_eigenvalues(lam_vec_);
        lam_vec_(i) = cur;
        logr -= n2 * scale_ * (e_new - e_cur_);
      } else if (model_) {
        lam_vec_(i) = prop;
        e_new = model_->energy_from_eigenvalues(lam_vec_);
        lam_vec_(i) = cur;
      }
      if (logr >= 0.0 || rng_.uniform01() < std::exp(logr)) {
        lam_[i] = prop;
        lam_vec_(i) = prop;
        e_cur_ = e_new;
        ++accepted;
        ++accepts_;
      }
    }
    if (adapt) {
      const double rate = static_cast<double>(accepted) / n_;
      step_ *= std::exp(0.08 * (rate - 0.4));
      step_ = std::clamp(step_, 1e-6 * R_, R_);
    }
  }

  void reset_counters() {
    proposals_ = 0;
    accepts_ = 0;
  }
  const std::vector<double>& state() const { return lam_; }
  double acceptance() const {
    return proposals_ ? static_cast<double>(accepts_) / proposals_ : 0.0;
  }
  Rng& rng() { return rng_; }

 private:
  int n_;
  double R_;
  Rng rng_;
  std::vector<double> lam_;
  Eigen::VectorXd lam_vec_;
  double step_;
  const EnergyModel* model_ = nullptr;
  double scale_ = 0.0;
  double e_cur_ = 0.0;
  long proposals_ = 0;
  long accepts_ = 0;
};

constexpr int kEigThin = 8;  // sweeps between retained eigenvalue draws

}  // namespace

Matrix haar_unitary(int n, Rng& rng) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = Complex(rng.normal(), rng.normal());
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // fix the phase so Q follows the Haar measure
  for (int i = 0; i < n; ++i) {
    Complex d = r(i, i);
    Complex phase = d == Complex(0.0, 0.0) ? Complex(1.0, 0.0) : d / std::abs(d);
    q.col(i) *= phase;
  }
  return q;
}

std::vector<std::vector<double>> sample_ball_eigenvalues(int n, double R, int count, uint64_t seed,
                                                         BallSamplerDiagnostics* diag) {
  EigenvalueWalker walker(n, R, seed);
  std::vector<std::vector<double>> draws;
  draws.reserve(count);
  std::vector<double> stat;
  stat.reserve(count);
  for (int k = 0; k < count; ++k) {
    for (int s = 0; s < kEigThin; ++s) walker.sweep();
    draws.push_back(walker.state());
    double s2 = 0.0;
    for (double l : walker.state()) s2 += l * l;
    stat.push_back(s2);
  }
  if (diag) {
    diag->ess = effective_sample_size(stat);
    diag->acceptance = walker.acceptance();
  }
  return draws;
}

std::vector<Matrix> sample_uniform_ball(int n, double R, int count, uint64_t seed,
                                        BallSamplerDiagnostics* diag) {
  EigenvalueWalker walker(n, R, seed);
  Rng haar_rng(derive_seed(seed, 0x48aa5ULL));
  std::vector<Matrix> out;
  out.reserve(count);
  std::vector<double> stat;
  stat.reserve(count);
  for (int k = 0; k < count; ++k) {
    for (int s = 0; s < kEigThin; ++s) walker.sweep();
    const auto& lam = walker.state();
    Matrix u = haar_unitary(n, haar_rng);
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = lam[i];
    out.push_back(u * d.asDiagonal() * u.adjoint());
    double s2 = 0.0;
    for (double l : lam) s2 += l * l;
    stat.push_back(s2);
  }
  if (diag) {
    diag->ess = effective_sample_size(stat);
    diag->acceptance = walker.acceptance();
  }
  return out;
}

// -------------------------------------------------------- pressure estimator

std::vector<TiNodeData> run_annealed_ti(const EnergyModel& model, int n, double R,
                                        const QuadRule& rule, const Schedule& sched,
                                        uint64_t seed, int jobs) {
  const size_t K = rule.nodes.size();
  struct ChainRun {
    std::vector<std::vector<double>> series;
    std::vector<double> acceptance;
  };
  // conjugation-invariant single-matrix energies factor through the spectrum
  const bool eigen_path = model.eigenvalue_only() && model.nvars() == 1;
  auto runs = parallel_map<ChainRun>(jobs, sched.chains, [&](size_t c) {
    ChainRun run;
    run.series.resize(K);
    run.acceptance.resize(K);
    auto anneal = [&](auto& walker) {
      for (size_t k = 0; k < K; ++k) {
        walker.set_scale(rule.nodes[k]);
        const int warm = (k == 0) ? sched.warmup_sweeps : sched.node_warmup;
        for (int s = 0; s < warm; ++s) walker.sweep(true);
        walker.reset_counters();
        const int kept = sched.sample_sweeps / sched.thin;
        run.series[k].reserve(kept);
        for (int s = 0; s < sched.sample_sweeps; ++s) {
          walker.sweep(false);
          if ((s + 1) % sched.thin == 0) run.series[k].push_back(walker.energy());
        }
        run.acceptance[k] = walker.acceptance();
      }
    };
    if (eigen_path) {
      EigenvalueWalker walker(n, R, derive_seed(seed, c), &model);
      anneal(walker);
    } else {
      MatrixWalker walker(model, n, R, derive_seed(seed, c));
      anneal(walker);
    }
    return run;
  });

  std::vector<TiNodeData> nodes(K);
  for (size_t k = 0; k < K; ++k) {
    nodes[k].beta = rule.nodes[k];
    nodes[k].weight = rule.weights[k];
    for (const auto& run : runs) {
      nodes[k].chain_series.push_back(run.series[k]);
      nodes[k].chain_acceptance.push_back(run.acceptance[k]);
    }
  }
  return nodes;
}

namespace {

struct NodeSummary {
  double mean, se, rhat, acceptance;
};

NodeSummary summarize_node(const TiNodeData& node) {
  NodeSummary s{0.0, 0.0, 1.0, 0.0};
  double se2 = 0.0;
  for (size_t c = 0; c < node.chain_series.size(); ++c) {
    s.mean += mean_of(node.chain_series[c]);
    const double se = mcmc_stderr(node.chain_series[c]);
    se2 += se * se;
    s.acceptance += node.chain_acceptance[c];
  }
  const double M = static_cast<double>(node.chain_series.size());
  s.mean /= M;
  s.se = std::sqrt(se2) / M;
  s.acceptance /= M;
  s.rhat = split_rhat(node.chain_series);
  return s;
}

}  // namespace

MicroPressureResult estimate_micro_pressure_block(const NCPolynomial& h_block, int n, double R,
                                                  const Schedule& sched, uint64_t seed, int jobs) {
  const int L = h_block.nvars();
  if (L < 1) throw std::invalid_argument("estimate_micro_pressure_block: empty block");
  if (!h_block.is_selfadjoint())
    throw std::invalid_argument("estimate_micro_pressure_block: potential must be selfadjoint");

  QuadRule rule = composite_rule(sched.panels);
  PolyEnergy model(h_block, L);
  auto nodes = run_annealed_ti(model, n, R, rule, sched, seed, jobs);

  MicroPressureResult res;
  res.n = n;
  res.N = L;
  res.R = R;
  double integral = 0.0, var = 0.0;
  for (const auto& node : nodes) {
    NodeSummary s = summarize_node(node);
    NodeStat st;
    st.beta = node.beta;
    st.weight = node.weight;
    st.mean = s.mean;
    st.se = s.se;
    st.rhat = s.rhat;
    st.acceptance = s.acceptance;
    res.nodes.push_back(st);
    integral += node.weight * s.mean;
    var += node.weight * node.weight * s.se * s.se;
    if (s.rhat > sched.rhat_threshold) res.mixing_ok = false;
  }
  const double n2 = static_cast<double>(n) * n;
  res.value = L * log_ball_volume(n, R) - n2 * integral;
  res.se = n2 * std::sqrt(var);
  res.scaled = res.value / n2 + 0.5 * L * std::log(static_cast<double>(n));
  res.scaled_se = res.se / n2;
  return res;
}

MicroPressureResult estimate_micro_pressure(const NCPolynomial& h, int N, int n, double R,
                                            const Schedule& sched, uint64_t seed, int jobs,
                                            bool split_blocks) {
  if (!h.is_selfadjoint())
    throw std::invalid_argument("estimate_micro_pressure: potential must be selfadjoint");
  if (h.nvars() > N)
    throw std::invalid_argument("estimate_micro_pressure: polynomial uses more than N variables");

  const double n2 = static_cast<double>(n) * n;
  const double c = h.constant_term().real();
  const NCPolynomial h0 = h.without_constant();

  MicroPressureResult res;
  res.n = n;
  res.N = N;
  res.R = R;

  if (h0.is_zero()) {
    res.value = N * log_ball_volume(n, R) - n2 * c;
    res.se = 0.0;
    res.scaled = res.value / n2 + 0.5 * N * std::log(static_cast<double>(n));
    res.scaled_se = 0.0;
    res.exact = true;
    return res;
  }

  std::vector<std::pair<std::vector<int>, NCPolynomial>> blocks;
  if (split_blocks) {
    blocks = h0.separable_blocks();
  } else {
    std::vector<int> used = h0.vars_used();
    std::vector<int> remap(h0.nvars(), -1);
    for (size_t i = 0; i < used.size(); ++i) remap[used[i]] = static_cast<int>(i);
    blocks.emplace_back(used, h0.relabel(remap, static_cast<int>(used.size())));
  }

  int used_vars = 0;
  double value = 0.0, var = 0.0;
  for (size_t b = 0; b < blocks.size(); ++b) {
    auto part = estimate_micro_pressure_block(blocks[b].second, n, R, sched,
                                              block_seed(seed, static_cast<int>(b)), jobs);
    used_vars += static_cast<int>(blocks[b].first.size());
    value += part.value;
    var += part.se * part.se;
    if (!part.mixing_ok) res.mixing_ok = false;
    res.nodes.insert(res.nodes.end(), part.nodes.begin(), part.nodes.end());
  }
  value += (N - used_vars) * log_ball_volume(n, R);
  value -= n2 * c;

  res.value = value;
  res.se = std::sqrt(var);
  res.scaled = value / n2 + 0.5 * N * std::log(static_cast<double>(n));
  res.scaled_se = res.se / n2;
  return res;
}

DilationPair micro_pressure_dilation_pair(const NCPolynomial& h, int N, int n, double R, double R1,
                                          const Schedule& sched, uint64_t seed, int jobs) {
  DilationPair pair;
  pair.base = estimate_micro_pressure(h, N, n, R, sched, seed, jobs);
  // Scaling every draw by R1/R pushes the ball-R Gibbs ensemble for h onto the
  // ball-R1 ensemble for the dilated potential with identical energies, so the
  // coupled estimate shares the integral term and only the volume anchor moves.
  pair.dilated = pair.base;
  pair.dilated.R = R1;
  const double shift = N * (log_ball_volume(n, R1) - log_ball_volume(n, R));
  pair.dilated.value = pair.base.value + shift;
  const double n2 = static_cast<double>(n) * n;
  pair.dilated.scaled = pair.dilated.value / n2 + 0.5 * N * std::log(static_cast<double>(n));
  return pair;
}

PressureEstimate extrapolate_pressure(const std::vector<PerNRecord>& records) {
  std::vector<int> ns;
  for (const auto& r : records)
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
  if (ns.size() < 3)
    throw std::invalid_argument("extrapolate_pressure: need >= 3 distinct n values");

  bool all_exact = true;
  for (const auto& r : records)
    if (r.se > 0.0) all_exact = false;

  // normal equations for y = c0 + c1 / n^2
  double s00 = 0.0, s01 = 0.0, s11 = 0.0, b0 = 0.0, b1 = 0.0;
  for (const auto& r : records) {
    const double u = 1.0 / (static_cast<double>(r.n) * r.n);
    // exact sequences carry no statistical weight; weight by n^4 so the
    // residual of the 1/n^2 model controls the fit
    const double w = all_exact ? 1.0 / (u * u) : 1.0 / std::max(r.se * r.se, 1e-24);
    s00 += w;
    s01 += w * u;
    s11 += w * u * u;
    b0 += w * r.scaled;
    b1 += w * r.scaled * u;
  }
  const double det = s00 * s11 - s01 * s01;
  if (std::abs(det) < 1e-30 * s00 * s11 || det == 0.0)
    throw std::invalid_argument("extrapolate_pressure: degenerate design matrix");
  PressureEstimate est;
  est.extrapolated = (s11 * b0 - s01 * b1) / det;
  est.c1 = (s00 * b1 - s01 * b0) / det;
  est.extrapolated_se = all_exact ? 0.0 : std::sqrt(s11 / det);
  double wres = 0.0, wsum = 0.0;
  for (const auto& r : records) {
    const double u = 1.0 / (static_cast<double>(r.n) * r.n);
    const double w = all_exact ? 1.0 / (u * u) : 1.0 / std::max(r.se * r.se, 1e-24);
    const double d = r.scaled - (est.extrapolated + est.c1 * u);
    wres += w * d * d;
    wsum += w;
  }
  est.fit_residual = std::sqrt(wres / wsum);
  est.records = records;
  return est;
}

// ---------------------------------------------------------- microstate volume

MicrostateVolumeResult microstate_volume(const MicrostateSpecParams& spec, int n, long samples,
                                         uint64_t seed) {
  const int N = spec.target.nvars;
  const int r = spec.target.degree;
  if (samples < 1) throw std::invalid_argument("microstate_volume: samples must be >= 1");
  std::vector<Word> words = words_up_to(N, r);
  std::vector<double> targets;
  targets.reserve(words.size());
  for (const auto& w : words) targets.push_back(spec.target.value(w));

  std::vector<EigenvalueWalker> walkers;
  std::vector<Rng> haar_rngs;
  for (int i = 0; i < N; ++i) {
    walkers.emplace_back(n, spec.R, derive_seed(seed, 2 * i));
    haar_rngs.emplace_back(derive_seed(seed, 2 * i + 1));
  }

  const bool single_var = (N == 1);
  long hits = 0;
  for (long s = 0; s < samples; ++s) {
    bool hit = true;
    if (single_var) {
      auto& w0 = walkers[0];
      for (int t = 0; t < kEigThin; ++t) w0.sweep();
      const auto& lam = w0.state();
      // word traces of a single matrix are eigenvalue power sums
      for (size_t wi = 0; wi < words.size() && hit; ++wi) {
        const int k = static_cast<int>(words[wi].degree());
        double ps = 0.0;
        for (double l : lam) ps += std::pow(l, k);
        ps /= n;
        if (std::abs(ps - targets[wi]) > spec.eps) hit = false;
      }
    } else {
      std::vector<Matrix> mats;
      for (int i = 0; i < N; ++i) {
        auto& wk = walkers[i];
        for (int t = 0; t < kEigThin; ++t) wk.sweep();
        Matrix u = haar_unitary(n, haar_rngs[i]);
        Eigen::VectorXd d(n);
        for (int j = 0; j < n; ++j) d(j) = wk.state()[j];
        mats.push_back(u * d.asDiagonal() * u.adjoint());
      }
      for (size_t wi = 0; wi < words.size() && hit; ++wi) {
        Matrix prod = mats[words[wi].letters[0]];
        for (size_t li = 1; li < words[wi].letters.size(); ++li)
          prod = prod * mats[words[wi].letters[li]];
        Complex tr = prod.trace() / static_cast<double>(n);
        if (std::abs(tr - Complex(targets[wi], 0.0)) > spec.eps) hit = false;
      }
    }
    if (hit) ++hits;
  }

  MicrostateVolumeResult res;
  res.hits = hits;
  res.samples = samples;
  const double logvol = N * log_ball_volume(n, spec.R);
  if (hits == 0) {
    res.empty = true;
    res.log_volume = -std::numeric_limits<double>::infinity();
    res.upper_bound = logvol + std::log(3.0 / static_cast<double>(samples));
    return res;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  res.log_volume = logvol + std::log(p);
  res.se = std::sqrt((1.0 - p) / static_cast<double>(hits));
  res.upper_bound = res.log_volume + 3.0 * res.se;
  return res;
}

}  // namespace fplab
