#include "fplab/duality.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "fplab/diagnostics.hpp"
#include "fplab/gibbs.hpp"
#include "fplab/taskpool.hpp"

namespace fplab {

// ---------------------------------------------------------------- backends

EquilibriumBackend::EquilibriumBackend(double R, int ambient_nvars, EquilibriumOptions opts)
    : R_(R), N_(ambient_nvars), opts_(opts) {}

PressureBackend::Value EquilibriumBackend::pressure(const NCPolynomial& p) const {
  if (!p.is_selfadjoint())
    throw std::invalid_argument("EquilibriumBackend: candidate is not selfadjoint");
  const std::string key = p.to_text();
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  const double c = p.constant_term().real();
  const NCPolynomial p0 = p.without_constant();
  auto blocks = p0.separable_blocks();
  int used = 0;
  double total = -c;  // pi_R(h + c) = pi_R(h) - c
  for (const auto& [vars, sub] : blocks) {
    if (sub.nvars() > 1)
      throw std::invalid_argument(
          "EquilibriumBackend: polynomial has a genuinely multivariate block; "
          "use the Monte Carlo backend");
    auto eq = solve_equilibrium(PotentialFn::from_poly(sub, R_), opts_);
    if (!eq.converged)
      throw std::runtime_error("EquilibriumBackend: equilibrium solver did not converge");
    total += eq.pressure;
    used += static_cast<int>(vars.size());
  }
  if (N_ > used) {
    auto eq0 = solve_equilibrium(PotentialFn::zero(R_), opts_);
    total += (N_ - used) * eq0.pressure;
  }
  Value v{total, 0.0, true};
  cache_.emplace(key, v);
  return v;
}

MonteCarloBackend::MonteCarloBackend(double R, int ambient_nvars, std::vector<int> ns,
                                     Schedule sched, uint64_t seed, int jobs)
    : R_(R), N_(ambient_nvars), ns_(std::move(ns)), sched_(sched), seed_(seed), jobs_(jobs) {
  if (ns_.empty()) throw std::invalid_argument("MonteCarloBackend: empty n ladder");
}

PressureBackend::Value MonteCarloBackend::pressure(const NCPolynomial& p) const {
  const std::string key = p.to_text();
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  std::vector<PerNRecord> recs;
  bool exact = true;
  for (size_t i = 0; i < ns_.size(); ++i) {
    auto r = estimate_micro_pressure(p, N_, ns_[i], R_, sched_, derive_seed(seed_, 7000 + i),
                                     jobs_);
    recs.push_back({ns_[i], r.scaled, r.scaled_se});
    exact = exact && r.exact;
  }
  Value v;
  if (recs.size() >= 3) {
    auto est = extrapolate_pressure(recs);
    v = {est.extrapolated, est.extrapolated_se, exact};
  } else {
    v = {recs.back().scaled, recs.back().se, exact};
  }
  cache_.emplace(key, v);
  return v;
}

// ---------------------------------------------------------------- eta upper

MomentSpec moment_spec_from_measure(const DiscreteMeasure& mu, int degree) {
  MomentSpec spec(1, degree);
  spec.provenance = "analytic";
  for (int k = 1; k <= degree; ++k) spec.set(Word(std::vector<int>(k, 0)), moment(mu, k));
  return spec;
}

EtaEstimate eta_upper(const MomentSpec& mu, const std::vector<NCPolynomial>& family, double R,
                      const PressureBackend& backend) {
  if (family.empty()) throw std::invalid_argument("eta_upper: family must be nonempty");
  EtaEstimate est;
  for (const auto& p : family) {
    if (!p.is_selfadjoint())
      throw std::invalid_argument("eta_upper: family contains a non-selfadjoint polynomial");
    EtaCandidate c;
    c.p = p;
    c.mu_p = mu.pairing(p);
    auto pv = backend.pressure(p);
    c.pressure = pv.value;
    c.pressure_se = pv.se;
    c.total = c.mu_p + c.pressure;
    est.candidates.push_back(std::move(c));
  }
  est.argmin = 0;
  for (size_t i = 1; i < est.candidates.size(); ++i)
    if (est.candidates[i].total < est.candidates[est.argmin].total) est.argmin = i;
  est.minimum = est.candidates[est.argmin].total;
  est.minimum_se = est.candidates[est.argmin].pressure_se;
  (void)R;
  return est;
}

EtaEstimate eta_upper(const DiscreteMeasure& mu, const std::vector<NCPolynomial>& family, double R,
                      const PressureBackend& backend) {
  int deg = 0;
  for (const auto& p : family) deg = std::max<int>(deg, static_cast<int>(p.degree()));
  return eta_upper(moment_spec_from_measure(mu, deg), family, R, backend);
}

std::vector<NCPolynomial> default_eta_family(const MomentSpec& mu, double R,
                                             const PressureBackend& backend, int max_degree,
                                             int starts, int rounds) {
  const int N = mu.nvars;
  // symmetrized monomial basis: (w + w~)/2 over words up to max_degree
  std::vector<NCPolynomial> basis;
  for (const auto& w : words_up_to(N, max_degree)) {
    Word rev = w.reversed();
    if (rev < w) continue;
    NCPolynomial b(N);
    if (w == rev) {
      b.add_term(w, Complex(1.0, 0.0));
    } else {
      b.add_term(w, Complex(0.5, 0.0));
      b.add_term(rev, Complex(0.5, 0.0));
    }
    basis.push_back(b);
  }
  auto assemble = [&](const std::vector<double>& coef) {
    NCPolynomial p(N);
    for (size_t i = 0; i < basis.size(); ++i)
      if (coef[i] != 0.0) p = p + basis[i] * Complex(coef[i], 0.0);
    return p;
  };
  auto objective = [&](const std::vector<double>& coef) {
    NCPolynomial p = assemble(coef);
    return mu.pairing(p) + backend.pressure(p).value;
  };

  std::vector<NCPolynomial> family = {NCPolynomial(N)};  // always include 0
  Rng rng(20240517);
  for (int s = 0; s < starts; ++s) {
    std::vector<double> coef(basis.size(), 0.0);
    if (s > 0)
      for (auto& c : coef) c = 0.25 * rng.normal();
    double best = objective(coef);
    const double grid[] = {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
    for (int round = 0; round < rounds; ++round) {
      for (size_t i = 0; i < basis.size(); ++i) {
        double best_ci = coef[i];
        for (double delta : grid) {
          std::vector<double> trial = coef;
          trial[i] += delta;
          double v = objective(trial);
          if (v < best) {
            best = v;
            best_ci = trial[i];
          }
        }
        coef[i] = best_ci;
      }
    }
    family.push_back(assemble(coef));
  }
  (void)R;
  return family;
}

// ------------------------------------------------------------- certificates

std::string violation_kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::Positivity: return "positivity";
    case ViolationKind::Boundedness: return "boundedness";
    case ViolationKind::Traciality: return "traciality";
    case ViolationKind::Normalization: return "normalization";
  }
  return "unknown";
}

namespace {

Certificate build_certificate(ViolationKind kind, NCPolynomial direction, double rate,
                              double pi0, const CertificateBudget& budget, std::string detail) {
  Certificate cert;
  cert.kind = kind;
  cert.direction = std::move(direction);
  cert.decrease_rate = rate;
  cert.detail = std::move(detail);
  double alpha = 1.0;
  for (int k = 0; k < budget.max_doublings; ++k) {
    cert.alphas.push_back(alpha);
    cert.objectives.push_back(pi0 - alpha * rate);
    if (alpha * rate > budget.floor_drop) break;
    alpha *= 2.0;
  }
  return cert;
}

}  // namespace

std::optional<Certificate> divergence_certificate(const MomentSpec& mu, double R,
                                                  const CertificateBudget& budget) {
  const double pi0 = log_ball_volume_limit(R);
  const int r = mu.degree;
  const int N = mu.nvars;

  // normalization: pi_R(alpha 1) = -alpha + pi_R(0)
  {
    const double d = mu.value(Word::one()) - 1.0;
    if (std::abs(d) > budget.tol) {
      NCPolynomial dir = NCPolynomial::constant(Complex(d > 0 ? -1.0 : 1.0, 0.0), N);
      return build_certificate(ViolationKind::Normalization, dir, std::abs(d), pi0, budget,
                               "value(1) != 1");
    }
  }

  // boundedness: some word value escapes the coefficient bound R^{|w|}
  for (const auto& [w, v] : mu.values) {
    if (w.is_one()) continue;
    const double bound = std::pow(R, static_cast<double>(w.degree()));
    if (std::abs(v) > bound * (1.0 + budget.tol)) {
      // p = -sign(v) (w + w~): mu(alpha p) + ||alpha p||_R drifts to -infinity
      NCPolynomial dir(N);
      const double s = v > 0 ? -1.0 : 1.0;
      dir.add_term(w, Complex(s, 0.0));
      dir.add_term(w.reversed(), Complex(s, 0.0));
      return build_certificate(ViolationKind::Boundedness, dir, 2.0 * (std::abs(v) - bound), pi0,
                               budget, "|value(" + w.to_string() + ")| > R^deg");
    }
  }

  // traciality: mu(uv) != mu(vu); pi_R of i alpha (p1 p2 - p2 p1) equals pi_R(0)
  {
    std::vector<Word> words = words_up_to(N, r);
    for (const auto& u : words) {
      for (const auto& v : words) {
        if (u.degree() + v.degree() > static_cast<size_t>(r)) continue;
        Word uv = u.concat(v), vu = v.concat(u);
        if (!(uv < vu)) continue;  // one orientation per pair
        if (!mu.has(uv) || !mu.has(vu)) continue;
        const double d = mu.value(uv) - mu.value(vu);
        if (std::abs(d) > budget.tol) {
          NCPolynomial dir(N);
          const Complex is(0.0, d > 0 ? -1.0 : 1.0);
          dir.add_term(uv, is);
          dir.add_term(vu, -is);
          return build_certificate(ViolationKind::Traciality, dir, std::abs(d), pi0, budget,
                                   "value(" + uv.to_string() + ") != value(" + vu.to_string() +
                                       ")");
        }
      }
    }
  }

  // positivity: Gram matrix G[u][v] = mu(u* v) over words of degree <= r/2
  {
    std::vector<Word> basis;
    for (const auto& w : words_up_to(N, r / 2)) basis.push_back(w);
    basis.insert(basis.begin(), Word::one());
    const int m = static_cast<int>(basis.size());
    Eigen::MatrixXd g(m, m);
    double scale = 1.0;
    bool complete = true;
    for (int i = 0; i < m && complete; ++i)
      for (int j = 0; j < m; ++j) {
        Word prod = basis[i].reversed().concat(basis[j]);
        if (!mu.has(prod)) {
          complete = false;
          break;
        }
        g(i, j) = mu.value(prod);
        scale = std::max(scale, std::abs(g(i, j)));
      }
    if (complete) {
      Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
      const double lmin = es.eigenvalues()(0);
      if (lmin < -budget.tol * scale) {
        Eigen::VectorXd vec = es.eigenvectors().col(0);
        NCPolynomial p(N);
        for (int i = 0; i < m; ++i)
          if (std::abs(vec(i)) > 1e-14) p.add_term(basis[i], Complex(vec(i), 0.0));
        NCPolynomial dir = p.adjoint() * p;  // mu(alpha p* p) = alpha lmin < 0
        return build_certificate(ViolationKind::Positivity, dir, -lmin, pi0, budget,
                                 "Gram matrix has negative eigenvalue");
      }
    }
  }

  return std::nullopt;
}

// ---------------------------------------------------------------- penalty

TensorPolynomial penalty_polynomial(const MomentSpec& target, int r, double eps, double beta) {
  if (eps <= 0.0) throw std::invalid_argument("penalty_polynomial: eps must be positive");
  if (beta < 0.0) throw std::invalid_argument("penalty_polynomial: beta must be >= 0");
  const int N = target.nvars;
  TensorPolynomial q(N);
  const double f = beta / (eps * eps);
  const Word one = Word::one();
  for (const auto& w : words_up_to(N, r)) {
    const double t = target.value(w);  // throws on missing words
    const Word rev = w.reversed();
    q.add_term(w, rev, Complex(f, 0.0));
    q.add_term(w, one, Complex(-f * t, 0.0));
    q.add_term(one, rev, Complex(-f * t, 0.0));
    q.add_term(one, one, Complex(f * t * t, 0.0));
  }
  return q;
}

ChiPenaltyResult estimate_chi_penalty(const MomentSpec& target, double R,
                                      const ChiPenaltyParams& params, uint64_t seed) {
  std::vector<double> betas = params.betas;
  std::sort(betas.begin(), betas.end());
  if (betas.empty()) throw std::invalid_argument("estimate_chi_penalty: no beta values");
  const int N = target.nvars;
  const double beta_max = betas.back();

  ChiPenaltyResult result;
  result.points.resize(betas.size());
  for (size_t j = 0; j < betas.size(); ++j) result.points[j].beta = betas[j];

  // per-n cumulative integral of <e>_s ds up to each beta split
  std::vector<std::vector<double>> integral(params.ns.size(),
                                            std::vector<double>(betas.size(), 0.0));
  std::vector<std::vector<double>> variance = integral;

  for (size_t ni = 0; ni < params.ns.size(); ++ni) {
    const int n = params.ns[ni];
    if (beta_max == 0.0) continue;

    // geometric panel grid from s0 to beta_max, split exactly at each beta
    const double s0 = params.s0_scale / (static_cast<double>(n) * n);
    std::vector<double> edges = {0.0, s0};
    const double ratio = std::pow(10.0, 1.0 / params.panels_per_decade);
    double s = s0;
    while (s * ratio < beta_max) {
      s *= ratio;
      edges.push_back(s);
    }
    for (double b : betas)
      if (b > 0.0) edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                edges.end());
    while (!edges.empty() && edges.back() > beta_max + 1e-15) edges.pop_back();

    std::vector<Panel> panels;
    for (size_t e = 0; e + 1 < edges.size(); ++e)
      panels.push_back({edges[e], edges[e + 1], params.nodes_per_panel});
    QuadRule rule = composite_rule(panels);

    PenaltyEnergy model(target, params.r, params.eps);
    Schedule sched;
    sched.chains = params.chains;
    sched.warmup_sweeps = params.warmup_sweeps;
    sched.node_warmup = params.node_warmup;
    sched.sample_sweeps = params.sample_sweeps;
    sched.thin = params.thin;
    auto nodes = run_annealed_ti(model, n, R, rule, sched,
                                 derive_seed(seed, 100000 * (ni + 1)), params.jobs);

    for (const auto& node : nodes) {
      double mean = 0.0, se2 = 0.0;
      for (const auto& series : node.chain_series) {
        mean += mean_of(series);
        const double se = mcmc_stderr(series);
        se2 += se * se;
      }
      mean /= params.chains;
      se2 /= params.chains * params.chains;
      if (split_rhat(node.chain_series) > 1.1) result.mixing_ok = false;
      // cumulative: node contributes to every beta at or beyond its position
      for (size_t j = 0; j < betas.size(); ++j) {
        if (node.beta <= betas[j] + 1e-15) {
          integral[ni][j] += node.weight * mean;
          variance[ni][j] += node.weight * node.weight * se2;
        }
      }
    }
  }

  const double limit_const = std::pow(R * std::sqrt(M_PI / 2.0) * std::exp(0.75), N);
  for (size_t j = 0; j < betas.size(); ++j) {
    std::vector<PerNRecord> recs;
    for (size_t ni = 0; ni < params.ns.size(); ++ni) {
      const int n = params.ns[ni];
      const double n2 = static_cast<double>(n) * n;
      const double scaled =
          N * log_ball_volume(n, R) / n2 + 0.5 * N * std::log(static_cast<double>(n)) -
          integral[ni][j];
      recs.push_back({n, scaled, std::sqrt(variance[ni][j])});
    }
    result.points[j].per_n = recs;
    if (betas[j] == 0.0) {
      // zero penalty: chi-hat is the scaled log volume, extrapolated exactly
      for (auto& r : recs) r.se = 0.0;
    }
    if (recs.size() >= 3) {
      auto est = extrapolate_pressure(recs);
      result.points[j].chi_hat = est.extrapolated;
      result.points[j].se = est.extrapolated_se;
    } else {
      result.points[j].chi_hat = recs.back().scaled;
      result.points[j].se = recs.back().se;
    }
    result.points[j].slack =
        std::log1p(std::exp(-result.points[j].chi_hat - betas[j]) * limit_const);
  }
  return result;
}

// ---------------------------------------------------------------- gaps

DualityGapReport duality_gap(const NCPolynomial& h0,
                             const std::vector<std::pair<std::string, MomentSpec>>& candidates,
                             double R, const PressureBackend& backend,
                             const std::vector<NCPolynomial>& extra_family) {
  std::vector<NCPolynomial> family;
  family.push_back(NCPolynomial(std::max(1, h0.nvars())));  // zero polynomial
  family.push_back(h0);
  family.insert(family.end(), extra_family.begin(), extra_family.end());

  DualityGapReport report;
  auto pv = backend.pressure(h0);
  report.pressure_h0 = pv.value;
  report.pressure_se = pv.se;

  for (const auto& [label, mu] : candidates) {
    auto est = eta_upper(mu, family, R, backend);
    GapCandidate g;
    g.label = label;
    g.mu_h0 = mu.pairing(h0);
    g.eta = est.minimum;
    g.eta_se = est.minimum_se;
    g.gap = report.pressure_h0 + g.mu_h0 - est.minimum;
    g.gap_se = std::sqrt(pv.se * pv.se + est.minimum_se * est.minimum_se);
    report.candidates.push_back(std::move(g));
  }
  report.best = 0;
  for (size_t i = 1; i < report.candidates.size(); ++i)
    if (report.candidates[i].gap < report.candidates[report.best].gap) report.best = i;
  return report;
}

// ------------------------------------------------------------- free moments

namespace {

double free_sc_moment_rec(const std::vector<int>& letters, size_t lo, size_t hi,
                          const std::vector<double>& variances,
                          std::map<std::pair<size_t, size_t>, double>& memo) {
  const size_t len = hi - lo;
  if (len == 0) return 1.0;
  if (len % 2 == 1) return 0.0;
  auto key = std::make_pair(lo, hi);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  double total = 0.0;
  // pair position lo with j; the enclosed and trailing segments pair within
  for (size_t j = lo + 1; j < hi; j += 2) {
    if (letters[j] != letters[lo]) continue;
    total += variances[letters[lo]] *
             free_sc_moment_rec(letters, lo + 1, j, variances, memo) *
             free_sc_moment_rec(letters, j + 1, hi, variances, memo);
  }
  memo.emplace(key, total);
  return total;
}

}  // namespace

double free_semicircular_moment(const Word& w, const std::vector<double>& variances) {
  for (int l : w.letters)
    if (l >= static_cast<int>(variances.size()))
      throw std::invalid_argument("free_semicircular_moment: missing variance");
  std::map<std::pair<size_t, size_t>, double> memo;
  return free_sc_moment_rec(w.letters, 0, w.letters.size(), variances, memo);
}

MomentSpec free_semicircular_spec(int nvars, int degree, const std::vector<double>& variances) {
  MomentSpec spec(nvars, degree);
  spec.provenance = "analytic";
  for (const auto& w : words_up_to(nvars, degree))
    spec.set(w, free_semicircular_moment(w, variances));
  return spec;
}

}  // namespace fplab
