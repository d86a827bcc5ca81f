#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fplab/duality.hpp"
#include "fplab/gibbs.hpp"
#include "testutil.hpp"

using namespace fplab;

namespace {

constexpr double kChiArcsine2 = 1.6689385332046727;
constexpr double kChiSemicircle2 = 1.4189385332046727;

NCPolynomial half_square(int var = 0, int nvars = 1) {
  NCPolynomial p(nvars);
  p.add_term(Word({var, var}), Complex(0.5, 0.0));
  return p;
}

EquilibriumOptions eopts(int grid = 700) {
  EquilibriumOptions o;
  o.grid = grid;
  return o;
}

// brute-force count of non-crossing pairings consistent with a letter word
long ncp_word_count(const std::vector<int>& letters) {
  const int n = static_cast<int>(letters.size());
  if (n % 2) return 0;
  std::vector<int> paired(n, -1);
  std::function<long()> rec = [&]() -> long {
    int first = -1;
    for (int i = 0; i < n; ++i)
      if (paired[i] < 0) {
        first = i;
        break;
      }
    if (first < 0) return 1;
    long total = 0;
    for (int j = first + 1; j < n; ++j) {
      if (paired[j] >= 0 || letters[j] != letters[first]) continue;
      bool crossing = false;
      for (int a = 0; a < n; ++a) {
        if (paired[a] < 0 || a >= paired[a]) continue;
        const bool a_in = (a > first && a < j);
        const bool b_in = (paired[a] > first && paired[a] < j);
        if (a_in != b_in) crossing = true;
      }
      if (!crossing) {
        paired[first] = j;
        paired[j] = first;
        total += rec();
        paired[first] = -1;
        paired[j] = -1;
      }
    }
    return total;
  };
  return rec();
}

}  // namespace

TEST_CASE("free semicircular moments agree with non-crossing pairing counts") {
  // single variable, variance 1: Catalan numbers
  for (int k = 1; k <= 4; ++k) {
    std::vector<int> word(2 * k, 0);
    CHECK(free_semicircular_moment(Word(word), {1.0}) ==
          doctest::Approx(static_cast<double>(ncp_word_count(word))).epsilon(1e-12));
  }
  // mixed words of two free variables
  for (const auto& letters : std::vector<std::vector<int>>{
           {0, 1, 0, 1}, {0, 0, 1, 1}, {0, 1, 1, 0}, {0, 0, 1, 1, 0, 0}, {0, 1, 0, 1, 0, 1}}) {
    CHECK(free_semicircular_moment(Word(letters), {1.0, 1.0}) ==
          doctest::Approx(static_cast<double>(ncp_word_count(letters))).epsilon(1e-12));
  }
  // odd length vanishes; variance scales each pair
  CHECK(free_semicircular_moment(Word({0, 0, 0}), {1.0}) == 0.0);
  CHECK(free_semicircular_moment(Word({0, 0}), {0.5}) == doctest::Approx(0.5));
  CHECK(free_semicircular_moment(Word({0, 0, 0, 0}), {0.5}) == doctest::Approx(0.5));
}

TEST_CASE("eta upper bounds with the exact single-variable backend") {
  EquilibriumBackend backend(3.0, 1, eopts());
  auto sc = make_measure(DensityKind::Semicircle, {0.0, 2.0}, 700, 3.0);

  auto est = eta_upper(sc, {half_square()}, 3.0, backend);
  CHECK(est.upper_bound);
  CHECK(est.minimum == doctest::Approx(kChiSemicircle2).epsilon(2e-3));
  // the true infimum equals chi: a finite family can only sit above it
  CHECK(est.minimum >= chi(sc) - 1e-4);

  EquilibriumBackend b2(2.0, 1, eopts());
  auto ars = make_measure(DensityKind::Arcsine, {2.0}, 700);
  auto est2 = eta_upper(ars, {NCPolynomial(1)}, 2.0, b2);
  CHECK(est2.minimum == doctest::Approx(kChiArcsine2).epsilon(2e-3));

  // enlarging the family never increases the estimate
  auto est3 = eta_upper(moment_spec_from_measure(sc, 4),
                        {NCPolynomial(1), half_square()}, 3.0, backend);
  CHECK(est3.minimum <= est.minimum + 1e-12);
  CHECK(est3.argmin == 1);

  // family containing a non-selfadjoint polynomial is rejected
  NCPolynomial bad(1);
  bad.add_term(Word({0, 0}), Complex(0.0, 1.0));
  CHECK_THROWS_AS(eta_upper(sc, {bad}, 3.0, backend), std::invalid_argument);
  CHECK_THROWS_AS(eta_upper(sc, {}, 3.0, backend), std::invalid_argument);
}

TEST_CASE("eta is concave under candidate mixing with a fixed family") {
  EquilibriumBackend backend(3.0, 1, eopts(500));
  auto sc = make_measure(DensityKind::Semicircle, {0.0, 2.0}, 500, 3.0);
  auto ars = make_measure(DensityKind::Arcsine, {3.0}, 500);
  std::vector<NCPolynomial> family = {NCPolynomial(1), half_square()};
  auto mix = mix_measures(sc, ars, 0.5);
  auto em = eta_upper(mix, family, 3.0, backend);
  auto e1 = eta_upper(sc, family, 3.0, backend);
  auto e2 = eta_upper(ars, family, 3.0, backend);
  CHECK(em.minimum >= 0.5 * (e1.minimum + e2.minimum) - 1e-12);  // min of affine maps
}

TEST_CASE("free pair of standard semicirculars: exact additivity benchmark") {
  // eta_R of two free standard semicirculars with the family {t1^2/2 + t2^2/2}
  // equals chi(a1) + chi(a2) = 2 * 1.4189385
  MomentSpec mu = free_semicircular_spec(2, 4, {1.0, 1.0});
  NCPolynomial p = half_square(0, 2) + half_square(1, 2);
  EquilibriumBackend backend(3.0, 2, eopts());
  auto est = eta_upper(mu, {p}, 3.0, backend);
  CHECK(est.minimum == doctest::Approx(2.0 * kChiSemicircle2).epsilon(2e-3));
}

TEST_CASE("divergence certificates: construction families") {
  CertificateBudget budget;

  // positivity: value(X1^2) = -1
  MomentSpec bad_pos(1, 2);
  bad_pos.set(Word({0}), 0.0);
  bad_pos.set(Word({0, 0}), -1.0);
  auto c1 = divergence_certificate(bad_pos, 2.0, budget);
  REQUIRE(c1.has_value());
  CHECK(c1->kind == ViolationKind::Positivity);
  CHECK(c1->objectives.size() >= 2);
  for (size_t i = 1; i < c1->objectives.size(); ++i)
    CHECK(c1->objectives[i] < c1->objectives[i - 1]);  // strictly decreasing
  CHECK(c1->objectives.back() < log_ball_volume_limit(2.0) - budget.floor_drop);

  // normalization: value(1) = 2
  MomentSpec bad_norm(1, 2);
  bad_norm.values[Word::one()] = 2.0;
  bad_norm.set(Word({0}), 0.0);
  bad_norm.set(Word({0, 0}), 1.0);
  auto c2 = divergence_certificate(bad_norm, 2.0, budget);
  REQUIRE(c2.has_value());
  CHECK(c2->kind == ViolationKind::Normalization);

  // traciality: value(X1X2) != value(X2X1)
  MomentSpec bad_tr(2, 2);
  bad_tr.set(Word({0}), 0.0);
  bad_tr.set(Word({1}), 0.0);
  bad_tr.set(Word({0, 0}), 1.0);
  bad_tr.set(Word({1, 1}), 1.0);
  bad_tr.set(Word({0, 1}), 1.0);
  bad_tr.set(Word({1, 0}), 0.0);
  auto c3 = divergence_certificate(bad_tr, 2.0, budget);
  REQUIRE(c3.has_value());
  CHECK(c3->kind == ViolationKind::Traciality);
  CHECK(c3->direction.is_selfadjoint());

  // boundedness: |value(w)| > R^{|w|}
  MomentSpec bad_bound(1, 2);
  bad_bound.set(Word({0}), 0.0);
  bad_bound.set(Word({0, 0}), 5.0);  // R = 2, bound is 4
  auto c4 = divergence_certificate(bad_bound, 2.0, budget);
  REQUIRE(c4.has_value());
  CHECK(c4->kind == ViolationKind::Boundedness);
}

TEST_CASE("no certificate on genuinely tracial data") {
  // analytic free-semicircular moments
  auto spec = free_semicircular_spec(2, 4, {1.0, 1.0});
  CHECK_FALSE(divergence_certificate(spec, 3.0).has_value());

  // chain-derived moments
  NCPolynomial h(2);
  h.add_term(Word({0, 0}), Complex(0.5, 0.0));
  h.add_term(Word({1, 1}), Complex(0.5, 0.0));
  ChainConfig cfg;
  cfg.warmup_sweeps = 300;
  cfg.sample_sweeps = 1500;
  cfg.thin = 3;
  cfg.record_states = 120;
  auto chain = run_chain(h, 2, 4, 1.5, cfg, 404);
  auto spec2 = estimate_state(chain, 4);
  CHECK_FALSE(divergence_certificate(spec2, 1.5).has_value());
}

TEST_CASE("penalty polynomial evaluates to the weighted squared moment mismatch") {
  MomentSpec target = free_semicircular_spec(1, 2, {1.0});
  const double eps = 0.25, beta = 10.0;
  TensorPolynomial q = penalty_polynomial(target, 2, eps, beta);
  CHECK(q.is_selfadjoint());

  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    MatrixTuple tup = testutil::random_tuple(1, 4, 2.0, rng);
    const double direct = q.tensor_trace_eval(tup).real();
    double expected = 0.0;
    for (const auto& w : words_up_to(1, 2)) {
      const Complex tr = word_trace(w, tup);
      expected += std::norm(tr - Complex(target.value(w), 0.0));
    }
    expected *= beta / (eps * eps);
    CHECK(direct == doctest::Approx(expected).epsilon(1e-9));
    CHECK(direct >= -1e-12);  // sum-of-squares form
  }

  // tuples outside Gamma consume the full penalty: (tr x tr)(q) >= beta
  std::vector<Matrix> big = {2.0 * Matrix::Identity(4, 4)};
  MatrixTuple tbig(big, 2.0);
  CHECK(q.tensor_trace_eval(tbig).real() >= beta);

  MomentSpec sparse(1, 2);  // missing the degree-2 word
  sparse.set(Word({0}), 0.0);
  CHECK_THROWS_AS(penalty_polynomial(sparse, 2, eps, beta), std::invalid_argument);
}

TEST_CASE("chi penalty estimator: beta = 0 is the scaled volume, monotone in beta") {
  MomentSpec target = free_semicircular_spec(1, 2, {1.0});
  ChiPenaltyParams params;
  params.betas = {0.0, 5.0, 10.0};
  params.ns = {6};
  params.chains = 2;
  params.warmup_sweeps = 300;
  params.node_warmup = 100;
  params.sample_sweeps = 400;
  params.thin = 2;
  auto res = estimate_chi_penalty(target, 3.0, params, 1001);
  REQUIRE(res.points.size() == 3);
  const double n2 = 36.0;
  const double scaled_vol = log_ball_volume(6, 3.0) / n2 + 0.5 * std::log(6.0);
  CHECK(res.points[0].beta == 0.0);
  CHECK(res.points[0].chi_hat == doctest::Approx(scaled_vol).epsilon(1e-12));
  // shared panels + nonnegative integrand: exactly nonincreasing in beta
  CHECK(res.points[1].chi_hat <= res.points[0].chi_hat);
  CHECK(res.points[2].chi_hat <= res.points[1].chi_hat);
  CHECK(res.points[2].slack >= 0.0);
}

TEST_CASE("duality gaps for the classical equilibrium pairs") {
  EquilibriumOptions opts = eopts(800);

  // (h = 0, arcsine): exact zero gap by the variational principle
  {
    EquilibriumBackend backend(2.0, 1, opts);
    auto ars = moment_spec_from_measure(make_measure(DensityKind::Arcsine, {2.0}, 800), 8);
    auto rep = duality_gap(NCPolynomial(1), {{"arcsine(2)", ars}}, 2.0, backend,
                           {half_square()});
    CHECK(rep.candidates[0].gap == 0.0);  // argmin at h0 cancels bitwise
  }

  // (h = t^2/2, semicircle): exact zero gap
  {
    EquilibriumBackend backend(3.0, 1, opts);
    auto sc = moment_spec_from_measure(
        make_measure(DensityKind::Semicircle, {0.0, 2.0}, 800, 3.0), 8);
    auto rep = duality_gap(half_square(), {{"semicircle(0,2)", sc}}, 3.0, backend, {});
    CHECK(rep.candidates[0].gap == 0.0);
  }

  // mismatched pair: gap = chi(arcsine) - chi(semicircle) = 0.25
  {
    EquilibriumBackend backend(2.0, 1, opts);
    auto sc = moment_spec_from_measure(
        make_measure(DensityKind::Semicircle, {0.0, 2.0}, 800, 2.0), 8);
    auto rep = duality_gap(NCPolynomial(1), {{"semicircle(0,2)", sc}}, 2.0, backend,
                           {half_square()});
    CHECK(rep.candidates[0].gap == doctest::Approx(0.25).epsilon(4e-3));
    CHECK(rep.candidates[0].gap >= -1e-6);  // eta-hat is an upper bound
  }
}

TEST_CASE("default eta family includes zero and improves on it") {
  EquilibriumBackend backend(3.0, 1, eopts(400));
  auto sc = make_measure(DensityKind::Semicircle, {0.0, 2.0}, 400, 3.0);
  MomentSpec mu = moment_spec_from_measure(sc, 4);
  auto family = default_eta_family(mu, 3.0, backend, 4, 1, 1);
  REQUIRE(family.size() >= 2);
  CHECK(family[0].is_zero());
  auto est = eta_upper(mu, family, 3.0, backend);
  auto zero_only = eta_upper(mu, {NCPolynomial(1)}, 3.0, backend);
  CHECK(est.minimum <= zero_only.minimum + 1e-12);
  CHECK(est.minimum >= chi(sc) - 1e-3);  // still an upper bound of chi
}
