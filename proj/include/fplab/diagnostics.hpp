#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace fplab {

inline double mean_of(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance_of(const std::vector<double>& x) {
  const size_t n = x.size();
  if (n < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(n - 1);
}

// Integrated autocorrelation time by Geyer's initial positive sequence.
inline double autocorr_time(const std::vector<double>& x) {
  const size_t n = x.size();
  if (n < 8) return 1.0;
  const double m = mean_of(x);
  const double var = variance_of(x);
  if (var <= 0.0) return 1.0;
  double tau = 1.0;
  double prev_pair = 0.0;
  for (size_t lag = 1; lag + 1 < n; lag += 2) {
    double g0 = 0.0, g1 = 0.0;
    for (size_t i = 0; i + lag < n; ++i) g0 += (x[i] - m) * (x[i + lag] - m);
    for (size_t i = 0; i + lag + 1 < n; ++i) g1 += (x[i] - m) * (x[i + lag + 1] - m);
    g0 /= static_cast<double>(n) * var;
    g1 /= static_cast<double>(n) * var;
    double pair = g0 + g1;
    if (pair < 0.0) break;
    if (prev_pair > 0.0 && pair > prev_pair) pair = prev_pair;  // monotone envelope
    tau += 2.0 * pair;
    prev_pair = pair;
    if (lag > n / 4) break;
  }
  return std::max(1.0, tau);
}

inline double effective_sample_size(const std::vector<double>& x) {
  return static_cast<double>(x.size()) / autocorr_time(x);
}

// Standard error of the mean accounting for autocorrelation.
inline double mcmc_stderr(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double ess = effective_sample_size(x);
  return std::sqrt(variance_of(x) / std::max(1.0, ess));
}

// Acklam's rational approximation of the standard normal quantile.
inline double inverse_normal_cdf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

// Rank-normalized split-Rhat over one or more chains of equal length.
inline double split_rhat(const std::vector<std::vector<double>>& chains) {
  // split every chain in half
  std::vector<std::vector<double>> seqs;
  for (const auto& c : chains) {
    const size_t half = c.size() / 2;
    if (half < 4) continue;
    seqs.emplace_back(c.begin(), c.begin() + half);
    seqs.emplace_back(c.begin() + half, c.begin() + 2 * half);
  }
  if (seqs.size() < 2) return 1.0;
  const size_t L = seqs[0].size();
  for (auto& s : seqs) s.resize(L);

  // rank-normalize pooled values (average ranks for ties)
  struct Tagged {
    double v;
    size_t seq, pos;
  };
  std::vector<Tagged> all;
  for (size_t i = 0; i < seqs.size(); ++i)
    for (size_t j = 0; j < L; ++j) all.push_back({seqs[i][j], i, j});
  std::stable_sort(all.begin(), all.end(), [](const Tagged& x, const Tagged& y) { return x.v < y.v; });
  const double S = static_cast<double>(all.size());
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j + 1 < all.size() && all[j + 1].v == all[i].v) ++j;
    double rank = 0.5 * (i + j) + 1.0;
    double z = inverse_normal_cdf((rank - 0.375) / (S + 0.25));
    for (size_t k = i; k <= j; ++k) seqs[all[k].seq][all[k].pos] = z;
    i = j + 1;
  }

  const double M = static_cast<double>(seqs.size());
  const double Ld = static_cast<double>(L);
  std::vector<double> means(seqs.size());
  double W = 0.0;
  for (size_t s = 0; s < seqs.size(); ++s) {
    means[s] = mean_of(seqs[s]);
    W += variance_of(seqs[s]);
  }
  W /= M;
  const double grand = mean_of(means);
  double B = 0.0;
  for (double m : means) B += (m - grand) * (m - grand);
  B *= Ld / (M - 1.0);
  if (W <= 0.0) return 1.0;
  return std::sqrt(((Ld - 1.0) / Ld * W + B / Ld) / W);
}

}  // namespace fplab
