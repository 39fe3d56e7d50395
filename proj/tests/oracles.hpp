// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors
//
// Test-only reference implementations, independent of the library code paths
// they check: plain-series / asymptotic Bessel in long double, the textbook
// Rician density, the Marcum Q1 series, and a fixed-grid composite Simpson
// rule.

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracles {

// I0 by its power series, long double. Safe for x up to ~700.
inline long double bessel_i0_series(long double x) {
  const long double q = 0.25L * x * x;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int m = 1; m < 400; ++m) {
    term *= q / (static_cast<long double>(m) * static_cast<long double>(m));
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  return sum;
}

// ln I0 by the asymptotic expansion, long double, for large x.
inline long double log_bessel_i0_asymptotic(long double x) {
  long double term = 1.0L;
  long double sum = 1.0L;
  long double prev = 2.0L;
  for (int k = 1; k <= 60; ++k) {
    const long double odd = 2.0L * k - 1.0L;
    term *= odd * odd / (8.0L * k * x);
    if (term >= prev) break;
    sum += term;
    if (term < sum * 1e-21L) break;
    prev = term;
  }
  return x - 0.5L * std::log(2.0L * std::numbers::pi_v<long double> * x) + std::log(sum);
}

inline long double log_bessel_i0(long double x) {
  if (x < 30.0L) return std::log(bessel_i0_series(x));
  return log_bessel_i0_asymptotic(x);
}

// Textbook Rician density (r/sigma^2) exp(-(r^2+nu^2)/(2 sigma^2)) I0(r nu/sigma^2),
// evaluated in the log domain with the long double Bessel above.
inline double textbook_rician_pdf(double r, double nu, double sigma) {
  if (r <= 0.0) return 0.0;
  const long double rl = r, nul = nu, sl = sigma;
  const long double log_pdf = std::log(rl) - 2.0L * std::log(sl) -
                              (rl * rl + nul * nul) / (2.0L * sl * sl) +
                              log_bessel_i0(rl * nul / (sl * sl));
  return static_cast<double>(std::exp(log_pdf));
}

// Rayleigh density with scale sigma.
inline double rayleigh_pdf(double r, double sigma) {
  if (r <= 0.0) return 0.0;
  return r / (sigma * sigma) * std::exp(-r * r / (2.0 * sigma * sigma));
}

// Marcum Q1(a, b) as the Poisson mixture of Erlang tails:
//   Q1(a,b) = sum_k e^{-a^2/2} (a^2/2)^k / k! * e^{-b^2/2} sum_{j<=k} (b^2/2)^j / j!
// The Rice CDF is 1 - Q1(nu/sigma, r/sigma).
inline double marcum_q1(double a, double b) {
  const long double ha = 0.5L * static_cast<long double>(a) * a;
  const long double hb = 0.5L * static_cast<long double>(b) * b;
  long double pois = std::exp(-ha);   // Poisson(ha) pmf at k
  long double erl_term = std::exp(-hb);  // (hb)^k e^{-hb} / k!
  long double erl_sum = erl_term;     // e^{-hb} sum_{j<=k} hb^j / j!
  long double total = pois * erl_sum;
  long double pois_cum = pois;
  for (int k = 1; k < 3000; ++k) {
    pois *= ha / k;
    erl_term *= hb / k;
    erl_sum += erl_term;
    total += pois * erl_sum;
    pois_cum += pois;
    if (1.0L - pois_cum < 1e-20L) break;
  }
  return static_cast<double>(total);
}

inline double rice_cdf_marcum(double r, double nu, double sigma) {
  if (r <= 0.0) return 0.0;
  return 1.0 - marcum_q1(nu / sigma, r / sigma);
}

// Fixed-grid composite Simpson in long double; panels must be even.
template <class F>
double simpson_fixed(F&& f, double a, double b, int panels = 20000) {
  if (panels % 2 != 0) ++panels;
  const long double h = (static_cast<long double>(b) - a) / panels;
  long double sum = f(a) + f(b);
  for (int i = 1; i < panels; ++i) {
    const double x = static_cast<double>(a + h * i);
    sum += (i % 2 == 1 ? 4.0L : 2.0L) * f(x);
  }
  return static_cast<double>(sum * h / 3.0L);
}

// Kolmogorov-Smirnov sup distance between sorted samples and a model CDF.
template <class F>
double ks_statistic(const std::vector<double>& sorted, F&& model_cdf) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double c = model_cdf(sorted[i]);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - c));
    d = std::max(d, std::abs(static_cast<double>(i) / n - c));
  }
  return d;
}

}  // namespace oracles
