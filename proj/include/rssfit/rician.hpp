// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "rssfit/quadrature.hpp"

namespace rssfit {

/// Parameters of the Rician signal-strength density
///
///   f(r) = (2 r K / r_s^2) exp(-K (r^2 + r_s^2) / r_s^2) I0(2 r K / r_s)
///
/// where K is the dominant-to-multipath power ratio (linear) and r_s the
/// dominant-path amplitude. r_0 is the amplitude offset of the observed
/// distribution; it is carried here and applied by the censored model.
class RicianParams {
 public:
  RicianParams(double k_linear, double r_s, double r_0 = 0.0)
      : k_(k_linear), r_s_(r_s), r_0_(r_0) {
    if (!(std::isfinite(k_) && k_ > 0.0))
      throw std::invalid_argument("RicianParams: k_linear must be positive, got " +
                                  std::to_string(k_linear));
    if (!(std::isfinite(r_s_) && r_s_ > 0.0))
      throw std::invalid_argument("RicianParams: r_s must be positive, got " +
                                  std::to_string(r_s));
    if (!std::isfinite(r_0_))
      throw std::invalid_argument("RicianParams: r_0 must be finite");
  }

  static RicianParams from_db(double k_db, double r_s, double r_0 = 0.0) {
    return RicianParams(std::pow(10.0, k_db / 10.0), r_s, r_0);
  }

  double k_linear() const { return k_; }
  double k_db() const { return 10.0 * std::log10(k_); }
  double r_s() const { return r_s_; }
  double r_0() const { return r_0_; }

 private:
  double k_;
  double r_s_;
  double r_0_;
};

/// Textbook (nu, sigma) form: f(r) = (r/sigma^2) exp(-(r^2+nu^2)/(2 sigma^2)) I0(r nu / sigma^2).
struct StandardRician {
  double nu;
  double sigma;
};

/// The (K, r_s) density equals the textbook one with nu = r_s, sigma = r_s / sqrt(2K).
inline StandardRician to_standard(const RicianParams& p) {
  return {p.r_s(), p.r_s() / std::sqrt(2.0 * p.k_linear())};
}

namespace detail {

// ln I0(x) - x. Keeping the leading x out of the sum matters: in the density
// the +x of ln I0 cancels an O(x) piece of the Gaussian exponent, and for K
// around 1e8 that cancellation would amplify rounding noise by eight orders of
// magnitude. Here the x never enters, so the result is accurate to ~1 ulp.
inline double log_bessel_i0_scaled(double x) {
  if (!(x >= 0.0)) throw std::domain_error("log_bessel_i0: argument must be non-negative");
  if (x < 18.0) {
    // I0(x) = sum_m (x/2)^(2m) / (m!)^2
    const double q = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < 120; ++m) {
      term *= q / (static_cast<double>(m) * static_cast<double>(m));
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return std::log(sum) - x;
  }
  // I0(x) ~ e^x / sqrt(2 pi x) * sum_k a_k / x^k with a_k = ((2k-1)!!)^2 / (k! 8^k).
  // Terms decrease until k ~ 2x; stop at the smallest term.
  double term = 1.0;
  double sum = 1.0;
  double prev = 2.0;
  for (int k = 1; k <= 40; ++k) {
    const double odd = 2.0 * static_cast<double>(k) - 1.0;
    term *= odd * odd / (8.0 * static_cast<double>(k) * x);
    if (term >= prev) break;
    sum += term;
    if (term < sum * 1e-17) break;
    prev = term;
  }
  return -0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

}  // namespace detail

/// ln I0(x). Power series below the crossover, asymptotic expansion above, so
/// the result stays finite for x up to at least 1e6 (where I0 itself overflows).
inline double log_bessel_i0(double x) {
  return x + detail::log_bessel_i0_scaled(x);
}

/// Density in the (K, r_s) parameterization; the r_0 shift is not applied
/// here. Evaluated as a sum of logs with one final exponentiation, so large K
/// (explored by the optimizer) cannot overflow. The exponent is the exact
/// regrouping -K (r - r_s)^2 / r_s^2 + (ln I0(x) - x), x = 2 r K / r_s, which
/// is free of the large-K cancellation of the printed form.
inline double rician_pdf(double r, const RicianParams& p) {
  if (r <= 0.0) return 0.0;
  const double k = p.k_linear();
  const double rs = p.r_s();
  const double z = (r - rs) / rs;
  const double expo = -k * z * z;
  if (!std::isfinite(expo)) return 0.0;
  const double bessel_arg = 2.0 * r * k / rs;
  if (!std::isfinite(bessel_arg)) return 0.0;
  const double log_pdf = std::log(2.0 * r) + std::log(k) - 2.0 * std::log(rs) + expo +
                         detail::log_bessel_i0_scaled(bessel_arg);
  return std::exp(log_pdf);
}

namespace detail {

// Breakpoints around the density ridge so adaptive quadrature cannot step over
// a narrow spike (sigma shrinks like 1/sqrt(K)).
inline std::vector<double> ridge_seeds(double lo, double hi, double ridge, double sigma) {
  std::vector<double> pts{lo, hi};
  for (double s : {-12.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
    const double p = ridge + s * sigma;
    if (p > lo && p < hi) pts.push_back(p);
  }
  for (int i = 1; i < 16; ++i) {
    pts.push_back(lo + (hi - lo) * static_cast<double>(i) / 16.0);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace detail

/// CDF by adaptive quadrature of the density over [0, r]. Tail mass beyond
/// nu + 12 sigma is below 1e-10 and is treated as zero.
inline double rician_cdf(double r, const RicianParams& p) {
  if (r <= 0.0) return 0.0;
  const auto [nu, sigma] = to_standard(p);
  const double hi = nu + 12.0 * sigma;
  const double upper = std::min(r, hi);
  const std::vector<double> pts = detail::ridge_seeds(0.0, upper, nu, sigma);
  const double v =
      integrate([&p](double t) { return rician_pdf(t, p); }, std::span<const double>(pts),
                QuadratureOptions{1e-10, 50});
  return std::clamp(v, 0.0, 1.0);
}

}  // namespace rssfit
