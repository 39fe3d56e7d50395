// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rssfit/bias.hpp"
#include "rssfit/quadrature.hpp"
#include "rssfit/rician.hpp"

namespace rssfit {

/// Thrown when essentially the whole distribution falls below the reception
/// cut-off, so the observable (renormalized) density does not exist.
class fully_censored_error : public std::runtime_error {
 public:
  explicit fully_censored_error(double z)
      : std::runtime_error("censored model keeps essentially no observable mass (Z = " +
                           std::to_string(z) + ")") {}
};

/// The observable sample distribution: the r_0-shifted Rician reweighted by
/// the packet-success bias w and renormalized,
///
///   f_sample(r) = w(r) f(r - r_0) / Z,   Z = integral of w(r') f(r' - r_0).
///
/// w is evaluated at the physical RSS, rss_dbm = amp_ref_dbm + 20 log10(r).
/// Instances are immutable; the construction-time quadrature panels are shared
/// by all later cdf queries, so evaluation at many sample points (the fitting
/// hot path) does not repeat panel work.
class CensoredModel {
 public:
  using BiasFn = std::function<double(double /*rss_dbm*/)>;

  CensoredModel(const RicianParams& params, const LinkBudget& lb, const PacketSpec& pkt,
                double amp_ref_dbm)
      : CensoredModel(params,
                      [lb, pkt](double rss_dbm) { return bias_w(rss_dbm, lb, pkt); },
                      amp_ref_dbm, half_success_amplitude(lb, pkt, amp_ref_dbm)) {}

  /// Arbitrary bias function, e.g. a hard cutoff in tests.
  static CensoredModel with_bias(const RicianParams& params, BiasFn w, double amp_ref_dbm) {
    return CensoredModel(params, std::move(w), amp_ref_dbm, {});
  }

  /// w == 1 everywhere: the plain shifted Rician, restricted to r >= 0.
  static CensoredModel unbiased(const RicianParams& params, double amp_ref_dbm) {
    return CensoredModel(params, [](double) { return 1.0; }, amp_ref_dbm, {});
  }

  double pdf(double r) const {
    if (r < support_lo_) return 0.0;
    return integrand_(r) / z_;
  }

  double cdf(double r) const {
    if (r <= support_lo_) return 0.0;
    if (r >= support_hi_) return 1.0;
    return std::clamp(cum_.prefix(r) / z_, 0.0, 1.0);
  }

  /// The normalization constant Z, also the fraction of transmissions that
  /// survive censoring.
  double normalization() const { return z_; }

  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  const RicianParams& params() const { return params_; }
  double amp_ref_dbm() const { return amp_ref_dbm_; }

 private:
  CensoredModel(const RicianParams& params, BiasFn w, double amp_ref_dbm,
                std::vector<double> bias_edge_seeds)
      : params_(params), amp_ref_dbm_(amp_ref_dbm) {
    if (!std::isfinite(amp_ref_dbm_))
      throw std::invalid_argument("CensoredModel: amp_ref_dbm must be finite");
    const auto [nu, sigma] = to_standard(params_);
    const double r0 = params_.r_0();
    support_lo_ = std::max(0.0, r0);
    support_hi_ = r0 + nu + 12.0 * sigma;
    if (!(support_hi_ > support_lo_)) throw fully_censored_error(0.0);

    // Self-contained integrand (no reference back into *this), so the model
    // stays valid under copy and move.
    integrand_ = [p = params_, w = std::move(w), ref = amp_ref_dbm_](double r) {
      const double x = r - p.r_0();
      if (x <= 0.0 || r < 0.0) return 0.0;
      const double f = rician_pdf(x, p);
      if (f == 0.0) return 0.0;
      return w(ref + 20.0 * std::log10(r)) * f;
    };

    std::vector<double> pts = detail::ridge_seeds(support_lo_, support_hi_, r0 + nu, sigma);
    for (double s : bias_edge_seeds) {
      if (s > support_lo_ && s < support_hi_) pts.push_back(s);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    cum_ = detail::CumulativeIntegral(integrand_, pts, QuadratureOptions{1e-9, 50});
    z_ = cum_.total();
    if (!(z_ >= 1e-12)) throw fully_censored_error(z_);
  }

  // Amplitudes where the packet success crosses a few reference levels; used
  // to seed quadrature panels on the steep edge of w.
  static std::vector<double> half_success_amplitude(const LinkBudget& lb, const PacketSpec& pkt,
                                                    double amp_ref_dbm) {
    std::vector<double> seeds;
    validate(lb);
    if (std::isnan(lb.noise_ref_dbm) || lb.beta <= 0.0) return seeds;
    for (double level : {0.05, 0.5, 0.95}) {
      const double target = level * lb.alpha;
      if (target <= 0.0 || target >= lb.alpha) continue;
      const double ber = -std::expm1(std::log(level) / pkt.m_bits()) / lb.beta;
      if (!(ber > 0.0 && ber < 0.5)) continue;
      const double ebn0 = -2.0 * std::log(2.0 * ber);
      const double rss =
          lb.noise_ref_dbm - 10.0 * std::log10(lb.bandwidth_hz / lb.bitrate_hz) +
          10.0 * std::log10(ebn0);
      seeds.push_back(std::pow(10.0, (rss - amp_ref_dbm) / 20.0));
    }
    return seeds;
  }

  RicianParams params_;
  double amp_ref_dbm_;
  std::function<double(double)> integrand_;
  detail::CumulativeIntegral cum_;
  double z_ = 0.0;
  double support_lo_ = 0.0;
  double support_hi_ = 0.0;
};

}  // namespace rssfit
