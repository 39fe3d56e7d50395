// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rssfit {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  int max_depth = 50;
};

namespace detail {

// Adaptive Simpson with Richardson correction. `whole` is the single-panel
// Simpson estimate over [a, b]; the recursion keeps the absolute error of the
// returned value below ~tol.
template <class F>
double adaptive_simpson_impl(const F& f, double a, double fa, double b, double fb, double m,
                             double fm, double whole, double tol, int depth, int max_depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth >= max_depth || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_impl(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, max_depth) +
         adaptive_simpson_impl(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace detail

/// Integrates f over [a, b] to roughly opt.abs_tol absolute error.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (!(a <= b)) throw std::invalid_argument("integrate: lower limit exceeds upper limit");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_impl(f, a, fa, b, fb, m, fm, whole, opt.abs_tol, 0,
                                       opt.max_depth);
}

/// Integrates f over [pts.front(), pts.back()], seeding the subdivision at the
/// interior breakpoints. The tolerance budget is split across sub-intervals.
template <class F>
double integrate(F&& f, std::span<const double> pts, const QuadratureOptions& opt = {}) {
  if (pts.size() < 2) throw std::invalid_argument("integrate: need at least two breakpoints");
  QuadratureOptions sub = opt;
  sub.abs_tol = opt.abs_tol / static_cast<double>(pts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += integrate(f, pts[i], pts[i + 1], sub);
  }
  return total;
}

namespace detail {

// Adaptive panel decomposition of an integral over [pts.front(), pts.back()].
// The leaf panels of the subdivision are kept so that prefix integrals reuse
// them: prefix(r) only re-integrates the one partial panel containing r.
class CumulativeIntegral {
 public:
  CumulativeIntegral() = default;

  CumulativeIntegral(std::function<double(double)> f, std::span<const double> pts,
                     const QuadratureOptions& opt)
      : f_(std::move(f)), opt_(opt) {
    if (pts.size() < 2)
      throw std::invalid_argument("CumulativeIntegral: need at least two breakpoints");
    if (!std::is_sorted(pts.begin(), pts.end()))
      throw std::invalid_argument("CumulativeIntegral: breakpoints must be sorted");
    const double tol = opt.abs_tol / static_cast<double>(pts.size() - 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double a = pts[i];
      const double b = pts[i + 1];
      if (a == b) continue;
      const double m = 0.5 * (a + b);
      const double fa = f_(a);
      const double fm = f_(m);
      const double fb = f_(b);
      const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
      subdivide(a, fa, b, fb, m, fm, whole, tol, 0);
    }
    double cum = 0.0;
    for (Panel& p : panels_) {
      p.cum_before = cum;
      cum += p.integral;
    }
    total_ = cum;
  }

  double total() const { return total_; }
  double lower() const { return panels_.empty() ? 0.0 : panels_.front().a; }
  double upper() const { return panels_.empty() ? 0.0 : panels_.back().b; }

  /// Integral from lower() to min(r, upper()); 0 at or below lower().
  double prefix(double r) const {
    if (panels_.empty() || r <= panels_.front().a) return 0.0;
    if (r >= panels_.back().b) return total_;
    const auto it = std::upper_bound(panels_.begin(), panels_.end(), r,
                                     [](double v, const Panel& p) { return v < p.b; });
    const Panel& p = *it;
    if (r <= p.a) return p.cum_before;
    QuadratureOptions local = opt_;
    local.abs_tol = 0.1 * opt_.abs_tol;
    return p.cum_before + rssfit::integrate(f_, p.a, r, local);
  }

 private:
  struct Panel {
    double a;
    double b;
    double integral;
    double cum_before;
  };

  void subdivide(double a, double fa, double b, double fb, double m, double fm, double whole,
                 double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f_(lm);
    const double frm = f_(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth >= opt_.max_depth || std::abs(delta) <= 15.0 * tol) {
      if (panels_.size() >= kMaxPanels)
        throw std::runtime_error(
            "CumulativeIntegral: integrand needs more than 1e6 panels; it is too rough for the "
            "requested tolerance");
      panels_.push_back(Panel{a, b, left + right + delta / 15.0, 0.0});
      return;
    }
    subdivide(a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1);
    subdivide(m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1);
  }

  static constexpr std::size_t kMaxPanels = 1u << 20;

  std::function<double(double)> f_;
  QuadratureOptions opt_;
  std::vector<Panel> panels_;
  double total_ = 0.0;
};

}  // namespace detail

}  // namespace rssfit
