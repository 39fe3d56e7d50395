// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rssfit/censored.hpp"
#include "rssfit/data.hpp"
#include "rssfit/rician.hpp"

namespace rssfit {

struct LmOptions {
  int max_iterations = 200;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 10.0;
  double cost_rel_tol = 1e-10;
  double gradient_inf_tol = 1e-12;
  double fd_rel_step = 1e-6;
};

inline void validate(const LmOptions& o) {
  if (o.max_iterations < 1)
    throw std::invalid_argument("LmOptions: max_iterations must be at least 1");
  if (!(o.initial_damping > 0.0 && o.damping_increase > 0.0 && o.damping_decrease > 0.0 &&
        o.cost_rel_tol > 0.0 && o.gradient_inf_tol > 0.0 && o.fd_rel_step > 0.0))
    throw std::invalid_argument("LmOptions: all tolerances and factors must be positive");
}

struct LmResult {
  std::vector<double> x;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;  // accepted steps
  bool converged = false;
  std::vector<double> cost_trace;  // cost at start, then after each accepted step
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// Gaussian elimination with partial pivoting for the small (n x n) normal
// equations. Returns false on a singular pivot.
inline bool solve_dense(std::vector<double> a, std::vector<double> b, std::vector<double>& out) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(a[row * n + col]) > std::abs(a[pivot * n + col])) pivot = row;
    }
    if (a[pivot * n + col] == 0.0 || !std::isfinite(a[pivot * n + col])) return false;
    if (pivot != col) {
      for (std::size_t k = col; k < n; ++k) std::swap(a[col * n + k], a[pivot * n + k]);
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t row = col + 1; row < n; ++row) {
      const double factor = a[row * n + col] / a[col * n + col];
      for (std::size_t k = col; k < n; ++k) a[row * n + k] -= factor * a[col * n + k];
      b[row] -= factor * b[col];
    }
  }
  out.assign(n, 0.0);
  for (std::size_t row = n; row-- > 0;) {
    double s = b[row];
    for (std::size_t k = row + 1; k < n; ++k) s -= a[row * n + k] * out[k];
    out[row] = s / a[row * n + row];
  }
  return all_finite(out);
}

// Forward-difference Jacobian (row-major m x n). A column whose probe point
// keeps returning non-finite residuals is retried with a smaller step and
// finally left at zero; the damped normal equations stay solvable.
template <class F>
std::vector<double> fd_jacobian(const F& f, const std::vector<double>& x,
                                const std::vector<double>& fx, double rel_step) {
  const std::size_t m = fx.size();
  const std::size_t n = x.size();
  std::vector<double> jac(m * n, 0.0);
  std::vector<double> xp = x;
  for (std::size_t j = 0; j < n; ++j) {
    double h = rel_step * std::max(std::abs(x[j]), 1.0);
    for (int attempt = 0; attempt < 4; ++attempt) {
      xp[j] = x[j] + h;
      const std::vector<double> fp = f(xp);
      if (fp.size() == m && all_finite(fp)) {
        for (std::size_t i = 0; i < m; ++i) jac[i * n + j] = (fp[i] - fx[i]) / h;
        break;
      }
      h *= 0.1;
    }
    xp[j] = x[j];
  }
  return jac;
}

}  // namespace detail

/// Levenberg-Marquardt over a residual vector function. Solves
/// (J^T J + lambda diag(J^T J)) delta = -J^T r with forward-difference J;
/// accepted steps must strictly decrease the cost. Stops when the relative
/// cost drop falls below cost_rel_tol, the gradient infinity norm falls below
/// gradient_inf_tol (converged = true), or after max_iterations (false).
template <class F>
LmResult levenberg_marquardt(F&& residuals, std::vector<double> x0, const LmOptions& opts = {}) {
  validate(opts);
  const std::size_t n = x0.size();
  if (n == 0) throw std::invalid_argument("levenberg_marquardt: empty parameter vector");
  std::vector<double> res = residuals(x0);
  if (res.empty()) throw std::invalid_argument("levenberg_marquardt: empty residual vector");
  if (!detail::all_finite(res))
    throw std::invalid_argument(
        "levenberg_marquardt: residuals are not finite at the starting point");

  LmResult out;
  out.x = std::move(x0);
  out.cost = detail::squared_norm(res);
  out.cost_trace.push_back(out.cost);
  if (out.cost == 0.0) {
    out.converged = true;
    return out;
  }

  double lambda = opts.initial_damping;
  std::vector<double> normal(n * n);
  std::vector<double> gradient(n);
  std::vector<double> delta;

  for (int iter = 0; iter < opts.max_iterations && !out.converged; ++iter) {
    const std::vector<double> jac = detail::fd_jacobian(residuals, out.x, res, opts.fd_rel_step);
    std::fill(normal.begin(), normal.end(), 0.0);
    std::fill(gradient.begin(), gradient.end(), 0.0);
    for (std::size_t i = 0; i < res.size(); ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double jij = jac[i * n + j];
        gradient[j] += jij * res[i];
        for (std::size_t k = j; k < n; ++k) normal[j * n + k] += jij * jac[i * n + k];
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < j; ++k) normal[j * n + k] = normal[k * n + j];

    double grad_inf = 0.0;
    for (double g : gradient) grad_inf = std::max(grad_inf, std::abs(g));
    if (grad_inf < opts.gradient_inf_tol) {
      out.converged = true;
      break;
    }

    bool stepped = false;
    while (!stepped) {
      std::vector<double> damped = normal;
      for (std::size_t j = 0; j < n; ++j)
        damped[j * n + j] += lambda * std::max(normal[j * n + j], 1e-30);
      std::vector<double> rhs(n);
      for (std::size_t j = 0; j < n; ++j) rhs[j] = -gradient[j];
      if (detail::solve_dense(std::move(damped), std::move(rhs), delta)) {
        std::vector<double> x_try(n);
        for (std::size_t j = 0; j < n; ++j) x_try[j] = out.x[j] + delta[j];
        std::vector<double> res_try = residuals(x_try);
        double cost_try = std::numeric_limits<double>::infinity();
        if (res_try.size() == res.size() && detail::all_finite(res_try))
          cost_try = detail::squared_norm(res_try);
        if (cost_try < out.cost) {
          const double drop = out.cost - cost_try;
          out.x = std::move(x_try);
          res = std::move(res_try);
          out.cost = cost_try;
          out.cost_trace.push_back(out.cost);
          ++out.iterations;
          lambda = std::max(lambda / opts.damping_decrease, 1e-300);
          stepped = true;
          if (drop <= opts.cost_rel_tol * std::max(out.cost, 1e-300) || out.cost == 0.0)
            out.converged = true;
          break;
        }
      }
      lambda *= opts.damping_increase;
      if (lambda > 1e150) break;  // no acceptable step at any damping
    }
    if (!stepped) break;
  }
  return out;
}

/// RMSE between the model CDF and the empirical CDF heights i/n at the sorted
/// sample points.
template <class F>
double cdf_rmse(std::span<const double> sorted_samples, F&& model_cdf) {
  if (sorted_samples.empty()) throw std::invalid_argument("cdf_rmse: sample list is empty");
  if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end()))
    throw std::invalid_argument("cdf_rmse: samples must be sorted ascending");
  const double n = static_cast<double>(sorted_samples.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double r = static_cast<double>(i + 1) / n - model_cdf(sorted_samples[i]);
    ss += r * r;
  }
  return std::sqrt(ss / n);
}

enum class FitMode { naive, biased };

inline const char* to_string(FitMode mode) {
  return mode == FitMode::naive ? "naive" : "biased";
}

struct FitResult {
  RicianParams params;
  double rmse = 0.0;
  int iterations = 0;
  bool converged = false;
  FitMode mode = FitMode::biased;
  int residual_count = 0;
};

namespace detail {

// Start values: near-Rayleigh K, dominant amplitude at the sample mean, no
// offset. Parameters are optimized as (ln K, ln r_s, r_0) so positivity holds
// by construction.
inline std::vector<double> fit_start(std::span<const double> amps,
                                     const std::optional<RicianParams>& init) {
  if (init) return {std::log(init->k_linear()), std::log(init->r_s()), init->r_0()};
  const double mean =
      std::accumulate(amps.begin(), amps.end(), 0.0) / static_cast<double>(amps.size());
  return {std::log(0.1), std::log(mean), 0.0};
}

inline void check_fit_inputs(std::span<const double> amps, const char* who) {
  if (amps.size() < 10)
    throw std::invalid_argument(std::string(who) + ": need at least 10 samples, got " +
                                std::to_string(amps.size()));
  if (!std::is_sorted(amps.begin(), amps.end()))
    throw std::invalid_argument(std::string(who) + ": amplitudes must be sorted ascending");
  for (double a : amps) {
    if (!(std::isfinite(a) && a > 0.0))
      throw std::invalid_argument(std::string(who) + ": amplitudes must be positive and finite");
  }
}

template <class Residuals>
FitResult run_cdf_fit(Residuals&& residuals, std::span<const double> amps, FitMode mode,
                      const std::optional<RicianParams>& init, const LmOptions& opts,
                      const char* who) {
  validate(opts);
  const std::vector<double> x0 = fit_start(amps, init);
  LmResult lm;
  try {
    lm = levenberg_marquardt(residuals, x0, opts);
  } catch (const std::invalid_argument&) {  // non-finite residuals at the start
    throw std::runtime_error(std::string(who) +
                             ": initial parameters leave no observable probability mass");
  }
  const RicianParams fitted(std::exp(lm.x[0]), std::exp(lm.x[1]), lm.x[2]);
  return FitResult{fitted, std::sqrt(lm.cost / static_cast<double>(amps.size())), lm.iterations,
                   lm.converged, mode, static_cast<int>(amps.size())};
}

}  // namespace detail

/// Fits (K, r_s, r_0) by least squares between the censored-model CDF and the
/// empirical CDF at every sorted sample point.
inline FitResult fit_biased(std::span<const double> sorted_amplitudes, double amp_ref_dbm,
                            const LinkBudget& lb, const PacketSpec& pkt,
                            const std::optional<RicianParams>& init = {},
                            const LmOptions& opts = {}) {
  detail::check_fit_inputs(sorted_amplitudes, "fit_biased");
  const std::size_t n = sorted_amplitudes.size();
  auto residuals = [&, n](const std::vector<double>& th) {
    std::vector<double> res(n, std::numeric_limits<double>::infinity());
    try {
      const RicianParams p(std::exp(th[0]), std::exp(th[1]), th[2]);
      const CensoredModel model(p, lb, pkt, amp_ref_dbm);
      for (std::size_t i = 0; i < n; ++i) {
        res[i] = static_cast<double>(i + 1) / static_cast<double>(n) -
                 model.cdf(sorted_amplitudes[i]);
      }
    } catch (const std::runtime_error&) {  // fully censored: retreat via damping
    } catch (const std::invalid_argument&) {
    }
    return res;
  };
  return detail::run_cdf_fit(residuals, sorted_amplitudes, FitMode::biased, init, opts,
                             "fit_biased");
}

/// Baseline that ignores the cut-off: the model CDF is the plain shifted
/// Rician CDF (bias identically 1, no renormalization).
inline FitResult fit_naive(std::span<const double> sorted_amplitudes, double /*amp_ref_dbm*/,
                           const std::optional<RicianParams>& init = {},
                           const LmOptions& opts = {}) {
  detail::check_fit_inputs(sorted_amplitudes, "fit_naive");
  const std::size_t n = sorted_amplitudes.size();
  auto residuals = [&, n](const std::vector<double>& th) {
    std::vector<double> res(n, std::numeric_limits<double>::infinity());
    try {
      const RicianParams p(std::exp(th[0]), std::exp(th[1]), th[2]);
      const auto [nu, sigma] = to_standard(p);
      const std::vector<double> pts = detail::ridge_seeds(0.0, nu + 12.0 * sigma, nu, sigma);
      const detail::CumulativeIntegral cum([p](double t) { return rician_pdf(t, p); }, pts,
                                           QuadratureOptions{1e-9, 50});
      for (std::size_t i = 0; i < n; ++i) {
        const double model = std::clamp(cum.prefix(sorted_amplitudes[i] - p.r_0()), 0.0, 1.0);
        res[i] = static_cast<double>(i + 1) / static_cast<double>(n) - model;
      }
    } catch (const std::runtime_error&) {
    } catch (const std::invalid_argument&) {
    }
    return res;
  };
  return detail::run_cdf_fit(residuals, sorted_amplitudes, FitMode::naive, init, opts,
                             "fit_naive");
}

inline FitResult fit_biased(const Dataset& ds, const LinkBudget& lb, const PacketSpec& pkt,
                            const std::optional<RicianParams>& init = {},
                            const LmOptions& opts = {}) {
  const AmplitudeData amp = to_amplitudes(ds);
  return fit_biased(amp.amplitudes, amp.amp_ref_dbm, lb, pkt, init, opts);
}

inline FitResult fit_naive(const Dataset& ds, const std::optional<RicianParams>& init = {},
                           const LmOptions& opts = {}) {
  const AmplitudeData amp = to_amplitudes(ds);
  return fit_naive(amp.amplitudes, amp.amp_ref_dbm, init, opts);
}

}  // namespace rssfit
