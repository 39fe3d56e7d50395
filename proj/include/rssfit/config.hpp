// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rssfit/bias.hpp"
#include "rssfit/lsq.hpp"
#include "rssfit/synth.hpp"

namespace rssfit {

/// Configuration or input problems that map to CLI exit code 2.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationConfig {
  bool relative_to_s = true;     // sensitivity given as S = 0 in the data's own frame
  double sensitivity_dbm = 0.0;  // absolute value when relative_to_s is false
  double target_psr = 0.2;
  int calib_payload_bytes = 20;
};

struct TruthConfig {
  double k_db = -30.0;
  double r_s = 0.35;
  double r_0 = 0.0;
  double amp_ref_dbm = 0.0;
  long n = 1000;
  std::uint64_t seed = 1;
};

struct RunConfig {
  LinkBudget link_budget;           // noise_ref_dbm stays NaN unless given explicitly
  bool explicit_noise_ref = false;  // when true, calibration is skipped
  int payload_bytes = 50;
  LmOptions fit;
  double min_distance_m = 75.0;
  double max_distance_m = 125.0;
  CalibrationConfig calibration;
  std::optional<TruthConfig> truth;
};

namespace detail {

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw config_error("config: unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error(std::string("config: key '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("config: top level must be a JSON object");
  detail::require_keys(
      j, {"link_budget", "packet", "fit", "distance_window", "calibration", "truth"}, "top level");
  RunConfig cfg;

  if (j.contains("link_budget")) {
    const auto& lbj = j.at("link_budget");
    detail::require_keys(lbj, {"bitrate_hz", "bandwidth_hz", "alpha", "beta", "noise_ref_dbm"},
                         "link_budget");
    cfg.link_budget.bitrate_hz = detail::get_or(lbj, "bitrate_hz", cfg.link_budget.bitrate_hz);
    cfg.link_budget.bandwidth_hz =
        detail::get_or(lbj, "bandwidth_hz", cfg.link_budget.bandwidth_hz);
    cfg.link_budget.alpha = detail::get_or(lbj, "alpha", cfg.link_budget.alpha);
    cfg.link_budget.beta = detail::get_or(lbj, "beta", cfg.link_budget.beta);
    if (lbj.contains("noise_ref_dbm")) {
      cfg.link_budget.noise_ref_dbm = lbj.at("noise_ref_dbm").get<double>();
      cfg.explicit_noise_ref = true;
    }
    try {
      validate(cfg.link_budget);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("config: ") + e.what());
    }
  }

  if (j.contains("packet")) {
    const auto& pj = j.at("packet");
    detail::require_keys(pj, {"payload_bytes"}, "packet");
    cfg.payload_bytes = detail::get_or(pj, "payload_bytes", cfg.payload_bytes);
    if (cfg.payload_bytes < 1) throw config_error("config: packet.payload_bytes must be >= 1");
  }

  if (j.contains("fit")) {
    const auto& fj = j.at("fit");
    detail::require_keys(fj,
                         {"max_iterations", "initial_damping", "damping_increase",
                          "damping_decrease", "cost_rel_tol", "gradient_inf_tol", "fd_rel_step"},
                         "fit");
    cfg.fit.max_iterations = detail::get_or(fj, "max_iterations", cfg.fit.max_iterations);
    cfg.fit.initial_damping = detail::get_or(fj, "initial_damping", cfg.fit.initial_damping);
    cfg.fit.damping_increase = detail::get_or(fj, "damping_increase", cfg.fit.damping_increase);
    cfg.fit.damping_decrease = detail::get_or(fj, "damping_decrease", cfg.fit.damping_decrease);
    cfg.fit.cost_rel_tol = detail::get_or(fj, "cost_rel_tol", cfg.fit.cost_rel_tol);
    cfg.fit.gradient_inf_tol = detail::get_or(fj, "gradient_inf_tol", cfg.fit.gradient_inf_tol);
    cfg.fit.fd_rel_step = detail::get_or(fj, "fd_rel_step", cfg.fit.fd_rel_step);
    try {
      validate(cfg.fit);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("config: ") + e.what());
    }
  }

  if (j.contains("distance_window")) {
    const auto& dj = j.at("distance_window");
    detail::require_keys(dj, {"min_m", "max_m"}, "distance_window");
    cfg.min_distance_m = detail::get_or(dj, "min_m", cfg.min_distance_m);
    cfg.max_distance_m = detail::get_or(dj, "max_m", cfg.max_distance_m);
    if (!(cfg.min_distance_m <= cfg.max_distance_m))
      throw config_error("config: distance_window.min_m exceeds max_m");
  }

  if (j.contains("calibration")) {
    const auto& cj = j.at("calibration");
    detail::require_keys(cj, {"sensitivity_dbm", "relative_to_s", "target_psr",
                              "calib_payload_bytes"},
                         "calibration");
    if (cj.contains("sensitivity_dbm")) {
      cfg.calibration.relative_to_s = false;
      cfg.calibration.sensitivity_dbm = cj.at("sensitivity_dbm").get<double>();
    }
    if (cj.contains("relative_to_s")) {
      cfg.calibration.relative_to_s = cj.at("relative_to_s").get<bool>();
      if (cfg.calibration.relative_to_s) cfg.calibration.sensitivity_dbm = 0.0;
    }
    cfg.calibration.target_psr =
        detail::get_or(cj, "target_psr", cfg.calibration.target_psr);
    cfg.calibration.calib_payload_bytes =
        detail::get_or(cj, "calib_payload_bytes", cfg.calibration.calib_payload_bytes);
    if (!(cfg.calibration.target_psr > 0.0 && cfg.calibration.target_psr < 1.0))
      throw config_error("config: calibration.target_psr must lie in (0, 1)");
    if (cfg.calibration.calib_payload_bytes < 1)
      throw config_error("config: calibration.calib_payload_bytes must be >= 1");
  }

  if (j.contains("truth")) {
    const auto& tj = j.at("truth");
    detail::require_keys(tj, {"k_db", "k_linear", "r_s", "r_0", "amp_ref_dbm", "n", "seed"},
                         "truth");
    TruthConfig truth;
    if (tj.contains("k_linear")) {
      const double k = tj.at("k_linear").get<double>();
      if (!(k > 0.0)) throw config_error("config: truth.k_linear must be positive");
      truth.k_db = 10.0 * std::log10(k);
    }
    truth.k_db = detail::get_or(tj, "k_db", truth.k_db);
    truth.r_s = detail::get_or(tj, "r_s", truth.r_s);
    truth.r_0 = detail::get_or(tj, "r_0", truth.r_0);
    truth.amp_ref_dbm = detail::get_or(tj, "amp_ref_dbm", truth.amp_ref_dbm);
    truth.n = detail::get_or(tj, "n", truth.n);
    truth.seed = detail::get_or(tj, "seed", truth.seed);
    if (!(truth.r_s > 0.0)) throw config_error("config: truth.r_s must be positive");
    if (truth.n < 1) throw config_error("config: truth.n must be >= 1");
    cfg.truth = truth;
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config " + path + ": " + e.what());
  }
  return parse_run_config(j);
}

/// The link budget actually used: either the explicit noise reference from
/// the config, or the one calibrated from the sensitivity definition
/// (success rate target_psr for calib_payload_bytes packets at S).
inline LinkBudget resolve_link_budget(const RunConfig& cfg) {
  LinkBudget lb = cfg.link_budget;
  lb.sensitivity_dbm = cfg.calibration.sensitivity_dbm;
  if (cfg.explicit_noise_ref) return lb;
  try {
    return calibrate_noise_ref(cfg.calibration.sensitivity_dbm, cfg.calibration.target_psr,
                               PacketSpec(cfg.calibration.calib_payload_bytes), lb);
  } catch (const std::domain_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }
}

inline SynthConfig make_synth_config(const RunConfig& cfg, const LinkBudget& resolved_lb) {
  if (!cfg.truth) throw config_error("config: simulate needs a 'truth' block");
  const TruthConfig& t = *cfg.truth;
  return SynthConfig{RicianParams::from_db(t.k_db, t.r_s, t.r_0), resolved_lb,
                     PacketSpec(cfg.payload_bytes), t.amp_ref_dbm, t.n, t.seed};
}

inline nlohmann::json truth_provenance_json(const SynthConfig& sc) {
  return nlohmann::json{{"k_db", sc.true_params.k_db()},
                        {"r_s", sc.true_params.r_s()},
                        {"r_0", sc.true_params.r_0()},
                        {"amp_ref_dbm", sc.amp_ref_dbm},
                        {"n", sc.n_accepted},
                        {"seed", sc.seed},
                        {"noise_ref_dbm", sc.lb.noise_ref_dbm},
                        {"payload_bytes", sc.pkt.payload_bytes()}};
}

/// One fit entry of the JSON report. r_s and r_0 are reported in linear
/// amplitude units and on the 20 log10 amplitude-dB scale; r_0_db_rel_s is the
/// RSS of |r_0| relative to the sensitivity (null when r_0 == 0).
inline nlohmann::json fit_report_json(const FitResult& fr, double amp_ref_dbm,
                                      double sensitivity_dbm) {
  nlohmann::json j{{"mode", to_string(fr.mode)},
                   {"k_db", fr.params.k_db()},
                   {"k_linear", fr.params.k_linear()},
                   {"r_s", fr.params.r_s()},
                   {"r_s_db", 20.0 * std::log10(fr.params.r_s())},
                   {"r_s_db_convention", "20*log10(r_s)"},
                   {"r_0", fr.params.r_0()},
                   {"rmse", fr.rmse},
                   {"iterations", fr.iterations},
                   {"converged", fr.converged},
                   {"n_samples", fr.residual_count}};
  if (fr.params.r_0() != 0.0 && std::isfinite(sensitivity_dbm)) {
    j["r_0_db_rel_s"] =
        amp_ref_dbm + 20.0 * std::log10(std::abs(fr.params.r_0())) - sensitivity_dbm;
    j["r_0_sign"] = fr.params.r_0() > 0.0 ? 1 : -1;
  } else {
    j["r_0_db_rel_s"] = nullptr;
    j["r_0_sign"] = fr.params.r_0() == 0.0 ? 0 : (fr.params.r_0() > 0.0 ? 1 : -1);
  }
  return j;
}

}  // namespace rssfit
