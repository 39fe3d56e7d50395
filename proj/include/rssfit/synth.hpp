// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "rssfit/bias.hpp"
#include "rssfit/censored.hpp"
#include "rssfit/data.hpp"
#include "rssfit/rician.hpp"

namespace rssfit {

/// Deterministic random stream: mt19937_64 mapped to doubles by a fixed 53-bit
/// scaling, normals by Box-Muller. The algorithm is spelled out here (instead
/// of std::normal_distribution) so the stream is identical for a given seed on
/// any standard library.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal; consumes the engine in pairs (Box-Muller).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;          // [0, 1)
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// One draw from the (K, r_s) Rician: |(nu + sigma g1) + i sigma g2| with
/// (nu, sigma) = to_standard(p). Uses exactly two normals per call.
inline double rician_sample(const RicianParams& p, SynthRng& rng) {
  const auto [nu, sigma] = to_standard(p);
  const double re = nu + sigma * rng.normal();
  const double im = sigma * rng.normal();
  return std::hypot(re, im);
}

struct SynthConfig {
  RicianParams true_params;
  LinkBudget lb;
  PacketSpec pkt;
  double amp_ref_dbm = 0.0;
  long n_accepted = 1;
  std::uint64_t seed = 0;
};

struct GenerateStats {
  long long attempts = 0;
  long long accepted = 0;
  long long discarded_nonpositive = 0;
};

/// Draws shifted Rician amplitudes and thins them with a Bernoulli acceptance
/// of probability w(rss), mirroring the physical reception process. Shifted
/// amplitudes at or below zero are physically absent and are discarded before
/// the acceptance test. Deterministic for a fixed seed.
inline Dataset generate(const SynthConfig& cfg, GenerateStats* stats = nullptr) {
  if (cfg.n_accepted < 1)
    throw std::invalid_argument("generate: n_accepted must be at least 1");
  double z = 0.0;
  try {
    z = CensoredModel(cfg.true_params, cfg.lb, cfg.pkt, cfg.amp_ref_dbm).normalization();
  } catch (const fully_censored_error&) {
    z = 0.0;
  }
  if (!(z >= 1e-6))
    throw std::runtime_error("generate: acceptance mass " + std::to_string(z) +
                             " is below 1e-6; generation would not terminate");

  SynthRng rng(cfg.seed);
  Dataset ds;
  ds.source_tag = "synthetic";
  ds.records.reserve(static_cast<std::size_t>(cfg.n_accepted));
  const double r0 = cfg.true_params.r_0();
  GenerateStats local;
  GenerateStats& st = stats ? *stats : local;
  const long long max_attempts =
      static_cast<long long>(100.0 * static_cast<double>(cfg.n_accepted) / z) + 1000000;
  while (st.accepted < cfg.n_accepted) {
    if (++st.attempts > max_attempts)
      throw std::runtime_error("generate: acceptance rate stayed far below the model value " +
                               std::to_string(z));
    const double shifted = rician_sample(cfg.true_params, rng) + r0;
    if (shifted <= 0.0) {
      ++st.discarded_nonpositive;
      continue;
    }
    const double rss = cfg.amp_ref_dbm + 20.0 * std::log10(shifted);
    if (rng.uniform01() < bias_w(rss, cfg.lb, cfg.pkt)) {
      ds.records.push_back(MeasurementRecord{100.0, rss});
      ++st.accepted;
    }
  }
  return ds;
}

}  // namespace rssfit
