// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rssfit {

/// Radio constants joining RSS in dBm to the bitwise SNR and packet success.
/// noise_ref_dbm combines the thermal noise floor and the receiver noise
/// figure into a single reference; it is usually set by calibrate_noise_ref.
struct LinkBudget {
  double noise_ref_dbm = std::numeric_limits<double>::quiet_NaN();
  double bitrate_hz = 100e3;
  double bandwidth_hz = 200e3;
  double sensitivity_dbm = std::numeric_limits<double>::quiet_NaN();
  double alpha = 1.0;  // preamble detection probability
  double beta = 1.0;   // FEC factor
};

inline void validate(const LinkBudget& lb) {
  if (!(lb.bitrate_hz > 0.0 && lb.bandwidth_hz > 0.0))
    throw std::invalid_argument("LinkBudget: bitrate and bandwidth must be positive");
  if (!(lb.alpha >= 0.0 && lb.alpha <= 1.0 && lb.beta >= 0.0 && lb.beta <= 1.0))
    throw std::invalid_argument("LinkBudget: alpha and beta must lie in [0, 1]");
}

/// M = 8 * payload_bytes.
inline int bytes_to_m(int payload_bytes) {
  if (payload_bytes < 1)
    throw std::domain_error("bytes_to_m: payload must be at least one byte, got " +
                            std::to_string(payload_bytes));
  return 8 * payload_bytes;
}

class PacketSpec {
 public:
  explicit PacketSpec(int payload_bytes)
      : payload_bytes_(payload_bytes), m_bits_(bytes_to_m(payload_bytes)) {}

  int payload_bytes() const { return payload_bytes_; }
  int m_bits() const { return m_bits_; }

 private:
  int payload_bytes_;
  int m_bits_;
};

/// SNR_dB = rss - noise_ref; Eb/N0_dB = SNR_dB + 10 log10(bandwidth / bitrate).
/// Returns the linear ratio 10^(Eb/N0_dB / 10).
inline double rss_to_ebn0_linear(double rss_dbm, const LinkBudget& lb) {
  validate(lb);
  if (std::isnan(lb.noise_ref_dbm))
    throw std::invalid_argument("LinkBudget: noise_ref_dbm is not set (run calibration first)");
  const double snr_db = rss_dbm - lb.noise_ref_dbm;
  const double ebn0_db = snr_db + 10.0 * std::log10(lb.bandwidth_hz / lb.bitrate_hz);
  return std::pow(10.0, ebn0_db / 10.0);
}

/// Non-coherent BFSK bit error rate, (1/2) exp(-Eb/N0 / 2).
inline double ber_bfsk(double ebn0_linear) {
  if (!(ebn0_linear >= 0.0))
    throw std::domain_error("ber_bfsk: Eb/N0 must be non-negative");
  return 0.5 * std::exp(-0.5 * ebn0_linear);
}

namespace detail {

// alpha (1 - beta BER)^M, the packet success probability. The pow goes through
// log1p so M = 400 with tiny BER keeps full precision.
inline double packet_success(double ber, int m_bits, double alpha, double beta) {
  return alpha * std::exp(static_cast<double>(m_bits) * std::log1p(-beta * ber));
}

}  // namespace detail

/// FER = 1 - alpha (1 - beta BER)^M.
inline double fer(double ber, int m_bits, double alpha, double beta) {
  if (!(ber >= 0.0 && ber <= 1.0)) throw std::domain_error("fer: BER must lie in [0, 1]");
  if (!(alpha >= 0.0 && alpha <= 1.0 && beta >= 0.0 && beta <= 1.0))
    throw std::domain_error("fer: alpha and beta must lie in [0, 1]");
  if (m_bits < 1) throw std::domain_error("fer: packet must contain at least one bit");
  return 1.0 - detail::packet_success(ber, m_bits, alpha, beta);
}

/// Packet success probability at a given RSS: w = 1 - FER. Non-decreasing in
/// rss_dbm; tends to alpha as rss grows and to alpha (1 - beta/2)^M as it
/// falls (rss_dbm = -inf is a valid input and hits that floor).
inline double bias_w(double rss_dbm, const LinkBudget& lb, const PacketSpec& pkt) {
  const double ber = ber_bfsk(rss_to_ebn0_linear(rss_dbm, lb));
  return detail::packet_success(ber, pkt.m_bits(), lb.alpha, lb.beta);
}

/// Solves for the noise reference that makes bias_w(sensitivity) == target_psr,
/// pinning the free link-budget constant to the receiver-sensitivity
/// definition. Closed form: BER = (1 - (psr/alpha)^(1/M)) / beta, then
/// Eb/N0 = -2 ln(2 BER), then the dB chain inverted at the sensitivity point.
inline LinkBudget calibrate_noise_ref(double sensitivity_dbm, double target_psr,
                                      const PacketSpec& pkt, LinkBudget lb) {
  validate(lb);
  if (!std::isfinite(sensitivity_dbm))
    throw std::domain_error("calibrate_noise_ref: sensitivity must be finite");
  if (!(target_psr > 0.0 && target_psr < 1.0))
    throw std::domain_error("calibrate_noise_ref: target success rate must lie in (0, 1)");
  if (!(lb.alpha > target_psr))
    throw std::domain_error(
        "calibrate_noise_ref: infeasible, success rate is capped at alpha = " +
        std::to_string(lb.alpha));
  if (lb.beta <= 0.0)
    throw std::domain_error("calibrate_noise_ref: infeasible, beta = 0 makes the success rate "
                            "independent of RSS");
  const double ber = -std::expm1(std::log(target_psr / lb.alpha) / pkt.m_bits()) / lb.beta;
  if (!(ber > 0.0 && ber < 0.5))
    throw std::domain_error("calibrate_noise_ref: infeasible, required BER " +
                            std::to_string(ber) + " is outside (0, 0.5); the success rate floor "
                            "alpha (1 - beta/2)^M already exceeds the target");
  const double ebn0 = -2.0 * std::log(2.0 * ber);
  lb.noise_ref_dbm =
      sensitivity_dbm + 10.0 * std::log10(lb.bandwidth_hz / lb.bitrate_hz) - 10.0 * std::log10(ebn0);
  lb.sensitivity_dbm = sensitivity_dbm;
  return lb;
}

}  // namespace rssfit
