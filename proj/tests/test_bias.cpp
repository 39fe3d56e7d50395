// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#include "rssfit/bias.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using rssfit::LinkBudget;
using rssfit::PacketSpec;
using rssfit::ber_bfsk;
using rssfit::bias_w;
using rssfit::bytes_to_m;
using rssfit::calibrate_noise_ref;
using rssfit::fer;
using rssfit::rss_to_ebn0_linear;

namespace {

LinkBudget flat_budget(double noise_ref = 0.0) {
  LinkBudget lb;
  lb.noise_ref_dbm = noise_ref;
  lb.bitrate_hz = 100e3;
  lb.bandwidth_hz = 100e3;  // bitrate == bandwidth: Eb/N0 equals the SNR
  return lb;
}

}  // namespace

TEST(BytesToM, KnownValues) {
  EXPECT_EQ(bytes_to_m(50), 400);
  EXPECT_EQ(bytes_to_m(20), 160);
  EXPECT_EQ(bytes_to_m(1), 8);
  EXPECT_THROW(bytes_to_m(0), std::domain_error);
  EXPECT_THROW(bytes_to_m(-3), std::domain_error);
}

TEST(PacketSpecTest, InvariantHolds) {
  const PacketSpec pkt(50);
  EXPECT_EQ(pkt.payload_bytes(), 50);
  EXPECT_EQ(pkt.m_bits(), 8 * pkt.payload_bytes());
  EXPECT_THROW(PacketSpec(0), std::domain_error);
}

TEST(RssToEbn0, DbChain) {
  const LinkBudget lb = flat_budget(-100.0);
  EXPECT_NEAR(rss_to_ebn0_linear(-100.0, lb), 1.0, 1e-12);
  EXPECT_NEAR(rss_to_ebn0_linear(-90.0, lb), 10.0, 1e-11);
  LinkBudget wide = lb;
  wide.bandwidth_hz = 200e3;  // bandwidth / bitrate = 2
  // 10^((3 + 10 log10 2)/10) = 2 * 10^0.3, frozen from the closed form.
  EXPECT_NEAR(rss_to_ebn0_linear(-97.0, wide), 3.9905246299377592, 1e-10);
  EXPECT_EQ(rss_to_ebn0_linear(-std::numeric_limits<double>::infinity(), lb), 0.0);
}

TEST(RssToEbn0, UnsetNoiseRefThrows) {
  LinkBudget lb;  // noise_ref_dbm defaults to NaN
  EXPECT_THROW(rss_to_ebn0_linear(-80.0, lb), std::invalid_argument);
}

TEST(BerBfsk, KnownValues) {
  EXPECT_DOUBLE_EQ(ber_bfsk(0.0), 0.5);
  EXPECT_NEAR(ber_bfsk(2.0), 0.18393972058572116, 1e-16);   // e^{-1}/2
  EXPECT_NEAR(ber_bfsk(20.0), 2.2699964881242426e-5, 1e-19);  // e^{-10}/2
  EXPECT_THROW(ber_bfsk(-1e-12), std::domain_error);
}

TEST(BerBfsk, StrictlyDecreasing) {
  double prev = ber_bfsk(0.0);
  for (double e = 0.5; e < 40.0; e += 0.5) {
    const double b = ber_bfsk(e);
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(Fer, KnownValues) {
  EXPECT_DOUBLE_EQ(fer(0.0, 400, 1.0, 1.0), 0.0);
  EXPECT_NEAR(fer(0.37, 1, 1.0, 1.0), 0.37, 1e-15);  // single-bit packet
  // 1 - 0.99^160, frozen from direct power evaluation.
  EXPECT_NEAR(fer(0.01, 160, 1.0, 1.0), 0.7997229731425104, 1e-12);
  EXPECT_THROW(fer(-0.1, 8, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(fer(1.1, 8, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(fer(0.5, 8, 1.5, 1.0), std::domain_error);
  EXPECT_THROW(fer(0.5, 0, 1.0, 1.0), std::domain_error);
}

TEST(BiasW, SaturatesHighAndLow) {
  const LinkBudget lb = flat_budget(0.0);
  const PacketSpec pkt(20);
  EXPECT_NEAR(bias_w(60.0, lb, pkt), 1.0, 1e-12);
  // rss -> -inf floor: alpha (1 - beta/2)^M
  const double floor = std::pow(0.5, pkt.m_bits());
  EXPECT_NEAR(bias_w(-std::numeric_limits<double>::infinity(), lb, pkt) / floor, 1.0, 1e-12);
}

TEST(BiasW, ClosedFormChainAtNoiseRef) {
  // rss = noise_ref, bitrate == bandwidth, M = 8: (1 - e^{-1/2}/2)^8,
  // frozen from the closed-form chain.
  const LinkBudget lb = flat_budget(-87.5);
  EXPECT_NEAR(bias_w(-87.5, lb, PacketSpec(1)), 0.055531496290366076, 1e-14);
}

TEST(BiasW, MatchesFerComposition) {
  const LinkBudget lb = flat_budget(-100.0);
  const PacketSpec pkt(50);
  for (double rss = -140.0; rss <= -60.0; rss += 0.37) {
    const double ber = ber_bfsk(rss_to_ebn0_linear(rss, lb));
    const double w = bias_w(rss, lb, pkt);
    // same code path behind both, so 1 - fer can differ by at most one
    // rounding of the final subtraction
    EXPECT_NEAR(w, 1.0 - fer(ber, pkt.m_bits(), lb.alpha, lb.beta), 1.2e-16);
    EXPECT_DOUBLE_EQ(w, rssfit::detail::packet_success(ber, pkt.m_bits(), lb.alpha, lb.beta));
  }
}

TEST(BiasW, MonotoneAndInRangeOnRandomBudgets) {
  std::mt19937_64 rng(42);
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  };
  for (int trial = 0; trial < 20; ++trial) {
    LinkBudget lb;
    lb.noise_ref_dbm = uniform(-130.0, -40.0);
    lb.bitrate_hz = uniform(1e3, 1e6);
    lb.bandwidth_hz = uniform(1e3, 1e6);
    lb.alpha = uniform(0.2, 1.0);
    lb.beta = uniform(0.1, 1.0);
    const PacketSpec pkt(1 + static_cast<int>(rng() % 64));
    double prev = -1.0;
    for (int i = 0; i < 10000; ++i) {
      const double rss = lb.noise_ref_dbm - 200.0 + 400.0 * i / 9999.0;
      const double w = bias_w(rss, lb, pkt);
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, 1.0);
      EXPECT_GE(w, prev - 1e-15) << "trial " << trial << " i " << i;
      prev = w;
    }
  }
}

TEST(Calibration, KnownInversion) {
  // S = -100 dBm, psr = 0.2, 20-byte packets, bitrate == bandwidth:
  // noise_ref = S - 10 log10(-2 ln(2 (1 - 0.2^{1/160}))), frozen from the
  // closed form.
  LinkBudget lb = flat_budget();
  lb = calibrate_noise_ref(-100.0, 0.2, PacketSpec(20), lb);
  EXPECT_NEAR(lb.noise_ref_dbm, -108.93336346395972, 1e-9);
  EXPECT_DOUBLE_EQ(lb.sensitivity_dbm, -100.0);
  EXPECT_NEAR(bias_w(-100.0, lb, PacketSpec(20)), 0.2, 1e-9);
}

TEST(Calibration, RoundTripGrid) {
  for (double psr : {0.05, 0.2, 0.9}) {
    for (int bytes : {1, 20, 50}) {
      LinkBudget lb;
      lb.noise_ref_dbm = 0.0;  // overwritten
      lb.bitrate_hz = 100e3;
      lb.bandwidth_hz = 200e3;
      const PacketSpec pkt(bytes);
      const LinkBudget cal = calibrate_noise_ref(-95.0, psr, pkt, lb);
      EXPECT_NEAR(bias_w(-95.0, cal, pkt), psr, 1e-9) << "psr=" << psr << " M=" << pkt.m_bits();
    }
  }
}

TEST(Calibration, InfeasibleTargets) {
  LinkBudget lb = flat_budget();
  EXPECT_THROW(calibrate_noise_ref(-100.0, 0.0, PacketSpec(20), lb), std::domain_error);
  EXPECT_THROW(calibrate_noise_ref(-100.0, 1.0, PacketSpec(20), lb), std::domain_error);
  lb.alpha = 0.15;  // success rate cannot reach 0.2
  EXPECT_THROW(calibrate_noise_ref(-100.0, 0.2, PacketSpec(20), lb), std::domain_error);
  lb.alpha = 1.0;
  lb.beta = 0.0;
  EXPECT_THROW(calibrate_noise_ref(-100.0, 0.2, PacketSpec(20), lb), std::domain_error);
  // M = 1 needs BER = 1 - psr >= 0.5, beyond the BFSK range: the success
  // floor alpha (1 - beta/2)^M = 0.5 already exceeds a 0.2 target.
  lb.beta = 1.0;
  EXPECT_THROW(calibrate_noise_ref(-100.0, 0.2, PacketSpec(1), lb), std::domain_error);
  EXPECT_NO_THROW(calibrate_noise_ref(-100.0, 0.6, PacketSpec(1), lb));
}

TEST(LinkBudgetValidate, RejectsBadFields) {
  LinkBudget lb = flat_budget();
  lb.bitrate_hz = 0.0;
  EXPECT_THROW(rssfit::validate(lb), std::invalid_argument);
  lb = flat_budget();
  lb.alpha = 1.5;
  EXPECT_THROW(rssfit::validate(lb), std::invalid_argument);
  lb = flat_budget();
  lb.beta = -0.1;
  EXPECT_THROW(rssfit::validate(lb), std::invalid_argument);
}
