// SPDX-License-Identifier: Apache-2.0
//
// rssfit: Rician signal-strength estimation from censored RSS measurements
// Copyright (C) 2026 rssfit contributors

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rssfit/rssfit.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct FitArgs {
  std::string input;
  std::string config;
  std::string mode = "both";
  std::string output;
  std::string curves;
};

struct SimulateArgs {
  std::string config;
  std::string output;
  std::optional<long> n;
  std::optional<std::uint64_t> seed;
};

struct BiasCurveArgs {
  std::string config;
  std::string output;
  double rss_min = -40.0;
  double rss_max = 40.0;
  double step = 0.5;
};

rssfit::Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rssfit::config_error("cannot open input file: " + path);
  try {
    return rssfit::load_csv(in);
  } catch (const std::runtime_error& e) {
    throw rssfit::config_error(path + ": " + e.what());
  }
}

// Outputs are staged in memory and written at the end; a failed write removes
// the partial file.
void write_file(const std::string& path, const std::string& content,
                std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rssfit::config_error("cannot open output file: " + path);
  out << content;
  out.flush();
  if (!out.good()) {
    out.close();
    std::error_code ec;
    std::filesystem::remove(path, ec);
    for (const std::string& p : written) std::filesystem::remove(p, ec);
    throw rssfit::config_error("failed while writing output file: " + path);
  }
  written.push_back(path);
}

std::string curves_path_for_mode(const std::string& base, rssfit::FitMode mode, bool both) {
  if (!both) return base;
  const std::filesystem::path p(base);
  std::filesystem::path out = p.parent_path() / p.stem();
  out += std::string(".") + rssfit::to_string(mode);
  out += p.extension();
  return out.string();
}

std::string render_curves(const rssfit::FitResult& fr, const std::vector<double>& amps,
                          double amp_ref_dbm, const rssfit::LinkBudget& lb,
                          const rssfit::PacketSpec& pkt) {
  const int kPoints = 512;
  const double lo = amps.front();
  const double hi = amps.back();
  const rssfit::EmpiricalCdf emp{amps};

  std::ostringstream os;
  os << "# mode=" << rssfit::to_string(fr.mode) << "\n";
  os << "r,ecdf,model_cdf,model_pdf\n";
  char buf[160];
  if (fr.mode == rssfit::FitMode::biased) {
    const rssfit::CensoredModel model(fr.params, lb, pkt, amp_ref_dbm);
    for (int i = 0; i < kPoints; ++i) {
      const double r = lo + (hi - lo) * static_cast<double>(i) / (kPoints - 1);
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g", r, emp(r), model.cdf(r),
                    model.pdf(r));
      os << buf << "\n";
    }
  } else {
    for (int i = 0; i < kPoints; ++i) {
      const double r = lo + (hi - lo) * static_cast<double>(i) / (kPoints - 1);
      const double x = r - fr.params.r_0();
      std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g", r, emp(r),
                    rssfit::rician_cdf(x, fr.params), rssfit::rician_pdf(x, fr.params));
      os << buf << "\n";
    }
  }
  return os.str();
}

int cmd_fit(const FitArgs& args) {
  const rssfit::RunConfig cfg = rssfit::load_run_config(args.config);
  rssfit::Dataset ds = load_dataset(args.input);

  const bool ds_relative = ds.reference == rssfit::RssReference::relative_to_s;
  if (ds_relative != cfg.calibration.relative_to_s && !cfg.explicit_noise_ref)
    throw rssfit::config_error(
        "dataset reference '" + rssfit::to_string(ds.reference) +
        "' does not match the calibration mode; set calibration.relative_to_s accordingly");

  try {
    ds = rssfit::filter_distance(ds, cfg.min_distance_m, cfg.max_distance_m);
  } catch (const std::runtime_error& e) {
    throw rssfit::config_error(e.what());
  }

  const rssfit::LinkBudget lb = rssfit::resolve_link_budget(cfg);
  const rssfit::PacketSpec pkt(cfg.payload_bytes);
  const rssfit::AmplitudeData amp = rssfit::to_amplitudes(ds);

  std::vector<rssfit::FitResult> fits;
  if (args.mode == "naive" || args.mode == "both")
    fits.push_back(rssfit::fit_naive(amp.amplitudes, amp.amp_ref_dbm, {}, cfg.fit));
  if (args.mode == "biased" || args.mode == "both")
    fits.push_back(rssfit::fit_biased(amp.amplitudes, amp.amp_ref_dbm, lb, pkt, {}, cfg.fit));

  nlohmann::json report{
      {"schema", 1},
      {"input", args.input},
      {"source_tag", ds.source_tag},
      {"reference", rssfit::to_string(ds.reference)},
      {"distance_window_m", {cfg.min_distance_m, cfg.max_distance_m}},
      {"n_samples", amp.amplitudes.size()},
      {"amp_ref_dbm", amp.amp_ref_dbm},
      {"link_budget",
       {{"noise_ref_dbm", lb.noise_ref_dbm},
        {"bitrate_hz", lb.bitrate_hz},
        {"bandwidth_hz", lb.bandwidth_hz},
        {"sensitivity_dbm", lb.sensitivity_dbm},
        {"alpha", lb.alpha},
        {"beta", lb.beta}}},
      {"payload_bytes", pkt.payload_bytes()}};
  report["fits"] = nlohmann::json::array();
  for (const rssfit::FitResult& fr : fits)
    report["fits"].push_back(rssfit::fit_report_json(fr, amp.amp_ref_dbm, lb.sensitivity_dbm));

  std::vector<std::string> written;
  write_file(args.output, report.dump(2) + "\n", written);
  if (!args.curves.empty()) {
    const bool both = fits.size() > 1;
    for (const rssfit::FitResult& fr : fits) {
      write_file(curves_path_for_mode(args.curves, fr.mode, both),
                 render_curves(fr, amp.amplitudes, amp.amp_ref_dbm, lb, pkt), written);
    }
  }
  for (const rssfit::FitResult& fr : fits) {
    std::cout << rssfit::to_string(fr.mode) << ": K_dB=" << fr.params.k_db()
              << " r_s=" << fr.params.r_s() << " r_0=" << fr.params.r_0()
              << " rmse=" << fr.rmse << " iterations=" << fr.iterations
              << " converged=" << (fr.converged ? "yes" : "no") << "\n";
  }
  return 0;
}

int cmd_simulate(const SimulateArgs& args) {
  const rssfit::RunConfig cfg = rssfit::load_run_config(args.config);
  const rssfit::LinkBudget lb = rssfit::resolve_link_budget(cfg);
  rssfit::SynthConfig sc = rssfit::make_synth_config(cfg, lb);
  if (args.n) sc.n_accepted = *args.n;
  if (args.seed) sc.seed = *args.seed;
  if (sc.n_accepted < 1) throw rssfit::config_error("simulate: n must be >= 1");

  rssfit::GenerateStats stats;
  rssfit::Dataset ds = rssfit::generate(sc, &stats);
  ds.reference = cfg.calibration.relative_to_s ? rssfit::RssReference::relative_to_s
                                               : rssfit::RssReference::absolute_dbm;
  ds.extra_metadata.emplace_back("truth", rssfit::truth_provenance_json(sc).dump());

  std::ostringstream body;
  rssfit::write_csv(body, ds);
  std::vector<std::string> written;
  write_file(args.output, body.str(), written);

  std::cout << "accepted " << stats.accepted << " of " << stats.attempts
            << " attempts (acceptance rate "
            << static_cast<double>(stats.accepted) / static_cast<double>(stats.attempts)
            << ")\n";
  return 0;
}

int cmd_bias_curve(const BiasCurveArgs& args) {
  if (!(args.step > 0.0)) throw rssfit::config_error("bias-curve: step must be positive");
  if (!(args.rss_min <= args.rss_max))
    throw rssfit::config_error("bias-curve: rss-min exceeds rss-max");
  const rssfit::RunConfig cfg = rssfit::load_run_config(args.config);
  const rssfit::LinkBudget lb = rssfit::resolve_link_budget(cfg);
  const rssfit::PacketSpec pkt(cfg.payload_bytes);

  std::ostringstream os;
  char buf[96];
  if (!cfg.explicit_noise_ref) {
    std::snprintf(buf, sizeof(buf), "# calibrated_point rss_db=%.10g w=%.10g payload_bytes=%d",
                  lb.sensitivity_dbm, cfg.calibration.target_psr,
                  cfg.calibration.calib_payload_bytes);
    os << buf << "\n";
  }
  os << "rss_db,w\n";
  const long steps = static_cast<long>(std::floor((args.rss_max - args.rss_min) / args.step));
  for (long i = 0; i <= steps; ++i) {
    const double rss = args.rss_min + static_cast<double>(i) * args.step;
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g", rss, rssfit::bias_w(rss, lb, pkt));
    os << buf << "\n";
  }
  std::vector<std::string> written;
  write_file(args.output, os.str(), written);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimates Rician signal-strength distribution parameters from censored RSS "
               "measurement datasets"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand(
      "fit", "Fit the signal-strength distribution to a measurement CSV");
  fit->add_option("--input", fit_args.input, "Measurement CSV")->required();
  fit->add_option("--config", fit_args.config, "JSON run configuration")->required();
  fit->add_option("--mode", fit_args.mode, "naive, biased, or both")
      ->check(CLI::IsMember({"naive", "biased", "both"}));
  fit->add_option("--output", fit_args.output, "JSON report path")->required();
  fit->add_option("--curves", fit_args.curves,
                  "Plot-ready CSV (r,ecdf,model_cdf,model_pdf); with --mode both the mode name "
                  "is inserted before the extension");

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Generate a synthetic censored measurement CSV from the config truth block");
  sim->add_option("--config", sim_args.config, "JSON run configuration with truth block")
      ->required();
  sim->add_option("--n", sim_args.n, "Accepted-sample count (overrides truth.n)");
  sim->add_option("--seed", sim_args.seed, "RNG seed (overrides truth.seed)");
  sim->add_option("--output", sim_args.output, "Output CSV path")->required();

  BiasCurveArgs curve_args;
  CLI::App* curve = app.add_subcommand(
      "bias-curve", "Tabulate the packet-success bias function w over an RSS range");
  curve->add_option("--config", curve_args.config, "JSON run configuration")->required();
  curve->add_option("--rss-min", curve_args.rss_min, "Range start (dB)");
  curve->add_option("--rss-max", curve_args.rss_max, "Range end (dB)");
  curve->add_option("--step", curve_args.step, "Grid step (dB)");
  curve->add_option("--output", curve_args.output, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_args);
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (curve->parsed()) return cmd_bias_curve(curve_args);
  } catch (const rssfit::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
