// slerb: config-driven runner for SLERB generation, simulation, fitting, and
// reporting.
//
// Verbs:
//   slerb run <config.json> [--set key=value ...]
//   slerb scan <config.json> [--set ...]
//   slerb campaign <config.json> [--set ...]
//   slerb analyze <curve.csv> [--model M] [--bootstrap N] [--seed S] [--out prefix]
//   slerb catalogue --export <path>
//   slerb group --verify
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure.

#include <slerb/io.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace slerb;
using io::ConfigError;
using io::ExperimentConfig;
using io::Mode;
using nlohmann::json;

namespace {

struct BundlePaths {
  fs::path curve, fit, plot, report, scan, campaign_csv, campaign_summary;
};

BundlePaths bundle_paths(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  const std::string p = cfg.out_prefix;
  return {dir / (p + "_curve.csv"),        dir / (p + "_fit.json"),
          dir / (p + "_plot.csv"),         dir / (p + "_report.json"),
          dir / (p + "_scan.csv"),         dir / (p + "_campaign.csv"),
          dir / (p + "_campaign_summary.json")};
}

json base_report(const ExperimentConfig& cfg, double wall_s, std::uint64_t catalogue_hash) {
  json rep{{"schema", "slerb-report-v1"},
           {"version", io::kVersion},
           {"mode", io::mode_name(cfg.mode)},
           {"seed", cfg.seed},
           {"config_echo", cfg.raw_text},
           {"overrides", cfg.overrides},
           {"effective_config", cfg.effective},
           {"provenance",
            {{"wall_time_s", wall_s},
             {"catalogue_hash", catalogue_hash}}}};
  return rep;
}

fitkit::FitModel effective_fit_model(const ExperimentConfig& cfg) {
  if (cfg.fit_model_explicit) return cfg.fit_model;
  if (cfg.mode == Mode::twirled_channel) return fitkit::FitModel::blind_rb;
  return cfg.fit_model;
}

fitkit::DecayFit fit_curve(const ExperimentConfig& cfg, const fitkit::PopulationCurve& curve) {
  const auto model = effective_fit_model(cfg);
  bool can_bootstrap = cfg.bootstrap_resamples > 0;
  for (const auto& recs : curve.records) can_bootstrap &= recs.size() >= 2;
  if (can_bootstrap)
    return fitkit::fit_slerb_with_ci(curve, model, cfg.bootstrap_resamples,
                                     derive_seed(cfg.seed, "fit-bootstrap", 0));
  auto fit = fitkit::fit_slerb(curve, model);
  if (cfg.bootstrap_resamples > 0)
    fit.diagnostic += std::string(fit.diagnostic.empty() ? "" : "; ") +
                      "bootstrap skipped: fewer than 2 randomizations per length";
  return fit;
}

int write_curve_bundle(const ExperimentConfig& cfg, const fitkit::PopulationCurve& curve,
                       std::uint64_t catalogue_hash, double wall_s) {
  const auto paths = bundle_paths(cfg);
  fs::create_directories(cfg.out_dir);

  {
    std::ofstream out(paths.curve, std::ios::binary);
    fitkit::write_curve_csv(out, curve);
  }

  const auto fit = fit_curve(cfg, curve);
  json fit_json = io::fit_to_json(fit);
  try {
    fit_json["asymptotes"] = io::asymptote_to_json(fitkit::asymptote_diagnostic(curve));
  } catch (const std::exception&) {
    // diagnostic unavailable for degenerate curves; fit report stands alone
  }
  io::write_text_file(paths.fit, fit_json.dump(2) + "\n");

  {
    std::ofstream out(paths.plot, std::ios::binary);
    io::write_plot_csv(out, curve, fit);
  }

  json rep = base_report(cfg, wall_s, catalogue_hash);
  rep["files"] = {{"curve", paths.curve.string()},
                  {"fit", paths.fit.string()},
                  {"plot", paths.plot.string()}};
  rep["fit"] = fit_json;
  io::write_text_file(paths.report, rep.dump(2) + "\n");

  std::cout << "eps_rb = " << fit.eps_rb.value << ", eps_leak = " << fit.eps_leak.value
            << ", eps_2q(transfer) = " << fit.estimates.transfer.eps_2q
            << ", eps_2q(group) = " << fit.estimates.group.eps_2q << "\n"
            << "report: " << paths.report.string() << "\n";
  if (!fit.converged) {
    std::cerr << "fit did not converge: " << fit.diagnostic << "\n";
    return 3;
  }
  return 0;
}

int cmd_run(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  switch (cfg.mode) {
    case Mode::clifford_mc: {
      const auto cat = msgates::build_clifford_catalogue();
      pipeline::CliffordMcConfig mc;
      mc.lengths = cfg.lengths;
      mc.randomizations = cfg.randomizations;
      mc.shots = cfg.shots;
      mc.alpha_rb = cfg.alpha_rb;
      mc.alpha_leak = cfg.alpha_leak;
      mc.random_sign = cfg.random_sign;
      mc.seed = cfg.seed;
      const auto curve = pipeline::run_clifford_mc(cat, mc);
      return write_curve_bundle(cfg, curve, cat.hash(), wall());
    }
    case Mode::hamiltonian: {
      const auto cat = msgates::build_clifford_catalogue();
      pipeline::HamiltonianConfig hc;
      hc.lengths = cfg.lengths;
      hc.randomizations = cfg.randomizations;
      hc.shots = cfg.shots;
      hc.gate = cfg.gate;
      hc.injection = cfg.injection;
      hc.policy = cfg.reset_policy;
      hc.seed = cfg.seed;
      const auto curve = pipeline::run_hamiltonian(cat, hc);
      return write_curve_bundle(cfg, curve, cat.hash(), wall());
    }
    case Mode::twirled_channel: {
      if (cfg.sigma2 > 0.0 && (cfg.alpha_rb != 0.0 || cfg.alpha_leak != 0.0))
        throw ConfigError("error: sigma2 is exclusive with alpha_rb/alpha_leak");
      auto rng = make_rng(cfg.seed, "channel", 0);
      qcore::Mat lambda = qcore::identity(16);
      if (cfg.sigma2 > 0.0) {
        lambda = errmodel::channel_process_matrix(
            {errmodel::NoiseKind::random_pauli_gaussian, 0.0, cfg.sigma2, false}, rng);
      } else {
        if (cfg.alpha_leak != 0.0)
          lambda = errmodel::channel_process_matrix(
                       {errmodel::NoiseKind::leakage, cfg.alpha_leak, 0.0, cfg.random_sign}, rng) *
                   lambda;
        if (cfg.alpha_rb != 0.0)
          lambda = errmodel::channel_process_matrix(
                       {errmodel::NoiseKind::rb_conserving, cfg.alpha_rb, 0.0, false}, rng) *
                   lambda;
      }
      const auto group = grouprep::generate_group(msgates::ms_unitary(M_PI / 2.0, 0.0),
                                                  msgates::ms_unitary(M_PI / 2.0, M_PI / 4.0));
      const auto curve = pipeline::twirled_channel_curve(grouprep::twirl(lambda, group), cfg.lengths);
      return write_curve_bundle(cfg, curve, 0, wall());
    }
    case Mode::analyze_only: {
      std::ifstream in(cfg.input_curve, std::ios::binary);
      if (!in) throw ConfigError("input_curve: cannot open " + cfg.input_curve);
      const auto curve = fitkit::read_curve_csv(in);
      return write_curve_bundle(cfg, curve, 0, wall());
    }
    case Mode::calibration_scan: {
      const auto cat = msgates::build_clifford_catalogue();
      pipeline::HamiltonianConfig base;
      base.gate = cfg.gate;
      base.injection = cfg.injection;
      base.policy = cfg.reset_policy;
      base.seed = cfg.seed;
      const auto scan = pipeline::calibration_scan(cat, cfg.scan_param, cfg.scan_values,
                                                   cfg.scan_length, cfg.randomizations, cfg.shots,
                                                   base);
      const auto paths = bundle_paths(cfg);
      fs::create_directories(cfg.out_dir);
      {
        std::ofstream out(paths.scan, std::ios::binary);
        io::write_scan_csv(out, scan);
      }
      json rep = base_report(cfg, wall(), cat.hash());
      rep["files"] = {{"scan", paths.scan.string()}};
      rep["scan"] = {{"param", cfg.scan_param == pipeline::ScanParam::detuning ? "detuning" : "rabi"},
                     {"length", scan.length},
                     {"best_survival_value", scan.points[scan.best_survival_index].value},
                     {"best_leak_value", scan.points[scan.best_leak_index].value}};
      io::write_text_file(paths.report, rep.dump(2) + "\n");
      std::cout << "scan written to " << paths.scan.string() << "\n";
      return 0;
    }
    case Mode::random_unitary_campaign: {
      const auto group = grouprep::generate_group(msgates::ms_unitary(M_PI / 2.0, 0.0),
                                                  msgates::ms_unitary(M_PI / 2.0, M_PI / 4.0));
      std::vector<int> lengths = cfg.lengths;
      if (!cfg.lengths_explicit) {
        lengths.clear();
        for (int l = 0; l <= 20; ++l) lengths.push_back(l);
      }
      const auto res = pipeline::run_campaign(group, cfg.campaign_channels, cfg.campaign_sigma2,
                                              lengths, cfg.seed);
      const auto paths = bundle_paths(cfg);
      fs::create_directories(cfg.out_dir);
      {
        std::ofstream out(paths.campaign_csv, std::ios::binary);
        io::write_campaign_csv(out, res);
      }
      io::write_text_file(paths.campaign_summary, io::campaign_summary_json(res).dump(2) + "\n");
      json rep = base_report(cfg, wall(), 0);
      rep["files"] = {{"campaign", paths.campaign_csv.string()},
                      {"summary", paths.campaign_summary.string()}};
      rep["campaign"] = io::campaign_summary_json(res);
      io::write_text_file(paths.report, rep.dump(2) + "\n");
      std::cout << "e_F group: " << res.mean_err_group << " +- " << res.std_err_group
                << ", transfer: " << res.mean_err_transfer << " +- " << res.std_err_transfer << "\n"
                << "report: " << paths.report.string() << "\n";
      return 0;
    }
  }
  throw ConfigError("mode: unhandled");
}

int cmd_catalogue_export(const std::string& path) {
  const auto cat = msgates::build_clifford_catalogue();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "slerb_catalogue entries 24 total_pulses " << cat.total_pulses << " hash "
      << cat.hash() << "\n";
  char buf[64];
  for (const auto& e : cat.entries) {
    out << "entry " << e.id << " pulses " << e.pulses.size();
    for (const auto& p : e.pulses) {
      std::snprintf(buf, sizeof buf, " %.12g %.12g", p.theta, p.phi);
      out << buf;
    }
    out << "\n";
    grouprep::export_matrix(out, "rb_action_" + std::to_string(e.id), e.rb_action);
  }
  std::cout << "catalogue exported to " << path << "\n";
  return 0;
}

int cmd_group_verify() {
  const auto group = grouprep::generate_group(msgates::ms_unitary(M_PI / 2.0, 0.0),
                                              msgates::ms_unitary(M_PI / 2.0, M_PI / 4.0));
  bool ok = true;
  auto line = [&](const char* what, bool pass) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << what << "\n";
    ok &= pass;
  };
  line("group order is 96", group.order() == 96);
  line("identity element present", group.find(qcore::identity(4)) >= 0);

  const auto cat = msgates::build_clifford_catalogue();
  bool members = true;
  for (const auto& e : cat.entries) members &= group.find(e.full_unitary) >= 0;
  line("all 24 catalogue Cliffords are group members", members);

  const auto& projs = grouprep::irrep_projectors();
  qcore::Mat total = qcore::Mat::Zero(16, 16);
  for (const auto& p : projs) total += p.projector;
  line("irrep projectors sum to identity", qcore::max_abs(total - qcore::identity(16)) < 1e-9);
  const int expected_rank[6] = {3, 3, 1, 1, 4, 4};
  bool ranks = true;
  for (int k = 0; k < 6; ++k)
    ranks &= std::lround(projs[k].projector.trace().real()) == expected_rank[k];
  line("irrep projector ranks are (3,3,1,1,4,4)", ranks);

  bool commutes = true;
  for (const auto& p : projs)
    for (int i = 0; i < group.order(); i += 11)
      commutes &= qcore::max_abs(p.projector * group.process_reps[i] -
                                 group.process_reps[i] * p.projector) < 1e-9;
  line("projectors commute with the group representation", commutes);
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SLERB benchmarking toolkit"};
  app.require_subcommand(1);

  std::string config_path, curve_path, export_path, out_prefix = "analyze";
  std::string model_name;
  std::vector<std::string> overrides;
  int bootstrap = 0;
  std::uint64_t seed = 1;
  bool verify = false;

  auto* run = app.add_subcommand("run", "run a configured experiment end to end");
  run->add_option("config", config_path, "JSON experiment config")->required();
  run->add_option("--set", overrides, "override a config field by dotted key (key=value)");

  auto* scan = app.add_subcommand("scan", "run a calibration scan");
  scan->add_option("config", config_path, "JSON experiment config")->required();
  scan->add_option("--set", overrides, "override a config field by dotted key (key=value)");

  auto* campaign = app.add_subcommand("campaign", "run a random-unitary estimator campaign");
  campaign->add_option("config", config_path, "JSON experiment config")->required();
  campaign->add_option("--set", overrides, "override a config field by dotted key (key=value)");

  auto* analyze = app.add_subcommand("analyze", "fit a stored curve file");
  analyze->add_option("curve", curve_path, "curve CSV file")->required();
  analyze->add_option("--model", model_name, "fit model (no_spam, with_spam, blind_rb, general_three_exp)");
  analyze->add_option("--bootstrap", bootstrap, "bootstrap resamples for confidence intervals");
  analyze->add_option("--seed", seed, "seed for the bootstrap resampler");
  analyze->add_option("--out", out_prefix, "output file prefix");

  auto* catalogue = app.add_subcommand("catalogue", "Clifford catalogue utilities");
  catalogue->add_option("--export", export_path, "write the catalogue to a text file")->required();

  auto* group = app.add_subcommand("group", "benchmarking group utilities");
  group->add_flag("--verify", verify, "verify group order and irrep structure");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(io::load_config(config_path, overrides));
    if (scan->parsed()) {
      auto cfg = io::load_config(config_path, overrides);
      if (cfg.mode != Mode::calibration_scan)
        throw ConfigError("scan verb requires mode = calibration_scan");
      return cmd_run(cfg);
    }
    if (campaign->parsed()) {
      auto cfg = io::load_config(config_path, overrides);
      if (cfg.mode != Mode::random_unitary_campaign)
        throw ConfigError("campaign verb requires mode = random_unitary_campaign");
      return cmd_run(cfg);
    }
    if (analyze->parsed()) {
      json j{{"mode", "analyze_only"}, {"input_curve", curve_path}, {"seed", seed},
             {"output", {{"prefix", out_prefix}}}};
      if (!model_name.empty()) j["fit"] = {{"model", model_name}};
      if (bootstrap > 0) {
        if (!j.contains("fit")) j["fit"] = json::object();
        j["fit"]["bootstrap_resamples"] = bootstrap;
      }
      auto cfg = io::parse_config_json(j, j.dump(2) + "\n");
      return cmd_run(cfg);
    }
    if (catalogue->parsed()) return cmd_catalogue_export(export_path);
    if (group->parsed()) {
      if (!verify) throw ConfigError("group: nothing to do (use --verify)");
      return cmd_group_verify();
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
