#pragma once

// Experiment configuration (JSON, schema-validated with field-level
// messages), result-bundle persistence, and the plot/scan/campaign table
// writers used by the CLI.

#include <slerb/fitkit.hpp>
#include <slerb/pipeline.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace slerb::io {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kConfigSchema = "slerb-config-v1";

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Mode {
  clifford_mc,
  hamiltonian,
  twirled_channel,
  analyze_only,
  calibration_scan,
  random_unitary_campaign,
};

inline Mode mode_from_name(const std::string& s) {
  if (s == "clifford_mc") return Mode::clifford_mc;
  if (s == "hamiltonian") return Mode::hamiltonian;
  if (s == "twirled_channel") return Mode::twirled_channel;
  if (s == "analyze_only") return Mode::analyze_only;
  if (s == "calibration_scan") return Mode::calibration_scan;
  if (s == "random_unitary_campaign") return Mode::random_unitary_campaign;
  throw ConfigError("mode: unknown value '" + s + "'");
}

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::clifford_mc: return "clifford_mc";
    case Mode::hamiltonian: return "hamiltonian";
    case Mode::twirled_channel: return "twirled_channel";
    case Mode::analyze_only: return "analyze_only";
    case Mode::calibration_scan: return "calibration_scan";
    case Mode::random_unitary_campaign: return "random_unitary_campaign";
  }
  return "?";
}

struct ExperimentConfig {
  Mode mode = Mode::clifford_mc;
  std::uint64_t seed = 1;
  std::vector<int> lengths = pipeline::default_lengths();
  bool lengths_explicit = false;
  int randomizations = 50;
  int shots = 0;

  // error channel (clifford_mc / twirled_channel / campaign)
  double alpha_rb = 0.0;
  double alpha_leak = 0.0;
  bool random_sign = true;
  double sigma2 = 0.0;

  dynsim::MsGateParams gate;
  dynsim::ErrorInjection injection;
  dynsim::ResetPolicy reset_policy = dynsim::ResetPolicy::reset_each_gate;

  fitkit::FitModel fit_model = fitkit::FitModel::no_spam;
  bool fit_model_explicit = false;
  int bootstrap_resamples = 0;

  pipeline::ScanParam scan_param = pipeline::ScanParam::detuning;
  std::vector<double> scan_values;
  int scan_length = 100;

  int campaign_channels = 1000;
  double campaign_sigma2 = 0.01;

  std::string input_curve;
  std::string out_dir = ".";
  std::string out_prefix = "slerb";

  std::string raw_text;         // byte-exact input echo
  json effective;               // after overrides
  std::vector<std::string> overrides;
};

namespace detail {

inline void check_keys(const json& j, const std::string& section,
                       const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok |= (it.key() == k);
    if (!ok) throw ConfigError(section + ": unknown field '" + it.key() + "'");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& section) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(section + "." + key + ": wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config_json(const json& j, const std::string& raw_text = {}) {
  using detail::check_keys;
  using detail::get_or;
  ExperimentConfig cfg;
  cfg.raw_text = raw_text;
  cfg.effective = j;

  check_keys(j, "config",
             {"schema", "mode", "seed", "lengths", "randomizations", "shots", "error", "gate",
              "injection", "reset_policy", "fit", "scan", "campaign", "input_curve", "output"});
  if (j.contains("schema") && j.at("schema") != kConfigSchema)
    throw ConfigError("schema: expected '" + std::string(kConfigSchema) + "'");
  if (!j.contains("mode")) throw ConfigError("mode: required field is missing");
  cfg.mode = mode_from_name(j.at("mode").get<std::string>());
  cfg.seed = get_or<std::uint64_t>(j, "seed", 1, "config");

  if (j.contains("lengths")) {
    try {
      cfg.lengths = j.at("lengths").get<std::vector<int>>();
      cfg.lengths_explicit = true;
    } catch (const json::exception&) {
      throw ConfigError("lengths: must be an array of integers");
    }
  }
  if (cfg.lengths.empty()) throw ConfigError("lengths: must not be empty");
  for (size_t k = 0; k < cfg.lengths.size(); ++k) {
    if (cfg.lengths[k] < 0) throw ConfigError("lengths: values must be non-negative");
    if (k > 0 && cfg.lengths[k] <= cfg.lengths[k - 1])
      throw ConfigError("lengths: values must be strictly increasing");
  }
  cfg.randomizations = get_or<int>(j, "randomizations", 50, "config");
  if (cfg.randomizations < 1) throw ConfigError("randomizations: must be at least 1");
  cfg.shots = get_or<int>(j, "shots", 0, "config");
  if (cfg.shots < 0) throw ConfigError("shots: must be non-negative (0 = exact populations)");

  if (j.contains("error")) {
    const auto& e = j.at("error");
    check_keys(e, "error", {"alpha_rb", "alpha_leak", "random_sign", "sigma2"});
    cfg.alpha_rb = get_or<double>(e, "alpha_rb", 0.0, "error");
    cfg.alpha_leak = get_or<double>(e, "alpha_leak", 0.0, "error");
    cfg.random_sign = get_or<bool>(e, "random_sign", true, "error");
    cfg.sigma2 = get_or<double>(e, "sigma2", 0.0, "error");
    if (cfg.sigma2 < 0.0) throw ConfigError("error.sigma2: must be non-negative");
  }

  if (j.contains("gate")) {
    const auto& g = j.at("gate");
    check_keys(g, "gate",
               {"omega_ms_over_2pi", "delta_over_2pi", "gate_time", "walsh", "n_fock",
                "steps_per_half", "carrier_omega_over_2pi"});
    cfg.gate.omega_ms = 2.0 * M_PI * get_or<double>(g, "omega_ms_over_2pi", 1.0, "gate");
    cfg.gate.delta = 2.0 * M_PI * get_or<double>(g, "delta_over_2pi", 2.0 * std::sqrt(2.0), "gate");
    cfg.gate.gate_time = get_or<double>(g, "gate_time", 1.0 / std::sqrt(2.0), "gate");
    cfg.gate.walsh = get_or<bool>(g, "walsh", true, "gate");
    cfg.gate.n_fock = get_or<int>(g, "n_fock", 15, "gate");
    if (cfg.gate.n_fock < 8) throw ConfigError("gate.n_fock: must be at least 8");
    cfg.gate.steps_per_half = get_or<int>(g, "steps_per_half", 64, "gate");
    if (cfg.gate.steps_per_half < 4) throw ConfigError("gate.steps_per_half: must be at least 4");
    const double carrier = get_or<double>(g, "carrier_omega_over_2pi", 0.0, "gate");
    if (carrier < 0.0) throw ConfigError("gate.carrier_omega_over_2pi: must be non-negative");
    if (carrier > 0.0) cfg.gate.carrier = dynsim::CarrierParams{2.0 * M_PI * carrier};
  }

  if (j.contains("injection")) {
    const auto& i = j.at("injection");
    check_keys(i, "injection",
               {"fractional_rabi_offset", "fractional_detuning_offset", "global_qubit_freq_offset",
                "differential_qubit_freq_shift", "carrier_phase_offset", "differential_carrier_rabi",
                "spin_motion_asymmetry"});
    cfg.injection.fractional_rabi_offset = get_or<double>(i, "fractional_rabi_offset", 0.0, "injection");
    cfg.injection.fractional_detuning_offset =
        get_or<double>(i, "fractional_detuning_offset", 0.0, "injection");
    cfg.injection.global_qubit_freq_offset =
        get_or<double>(i, "global_qubit_freq_offset", 0.0, "injection");
    cfg.injection.differential_qubit_freq_shift =
        get_or<double>(i, "differential_qubit_freq_shift", 0.0, "injection");
    cfg.injection.carrier_phase_offset = get_or<double>(i, "carrier_phase_offset", 0.0, "injection");
    cfg.injection.differential_carrier_rabi =
        get_or<double>(i, "differential_carrier_rabi", 0.0, "injection");
    cfg.injection.spin_motion_asymmetry = get_or<double>(i, "spin_motion_asymmetry", 0.0, "injection");
  }

  if (j.contains("reset_policy")) {
    try {
      cfg.reset_policy = dynsim::reset_policy_from_name(j.at("reset_policy").get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("reset_policy: ") + e.what());
    }
  }

  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    check_keys(f, "fit", {"model", "bootstrap_resamples"});
    if (f.contains("model")) {
      try {
        cfg.fit_model = fitkit::fit_model_from_name(f.at("model").get<std::string>());
        cfg.fit_model_explicit = true;
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("fit.model: ") + e.what());
      }
    }
    cfg.bootstrap_resamples = get_or<int>(f, "bootstrap_resamples", 0, "fit");
    if (cfg.bootstrap_resamples < 0) throw ConfigError("fit.bootstrap_resamples: must be non-negative");
  }

  if (j.contains("scan")) {
    const auto& s = j.at("scan");
    check_keys(s, "scan", {"param", "values", "length"});
    if (s.contains("param")) {
      try {
        cfg.scan_param = pipeline::scan_param_from_name(s.at("param").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("scan.param: ") + e.what());
      }
    }
    cfg.scan_values = get_or<std::vector<double>>(s, "values", {}, "scan");
    cfg.scan_length = get_or<int>(s, "length", 100, "scan");
    if (cfg.scan_length < 1) throw ConfigError("scan.length: must be positive");
  }

  if (j.contains("campaign")) {
    const auto& c = j.at("campaign");
    check_keys(c, "campaign", {"n_channels", "sigma2"});
    cfg.campaign_channels = get_or<int>(c, "n_channels", 1000, "campaign");
    cfg.campaign_sigma2 = get_or<double>(c, "sigma2", 0.01, "campaign");
    if (cfg.campaign_sigma2 <= 0.0) throw ConfigError("campaign.sigma2: must be positive");
  }

  cfg.input_curve = get_or<std::string>(j, "input_curve", "", "config");
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, "output", {"dir", "prefix"});
    cfg.out_dir = get_or<std::string>(o, "dir", ".", "output");
    cfg.out_prefix = get_or<std::string>(o, "prefix", "slerb", "output");
  }

  // Mode-specific requirements.
  switch (cfg.mode) {
    case Mode::clifford_mc:
      if (cfg.sigma2 != 0.0)
        throw ConfigError("error.sigma2: Gaussian channels are only supported in "
                          "twirled_channel and random_unitary_campaign modes");
      break;
    case Mode::twirled_channel:
      if (cfg.shots != 0)
        throw ConfigError("shots: twirled_channel mode computes the infinite-shot limit (shots must be 0)");
      break;
    case Mode::analyze_only:
      if (cfg.input_curve.empty()) throw ConfigError("input_curve: required in analyze_only mode");
      break;
    case Mode::calibration_scan:
      if (cfg.scan_values.size() < 2)
        throw ConfigError("scan.values: calibration_scan needs at least 2 scan values");
      break;
    case Mode::random_unitary_campaign:
      if (cfg.campaign_channels < 10)
        throw ConfigError("campaign.n_channels: must be at least 10");
      break;
    default:
      break;
  }
  return cfg;
}

// Apply a dotted-key override ("gate.n_fock=20") to a JSON document.  The
// value is parsed as JSON when possible, else taken as a string.
inline void apply_override(json& j, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + spec + "': expected key=value");
  const std::string path = spec.substr(0, eq);
  const std::string value = spec.substr(eq + 1);
  json* node = &j;
  size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("override '" + spec + "': empty key segment");
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::exception&) {
        parsed = value;
      }
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string raw = buf.str();
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  // The echoed config must re-validate on its own, so a config file has to
  // be self-contained; flags may only override fields, not complete them.
  if (!overrides.empty()) parse_config_json(json::parse(raw), raw);
  for (const auto& o : overrides) apply_override(j, o);
  ExperimentConfig cfg = parse_config_json(j, raw);
  cfg.overrides = overrides;
  return cfg;
}

// --------------------------------------------------------------------------
// Report writers.

inline json fit_to_json(const fitkit::DecayFit& fit) {
  auto param = [](const fitkit::FitParam& p) {
    return json{{"value", p.value}, {"ci_lo", p.ci_lo}, {"ci_hi", p.ci_hi}};
  };
  json j{{"model", fitkit::fit_model_name(fit.model)},
         {"converged", fit.converged},
         {"chi2", fit.chi2},
         {"dof", fit.dof},
         {"iterations", fit.iterations},
         {"eps_rb", param(fit.eps_rb)},
         {"eps_leak", param(fit.eps_leak)},
         {"eps_spam", param(fit.eps_spam)},
         {"q_rb", fit.q_rb},
         {"q_leak", fit.q_leak}};
  if (!fit.diagnostic.empty()) j["diagnostic"] = fit.diagnostic;
  if (fit.model == fitkit::FitModel::general_three_exp) j["q_leak_minus"] = fit.q_leak_minus;
  j["estimators"] = {
      {"transfer",
       {{"clifford_infidelity", fit.estimates.transfer.clifford_infidelity},
        {"eps_2q", fit.estimates.transfer.eps_2q},
        {"avg_fidelity", fit.estimates.transfer.fidelity.average_fidelity}}},
      {"group",
       {{"process_fidelity", fit.estimates.group.fidelity.process_fidelity},
        {"avg_fidelity", fit.estimates.group.fidelity.average_fidelity},
        {"eps_2q", fit.estimates.group.eps_2q}}}};
  return j;
}

inline json asymptote_to_json(const fitkit::AsymptoteDiagnostic& diag) {
  const char* verdict = diag.verdict == fitkit::AsymptoteVerdict::symmetric_consistent
                            ? "symmetric_consistent"
                            : diag.verdict == fitkit::AsymptoteVerdict::antisymmetric_flagged
                                  ? "antisymmetric_flagged"
                                  : "inconclusive";
  json j{{"verdict", verdict}};
  if (diag.verdict != fitkit::AsymptoteVerdict::inconclusive) {
    j["a_survival"] = diag.a_survival;
    j["a_flip"] = diag.a_flip;
    j["a_leak"] = diag.a_leak;
    j["sigma_survival"] = diag.sigma_survival;
    j["sigma_flip"] = diag.sigma_flip;
    j["sigma_leak"] = diag.sigma_leak;
  }
  if (!diag.note.empty()) j["note"] = diag.note;
  return j;
}

// Plot-ready table: per length, measured means with randomization spread and
// the fitted-model populations.
inline void write_plot_csv(std::ostream& os, const fitkit::PopulationCurve& curve,
                           const fitkit::DecayFit& fit) {
  os << "length,p_survival,p_survival_err,p_flip,p_flip_err,p_leak,p_leak_err,"
        "model_survival,model_flip,model_leak\n";
  char buf[320];
  for (int li = 0; li < curve.n_lengths(); ++li) {
    const auto st = curve.stats(li);
    const auto model = errmodel::spam_populations({fit.eps_rb.value, fit.eps_leak.value},
                                                  fit.eps_spam.value, curve.lengths[li]);
    std::snprintf(buf, sizeof buf, "%d,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g\n",
                  curve.lengths[li], st.mean.p_survival, std::sqrt(st.var.p_survival),
                  st.mean.p_flip, std::sqrt(st.var.p_flip), st.mean.p_leak,
                  std::sqrt(st.var.p_leak), model.p_survival, model.p_flip, model.p_leak);
    os << buf;
  }
}

inline void write_scan_csv(std::ostream& os, const pipeline::ScanResult& scan) {
  os << "value,p_survival,p_survival_err,p_flip,p_flip_err,p_leak,p_leak_err,"
        "best_survival,best_leak\n";
  char buf[320];
  for (size_t k = 0; k < scan.points.size(); ++k) {
    const auto& pt = scan.points[k];
    std::snprintf(buf, sizeof buf, "%.12g,%.8g,%.8g,%.8g,%.8g,%.8g,%.8g,%d,%d\n", pt.value,
                  pt.mean.p_survival, pt.spread.p_survival, pt.mean.p_flip, pt.spread.p_flip,
                  pt.mean.p_leak, pt.spread.p_leak,
                  static_cast<int>(k) == scan.best_survival_index,
                  static_cast<int>(k) == scan.best_leak_index);
    os << buf;
  }
}

inline void write_campaign_csv(std::ostream& os, const pipeline::CampaignResult& res) {
  os << "channel,true_process_infidelity,q_rb,q_leak,group_process_infidelity,"
        "transfer_process_infidelity,err_group,err_transfer\n";
  char buf[320];
  for (size_t k = 0; k < res.channels.size(); ++k) {
    const auto& c = res.channels[k];
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", k,
                  c.true_process_infidelity, c.q_rb, c.q_leak, c.group_process_infidelity,
                  c.transfer_process_infidelity, c.err_group, c.err_transfer);
    os << buf;
  }
}

inline json campaign_summary_json(const pipeline::CampaignResult& res) {
  return json{{"n_channels", res.channels.size()},
              {"err_group", {{"mean", res.mean_err_group}, {"std", res.std_err_group}}},
              {"err_transfer", {{"mean", res.mean_err_transfer}, {"std", res.std_err_transfer}}},
              {"fidelity_correlation",
               {{"group", res.fidelity_correlation_group},
                {"transfer", res.fidelity_correlation_transfer}}}};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << content;
}

}  // namespace slerb::io
