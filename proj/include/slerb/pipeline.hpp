#pragma once

// End-to-end experiment drivers: Clifford-level Monte Carlo, exact
// twirled-channel curves, Hamiltonian-level SLERB runs, calibration scans,
// and the random-unitary estimator campaign.  All randomness fans out from a
// master seed through derive_seed, so results are reproducible regardless of
// thread scheduling.

#include <slerb/curve.hpp>
#include <slerb/dynsim.hpp>
#include <slerb/errmodel.hpp>
#include <slerb/fitkit.hpp>
#include <slerb/grouprep.hpp>
#include <slerb/msgates.hpp>

#include <thread>
#include <vector>

namespace slerb::pipeline {

using qcore::Mat;
using qcore::Vec;

// Striped deterministic parallel loop; results must be written to
// caller-owned slots indexed by the loop variable.
template <class Fn>
inline void parallel_for(int n, Fn&& fn, unsigned n_threads = 0) {
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(std::max(1, n)));
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n_threads; ++t)
    pool.emplace_back([&, t] {
      for (int i = static_cast<int>(t); i < n; i += static_cast<int>(n_threads)) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline std::vector<int> default_lengths(int l_max = 200, int count = 12) {
  std::vector<int> lengths = {0};
  for (int k = 1; k < count; ++k) {
    const int l = static_cast<int>(std::lround(std::pow(double(l_max), k / double(count - 1))));
    if (l > lengths.back()) lengths.push_back(l);
  }
  return lengths;
}

// --------------------------------------------------------------------------
// Clifford-level Monte Carlo with per-Clifford error unitaries.

struct CliffordMcConfig {
  std::vector<int> lengths;
  int randomizations = 100;
  int shots = 0;  // 0 = exact per-circuit populations
  double alpha_rb = 0.0;
  double alpha_leak = 0.0;
  bool random_sign = true;
  std::uint64_t seed = 1;
};

// Each of the l random Cliffords is followed by the leakage error (fresh
// sign per occurrence when random_sign) and then the RB-conserving error;
// the inversion Clifford is applied ideally so the curve is directly
// comparable to (I + T)^l applied to (1, 0, 0).
inline fitkit::PopulationCurve run_clifford_mc(const msgates::CliffordCatalogue& cat,
                                               const CliffordMcConfig& cfg) {
  Rng dummy(0);
  const Mat u_rb = errmodel::make_error_unitary(
      {errmodel::NoiseKind::rb_conserving, cfg.alpha_rb, 0.0, false}, dummy);
  const Mat u_leak_p = errmodel::make_error_unitary(
      {errmodel::NoiseKind::leakage, cfg.alpha_leak, 0.0, false}, dummy);
  const Mat u_leak_m = errmodel::make_error_unitary(
      {errmodel::NoiseKind::leakage, -cfg.alpha_leak, 0.0, false}, dummy);

  fitkit::PopulationCurve curve;
  curve.lengths = cfg.lengths;
  curve.shots = cfg.shots;
  curve.seed = cfg.seed;
  curve.records.resize(cfg.lengths.size());
  for (auto& recs : curve.records) recs.resize(cfg.randomizations);

  const int n_li = static_cast<int>(cfg.lengths.size());
  parallel_for(n_li * cfg.randomizations, [&](int job) {
    const int li = job / cfg.randomizations;
    const int r = job % cfg.randomizations;
    auto rng = make_rng(cfg.seed, "clifford_mc", job);
    const auto seq = msgates::sample_sequence(cat, cfg.lengths[li], rng);

    Vec psi = qcore::basis_ket(0, 4);
    const int l = seq.length();
    for (int k = 0; k < l; ++k) {
      psi = cat.entries[seq.clifford_ids[k]].full_unitary * psi;
      if (cfg.alpha_leak != 0.0)
        psi = (cfg.random_sign && (rng() & 1u)) ? u_leak_m * psi : u_leak_p * psi;
      if (cfg.alpha_rb != 0.0) psi = u_rb * psi;
    }
    psi = cat.entries[seq.clifford_ids[l]].full_unitary * psi;

    fitkit::RandRecord rec;
    rec.target = seq.target_state;
    std::array<double, 4> p{};
    for (int a = 0; a < 4; ++a) p[a] = std::norm(psi(a));
    rec.n = cfg.shots > 0 ? fitkit::multinomial_counts(p, cfg.shots, rng) : p;
    curve.records[li][r] = rec;
  });
  return curve;
}

// --------------------------------------------------------------------------
// Exact populations from a twirled channel (infinite shot/randomization
// limit), computed by repeated superket application.

inline fitkit::PopulationCurve twirled_channel_curve(const Mat& twirled,
                                                     const std::vector<int>& lengths) {
  fitkit::PopulationCurve curve;
  curve.lengths = lengths;
  curve.shots = 0;
  curve.records.resize(lengths.size());
  Vec state = qcore::basis_superket(0, 4);
  int l_done = 0;
  for (size_t li = 0; li < lengths.size(); ++li) {
    if (lengths[li] < l_done) throw std::invalid_argument("twirled_channel_curve: lengths must increase");
    while (l_done < lengths[li]) {
      state = twirled * state;
      ++l_done;
    }
    fitkit::RandRecord rec;
    rec.target = 0;
    for (int a = 0; a < 4; ++a) rec.n[a] = qcore::basis_superket(a, 4).dot(state).real();
    curve.records[li] = {rec};
  }
  return curve;
}

// --------------------------------------------------------------------------
// Hamiltonian-level SLERB runs.

struct HamiltonianConfig {
  std::vector<int> lengths;
  int randomizations = 50;
  int shots = 0;
  dynsim::MsGateParams gate;
  dynsim::ErrorInjection injection;
  dynsim::ResetPolicy policy = dynsim::ResetPolicy::reset_each_gate;
  std::uint64_t seed = 1;
};

inline fitkit::PopulationCurve run_hamiltonian(const msgates::CliffordCatalogue& cat,
                                               const HamiltonianConfig& cfg) {
  dynsim::GateSimulator sim(cfg.gate, cfg.injection);
  // Warm the per-phase propagator cache before the parallel region.
  for (int k = 0; k < 4; ++k) sim.propagator(k * M_PI / 4.0);

  fitkit::PopulationCurve curve;
  curve.lengths = cfg.lengths;
  curve.shots = cfg.shots;
  curve.seed = cfg.seed;
  curve.records.resize(cfg.lengths.size());
  for (auto& recs : curve.records) recs.resize(cfg.randomizations);

  const int n_li = static_cast<int>(cfg.lengths.size());
  parallel_for(n_li * cfg.randomizations, [&](int job) {
    const int li = job / cfg.randomizations;
    const int r = job % cfg.randomizations;
    auto rng = make_rng(cfg.seed, "hamiltonian", job);
    const auto seq = msgates::sample_sequence(cat, cfg.lengths[li], rng);
    const Mat rho = dynsim::run_schedule(sim, seq.pulse_schedule, cfg.policy, qcore::basis_ket(0, 4));

    fitkit::RandRecord rec;
    rec.target = seq.target_state;
    std::array<double, 4> p{};
    for (int a = 0; a < 4; ++a) p[a] = std::max(0.0, rho(a, a).real());
    rec.n = cfg.shots > 0 ? fitkit::multinomial_counts(p, cfg.shots, rng) : p;
    curve.records[li][r] = rec;
  });
  return curve;
}

// --------------------------------------------------------------------------
// Single-parameter calibration scans at fixed sequence length.

enum class ScanParam { detuning, rabi };

inline ScanParam scan_param_from_name(const std::string& s) {
  if (s == "detuning") return ScanParam::detuning;
  if (s == "rabi") return ScanParam::rabi;
  throw std::invalid_argument("unknown scan parameter: " + s);
}

struct ScanPoint {
  double value = 0.0;  // fractional offset applied to the scanned parameter
  fitkit::PopulationSample mean;
  fitkit::PopulationSample spread;  // std across randomizations
};

struct ScanResult {
  ScanParam param = ScanParam::detuning;
  int length = 100;
  std::vector<ScanPoint> points;
  int best_survival_index = 0;  // argmax of P_survival
  int best_leak_index = 0;      // argmin of P_leak
};

inline ScanResult calibration_scan(const msgates::CliffordCatalogue& cat, ScanParam param,
                                   const std::vector<double>& values, int length,
                                   int randomizations, int shots, const HamiltonianConfig& base) {
  if (values.size() < 2) throw std::invalid_argument("calibration_scan: need at least 2 scan values");
  ScanResult result;
  result.param = param;
  result.length = length;
  result.points.resize(values.size());

  for (size_t vi = 0; vi < values.size(); ++vi) {
    HamiltonianConfig cfg = base;
    cfg.lengths = {length};
    cfg.randomizations = randomizations;
    cfg.shots = shots;
    cfg.seed = derive_seed(base.seed, "scan", vi);
    if (param == ScanParam::detuning)
      cfg.injection.fractional_detuning_offset = values[vi];
    else
      cfg.injection.fractional_rabi_offset = values[vi];
    const auto curve = run_hamiltonian(cat, cfg);
    const auto st = curve.stats(0);
    result.points[vi].value = values[vi];
    result.points[vi].mean = st.mean;
    result.points[vi].spread = {std::sqrt(st.var.p_survival), std::sqrt(st.var.p_flip),
                                std::sqrt(st.var.p_leak)};
  }
  for (size_t vi = 1; vi < result.points.size(); ++vi) {
    if (result.points[vi].mean.p_survival >
        result.points[result.best_survival_index].mean.p_survival)
      result.best_survival_index = static_cast<int>(vi);
    if (result.points[vi].mean.p_leak < result.points[result.best_leak_index].mean.p_leak)
      result.best_leak_index = static_cast<int>(vi);
  }
  return result;
}

// --------------------------------------------------------------------------
// Random-unitary estimator campaign over exact twirled channels.

struct CampaignChannelResult {
  double true_process_infidelity = 0.0;
  double q_rb = 1.0, q_leak = 1.0;
  double group_process_infidelity = 0.0;
  double transfer_process_infidelity = 0.0;
  double err_group = 0.0;     // relative infidelity error, group estimator
  double err_transfer = 0.0;  // relative infidelity error, transfer estimator
};

struct CampaignResult {
  std::vector<CampaignChannelResult> channels;
  double mean_err_group = 0.0, std_err_group = 0.0;
  double mean_err_transfer = 0.0, std_err_transfer = 0.0;
  double fidelity_correlation_group = 0.0;  // est vs true average fidelity
  double fidelity_correlation_transfer = 0.0;
};

inline CampaignResult run_campaign(const grouprep::BenchmarkGroup& group, int n_channels,
                                   double sigma2, const std::vector<int>& lengths,
                                   std::uint64_t seed) {
  if (n_channels < 10) throw std::invalid_argument("run_campaign: need at least 10 channels");
  CampaignResult result;
  result.channels.resize(n_channels);

  parallel_for(n_channels, [&](int idx) {
    auto rng = make_rng(seed, "campaign", idx);
    errmodel::AnalyticNoiseChannel ch{errmodel::NoiseKind::random_pauli_gaussian, 0.0, sigma2, false};
    const Mat lambda = errmodel::channel_process_matrix(ch, rng);
    const Mat twirled = grouprep::twirl(lambda, group);

    CampaignChannelResult& out = result.channels[idx];
    out.true_process_infidelity = 1.0 - qcore::process_fidelity(twirled);

    const auto blind = fitkit::blind_rb_combos(twirled_channel_curve(twirled, lengths));
    out.q_rb = blind.q_rb;
    out.q_leak = blind.q_leak;

    out.group_process_infidelity =
        1.0 - grouprep::extended_fidelity(blind.q_rb, blind.q_leak).fidelity.process_fidelity;
    const double eps_leak = (1.0 - blind.q_leak) / 3.0;
    const double eps_rb = std::max(0.0, (1.0 - blind.q_rb - eps_leak) / 2.0);
    const double transfer_avg_infidelity =
        errmodel::transfer_matrix_estimate({eps_rb, eps_leak}).clifford_infidelity;
    out.transfer_process_infidelity = transfer_avg_infidelity * 5.0 / 4.0;

    out.err_group = fitkit::relative_error(out.group_process_infidelity, out.true_process_infidelity);
    out.err_transfer =
        fitkit::relative_error(out.transfer_process_infidelity, out.true_process_infidelity);
  });

  auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    sd = 0.0;
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / (v.size() - 1));
  };
  std::vector<double> eg, et;
  for (const auto& c : result.channels) {
    eg.push_back(c.err_group);
    et.push_back(c.err_transfer);
  }
  mean_std(eg, result.mean_err_group, result.std_err_group);
  mean_std(et, result.mean_err_transfer, result.std_err_transfer);

  auto correlation = [&](auto est_infid) {
    std::vector<double> x, y;
    for (const auto& c : result.channels) {
      x.push_back(qcore::average_fidelity(1.0 - c.true_process_infidelity, 4));
      y.push_back(qcore::average_fidelity(1.0 - est_infid(c), 4));
    }
    double mx, sx, my, sy;
    mean_std(x, mx, sx);
    mean_std(y, my, sy);
    double cov = 0.0;
    for (size_t k = 0; k < x.size(); ++k) cov += (x[k] - mx) * (y[k] - my);
    cov /= (x.size() - 1);
    return cov / (sx * sy);
  };
  result.fidelity_correlation_group =
      correlation([](const CampaignChannelResult& c) { return c.group_process_infidelity; });
  result.fidelity_correlation_transfer =
      correlation([](const CampaignChannelResult& c) { return c.transfer_process_infidelity; });
  return result;
}

}  // namespace slerb::pipeline
