#include <catch2/catch_amalgamated.hpp>

#include <slerb/fitkit.hpp>
#include <slerb/grouprep.hpp>
#include <slerb/msgates.hpp>

#include "test_util.hpp"

using namespace slerb;
using namespace slerb::qcore;
using namespace slerb::fitkit;
using errmodel::TransferRates;

namespace {

PopulationCurve exact_curve(const TransferRates& rates, double spam, const std::vector<int>& lengths) {
  return synthesize_curve(rates, spam, lengths, 1, 0, 7);
}

// Exact populations of a twirled channel via superket powers.
PopulationCurve twirled_curve(const Mat& twirled, const std::vector<int>& lengths) {
  PopulationCurve curve;
  curve.lengths = lengths;
  curve.shots = 0;
  curve.records.resize(lengths.size());
  Vec state = basis_superket(0, 4);
  int l_done = 0;
  for (size_t li = 0; li < lengths.size(); ++li) {
    while (l_done < lengths[li]) {
      state = twirled * state;
      ++l_done;
    }
    RandRecord rec;
    rec.target = 0;
    for (int a = 0; a < 4; ++a) rec.n[a] = basis_superket(a, 4).dot(state).real();
    curve.records[li] = {rec};
  }
  return curve;
}

const grouprep::BenchmarkGroup& group() {
  static const auto g = grouprep::generate_group(msgates::ms_unitary(M_PI / 2, 0.0),
                                                 msgates::ms_unitary(M_PI / 2, M_PI / 4));
  return g;
}

}  // namespace

TEST_CASE("fit preconditions") {
  const std::vector<int> too_few = {0, 5, 10};
  CHECK_THROWS_AS(fit_slerb(exact_curve({1e-3, 1e-3}, 0, too_few), FitModel::no_spam),
                  std::invalid_argument);
}

TEST_CASE("zero-error exact curve fits to zero rates") {
  const auto curve = exact_curve({0.0, 0.0}, 0.0, {0, 1, 2, 5, 10, 50, 100});
  const auto fit = fit_slerb(curve, FitModel::no_spam);
  CHECK(fit.converged);
  CHECK(std::abs(fit.eps_rb.value) < 1e-9);
  CHECK(std::abs(fit.eps_leak.value) < 1e-9);
}

TEST_CASE("noiseless round trip recovers the rates exactly") {
  const std::vector<int> lengths = {0, 1, 2, 4, 8, 16, 32, 64, 128, 256};
  for (double eps_rb : {1e-4, 1e-3, 5e-3, 2e-2})
    for (double eps_leak : {1e-4, 2e-3, 1e-2}) {
      const auto fit = fit_slerb(exact_curve({eps_rb, eps_leak}, 0.0, lengths), FitModel::no_spam);
      CHECK(fit.converged);
      CHECK(std::abs(fit.eps_rb.value - eps_rb) < 1e-8);
      CHECK(std::abs(fit.eps_leak.value - eps_leak) < 1e-8);
    }
}

TEST_CASE("matrix-power curve recovers rates within 1e-10") {
  const TransferRates r{2.5e-3, 1.2e-3};
  const auto m = errmodel::transfer_matrix(r);
  // Deterministic curve assembled from matrix powers rather than closed forms.
  PopulationCurve curve;
  curve.lengths = {0, 1, 3, 7, 15, 40, 90, 200};
  curve.records.resize(curve.lengths.size());
  Eigen::Vector3d p(1, 0, 0);
  int l_done = 0;
  for (size_t li = 0; li < curve.lengths.size(); ++li) {
    while (l_done < curve.lengths[li]) {
      p = m * p;
      ++l_done;
    }
    RandRecord rec;
    rec.target = 0;
    rec.n = {p(0), p(2) / 2.0, p(2) / 2.0, p(1)};
    curve.records[li] = {rec};
  }
  const auto fit = fit_slerb(curve, FitModel::no_spam);
  CHECK(fit.converged);
  CHECK(std::abs(fit.eps_rb.value - r.eps_rb) < 1e-10);
  CHECK(std::abs(fit.eps_leak.value - r.eps_leak) < 1e-10);
}

TEST_CASE("spam model reduces to the plain decay at zero spam") {
  for (double eps_rb : {1e-4, 3e-3, 2e-2})
    for (double eps_leak : {5e-4, 4e-3})
      for (int l : {0, 1, 5, 20, 100, 400}) {
        const auto a = errmodel::analytic_populations({eps_rb, eps_leak}, l);
        const auto b = errmodel::spam_populations({eps_rb, eps_leak}, 0.0, l);
        CHECK(std::abs(a.p_survival - b.p_survival) < 1e-15);
        CHECK(std::abs(a.p_flip - b.p_flip) < 1e-15);
        CHECK(std::abs(a.p_leak - b.p_leak) < 1e-15);
      }
}

TEST_CASE("with-spam fit recovers all three parameters on exact data") {
  const std::vector<int> lengths = {0, 1, 2, 5, 10, 20, 50, 100, 150, 200};
  const auto curve = exact_curve({3.2e-4, 2.2e-4}, 5.9e-3, lengths);
  const auto fit = fit_slerb(curve, FitModel::with_spam);
  CHECK(fit.converged);
  CHECK(std::abs(fit.eps_rb.value - 3.2e-4) < 1e-8);
  CHECK(std::abs(fit.eps_leak.value - 2.2e-4) < 1e-8);
  CHECK(std::abs(fit.eps_spam.value - 5.9e-3) < 1e-7);
}

TEST_CASE("blind combinations on symmetric-model data") {
  const double eps_rb = 2e-3, eps_leak = 1e-3;
  const auto curve = exact_curve({eps_rb, eps_leak}, 0.0, {0, 2, 5, 10, 20, 50, 100, 200, 400});
  const auto blind = blind_rb_combos(curve);
  CHECK(blind.converged);
  CHECK(blind.q_leak == Catch::Approx(1.0 - 3.0 * eps_leak).margin(1e-7));
  CHECK(blind.q_rb == Catch::Approx(1.0 - 2.0 * eps_rb - eps_leak).margin(1e-7));
  CHECK(blind.a == Catch::Approx(2.0 / 3.0).margin(1e-6));
  CHECK(blind.b == Catch::Approx(1.0 / 3.0).margin(1e-6));
}

TEST_CASE("blind combinations with zero leakage give a flat sum series") {
  const auto curve = exact_curve({2e-3, 0.0}, 0.0, {0, 2, 5, 10, 20, 50});
  const auto blind = blind_rb_combos(curve);
  CHECK(blind.flat_leak);
  CHECK(blind.q_leak == 1.0);
  CHECK(blind.a == Catch::Approx(1.0).margin(1e-9));
}

namespace {

std::vector<int> decay_matched_lengths(double q_slowest) {
  const int l_max = std::min(
      20000, static_cast<int>(std::ceil(std::log(0.05) / std::log(std::min(0.99999, q_slowest)))));
  std::vector<int> lengths;
  for (int k = 0; k < 12; ++k) {
    const int l = static_cast<int>(std::round(l_max * k / 11.0));
    if (lengths.empty() || l != lengths.back()) lengths.push_back(l);
  }
  return lengths;
}

// Random unitary from exchange-symmetric Pauli combinations only; such
// errors never couple |Psi->, so the sum series is a pure single exponential.
Mat random_symmetric_unitary(Rng& rng, double sigma2) {
  using qcore::identity;
  const Mat x = sigma_x(), y = sigma_y(), z = sigma_z(), id = identity(2);
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<Mat> gens = {
      kron(x, x), kron(y, y), kron(z, z),
      Mat(r * (kron(x, y) + kron(y, x))), Mat(r * (kron(x, z) + kron(z, x))),
      Mat(r * (kron(y, z) + kron(z, y))), Mat(r * (kron(x, id) + kron(id, x))),
      Mat(r * (kron(y, id) + kron(id, y))), Mat(r * (kron(z, id) + kron(id, z)))};
  std::normal_distribution<double> n(0.0, std::sqrt(sigma2));
  Mat h = Mat::Zero(4, 4);
  for (const Mat& g : gens) h += n(rng) * g;
  return expm_i_hermitian(h, -1.0);
}

}  // namespace

TEST_CASE("blind fit on an exact twirled channel matches the decay spectrum") {
  auto rng = make_rng(51, "fitkit", 0);

  // Symmetric random unitary errors: both decays match the eigenvalue oracle.
  for (int trial = 0; trial < 5; ++trial) {
    const Mat tw = grouprep::twirl(unitary_to_process(random_symmetric_unitary(rng, 3e-4)), group());
    const auto spec = grouprep::extract_decays(tw);
    const auto blind = blind_rb_combos(twirled_curve(tw, decay_matched_lengths(
        std::max(spec.q_rb, spec.q_leak_plus))));
    CHECK(std::abs(blind.q_rb - spec.q_rb) < 1e-4);
    CHECK(std::abs(blind.q_leak - spec.q_leak_plus) < 1e-4);
  }

  // Generic random unitaries leak into |Psi-> as well; the difference series
  // still isolates q_rb exactly, while the single-exponential sum fit lands
  // between the two leakage eigenvalues.
  for (int trial = 0; trial < 5; ++trial) {
    errmodel::AnalyticNoiseChannel gauss{errmodel::NoiseKind::random_pauli_gaussian, 0.0, 1e-3, false};
    const Mat tw = grouprep::twirl(errmodel::channel_process_matrix(gauss, rng), group());
    const auto spec = grouprep::extract_decays(tw);
    const auto blind = blind_rb_combos(twirled_curve(tw, decay_matched_lengths(
        std::max(spec.q_rb, spec.q_leak_plus))));
    CHECK(std::abs(blind.q_rb - spec.q_rb) < 1e-8);
    const double lo = std::min(spec.q_leak_plus, spec.q_leak_minus) - 1e-6;
    const double hi = std::max(spec.q_leak_plus, spec.q_leak_minus) + 1e-6;
    CHECK(blind.q_leak >= lo);
    CHECK(blind.q_leak <= hi);
  }
}

TEST_CASE("bootstrap on identical randomizations has zero width") {
  auto curve = exact_curve({1e-3, 5e-4}, 0.0, {0, 2, 5, 10, 25, 60});
  for (auto& recs : curve.records) recs = {recs[0], recs[0], recs[0]};
  const auto ci = bootstrap_ci(curve, FitModel::no_spam, 50, 3);
  CHECK(ci.eps_rb.ci_hi - ci.eps_rb.ci_lo == 0.0);
  CHECK(ci.eps_leak.ci_hi - ci.eps_leak.ci_lo == 0.0);
  CHECK(ci.failures == 0);
}

TEST_CASE("bootstrap coverage is roughly calibrated") {
  const TransferRates truth{3.2e-4, 2.2e-4};
  const std::vector<int> lengths = {0, 2, 5, 10, 20, 40, 80, 120, 160, 200};
  int covered = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const auto curve = synthesize_curve(truth, 5.9e-3, lengths, 50, 50, 1000 + rep);
    const auto fit = fit_slerb_with_ci(curve, FitModel::with_spam, 150, 77 + rep);
    if (truth.eps_rb >= fit.eps_rb.ci_lo && truth.eps_rb <= fit.eps_rb.ci_hi &&
        truth.eps_leak >= fit.eps_leak.ci_lo && truth.eps_leak <= fit.eps_leak.ci_hi)
      ++covered;
  }
  // Joint coverage of two 68% intervals; expect roughly half, never collapse.
  CHECK(covered >= 5);
  CHECK(covered <= 19);
}

TEST_CASE("blind and joint fits agree within combined uncertainty") {
  const TransferRates truth{3e-3, 1.5e-3};
  const std::vector<int> lengths = {0, 2, 5, 10, 20, 40, 80, 150};
  int agree = 0;
  const int n_sets = 30;
  for (int rep = 0; rep < n_sets; ++rep) {
    const auto curve = synthesize_curve(truth, 0.0, lengths, 30, 100, 500 + rep);
    const auto blind = blind_rb_combos(curve);
    const auto ci = bootstrap_ci(curve, FitModel::no_spam, 80, 900 + rep);
    const double q_joint = 1.0 - 2.0 * ci.eps_rb.value - ci.eps_leak.value;
    const double sigma_joint = std::hypot(2.0 * (ci.eps_rb.ci_hi - ci.eps_rb.ci_lo) / 2.0,
                                          (ci.eps_leak.ci_hi - ci.eps_leak.ci_lo) / 2.0);
    const double combined = std::hypot(sigma_joint, blind.sigma_q_rb) + 1e-12;
    if (std::abs(blind.q_rb - q_joint) < 3.0 * combined) ++agree;
  }
  CHECK(agree >= n_sets - 3);
}

TEST_CASE("asymptote diagnostic: symmetric heavy leakage") {
  const auto curve = exact_curve({2e-2, 5e-3}, 0.0, {0, 5, 10, 20, 40, 80, 140, 220, 300});
  const auto diag = asymptote_diagnostic(curve);
  CHECK(diag.verdict == AsymptoteVerdict::symmetric_consistent);
  CHECK(diag.a_survival == Catch::Approx(1.0 / 3.0).margin(0.02));
  CHECK(diag.a_leak == Catch::Approx(1.0 / 3.0).margin(0.02));
}

TEST_CASE("asymptote diagnostic: singlet pumping is flagged") {
  // Four-state Markov chain with a pumping channel into the antisymmetric
  // state; equilibrium (1/4, 1/4, 1/4, 1/4) gives measured (1/4, 1/4, 1/2).
  const double eps_rb = 0.01, eps = 0.02, kappa = 0.05;
  Eigen::Matrix4d m;
  m << 1 - eps_rb - eps, eps_rb, eps, 0,
       eps_rb, 1 - eps_rb - eps, eps, 0,
       eps, eps, 1 - 2 * eps - kappa, kappa,
       0, 0, kappa, 1 - kappa;
  PopulationCurve curve;
  curve.lengths = {0, 5, 10, 20, 40, 80, 140, 220, 300};
  curve.records.resize(curve.lengths.size());
  Eigen::Vector4d p(1, 0, 0, 0);
  int l_done = 0;
  for (size_t li = 0; li < curve.lengths.size(); ++li) {
    while (l_done < curve.lengths[li]) {
      p = m * p;
      ++l_done;
    }
    RandRecord rec;
    rec.target = 0;
    const double leak = p(2) + p(3);
    rec.n = {p(0), leak / 2.0, leak / 2.0, p(1)};
    curve.records[li] = {rec};
  }
  const auto diag = asymptote_diagnostic(curve);
  CHECK(diag.verdict == AsymptoteVerdict::antisymmetric_flagged);
  CHECK(diag.a_leak > 0.4);
}

TEST_CASE("asymptote diagnostic: no leakage is inconclusive") {
  const auto curve = exact_curve({2e-3, 0.0}, 0.0, {0, 5, 10, 20, 40, 80});
  CHECK(asymptote_diagnostic(curve).verdict == AsymptoteVerdict::inconclusive);
}

TEST_CASE("estimator pair values") {
  const auto paper = estimate_from_rates(3.2e-4, 2.2e-4);
  CHECK(paper.transfer.eps_2q == Catch::Approx(2.6e-4).margin(2e-6));
  CHECK(paper.group.eps_2q == Catch::Approx(2.7e-4).margin(5e-6));

  const auto zero = estimate_from_rates(0.0, 0.0);
  CHECK(zero.transfer.eps_2q == 0.0);
  CHECK(zero.group.eps_2q == Catch::Approx(0.0).margin(1e-15));

  const auto even = estimate_from_rates(1e-3, 1e-3);
  CHECK(even.transfer.eps_2q == Catch::Approx(9.23e-4).margin(1e-6));
  CHECK(even.group.eps_2q == Catch::Approx(1.04e-3).margin(2e-6));
}

TEST_CASE("relative error") {
  CHECK(relative_error(1.0, 1.0) == 0.0);
  CHECK(relative_error(0.9, 1.0) == Catch::Approx(0.1).margin(1e-15));
  CHECK_THROWS_AS(relative_error(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("curve csv round trip") {
  const auto curve = synthesize_curve({1e-3, 5e-4}, 2e-3, {0, 5, 10, 20}, 4, 50, 99);
  std::ostringstream os;
  write_curve_csv(os, curve);
  std::istringstream is(os.str());
  const auto back = read_curve_csv(is);
  REQUIRE(back.lengths == curve.lengths);
  CHECK(back.shots == curve.shots);
  for (int li = 0; li < curve.n_lengths(); ++li) {
    REQUIRE(back.records[li].size() == curve.records[li].size());
    for (size_t r = 0; r < curve.records[li].size(); ++r) {
      CHECK(back.records[li][r].target == curve.records[li][r].target);
      for (int k = 0; k < 4; ++k)
        CHECK(back.records[li][r].n[k] == curve.records[li][r].n[k]);
    }
  }

  // Exact-probability mode survives the round trip bit-exactly too.
  const auto exact = synthesize_curve({1e-3, 5e-4}, 0.0, {0, 5, 10, 20}, 2, 0, 99);
  std::ostringstream os2;
  write_curve_csv(os2, exact);
  std::istringstream is2(os2.str());
  const auto back2 = read_curve_csv(is2);
  CHECK(back2.shots == 0);
  for (int li = 0; li < exact.n_lengths(); ++li)
    for (size_t r = 0; r < exact.records[li].size(); ++r)
      for (int k = 0; k < 4; ++k)
        CHECK(back2.records[li][r].n[k] == exact.records[li][r].n[k]);
}
