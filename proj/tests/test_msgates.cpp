#include <catch2/catch_amalgamated.hpp>

#include <slerb/msgates.hpp>
#include <slerb/qcore.hpp>

#include "test_util.hpp"

using namespace slerb;
using namespace slerb::qcore;
using namespace slerb::msgates;

TEST_CASE("ms_unitary closed form") {
  CHECK(max_abs(ms_unitary(0.0, 1.234) - identity(4)) < 1e-15);

  // M_x and M_y as printed in the supplement.
  const double r = 1.0 / std::sqrt(2.0);
  Mat mx(4, 4);
  mx << r, 0, 0, -kI * r,
        0, r, -kI * r, 0,
        0, -kI * r, r, 0,
        -kI * r, 0, 0, r;
  CHECK(max_abs(ms_unitary(M_PI / 2.0, 0.0) - mx) < 1e-14);

  Mat my(4, 4);
  my << r, 0, 0, -r,
        0, r, -kI * r, 0,
        0, -kI * r, r, 0,
        r, 0, 0, r;
  CHECK(max_abs(ms_unitary(M_PI / 2.0, M_PI / 4.0) - my) < 1e-14);
}

TEST_CASE("ms_unitary equals the exponential of the generator") {
  auto rng = make_rng(21, "msgates", 0);
  std::uniform_real_distribution<double> ang(-2.0 * M_PI, 2.0 * M_PI);
  for (int trial = 0; trial < 25; ++trial) {
    const double theta = ang(rng), phi = ang(rng);
    const Mat gen = kron(sigma_phi(phi), sigma_phi(phi));
    CHECK(max_abs(ms_unitary(theta, phi) - expm_i_hermitian(gen, theta / 2.0)) < 1e-12);
    CHECK(is_unitary(ms_unitary(theta, phi), 1e-12));
  }
}

TEST_CASE("restrict_to_rb") {
  // U(pi, 0) acts as -i sigma_x on S_RB with no leakage coupling.
  const auto r1 = restrict_to_rb(ms_unitary(M_PI, 0.0));
  CHECK(r1.leakage_norm < 1e-14);
  CHECK(projective_distance(r1.block, sigma_x()) < 1e-12);

  const auto r2 = restrict_to_rb(identity(4));
  CHECK(max_abs(r2.block - identity(2)) == 0.0);
  CHECK(r2.leakage_norm == 0.0);

  // A collective sigma_x rotation couples the parity subspaces.
  const Mat gen = kron(sigma_x(), identity(2)) + kron(identity(2), sigma_x());
  const auto r3 = restrict_to_rb(expm_i_hermitian(gen, 0.3));
  CHECK(r3.leakage_norm > 0.1);
}

TEST_CASE("clifford catalogue structure") {
  const auto cat = build_clifford_catalogue();
  REQUIRE(cat.entries.size() == 24);

  // Average pulse count is exactly 13/6 (52 pulses total).
  CHECK(cat.total_pulses == 52);
  CHECK(cat.avg_pulses() == Catch::Approx(13.0 / 6.0).margin(1e-15));

  // Identity Clifford present with zero pulses.
  CHECK(cat.entries[cat.identity_id].pulses.empty());

  for (const auto& e : cat.entries) {
    // Ideal gates never leak.
    CHECK(restrict_to_rb(e.full_unitary).leakage_norm < 1e-12);
    // Catalogue pulses are pi/2 pulses at the four generator phases.
    for (const auto& p : e.pulses) {
      CHECK(p.theta == Catch::Approx(M_PI / 2.0));
      const double ratio = p.phi / (M_PI / 4.0);
      CHECK(std::abs(ratio - std::round(ratio)) < 1e-12);
      CHECK(p.phi >= 0.0);
      CHECK(p.phi < M_PI);
    }
  }

  // Pairwise projectively distinct.
  for (int i = 0; i < 24; ++i)
    for (int j = i + 1; j < 24; ++j)
      CHECK(projective_distance(cat.entries[i].rb_action, cat.entries[j].rb_action) > 1e-6);

  // Closure: each pairwise product matches exactly one catalogue member.
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      const Mat prod = cat.entries[i].rb_action * cat.entries[j].rb_action;
      int matches = 0;
      for (const auto& e : cat.entries)
        if (projectively_equal(e.rb_action, prod)) ++matches;
      CHECK(matches == 1);
      CHECK(projectively_equal(cat.entries[cat.mult[i][j]].rb_action, prod));
    }

  // Inverse table.
  for (int i = 0; i < 24; ++i)
    CHECK(projectively_equal(cat.entries[i].rb_action *
                                 cat.entries[cat.inverse[i]].rb_action,
                             identity(2)));
}

TEST_CASE("generator pulses are pi/2 rotations about axis 2 phi") {
  const auto cat = build_clifford_catalogue();
  for (int k = 0; k < 4; ++k) {
    const double phi = k * M_PI / 4.0;
    const auto restr = restrict_to_rb(ms_unitary(M_PI / 2.0, phi));
    const Mat expected = expm_i_hermitian(sigma_phi(2.0 * phi), M_PI / 4.0);
    CHECK(projective_distance(restr.block, expected) < 1e-12);
    CHECK(cat.lookup(restr.block) >= 0);
  }
}

TEST_CASE("walsh halves compose to the full gate") {
  // The mid-gate pi phase flip leaves the generator invariant, so the two
  // half-angle pulses compose to the full entangling angle.
  const double phi = 0.61;
  const Mat half1 = ms_unitary(M_PI / 4.0, phi);
  const Mat half2 = ms_unitary(M_PI / 4.0, phi + M_PI);
  CHECK(max_abs(half2 * half1 - ms_unitary(M_PI / 2.0, phi)) < 1e-13);
}

TEST_CASE("sample_sequence inverts onto the target") {
  const auto cat = build_clifford_catalogue();
  auto rng = make_rng(22, "msgates", 1);
  std::uniform_int_distribution<int> lengths(0, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const int l = lengths(rng);
    const auto seq = sample_sequence(cat, l, rng);
    REQUIRE(seq.clifford_ids.size() == static_cast<size_t>(l) + 1);
    Mat total = identity(2);
    for (int id : seq.clifford_ids) total = cat.entries[id].rb_action * total;
    const Eigen::Vector2cd out = total * Eigen::Vector2cd(1.0, 0.0);
    const int target_rb = (seq.target_state == 3) ? 1 : 0;
    CHECK(std::norm(out(target_rb)) == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("sequence draws are uniform over the catalogue") {
  const auto cat = build_clifford_catalogue();
  auto rng = make_rng(23, "msgates", 2);
  const int n_seq = 10000, l = 10;
  std::array<long, 24> counts{};
  long total = 0;
  for (int s = 0; s < n_seq; ++s) {
    const auto seq = sample_sequence(cat, l, rng);
    for (int k = 0; k < l; ++k) {
      ++counts[seq.clifford_ids[k]];
      ++total;
    }
  }
  const double p = 1.0 / 24.0;
  const double sigma = std::sqrt(total * p * (1.0 - p));
  for (int id = 0; id < 24; ++id)
    CHECK(std::abs(counts[id] - total * p) < 5.0 * sigma);
}

TEST_CASE("outcome labels") {
  SlerbSequence seq;
  seq.target_state = 3;
  CHECK(ideal_survival_label(seq, 3) == OutcomeLabel::survival);
  CHECK(ideal_survival_label(seq, 0) == OutcomeLabel::flip);
  CHECK(ideal_survival_label(seq, 1) == OutcomeLabel::leak);
  seq.target_state = 0;
  CHECK(ideal_survival_label(seq, 1) == OutcomeLabel::leak);
  CHECK(ideal_survival_label(seq, 2) == OutcomeLabel::leak);
  CHECK(ideal_survival_label(seq, 0) == OutcomeLabel::survival);
}

TEST_CASE("sequence export round-trips") {
  const auto cat = build_clifford_catalogue();
  auto rng = make_rng(24, "msgates", 3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto seq = sample_sequence(cat, 7, rng, 42 + trial);
    const auto back = sequence_from_line(sequence_to_line(seq));
    CHECK(back.seed == seq.seed);
    CHECK(back.target_state == seq.target_state);
    CHECK(back.clifford_ids == seq.clifford_ids);
    REQUIRE(back.pulse_schedule.size() == seq.pulse_schedule.size());
    for (size_t k = 0; k < seq.pulse_schedule.size(); ++k) {
      CHECK(back.pulse_schedule[k].theta == Catch::Approx(seq.pulse_schedule[k].theta).margin(1e-11));
      CHECK(back.pulse_schedule[k].phi == Catch::Approx(seq.pulse_schedule[k].phi).margin(1e-11));
    }
  }
}
