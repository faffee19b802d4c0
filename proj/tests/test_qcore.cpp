#include <catch2/catch_amalgamated.hpp>

#include <slerb/qcore.hpp>
#include <slerb/rng.hpp>

#include "test_util.hpp"

using namespace slerb;
using namespace slerb::qcore;

TEST_CASE("kron basics") {
  CHECK(max_abs(kron(identity(2), identity(2)) - identity(4)) == 0.0);

  Mat xx = kron(sigma_x(), sigma_x());
  Mat expected = Mat::Zero(4, 4);
  expected(0, 3) = expected(1, 2) = expected(2, 1) = expected(3, 0) = 1.0;
  CHECK(max_abs(xx - expected) == 0.0);

  Mat zz = kron(sigma_z(), sigma_z());
  Vec diag(4);
  diag << 1, -1, -1, 1;
  CHECK(max_abs(zz - Mat(diag.asDiagonal())) == 0.0);
}

TEST_CASE("unitary_to_process identity and diagonal cases") {
  CHECK(max_abs(unitary_to_process(identity(4)) - identity(16)) < 1e-15);

  // U = sigma_z (x) I gives a diagonal +-1 process matrix.
  const Mat u = kron(sigma_z(), identity(2));
  const Mat lam = unitary_to_process(u);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) {
      if (i == j)
        CHECK(std::abs(std::abs(lam(i, j)) - 1.0) < 1e-14);
      else
        CHECK(std::abs(lam(i, j)) < 1e-14);
    }

  CHECK(std::abs(unitary_to_process(identity(4)).trace().real() / 16.0 - 1.0) < 1e-15);
}

TEST_CASE("unitary_to_process rejects bad input") {
  CHECK_THROWS_AS(unitary_to_process(Mat::Zero(4, 3)), std::invalid_argument);
  CHECK_THROWS_AS(unitary_to_process(2.0 * identity(4)), std::invalid_argument);
}

TEST_CASE("process matrix acts as conjugation on density matrices") {
  auto rng = make_rng(11, "qcore", 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat u = testutil::random_unitary(rng, 4);
    const Mat lam = unitary_to_process(u);
    const Mat rho = testutil::random_density(rng, 4);
    const Mat out = apply_process(lam, rho);
    CHECK(max_abs(out - u * rho * u.adjoint()) < 1e-12);
    CHECK(is_unitary(lam, 1e-9));
    CHECK(preserves_trace_on_diagonal(lam));
  }
}

TEST_CASE("process fidelity values") {
  CHECK(process_fidelity(identity(16)) == 1.0);

  // U = exp(-i (pi/60) XX); brute-force oracle |Tr(U)/4|^2.
  const double a = M_PI / 60.0;
  const Mat xx = kron(sigma_x(), sigma_x());
  const Mat u = std::cos(a) * identity(4) - kI * std::sin(a) * xx;
  const Mat lam = unitary_to_process(u);
  const double oracle = std::norm(u.trace() / 4.0);
  CHECK(std::abs(process_fidelity(lam) - oracle) < 1e-12);
  CHECK(std::abs(oracle - std::cos(a) * std::cos(a)) < 1e-12);
  CHECK(oracle == Catch::Approx(0.99726).margin(5e-6));

  // Fully depolarizing channel: Lambda = |I>><<I| / d.
  const Vec id_sk = vec(Mat(identity(4)));
  const Mat dep = (id_sk * id_sk.adjoint()) / 4.0;
  CHECK(std::abs(process_fidelity(dep) - 1.0 / 16.0) < 1e-14);
}

TEST_CASE("average fidelity Horodecki conversion") {
  CHECK(average_fidelity(1.0, 4) == 1.0);
  CHECK(average_fidelity(0.9, 4) == Catch::Approx(0.92).epsilon(1e-12));
  // Consistency with the extended-estimator form at q = 1.
  const double f = (1.0 + 8.0 * 1.0 + 7.0 * 1.0) / 16.0;
  CHECK(average_fidelity(f, 4) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("pauli-sum average fidelity agrees with the Horodecki route") {
  CHECK(average_fidelity_pauli_sum(identity(16)) == Catch::Approx(1.0).margin(1e-12));

  // Channel U = XX: both routes evaluated independently.
  const Mat u = kron(sigma_x(), sigma_x());
  const Mat lam = unitary_to_process(u);
  // Symbolic oracle: Tr(P U P U^dag) = +-16 depending on commutation with XX.
  double sum = 0.0;
  for (const Mat& p : two_qubit_paulis()) {
    const Mat c = p * u - u * p;
    sum += (max_abs(c) < 1e-14) ? 16.0 : -16.0;
  }
  const double direct = (sum + 16.0) / (16.0 * 5.0);
  CHECK(average_fidelity_pauli_sum(lam) == Catch::Approx(direct).margin(1e-12));
  CHECK(average_fidelity_pauli_sum(lam) ==
        Catch::Approx(average_fidelity(process_fidelity(lam), 4)).margin(1e-12));

  auto rng = make_rng(12, "qcore", 1);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat lam_r = unitary_to_process(testutil::random_unitary(rng, 4));
    CHECK(std::abs(average_fidelity_pauli_sum(lam_r) -
                   average_fidelity(process_fidelity(lam_r), 4)) < 1e-10);
  }
}

TEST_CASE("unitary process fidelity equals |Tr U|^2 / d^2") {
  auto rng = make_rng(13, "qcore", 2);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat u = testutil::random_unitary(rng, 4);
    const double f = process_fidelity(unitary_to_process(u));
    CHECK(std::abs(f - std::norm(u.trace()) / 16.0) < 1e-10);
  }
}

TEST_CASE("process representation preserves composition") {
  auto rng = make_rng(14, "qcore", 3);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat u = testutil::random_unitary(rng, 4);
    const Mat v = testutil::random_unitary(rng, 4);
    CHECK(max_abs(unitary_to_process(u * v) -
                  unitary_to_process(u) * unitary_to_process(v)) < 1e-9);
  }
}

TEST_CASE("projective distance") {
  auto rng = make_rng(15, "qcore", 4);
  const Mat u = testutil::random_unitary(rng, 4);
  CHECK(projective_distance(u, cxd(0.0, 1.0) * u) < 1e-12);
  CHECK(projectively_equal(u, std::exp(kI * 0.7) * u));
  CHECK(projective_distance(identity(4), kron(sigma_x(), sigma_x())) > 0.5);
}

TEST_CASE("hermitian exponential is unitary") {
  auto rng = make_rng(16, "qcore", 5);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat h(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) h(i, j) = cxd(n(rng), n(rng));
  h = Mat(0.5 * (h + h.adjoint()));
  const Mat u = expm_i_hermitian(h, 0.37);
  CHECK(is_unitary(u, 1e-12));
  // Closed form against XX generator.
  const Mat xx = kron(sigma_x(), sigma_x());
  const Mat ref = std::cos(0.37) * identity(4) - kI * std::sin(0.37) * xx;
  CHECK(max_abs(expm_i_hermitian(xx, 0.37) - ref) < 1e-13);
}
