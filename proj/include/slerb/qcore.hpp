#pragma once

// Dense complex linear algebra on small matrices, vectorized-basis process
// matrices, and fidelity functionals.  Everything here is dimension-agnostic
// but only ever used at d = 2, 4 (Hilbert) and d^2 = 16 (superoperator).
//
// Conventions, fixed once for the whole library:
//  * computational basis order |00>, |01>, |10>, |11>; qubit 1 is the left
//    (most significant) tensor factor,
//  * vec() stacks columns, so a channel rho -> U rho U^dag has superoperator
//    Lambda = conj(U) (x) U acting on vec(rho),
//  * global phases are never tracked; unitary equality is projective.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace slerb::qcore {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kChannelTol = 1e-9;

inline const cxd kI{0.0, 1.0};

inline Mat identity(int d) { return Mat::Identity(d, d); }

inline Mat sigma_x() {
  Mat s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

inline Mat sigma_y() {
  Mat s(2, 2);
  s << 0, -kI, kI, 0;
  return s;
}

inline Mat sigma_z() {
  Mat s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

// sigma_phi = sigma_x cos(phi) + sigma_y sin(phi)
inline Mat sigma_phi(double phi) {
  return std::cos(phi) * sigma_x() + std::sin(phi) * sigma_y();
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline bool is_unitary(const Mat& u, double tol = kUnitaryTol) {
  if (u.rows() != u.cols()) return false;
  return max_abs(u.adjoint() * u - identity(u.rows())) < tol;
}

// 1 - |Tr(A^dag B)| / d; zero iff A == B up to a global phase.
inline double projective_distance(const Mat& a, const Mat& b) {
  return 1.0 - std::abs((a.adjoint() * b).trace()) / static_cast<double>(a.rows());
}

inline bool projectively_equal(const Mat& a, const Mat& b, double tol = 1e-9) {
  return projective_distance(a, b) < tol;
}

// Column-stacking vectorization and its inverse.
inline Vec vec(const Mat& m) {
  return Eigen::Map<const Vec>(m.data(), m.size());
}

inline Mat unvec(const Vec& v, int rows) {
  return Eigen::Map<const Mat>(v.data(), rows, v.size() / rows);
}

inline Vec basis_ket(int index, int dim) {
  Vec v = Vec::Zero(dim);
  v(index) = 1.0;
  return v;
}

// Superket |a>> = vec(|a><a|) for a computational basis state.
inline Vec basis_superket(int index, int dim) {
  return vec(Mat(basis_ket(index, dim) * basis_ket(index, dim).adjoint()));
}

// <<A|B>> = Tr(A^dag B)
inline cxd hs_inner(const Mat& a, const Mat& b) {
  return (a.adjoint() * b).trace();
}

// Lambda = conj(U) (x) U in the vectorized computational basis.
inline Mat unitary_to_process(const Mat& u, double tol = kUnitaryTol) {
  if (u.rows() != u.cols()) throw std::invalid_argument("unitary_to_process: non-square input");
  if (!is_unitary(u, tol)) throw std::invalid_argument("unitary_to_process: input is not unitary");
  return kron(u.conjugate(), u);
}

// Apply a superoperator to an operator: unvec(Lambda vec(X)).
inline Mat apply_process(const Mat& lambda, const Mat& x) {
  const int d = static_cast<int>(x.rows());
  return unvec(lambda * vec(x), d);
}

// Trace preservation on diagonal inputs: for every basis superket |b>>, the
// populations <<a|Lambda|b>> must sum to 1.
inline bool preserves_trace_on_diagonal(const Mat& lambda, double tol = kChannelTol) {
  const int d2 = static_cast<int>(lambda.rows());
  const int d = static_cast<int>(std::lround(std::sqrt(double(d2))));
  for (int b = 0; b < d; ++b) {
    const Vec out = lambda * basis_superket(b, d);
    cxd total = 0.0;
    for (int a = 0; a < d; ++a) total += basis_superket(a, d).dot(out);
    if (std::abs(total - 1.0) > tol) return false;
  }
  return true;
}

// F = Re Tr(Lambda) / d^2.  The imaginary part of the trace must be noise.
inline double process_fidelity(const Mat& lambda, double tol = kChannelTol) {
  const int d2 = static_cast<int>(lambda.rows());
  const cxd tr = lambda.trace();
  if (std::abs(tr.imag()) > tol * d2)
    throw std::runtime_error("process_fidelity: trace has a non-physical imaginary part");
  return tr.real() / static_cast<double>(d2);
}

// Horodecki conversion F_avg = (d F + 1) / (d + 1).
inline double average_fidelity(double process_f, int d) {
  return (d * process_f + 1.0) / (d + 1.0);
}

struct FidelityReport {
  double process_fidelity = 1.0;
  double average_fidelity = 1.0;
  int dim = 4;

  static FidelityReport from_process(double f, int d) {
    return {f, qcore::average_fidelity(f, d), d};
  }
};

// The 16 two-qubit Paulis P_{4a+b} = sigma_a (x) sigma_b, a,b in {I,x,y,z}.
inline const std::vector<Mat>& two_qubit_paulis() {
  static const std::vector<Mat> paulis = [] {
    const Mat one[4] = {identity(2), sigma_x(), sigma_y(), sigma_z()};
    std::vector<Mat> out;
    out.reserve(16);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) out.push_back(kron(one[a], one[b]));
    return out;
  }();
  return paulis;
}

// F_avg = (sum_j Tr(P_j Lambda(P_j)) + d^2) / (d^2 (d + 1)), d = 4.
inline double average_fidelity_pauli_sum(const Mat& lambda) {
  if (lambda.rows() != 16) throw std::invalid_argument("average_fidelity_pauli_sum: need a 16x16 superoperator");
  cxd acc = 0.0;
  for (const Mat& p : two_qubit_paulis()) acc += hs_inner(p, apply_process(lambda, p));
  return (acc.real() + 16.0) / (16.0 * 5.0);
}

// exp(-i H t) for Hermitian H via spectral decomposition; unitary to
// machine precision by construction.
inline Mat expm_i_hermitian(const Mat& h, double t) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Eigen::VectorXd w = es.eigenvalues();
  Vec phases(w.size());
  for (Eigen::Index k = 0; k < w.size(); ++k)
    phases(k) = std::exp(cxd(0.0, -w(k) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace slerb::qcore
