#pragma once

// Analytic population-transfer models for SLERB sequences: the 3x3 transfer
// matrix, its eigendecomposition, the closed-form population decays, the
// transfer-matrix fidelity estimator, and generators for the error channels
// used by the simulations.
//
// Population vectors are ordered (survival, flip, leak).

#include <slerb/qcore.hpp>
#include <slerb/rng.hpp>

#include <array>
#include <stdexcept>

namespace slerb::errmodel {

using qcore::cxd;
using qcore::Mat;

struct TransferRates {
  double eps_rb = 0.0;
  double eps_leak = 0.0;

  // Decay bases must stay positive so the model is monotone.
  bool valid() const {
    return eps_rb >= 0.0 && eps_rb < 1.0 && eps_leak >= 0.0 && eps_leak < 1.0 &&
           2.0 * eps_rb + eps_leak < 1.0 && 3.0 * eps_leak < 1.0;
  }
  void require_valid() const {
    if (!valid()) throw std::invalid_argument("TransferRates: rates violate decay-base bounds");
  }
};

struct PopulationVector {
  double p_survival = 1.0;
  double p_flip = 0.0;
  double p_leak = 0.0;
};

// I + T with T = T_RB + T_leak; columns sum to 1.
inline Eigen::Matrix3d transfer_matrix(const TransferRates& r) {
  r.require_valid();
  Eigen::Matrix3d t_rb, t_leak;
  t_rb << -r.eps_rb, r.eps_rb, 0,
          r.eps_rb, -r.eps_rb, 0,
          0, 0, 0;
  t_leak << -r.eps_leak, 0, r.eps_leak,
            0, -r.eps_leak, r.eps_leak,
            r.eps_leak, r.eps_leak, -2.0 * r.eps_leak;
  return Eigen::Matrix3d::Identity() + t_rb + t_leak;
}

// Closed-form solution of the transfer-matrix recursion from (1, 0, 0).
inline PopulationVector analytic_populations(const TransferRates& r, double l) {
  r.require_valid();
  if (l < 0) throw std::invalid_argument("analytic_populations: negative length");
  const double a = std::pow(1.0 - 2.0 * r.eps_rb - r.eps_leak, l);
  const double b = std::pow(1.0 - 3.0 * r.eps_leak, l);
  PopulationVector p;
  p.p_survival = (2.0 + 3.0 * a + b) / 6.0;
  p.p_leak = (1.0 - b) / 3.0;
  p.p_flip = 1.0 - p.p_survival - p.p_leak;
  return p;
}

// Decay model with state-preparation error folded in to first order.  The
// average SPAM error shifts the offsets and rescales the two exponentials;
// at eps_spam_bar = 0 this reduces exactly to analytic_populations.
inline PopulationVector spam_populations(const TransferRates& r, double eps_spam_bar, double l) {
  r.require_valid();
  const double a = std::pow(1.0 - 2.0 * r.eps_rb - r.eps_leak, l);
  const double b = std::pow(1.0 - 3.0 * r.eps_leak, l);
  const double e = eps_spam_bar;
  PopulationVector p;
  p.p_survival = (1.0 - e) / 3.0 + 0.5 * (1.0 - 2.0 * e) * a + (1.0 - 4.0 * e) * b / 6.0;
  p.p_leak = (1.0 + 2.0 * e) / 3.0 - (1.0 - 4.0 * e) * b / 3.0;
  p.p_flip = 1.0 - p.p_survival - p.p_leak;
  return p;
}

struct MarkovEigensystem {
  std::array<double, 3> eigenvalues;          // 1, 1-2e_rb-e_leak, 1-3e_leak
  std::array<Eigen::Matrix3d, 3> projectors;  // spectral projectors, sum to I
};

// Spectral decomposition of I + T in the (survival, flip, leak) ordering.
inline MarkovEigensystem markov_eigendecomposition(const TransferRates& r) {
  r.require_valid();
  MarkovEigensystem sys;
  sys.eigenvalues = {1.0, 1.0 - 2.0 * r.eps_rb - r.eps_leak, 1.0 - 3.0 * r.eps_leak};
  sys.projectors[0] = Eigen::Matrix3d::Constant(1.0 / 3.0);
  sys.projectors[1] << 0.5, -0.5, 0,
                       -0.5, 0.5, 0,
                       0, 0, 0;
  sys.projectors[2] << 1.0 / 6.0, 1.0 / 6.0, -2.0 / 6.0,
                       1.0 / 6.0, 1.0 / 6.0, -2.0 / 6.0,
                       -2.0 / 6.0, -2.0 / 6.0, 4.0 / 6.0;
  return sys;
}

struct TransferEstimate {
  double clifford_infidelity = 0.0;  // (6/5) eps_rb + (4/5) eps_leak
  double eps_2q = 0.0;               // (6/13) of the above
  qcore::FidelityReport fidelity;
};

// Variance-ratio weighted estimator and the per-gate conversion.
inline TransferEstimate transfer_matrix_estimate(const TransferRates& r) {
  r.require_valid();
  TransferEstimate est;
  est.clifford_infidelity = (6.0 / 5.0) * r.eps_rb + (4.0 / 5.0) * r.eps_leak;
  est.eps_2q = (6.0 / 13.0) * est.clifford_infidelity;
  const double avg_f = 1.0 - est.clifford_infidelity;
  est.fidelity = {(5.0 * avg_f - 1.0) / 4.0, avg_f, 4};
  return est;
}

struct RateConversion {
  TransferRates rates;
  bool perturbative_warning = false;  // set when |alpha| > 0.3
};

// eps_rb = (2/3) alpha_rb^2, eps_leak = 2 alpha_leak^2.
inline RateConversion rates_from_alpha(double alpha_rb, double alpha_leak) {
  RateConversion conv;
  conv.rates.eps_rb = (2.0 / 3.0) * alpha_rb * alpha_rb;
  conv.rates.eps_leak = 2.0 * alpha_leak * alpha_leak;
  conv.perturbative_warning = std::abs(alpha_rb) > 0.3 || std::abs(alpha_leak) > 0.3;
  conv.rates.require_valid();
  return conv;
}

enum class NoiseKind { rb_conserving, leakage, random_pauli_gaussian };

struct AnalyticNoiseChannel {
  NoiseKind kind = NoiseKind::rb_conserving;
  double alpha = 0.0;    // rotation angle for the fixed-unitary kinds
  double sigma2 = 0.0;   // per-Pauli variance for the Gaussian kind
  bool random_sign = false;
};

// One error unitary.  For the leakage channel with random_sign, the sign of
// alpha is redrawn on every call.
inline Mat make_error_unitary(const AnalyticNoiseChannel& ch, Rng& rng) {
  using qcore::identity;
  using qcore::kron;
  using qcore::sigma_x;
  switch (ch.kind) {
    case NoiseKind::rb_conserving: {
      const Mat xx = kron(sigma_x(), sigma_x());
      return Mat(std::cos(ch.alpha) * identity(4) - qcore::kI * std::sin(ch.alpha) * xx);
    }
    case NoiseKind::leakage: {
      double a = ch.alpha;
      if (ch.random_sign && (rng() & 1u)) a = -a;
      const Mat gen = kron(sigma_x(), identity(2)) + kron(identity(2), sigma_x());
      return qcore::expm_i_hermitian(gen, a);
    }
    case NoiseKind::random_pauli_gaussian: {
      std::normal_distribution<double> n(0.0, std::sqrt(ch.sigma2));
      Mat h = Mat::Zero(4, 4);
      const auto& paulis = qcore::two_qubit_paulis();
      for (int j = 1; j < 16; ++j) h += n(rng) * paulis[j];  // identity excluded
      return qcore::expm_i_hermitian(h, -1.0);               // exp(+i theta . P)
    }
  }
  throw std::logic_error("make_error_unitary: unknown channel kind");
}

// Exact process matrix of the channel: the random-sign leakage channel is the
// even mixture of the two signs; the Gaussian kind is a single draw.
inline Mat channel_process_matrix(const AnalyticNoiseChannel& ch, Rng& rng) {
  if (ch.kind == NoiseKind::leakage && ch.random_sign) {
    AnalyticNoiseChannel fixed = ch;
    fixed.random_sign = false;
    const Mat up = make_error_unitary(fixed, rng);
    fixed.alpha = -fixed.alpha;
    const Mat dn = make_error_unitary(fixed, rng);
    return Mat(0.5 * (qcore::unitary_to_process(up) + qcore::unitary_to_process(dn)));
  }
  return qcore::unitary_to_process(make_error_unitary(ch, rng));
}

}  // namespace slerb::errmodel
