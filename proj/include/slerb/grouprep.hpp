#pragma once

// The benchmarking group generated by the two pi/2 MS pulses, channel twirls
// over its process-matrix representation, the six irreducible-component
// projectors, subspace decay extraction, and the extended fidelity estimator.

#include <slerb/msgates.hpp>
#include <slerb/qcore.hpp>

#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace slerb::grouprep {

using qcore::cxd;
using qcore::Mat;
using qcore::Vec;

// Phase-normalize so the largest-magnitude entry is real positive.  Ties on
// magnitude resolve to the first (row, col) in lexicographic order, which is
// stable because exact group elements separate entries by O(1).
inline Mat canonicalize_phase(const Mat& g) {
  const double mx = qcore::max_abs(g);
  for (Eigen::Index r = 0; r < g.rows(); ++r)
    for (Eigen::Index c = 0; c < g.cols(); ++c)
      if (std::abs(g(r, c)) > mx - 1e-9) {
        const cxd ph = g(r, c) / std::abs(g(r, c));
        return g / ph;
      }
  throw std::invalid_argument("canonicalize_phase: zero matrix");
}

struct BenchmarkGroup {
  std::vector<Mat> elements;      // canonical projective representatives, 4x4
  std::vector<Mat> process_reps;  // V(g) = conj(g) (x) g, 16x16

  int order() const { return static_cast<int>(elements.size()); }

  int find(const Mat& u) const {
    for (int i = 0; i < order(); ++i)
      if (qcore::projectively_equal(elements[i], u)) return i;
    return -1;
  }
};

// Worklist closure under projective multiplication.
inline BenchmarkGroup generate_group(const Mat& gen_x, const Mat& gen_y) {
  if (!qcore::is_unitary(gen_x) || !qcore::is_unitary(gen_y))
    throw std::invalid_argument("generate_group: generators must be unitary");

  BenchmarkGroup g;
  g.elements.push_back(canonicalize_phase(qcore::identity(4)));
  std::vector<Mat> frontier = g.elements;
  const Mat gens[2] = {gen_x, gen_y};

  while (!frontier.empty()) {
    std::vector<Mat> next;
    for (const Mat& f : frontier)
      for (const Mat& gen : gens) {
        const Mat prod = canonicalize_phase(gen * f);
        if (g.find(prod) < 0) {
          g.elements.push_back(prod);
          next.push_back(prod);
          if (g.elements.size() > 500)
            throw std::runtime_error("generate_group: closure exceeded 500 elements");
        }
      }
    frontier = std::move(next);
  }

  g.process_reps.reserve(g.elements.size());
  for (const Mat& e : g.elements) g.process_reps.push_back(qcore::kron(e.conjugate(), e));
  return g;
}

// (1/|G|) sum_g V(g) Lambda V(g)^dag
inline Mat twirl(const Mat& lambda, const BenchmarkGroup& g) {
  if (lambda.rows() != 16 || lambda.cols() != 16)
    throw std::invalid_argument("twirl: need a 16x16 superoperator");
  Mat acc = Mat::Zero(16, 16);
  for (const Mat& v : g.process_reps) acc += v * lambda * v.adjoint();
  return acc / static_cast<double>(g.order());
}

enum class IrrepLabel {
  trivial,
  su2_subspace,
  sym_antisym_transfer,
  antisym_sym_transfer,
  forward_mixing,
  backward_mixing,
};

inline const char* irrep_name(IrrepLabel l) {
  switch (l) {
    case IrrepLabel::trivial: return "trivial";
    case IrrepLabel::su2_subspace: return "su2_subspace";
    case IrrepLabel::sym_antisym_transfer: return "sym_antisym_transfer";
    case IrrepLabel::antisym_sym_transfer: return "antisym_sym_transfer";
    case IrrepLabel::forward_mixing: return "forward_mixing";
    case IrrepLabel::backward_mixing: return "backward_mixing";
  }
  return "?";
}

struct IrrepProjector {
  IrrepLabel label;
  Mat projector;               // 16x16
  int multiplicity;
  int irrep_dim;
  std::vector<Mat> basis_ops;  // HS-orthonormal operator basis, 4x4 each
};

namespace detail {

inline Vec ket00() { return qcore::basis_ket(0, 4); }
inline Vec ket11() { return qcore::basis_ket(3, 4); }
inline Vec psi_plus() {
  return (qcore::basis_ket(1, 4) + qcore::basis_ket(2, 4)) / std::sqrt(2.0);
}
inline Vec psi_minus() {
  return (qcore::basis_ket(1, 4) - qcore::basis_ket(2, 4)) / std::sqrt(2.0);
}

inline Mat dyad(const Vec& a, const Vec& b) { return a * b.adjoint(); }

inline Mat projector_from_ops(const std::vector<Mat>& ops) {
  Mat p = Mat::Zero(16, 16);
  for (const Mat& op : ops) {
    const Vec v = qcore::vec(op);
    p += v * v.adjoint();
  }
  return p;
}

}  // namespace detail

// The six isotypic projectors.  Bases follow the decomposition of the
// operator space over {|00>,|11>,|Psi+>,|Psi->}: the three trace-carrying
// projectors span the trivial component, the su(2) adjoint on S_RB spans the
// depolarizing component, and the remaining matrix units group into the
// transfer and mixing components.
inline const std::vector<IrrepProjector>& irrep_projectors() {
  static const std::vector<IrrepProjector> projs = [] {
    using namespace detail;
    const Vec z = ket00(), o = ket11(), p = psi_plus(), m = psi_minus();
    const double r = 1.0 / std::sqrt(2.0);

    std::vector<IrrepProjector> out;
    auto add = [&out](IrrepLabel label, int mult, int dim, std::vector<Mat> ops) {
      out.push_back({label, projector_from_ops(ops), mult, dim, std::move(ops)});
    };

    add(IrrepLabel::trivial, 3, 1,
        {Mat(r * (dyad(z, z) + dyad(o, o))), dyad(p, p), dyad(m, m)});
    add(IrrepLabel::su2_subspace, 1, 3,
        {dyad(z, o), dyad(o, z), Mat(r * (dyad(z, z) - dyad(o, o)))});
    add(IrrepLabel::sym_antisym_transfer, 1, 1, {dyad(m, p)});
    add(IrrepLabel::antisym_sym_transfer, 1, 1, {dyad(p, m)});
    add(IrrepLabel::forward_mixing, 2, 2,
        {dyad(p, z), dyad(p, o), dyad(z, m), dyad(o, m)});
    add(IrrepLabel::backward_mixing, 2, 2,
        {dyad(m, z), dyad(m, o), dyad(z, p), dyad(o, p)});
    return out;
  }();
  return projs;
}

// <<meas| Pi |prep>> for computational-basis preparation/measurement.
inline double spam_pair_overlap(const IrrepProjector& proj, int prep, int meas) {
  if (prep < 0 || prep > 3 || meas < 0 || meas > 3)
    throw std::invalid_argument("spam_pair_overlap: basis index out of range");
  const Vec pk = qcore::basis_superket(prep, 4);
  const Vec mk = qcore::basis_superket(meas, 4);
  return (mk.dot(proj.projector * pk)).real();
}

struct DecaySpectrum {
  double q_rb = 1.0;
  double q_leak_plus = 1.0;
  double q_leak_minus = 1.0;
  std::vector<cxd> residual_decays;  // a-transfer scalars and b-block eigenvalues
};

namespace detail {

// Block of a twirled channel in an HS-orthonormal operator basis.
inline Mat channel_block(const Mat& lambda, const std::vector<Mat>& ops) {
  const int n = static_cast<int>(ops.size());
  Mat block(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      block(i, j) = qcore::vec(ops[i]).dot(lambda * qcore::vec(ops[j]));
  return block;
}

}  // namespace detail

// Subspace decays of a twirled, trace-preserving channel.
//
// q_rb is the scalar acting on the su(2)-subspace component (Schur forces a
// scalar; any numerical spread is averaged).  The 3x3 trivial block carries
// one eigenvalue pinned at 1 by trace preservation plus the two leakage
// decays, which are assigned to +/- by the dominant |Psi+/-><Psi+/-| weight
// of their eigenvectors.  Eigenvalues of the remaining components are
// reported in residual_decays: the two transfer scalars first, then the
// forward- and backward-mixing pairs.
inline DecaySpectrum extract_decays(const Mat& twirled) {
  const auto& projs = irrep_projectors();
  DecaySpectrum spec;

  const Mat qc = detail::channel_block(twirled, projs[1].basis_ops);
  spec.q_rb = qc.trace().real() / 3.0;

  const Mat q0 = detail::channel_block(twirled, projs[0].basis_ops);
  Eigen::ComplexEigenSolver<Mat> es(q0);
  const Vec vals = es.eigenvalues();
  int unit_idx = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(vals(k) - 1.0) < std::abs(vals(unit_idx) - 1.0)) unit_idx = k;
  if (std::abs(vals(unit_idx) - 1.0) > 1e-6)
    throw std::runtime_error("extract_decays: trivial block has no unit eigenvalue (trace preservation broken)");

  int rest[2], n_rest = 0;
  for (int k = 0; k < 3; ++k)
    if (k != unit_idx) rest[n_rest++] = k;
  const auto plus_weight = [&](int k) { return std::norm(es.eigenvectors()(1, k)); };
  const auto minus_weight = [&](int k) { return std::norm(es.eigenvectors()(2, k)); };
  int plus_idx = rest[0], minus_idx = rest[1];
  if (plus_weight(rest[1]) > plus_weight(rest[0]) ||
      (plus_weight(rest[1]) == plus_weight(rest[0]) &&
       minus_weight(rest[0]) > minus_weight(rest[1])))
    std::swap(plus_idx, minus_idx);
  spec.q_leak_plus = vals(plus_idx).real();
  spec.q_leak_minus = vals(minus_idx).real();

  spec.residual_decays.push_back(detail::channel_block(twirled, projs[2].basis_ops)(0, 0));
  spec.residual_decays.push_back(detail::channel_block(twirled, projs[3].basis_ops)(0, 0));
  for (int b : {4, 5}) {
    const Mat r = detail::channel_block(twirled, projs[b].basis_ops);
    // The 4x4 restriction is Q (x) I2, so each Q eigenvalue appears twice;
    // recover the pair from the trace invariants.
    const cxd t = r.trace() / 2.0;
    const cxd s = (r * r).trace() / 2.0;
    const cxd disc = std::sqrt(2.0 * s - t * t);
    spec.residual_decays.push_back((t + disc) / 2.0);
    spec.residual_decays.push_back((t - disc) / 2.0);
  }
  return spec;
}

struct ExtendedEstimate {
  qcore::FidelityReport fidelity;
  double eps_2q = 0.0;
};

// F = (1 + 8 q_RB + 7 q_leak,+) / 16, converted to average fidelity and to a
// per-gate error via the 13/6 pulses-per-Clifford factor.
inline ExtendedEstimate extended_fidelity(double q_rb, double q_leak_plus) {
  const double f = (1.0 + 8.0 * q_rb + 7.0 * q_leak_plus) / 16.0;
  ExtendedEstimate est;
  est.fidelity = qcore::FidelityReport::from_process(f, 4);
  est.eps_2q = (6.0 / 13.0) * (1.0 - est.fidelity.average_fidelity);
  return est;
}

// Structured numeric export (label, shape, row-major complex entries).
inline void export_matrix(std::ostream& os, const std::string& label, const Mat& m) {
  os << label << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::string line;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.12g %.12g", m(r, c).real(), m(r, c).imag());
      line += buf;
      line += (c + 1 < m.cols()) ? ' ' : '\n';
    }
    os << line;
  }
}

inline void export_group(std::ostream& os, const BenchmarkGroup& g) {
  os << "benchmark_group order " << g.order() << '\n';
  for (int i = 0; i < g.order(); ++i) export_matrix(os, "element_" + std::to_string(i), g.elements[i]);
}

inline void export_projectors(std::ostream& os) {
  for (const auto& p : irrep_projectors()) export_matrix(os, irrep_name(p.label), p.projector);
}

}  // namespace slerb::grouprep
