#pragma once

// Fits the SLERB decay models (with and without SPAM), blind-RB linear
// combinations, bootstrap confidence intervals, fidelity estimates, and the
// asymptote-based symmetry diagnostic.

#include <slerb/curve.hpp>
#include <slerb/errmodel.hpp>
#include <slerb/grouprep.hpp>
#include <slerb/rng.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace slerb::fitkit {

inline constexpr double kVarianceFloor = 1e-6;

enum class FitModel { no_spam, with_spam, blind_rb, general_three_exp };

inline const char* fit_model_name(FitModel m) {
  switch (m) {
    case FitModel::no_spam: return "no_spam";
    case FitModel::with_spam: return "with_spam";
    case FitModel::blind_rb: return "blind_rb";
    case FitModel::general_three_exp: return "general_three_exp";
  }
  return "?";
}

inline FitModel fit_model_from_name(const std::string& s) {
  if (s == "no_spam") return FitModel::no_spam;
  if (s == "with_spam") return FitModel::with_spam;
  if (s == "blind_rb") return FitModel::blind_rb;
  if (s == "general_three_exp") return FitModel::general_three_exp;
  throw std::invalid_argument("unknown fit model: " + s);
}

struct FitParam {
  double value = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct EstimatePair {
  errmodel::TransferEstimate transfer;
  grouprep::ExtendedEstimate group;
};

struct DecayFit {
  FitModel model = FitModel::no_spam;
  bool converged = false;
  FitParam eps_rb, eps_leak, eps_spam;
  double q_rb = 1.0, q_leak = 1.0, q_leak_minus = 1.0;
  double chi2 = 0.0;
  int dof = 0;
  int iterations = 0;
  std::string diagnostic;
  EstimatePair estimates;
};

// --------------------------------------------------------------------------
// Damped Gauss-Newton with box projection.

namespace detail {

struct LmOutcome {
  Eigen::VectorXd p;
  bool converged = false;
  double chi2 = 0.0;
  int iters = 0;
  Eigen::MatrixXd jtj;
  std::string message;
};

// fill(p, r, J) writes weighted residuals r_i = (y_i - f_i(p)) / sigma_i and
// J_ij = d r_i / d p_j.
template <class Fill>
LmOutcome lm_fit(const Fill& fill, Eigen::VectorXd p, const Eigen::VectorXd& lo,
                 const Eigen::VectorXd& hi, int max_iters = 200) {
  const int np = static_cast<int>(p.size());
  auto clamp = [&](Eigen::VectorXd v) {
    for (int k = 0; k < np; ++k) v(k) = std::min(hi(k), std::max(lo(k), v(k)));
    return v;
  };
  p = clamp(p);

  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  fill(p, r, j);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  LmOutcome out;
  out.jtj = j.transpose() * j;

  for (out.iters = 0; out.iters < max_iters; ++out.iters) {
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    if (g.cwiseAbs().maxCoeff() < 1e-14) {
      out.converged = true;
      break;
    }
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd m = jtj;
      for (int k = 0; k < np; ++k) m(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::VectorXd delta = m.ldlt().solve(-g);
      const Eigen::VectorXd cand = clamp(p + delta);
      Eigen::VectorXd rc;
      Eigen::MatrixXd jc;
      fill(cand, rc, jc);
      const double cost_c = rc.squaredNorm();
      if (std::isfinite(cost_c) && cost_c <= cost) {
        const double step = (cand - p).norm();
        const double drop = cost - cost_c;
        p = cand;
        r = rc;
        j = jc;
        cost = cost_c;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (step < 1e-13 * (1.0 + p.norm()) || drop < 1e-15 * (1.0 + cost)) {
          out.converged = true;
          out.iters++;
        }
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e12) break;
    }
    if (!stepped) {
      out.converged = g.cwiseAbs().maxCoeff() < 1e-8 * (1.0 + cost);
      if (!out.converged) out.message = "no descent step found";
      break;
    }
    if (out.converged) break;
  }
  if (out.iters >= max_iters) out.message = "iteration limit reached";
  out.p = p;
  out.chi2 = cost;
  out.jtj = j.transpose() * j;
  return out;
}

struct SeriesPoint {
  int length = 0;
  double y = 0.0;
  double sigma = 1.0;
};

// Single series a + b q^l fit; used for the blind leakage combination and
// the free-asymptote diagnostic.
struct SingleExpFit {
  double a = 0.0, b = 0.0, q = 1.0;
  double sigma_a = 0.0, sigma_q = 0.0;
  bool converged = false;
  double chi2 = 0.0;
  int dof = 0;
};

inline SingleExpFit fit_single_exponential(const std::vector<SeriesPoint>& pts,
                                           double a0, double b0, double q0) {
  auto fill = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    const double a = p(0), b = p(1), q = p(2);
    r.resize(pts.size());
    j.resize(pts.size(), 3);
    for (size_t i = 0; i < pts.size(); ++i) {
      const double l = pts[i].length;
      const double ql = std::pow(q, l);
      const double w = 1.0 / pts[i].sigma;
      r(i) = (pts[i].y - (a + b * ql)) * w;
      j(i, 0) = -w;
      j(i, 1) = -ql * w;
      j(i, 2) = -(l > 0 ? b * l * std::pow(q, l - 1.0) : 0.0) * w;
    }
  };
  Eigen::VectorXd p0(3), lo(3), hi(3);
  p0 << a0, b0, q0;
  lo << -2.0, -2.0, 1e-9;
  hi << 2.0, 2.0, 1.0;
  const auto out = lm_fit(fill, p0, lo, hi);
  SingleExpFit fit;
  fit.a = out.p(0);
  fit.b = out.p(1);
  fit.q = out.p(2);
  fit.converged = out.converged;
  fit.chi2 = out.chi2;
  fit.dof = static_cast<int>(pts.size()) - 3;
  // Parameter errors from the weighted normal matrix, rescaled by the
  // reduced chi-square when over-dispersed.
  Eigen::MatrixXd cov = out.jtj;
  const double scale = fit.dof > 0 ? std::max(1.0, fit.chi2 / fit.dof) : 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(cov);
  if (lu.isInvertible()) {
    cov = lu.inverse() * scale;
    fit.sigma_a = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.sigma_q = std::sqrt(std::max(0.0, cov(2, 2)));
  }
  return fit;
}

inline void require_fittable(const PopulationCurve& curve) {
  std::set<int> distinct(curve.lengths.begin(), curve.lengths.end());
  if (distinct.size() < 4)
    throw std::invalid_argument("fit: need at least 4 distinct sequence lengths");
  if (distinct.size() != curve.lengths.size())
    throw std::invalid_argument("fit: duplicate sequence lengths in curve");
}

}  // namespace detail

// --------------------------------------------------------------------------
// Blind-RB combinations: P_s + P_f = A + B q_leak^l, P_s - P_f = C q_rb^l.

struct BlindRbFit {
  double q_rb = 1.0, q_leak = 1.0;
  double a = 2.0 / 3.0, b = 1.0 / 3.0, c = 1.0;
  double sigma_q_rb = 0.0, sigma_q_leak = 0.0;
  bool clipped = false;    // negative difference values clipped before log fit
  bool flat_leak = false;  // sum series carried no decay signal
  bool converged = false;
};

inline BlindRbFit blind_rb_combos(const PopulationCurve& curve) {
  detail::require_fittable(curve);
  const int n = curve.n_lengths();
  std::vector<detail::SeriesPoint> sum_pts(n), diff_pts(n);
  for (int i = 0; i < n; ++i) {
    const auto st = curve.stats(i);
    sum_pts[i] = {curve.lengths[i], st.mean_sum,
                  std::sqrt(std::max(st.var_sum, kVarianceFloor))};
    diff_pts[i] = {curve.lengths[i], st.mean_diff,
                   std::sqrt(std::max(st.var_diff, kVarianceFloor))};
  }

  BlindRbFit fit;

  // Log-linear weighted regression for the difference series.
  {
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (const auto& pt : diff_pts) {
      double v = pt.y;
      if (v < 1e-12) {
        v = 1e-12;
        fit.clipped = true;
      }
      const double w = (v * v) / (pt.sigma * pt.sigma);  // var(ln v) = var(v)/v^2
      const double x = pt.length, y = std::log(v);
      sw += w;
      swx += w * x;
      swy += w * y;
      swxx += w * x * x;
      swxy += w * x * y;
    }
    const double det = sw * swxx - swx * swx;
    if (std::abs(det) < 1e-30) throw std::invalid_argument("blind_rb_combos: degenerate lengths");
    const double slope = (sw * swxy - swx * swy) / det;
    const double intercept = (swxx * swy - swx * swxy) / det;
    fit.q_rb = std::exp(std::min(0.0, slope));
    fit.c = std::exp(intercept);
    fit.sigma_q_rb = fit.q_rb * std::sqrt(std::max(0.0, sw / det));
  }

  // Free-asymptote single exponential for the sum series.
  {
    double umin = sum_pts[0].y, umax = sum_pts[0].y;
    for (const auto& pt : sum_pts) {
      umin = std::min(umin, pt.y);
      umax = std::max(umax, pt.y);
    }
    if (umax - umin < 1e-9) {
      fit.flat_leak = true;
      fit.q_leak = 1.0;
      fit.a = 0.5 * (umax + umin);
      fit.b = 0.0;
      fit.converged = true;
    } else {
      const double a0 = sum_pts.back().y;
      double b0 = sum_pts.front().y - a0;
      if (std::abs(b0) < 1e-6) b0 = (b0 < 0 ? -1e-6 : 1e-6);
      double q0 = 0.95;
      for (const auto& pt : sum_pts)
        if (pt.length > 0 && std::abs(pt.y - a0) > 1e-9 && std::abs(b0) > 1e-9) {
          const double ratio = (pt.y - a0) / b0;
          if (ratio > 1e-12 && ratio < 1.0) {
            q0 = std::pow(ratio, 1.0 / pt.length);
            break;
          }
        }
      const auto se = detail::fit_single_exponential(sum_pts, a0, b0, q0);
      fit.q_leak = se.q;
      fit.a = se.a;
      fit.b = se.b;
      fit.sigma_q_leak = se.sigma_q;
      fit.converged = se.converged;
    }
  }
  return fit;
}

// --------------------------------------------------------------------------
// Joint weighted fits of the decay models.

namespace detail {

struct JointData {
  std::vector<int> lengths;
  std::vector<PopulationSample> mean;
  std::vector<PopulationSample> sigma;
};

inline JointData joint_data(const PopulationCurve& curve) {
  JointData d;
  d.lengths = curve.lengths;
  const int n = curve.n_lengths();
  d.mean.resize(n);
  d.sigma.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto st = curve.stats(i);
    d.mean[i] = st.mean;
    d.sigma[i] = {std::sqrt(std::max(st.var.p_survival, kVarianceFloor)),
                  std::sqrt(std::max(st.var.p_flip, kVarianceFloor)),
                  std::sqrt(std::max(st.var.p_leak, kVarianceFloor))};
  }
  return d;
}

// Residual filler for the symmetric decay model, with or without SPAM.
inline auto symmetric_model_fill(const JointData& d, bool with_spam) {
  return [&d, with_spam](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    const double eps_rb = p(0), eps_leak = p(1);
    const double e = with_spam ? p(2) : 0.0;
    const int np = with_spam ? 3 : 2;
    const int n = static_cast<int>(d.lengths.size());
    r.resize(3 * n);
    j.resize(3 * n, np);
    for (int i = 0; i < n; ++i) {
      const double l = d.lengths[i];
      const double abase = 1.0 - 2.0 * eps_rb - eps_leak;
      const double bbase = 1.0 - 3.0 * eps_leak;
      const double al = std::pow(abase, l);
      const double bl = std::pow(bbase, l);
      const double dal = l > 0 ? l * std::pow(abase, l - 1.0) : 0.0;
      const double dbl = l > 0 ? l * std::pow(bbase, l - 1.0) : 0.0;

      const double ps = (1.0 - e) / 3.0 + 0.5 * (1.0 - 2.0 * e) * al + (1.0 - 4.0 * e) * bl / 6.0;
      const double pl = (1.0 + 2.0 * e) / 3.0 - (1.0 - 4.0 * e) * bl / 3.0;
      const double pf = 1.0 - ps - pl;

      const double ws = 1.0 / d.sigma[i].p_survival;
      const double wf = 1.0 / d.sigma[i].p_flip;
      const double wl = 1.0 / d.sigma[i].p_leak;

      r(3 * i + 0) = (d.mean[i].p_survival - ps) * ws;
      r(3 * i + 1) = (d.mean[i].p_flip - pf) * wf;
      r(3 * i + 2) = (d.mean[i].p_leak - pl) * wl;

      const double ds_drb = -(1.0 - 2.0 * e) * dal;
      const double ds_dlk = -0.5 * (1.0 - 2.0 * e) * dal - 0.5 * (1.0 - 4.0 * e) * dbl;
      const double dl_drb = 0.0;
      const double dl_dlk = (1.0 - 4.0 * e) * dbl;
      const double df_drb = -ds_drb - dl_drb;
      const double df_dlk = -ds_dlk - dl_dlk;

      j(3 * i + 0, 0) = -ds_drb * ws;
      j(3 * i + 0, 1) = -ds_dlk * ws;
      j(3 * i + 1, 0) = -df_drb * wf;
      j(3 * i + 1, 1) = -df_dlk * wf;
      j(3 * i + 2, 0) = -dl_drb * wl;
      j(3 * i + 2, 1) = -dl_dlk * wl;
      if (with_spam) {
        const double ds_de = -1.0 / 3.0 - al - (2.0 / 3.0) * bl;
        const double dl_de = 2.0 / 3.0 + (4.0 / 3.0) * bl;
        const double df_de = -ds_de - dl_de;
        j(3 * i + 0, 2) = -ds_de * ws;
        j(3 * i + 1, 2) = -df_de * wf;
        j(3 * i + 2, 2) = -dl_de * wl;
      }
    }
  };
}

// General model: free offset plus three exponentials shared across series.
inline auto general_model_fill(const JointData& d) {
  return [&d](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    const double c1 = p(0), c2 = p(1), c3 = p(2);
    const double qr = p(3), qp = p(4), qm = p(5);
    const int n = static_cast<int>(d.lengths.size());
    r.resize(3 * n);
    j.resize(3 * n, 6);
    for (int i = 0; i < n; ++i) {
      const double l = d.lengths[i];
      const double qrl = std::pow(qr, l), qpl = std::pow(qp, l), qml = std::pow(qm, l);
      const double dqrl = l > 0 ? l * std::pow(qr, l - 1.0) : 0.0;
      const double dqpl = l > 0 ? l * std::pow(qp, l - 1.0) : 0.0;
      const double dqml = l > 0 ? l * std::pow(qm, l - 1.0) : 0.0;

      const double ps = c1 + 0.5 * qrl + c2 * qpl + c3 * qml;
      const double pf = c1 - 0.5 * qrl + c2 * qpl + c3 * qml;
      const double pl = 1.0 - ps - pf;

      const double ws = 1.0 / d.sigma[i].p_survival;
      const double wf = 1.0 / d.sigma[i].p_flip;
      const double wl = 1.0 / d.sigma[i].p_leak;

      r(3 * i + 0) = (d.mean[i].p_survival - ps) * ws;
      r(3 * i + 1) = (d.mean[i].p_flip - pf) * wf;
      r(3 * i + 2) = (d.mean[i].p_leak - pl) * wl;

      const double grad_s[6] = {1.0, qpl, qml, 0.5 * dqrl, c2 * dqpl, c3 * dqml};
      const double grad_f[6] = {1.0, qpl, qml, -0.5 * dqrl, c2 * dqpl, c3 * dqml};
      for (int k = 0; k < 6; ++k) {
        j(3 * i + 0, k) = -grad_s[k] * ws;
        j(3 * i + 1, k) = -grad_f[k] * wf;
        j(3 * i + 2, k) = (grad_s[k] + grad_f[k]) * wl;
      }
    }
  };
}

}  // namespace detail

inline EstimatePair estimate_from_rates(double eps_rb, double eps_leak) {
  EstimatePair est;
  est.transfer = errmodel::transfer_matrix_estimate({eps_rb, eps_leak});
  est.group = grouprep::extended_fidelity(1.0 - 2.0 * eps_rb - eps_leak, 1.0 - 3.0 * eps_leak);
  return est;
}

inline DecayFit fit_slerb(const PopulationCurve& curve, FitModel model) {
  detail::require_fittable(curve);
  DecayFit fit;
  fit.model = model;
  const auto blind = blind_rb_combos(curve);

  if (model == FitModel::blind_rb) {
    fit.q_rb = blind.q_rb;
    fit.q_leak = blind.q_leak;
    fit.eps_leak.value = std::max(0.0, (1.0 - blind.q_leak) / 3.0);
    fit.eps_rb.value = std::max(0.0, (1.0 - blind.q_rb - fit.eps_leak.value) / 2.0);
    fit.converged = blind.converged;
    fit.dof = 2 * curve.n_lengths() - 5;
    if (blind.clipped) fit.diagnostic = "difference series clipped before log fit";
    fit.estimates = estimate_from_rates(fit.eps_rb.value, fit.eps_leak.value);
    fit.eps_rb.ci_lo = fit.eps_rb.ci_hi = fit.eps_rb.value;
    fit.eps_leak.ci_lo = fit.eps_leak.ci_hi = fit.eps_leak.value;
    return fit;
  }

  const auto data = detail::joint_data(curve);

  if (model == FitModel::general_three_exp) {
    Eigen::VectorXd p0(6), lo(6), hi(6);
    p0 << blind.a / 2.0, blind.b / 2.0, 0.0, blind.q_rb, blind.q_leak,
        std::min(0.999, blind.q_leak * 0.98);
    lo << -1.0, -1.0, -1.0, -0.999, -0.999, -0.999;
    hi << 1.0, 1.0, 1.0, 0.99999, 0.99999, 0.99999;
    const auto out = detail::lm_fit(detail::general_model_fill(data), p0, lo, hi, 400);
    fit.converged = out.converged;
    fit.chi2 = out.chi2;
    fit.iterations = out.iters;
    fit.diagnostic = out.message;
    fit.dof = 3 * curve.n_lengths() - 6;
    fit.q_rb = out.p(3);
    fit.q_leak = out.p(4);
    fit.q_leak_minus = out.p(5);
    fit.eps_leak.value = std::max(0.0, (1.0 - fit.q_leak) / 3.0);
    fit.eps_rb.value = std::max(0.0, (1.0 - fit.q_rb - fit.eps_leak.value) / 2.0);
    fit.estimates = estimate_from_rates(fit.eps_rb.value, fit.eps_leak.value);
    return fit;
  }

  const bool with_spam = (model == FitModel::with_spam);
  const int np = with_spam ? 3 : 2;
  Eigen::VectorXd p0(np), lo(np), hi(np);
  const double eps_leak0 = std::clamp((1.0 - blind.q_leak) / 3.0, 0.0, 0.33);
  const double eps_rb0 = std::clamp((1.0 - blind.q_rb - eps_leak0) / 2.0, 0.0, 0.49);
  p0(0) = eps_rb0;
  p0(1) = eps_leak0;
  lo.setZero();
  hi.setConstant(0.4999);
  if (with_spam) p0(2) = std::clamp((1.0 - blind.c) / 2.0, 0.0, 0.2);

  const auto out = detail::lm_fit(detail::symmetric_model_fill(data, with_spam), p0, lo, hi, 400);
  fit.converged = out.converged;
  fit.chi2 = out.chi2;
  fit.iterations = out.iters;
  fit.diagnostic = out.message;
  fit.dof = 3 * curve.n_lengths() - np;
  fit.eps_rb.value = out.p(0);
  fit.eps_leak.value = out.p(1);
  if (with_spam) fit.eps_spam.value = out.p(2);
  fit.q_rb = 1.0 - 2.0 * fit.eps_rb.value - fit.eps_leak.value;
  fit.q_leak = 1.0 - 3.0 * fit.eps_leak.value;
  fit.estimates = estimate_from_rates(fit.eps_rb.value, fit.eps_leak.value);
  return fit;
}

// --------------------------------------------------------------------------
// Non-parametric bootstrap over randomizations.

struct BootstrapCi {
  FitParam eps_rb, eps_leak, eps_spam;
  int resamples = 0;
  int failures = 0;
};

inline BootstrapCi bootstrap_ci(const PopulationCurve& curve, FitModel model, int n_resamples,
                                std::uint64_t seed) {
  for (const auto& recs : curve.records)
    if (recs.size() < 2)
      throw std::invalid_argument("bootstrap_ci: need at least 2 randomizations per length");

  std::vector<double> rb, leak, spam;
  rb.reserve(n_resamples);
  leak.reserve(n_resamples);
  spam.reserve(n_resamples);
  BootstrapCi ci;
  ci.resamples = n_resamples;

  PopulationCurve resampled = curve;
  for (int b = 0; b < n_resamples; ++b) {
    auto rng = make_rng(seed, "bootstrap", b);
    for (int li = 0; li < curve.n_lengths(); ++li) {
      const auto& src = curve.records[li];
      std::uniform_int_distribution<size_t> pick(0, src.size() - 1);
      for (size_t r = 0; r < src.size(); ++r) resampled.records[li][r] = src[pick(rng)];
    }
    try {
      const auto fit = fit_slerb(resampled, model);
      if (!fit.converged) {
        ++ci.failures;
        continue;
      }
      rb.push_back(fit.eps_rb.value);
      leak.push_back(fit.eps_leak.value);
      spam.push_back(fit.eps_spam.value);
    } catch (const std::exception&) {
      ++ci.failures;
    }
  }

  auto percentile = [](std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const size_t i = static_cast<size_t>(pos);
    const double frac = pos - i;
    return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
  };
  ci.eps_rb = {percentile(rb, 0.5), percentile(rb, 0.16), percentile(rb, 0.84)};
  ci.eps_leak = {percentile(leak, 0.5), percentile(leak, 0.16), percentile(leak, 0.84)};
  ci.eps_spam = {percentile(spam, 0.5), percentile(spam, 0.16), percentile(spam, 0.84)};
  return ci;
}

// Point fit plus bootstrap interval, merged into one report.
inline DecayFit fit_slerb_with_ci(const PopulationCurve& curve, FitModel model, int n_resamples,
                                  std::uint64_t seed) {
  DecayFit fit = fit_slerb(curve, model);
  const auto ci = bootstrap_ci(curve, model, n_resamples, seed);
  fit.eps_rb.ci_lo = ci.eps_rb.ci_lo;
  fit.eps_rb.ci_hi = ci.eps_rb.ci_hi;
  fit.eps_leak.ci_lo = ci.eps_leak.ci_lo;
  fit.eps_leak.ci_hi = ci.eps_leak.ci_hi;
  fit.eps_spam.ci_lo = ci.eps_spam.ci_lo;
  fit.eps_spam.ci_hi = ci.eps_spam.ci_hi;
  return fit;
}

// --------------------------------------------------------------------------
// Free-asymptote single-exponential fit of one population series.

enum class SeriesKind { survival, flip, leak };

struct SeriesAsymptote {
  double a = 0.0, b = 0.0, q = 1.0;
  double sigma_a = 0.0, sigma_q = 0.0;
  bool converged = false;
};

inline SeriesAsymptote fit_series_asymptote(const PopulationCurve& curve, SeriesKind kind,
                                            double q0_hint = 0.0) {
  detail::require_fittable(curve);
  const int n = curve.n_lengths();
  std::vector<detail::SeriesPoint> pts(n);
  for (int i = 0; i < n; ++i) {
    const auto st = curve.stats(i);
    const double y = kind == SeriesKind::survival ? st.mean.p_survival
                     : kind == SeriesKind::flip   ? st.mean.p_flip
                                                  : st.mean.p_leak;
    const double v = kind == SeriesKind::survival ? st.var.p_survival
                     : kind == SeriesKind::flip   ? st.var.p_flip
                                                  : st.var.p_leak;
    pts[i] = {curve.lengths[i], y, std::sqrt(std::max(v, kVarianceFloor))};
  }
  const double a0 = pts.back().y;
  double b0 = pts.front().y - a0;
  if (std::abs(b0) < 1e-6) b0 = (b0 < 0 ? -1e-6 : 1e-6);
  double q0 = q0_hint;
  if (q0 <= 0.0 || q0 >= 1.0) {
    q0 = 0.95;
    for (const auto& pt : pts)
      if (pt.length > 0) {
        const double ratio = (pt.y - a0) / b0;
        if (ratio > 1e-12 && ratio < 1.0) {
          q0 = std::pow(ratio, 1.0 / pt.length);
          break;
        }
      }
  }
  const auto fit = detail::fit_single_exponential(pts, a0, b0, q0);
  return {fit.a, fit.b, fit.q, fit.sigma_a, fit.sigma_q, fit.converged};
}

// --------------------------------------------------------------------------
// Asymptote-based symmetry diagnostic.

enum class AsymptoteVerdict { symmetric_consistent, antisymmetric_flagged, inconclusive };

struct AsymptoteDiagnostic {
  AsymptoteVerdict verdict = AsymptoteVerdict::inconclusive;
  double a_survival = 0.0, a_flip = 0.0, a_leak = 0.0;
  double sigma_survival = 0.0, sigma_flip = 0.0, sigma_leak = 0.0;
  std::string note;
};

inline AsymptoteDiagnostic asymptote_diagnostic(const PopulationCurve& curve) {
  detail::require_fittable(curve);
  AsymptoteDiagnostic diag;

  const auto blind = blind_rb_combos(curve);
  const int l_max = *std::max_element(curve.lengths.begin(), curve.lengths.end());
  if (blind.flat_leak || std::pow(blind.q_leak, l_max) >= 0.1) {
    diag.note = "leakage decay not deep enough for asymptote extraction";
    return diag;
  }

  auto fit_series = [&](SeriesKind kind, double& a, double& sig) {
    const auto fit = fit_series_asymptote(curve, kind, blind.q_leak);
    a = fit.a;
    sig = std::max(fit.sigma_a, 1e-6);
  };
  fit_series(SeriesKind::survival, diag.a_survival, diag.sigma_survival);
  fit_series(SeriesKind::flip, diag.a_flip, diag.sigma_flip);
  fit_series(SeriesKind::leak, diag.a_leak, diag.sigma_leak);

  const bool symmetric = std::abs(diag.a_survival - 1.0 / 3.0) < 3.0 * diag.sigma_survival &&
                         std::abs(diag.a_flip - 1.0 / 3.0) < 3.0 * diag.sigma_flip &&
                         std::abs(diag.a_leak - 1.0 / 3.0) < 3.0 * diag.sigma_leak;
  diag.verdict = symmetric ? AsymptoteVerdict::symmetric_consistent
                           : AsymptoteVerdict::antisymmetric_flagged;
  return diag;
}

inline EstimatePair estimate_all(const DecayFit& fit) {
  if (!fit.converged) throw std::runtime_error("estimate_all: fit did not converge");
  return estimate_from_rates(fit.eps_rb.value, fit.eps_leak.value);
}

inline double relative_error(double f_hat, double f_true) {
  if (f_true <= 0.0) throw std::invalid_argument("relative_error: reference must be positive");
  return std::abs(f_hat - f_true) / f_true;
}

}  // namespace slerb::fitkit
