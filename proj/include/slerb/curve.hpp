#pragma once

// Per-sequence-length population records with shot statistics, CSV
// persistence, and synthetic-curve generation.
//
// Each randomization stores raw counts over the four measurement outcomes
// (exact probabilities when shots == 0) plus its Pauli-frame target, exactly
// mirroring the curve CSV schema:
//   length,randomization_index,n00,n01,n10,n11,target

#include <slerb/errmodel.hpp>
#include <slerb/rng.hpp>

#include <array>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace slerb::fitkit {

struct RandRecord {
  int target = 0;               // basis index 0 (|00>) or 3 (|11>)
  std::array<double, 4> n{};    // counts, or probabilities when exact
};

struct PopulationSample {
  double p_survival = 0.0;
  double p_flip = 0.0;
  double p_leak = 0.0;
};

inline PopulationSample to_populations(const RandRecord& rec) {
  const double total = rec.n[0] + rec.n[1] + rec.n[2] + rec.n[3];
  if (total <= 0.0) throw std::invalid_argument("to_populations: empty record");
  PopulationSample p;
  p.p_survival = rec.n[rec.target] / total;
  p.p_flip = rec.n[3 - rec.target] / total;
  p.p_leak = (rec.n[1] + rec.n[2]) / total;
  return p;
}

struct LengthStats {
  PopulationSample mean;
  PopulationSample var;      // sample variance across randomizations
  double mean_sum = 0.0;     // survival + flip combo
  double mean_diff = 0.0;    // survival - flip combo
  double var_sum = 0.0;
  double var_diff = 0.0;
  int r = 0;
};

struct PopulationCurve {
  std::vector<int> lengths;
  std::vector<std::vector<RandRecord>> records;  // [length index][randomization]
  int shots = 0;                                 // 0 = exact populations
  std::uint64_t seed = 0;

  int n_lengths() const { return static_cast<int>(lengths.size()); }

  LengthStats stats(int idx) const {
    const auto& recs = records.at(idx);
    LengthStats st;
    st.r = static_cast<int>(recs.size());
    if (st.r == 0) throw std::invalid_argument("PopulationCurve: length with no randomizations");
    std::vector<PopulationSample> pops(recs.size());
    for (size_t k = 0; k < recs.size(); ++k) pops[k] = to_populations(recs[k]);
    auto accum = [&](auto get, double& mean, double& var) {
      double m = 0.0;
      for (const auto& p : pops) m += get(p);
      m /= st.r;
      double v = 0.0;
      for (const auto& p : pops) v += (get(p) - m) * (get(p) - m);
      var = st.r > 1 ? v / (st.r - 1) : 0.0;
      mean = m;
    };
    accum([](const PopulationSample& p) { return p.p_survival; }, st.mean.p_survival, st.var.p_survival);
    accum([](const PopulationSample& p) { return p.p_flip; }, st.mean.p_flip, st.var.p_flip);
    accum([](const PopulationSample& p) { return p.p_leak; }, st.mean.p_leak, st.var.p_leak);
    accum([](const PopulationSample& p) { return p.p_survival + p.p_flip; }, st.mean_sum, st.var_sum);
    accum([](const PopulationSample& p) { return p.p_survival - p.p_flip; }, st.mean_diff, st.var_diff);
    return st;
  }
};

// Multinomial draw over the four outcomes via chained binomials.
inline std::array<double, 4> multinomial_counts(const std::array<double, 4>& p, int shots, Rng& rng) {
  std::array<double, 4> counts{};
  int remaining = shots;
  double mass = 1.0;
  for (int k = 0; k < 3 && remaining > 0; ++k) {
    const double pk = std::min(1.0, std::max(0.0, mass > 0 ? p[k] / mass : 0.0));
    std::binomial_distribution<int> bin(remaining, pk);
    const int c = bin(rng);
    counts[k] = c;
    remaining -= c;
    mass -= p[k];
  }
  counts[3] = remaining;
  return counts;
}

// Synthetic curve from the analytic decay model with SPAM folded in.
inline PopulationCurve synthesize_curve(const errmodel::TransferRates& rates, double eps_spam,
                                        const std::vector<int>& lengths, int randomizations,
                                        int shots, std::uint64_t seed) {
  PopulationCurve curve;
  curve.lengths = lengths;
  curve.shots = shots;
  curve.seed = seed;
  curve.records.resize(lengths.size());
  for (size_t li = 0; li < lengths.size(); ++li) {
    auto& recs = curve.records[li];
    recs.resize(randomizations);
    for (int r = 0; r < randomizations; ++r) {
      auto rng = make_rng(seed, "synthesize", li * 1000003ULL + r);
      const auto pops = errmodel::spam_populations(rates, eps_spam, lengths[li]);
      RandRecord rec;
      rec.target = (rng() & 1u) ? 3 : 0;
      std::array<double, 4> p{};
      p[rec.target] = pops.p_survival;
      p[3 - rec.target] = pops.p_flip;
      p[1] = pops.p_leak / 2.0;
      p[2] = pops.p_leak / 2.0;
      if (rec.target == 1 || rec.target == 2) throw std::logic_error("synthesize_curve: bad target");
      rec.n = shots > 0 ? multinomial_counts(p, shots, rng) : p;
      recs[r] = rec;
    }
  }
  return curve;
}

inline void write_curve_csv(std::ostream& os, const PopulationCurve& curve) {
  os << "length,randomization_index,n00,n01,n10,n11,target\n";
  char buf[256];
  for (int li = 0; li < curve.n_lengths(); ++li)
    for (size_t r = 0; r < curve.records[li].size(); ++r) {
      const auto& rec = curve.records[li][r];
      if (curve.shots > 0)
        std::snprintf(buf, sizeof buf, "%d,%zu,%.0f,%.0f,%.0f,%.0f,%s\n", curve.lengths[li], r,
                      rec.n[0], rec.n[1], rec.n[2], rec.n[3], rec.target == 3 ? "11" : "00");
      else
        std::snprintf(buf, sizeof buf, "%d,%zu,%.17g,%.17g,%.17g,%.17g,%s\n", curve.lengths[li], r,
                      rec.n[0], rec.n[1], rec.n[2], rec.n[3], rec.target == 3 ? "11" : "00");
      os << buf;
    }
}

inline PopulationCurve read_curve_csv(std::istream& is) {
  PopulationCurve curve;
  std::string line;
  if (!std::getline(is, line) || line.rfind("length,", 0) != 0)
    throw std::invalid_argument("read_curve_csv: missing header");
  bool fractional = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 7) throw std::invalid_argument("read_curve_csv: malformed row: " + line);
    const int length = std::stoi(fields[0]);
    RandRecord rec;
    for (int k = 0; k < 4; ++k) {
      rec.n[k] = std::stod(fields[2 + k]);
      if (rec.n[k] != std::floor(rec.n[k])) fractional = true;
    }
    if (fields[6] == "11")
      rec.target = 3;
    else if (fields[6] == "00")
      rec.target = 0;
    else
      throw std::invalid_argument("read_curve_csv: bad target: " + fields[6]);
    if (curve.lengths.empty() || curve.lengths.back() != length) {
      curve.lengths.push_back(length);
      curve.records.emplace_back();
    }
    curve.records.back().push_back(rec);
  }
  if (fractional) {
    curve.shots = 0;
  } else {
    double total = 0.0;
    if (!curve.records.empty() && !curve.records[0].empty())
      for (double v : curve.records[0][0].n) total += v;
    curve.shots = static_cast<int>(std::lround(total));
    if (curve.shots == 1) curve.shots = 0;  // probability rows summing to one
  }
  return curve;
}

}  // namespace slerb::fitkit
