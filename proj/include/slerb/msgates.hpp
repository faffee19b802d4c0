#pragma once

// MS-gate unitaries, the 24-element Clifford catalogue on the even-parity
// subspace S_RB = {|00>,|11>}, and SLERB sequence synthesis/inversion.

#include <slerb/qcore.hpp>
#include <slerb/rng.hpp>

#include <array>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace slerb::msgates {

using qcore::cxd;
using qcore::Mat;
using qcore::kI;

inline constexpr double kTwoPi = 2.0 * M_PI;

inline double normalize_phase(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0) p += kTwoPi;
  return p;
}

struct MsPulse {
  double theta = M_PI / 2.0;
  double phi = 0.0;
};

// U_2Q(theta, phi):
//   diagonal cos(theta/2); -i e^{-+2i phi} sin(theta/2) across {|00>,|11>};
//   -i sin(theta/2) across {|01>,|10>}.
inline Mat ms_unitary(double theta, double phi) {
  const double c = std::cos(theta / 2.0);
  const cxd s = -kI * std::sin(theta / 2.0);
  Mat u = Mat::Zero(4, 4);
  u(0, 0) = u(1, 1) = u(2, 2) = u(3, 3) = c;
  u(0, 3) = s * std::exp(-2.0 * kI * phi);
  u(3, 0) = s * std::exp(2.0 * kI * phi);
  u(1, 2) = s;
  u(2, 1) = s;
  return u;
}

struct RbRestriction {
  Mat block;            // 2x2 action on {|00>,|11>}
  double leakage_norm;  // Frobenius norm of the S_RB <-> S_leak coupling
};

inline RbRestriction restrict_to_rb(const Mat& u) {
  Mat block(2, 2);
  block << u(0, 0), u(0, 3), u(3, 0), u(3, 3);
  double coupling = 0.0;
  for (int rb : {0, 3})
    for (int lk : {1, 2}) coupling += std::norm(u(rb, lk)) + std::norm(u(lk, rb));
  return {block, std::sqrt(coupling)};
}

struct CliffordEntry {
  int id = 0;
  std::vector<MsPulse> pulses;
  Mat rb_action;     // 2x2, projective representative
  Mat full_unitary;  // 4x4
};

struct CliffordCatalogue {
  std::vector<CliffordEntry> entries;
  std::array<std::array<int, 24>, 24> mult{};  // mult[i][j] = class of A_i * A_j
  std::array<int, 24> inverse{};
  int identity_id = -1;
  int flip_id = -1;  // projectively sigma_x on S_RB (|00> -> |11>)
  int total_pulses = 0;

  double avg_pulses() const { return total_pulses / 24.0; }

  int lookup(const Mat& rb2x2) const {
    for (const auto& e : entries)
      if (qcore::projectively_equal(e.rb_action, rb2x2)) return e.id;
    return -1;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0x6a5d39eae116586dULL;
    for (const auto& e : entries) {
      h = splitmix64(h ^ static_cast<std::uint64_t>(e.id));
      for (const auto& p : e.pulses) {
        h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(p.phi * 1e12)));
        h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(p.theta * 1e12)));
      }
    }
    return h;
  }
};

// Breadth-first search over words in the four pi/2 pulses
// {U_2Q(pi/2, k pi/4) : k = 0..3}, keeping the shortest
// (lexicographically-first) word per projectively-new S_RB action.
inline CliffordCatalogue build_clifford_catalogue() {
  const std::array<double, 4> phases = {0.0, M_PI / 4.0, M_PI / 2.0, 3.0 * M_PI / 4.0};
  std::array<Mat, 4> gen;
  for (int k = 0; k < 4; ++k) gen[k] = ms_unitary(M_PI / 2.0, phases[k]);

  CliffordCatalogue cat;
  struct Word {
    std::vector<int> phase_idx;
    Mat unitary;
  };
  std::vector<Word> frontier = {{{}, qcore::identity(4)}};

  auto accept = [&](const Word& w) {
    const auto restr = restrict_to_rb(w.unitary);
    for (const auto& e : cat.entries)
      if (qcore::projectively_equal(e.rb_action, restr.block)) return;
    CliffordEntry e;
    e.id = static_cast<int>(cat.entries.size());
    for (int k : w.phase_idx) e.pulses.push_back({M_PI / 2.0, phases[k]});
    e.rb_action = restr.block;
    e.full_unitary = w.unitary;
    cat.entries.push_back(std::move(e));
  };

  accept(frontier.front());
  for (int depth = 1; depth <= 5 && cat.entries.size() < 24; ++depth) {
    std::vector<Word> next;
    next.reserve(frontier.size() * 4);
    for (const auto& w : frontier)
      for (int k = 0; k < 4; ++k) {
        Word nw;
        nw.phase_idx = w.phase_idx;
        nw.phase_idx.push_back(k);
        nw.unitary = gen[k] * w.unitary;
        accept(nw);
        next.push_back(std::move(nw));
      }
    frontier = std::move(next);
  }
  if (cat.entries.size() != 24)
    throw std::runtime_error("build_clifford_catalogue: search did not find 24 Cliffords by word length 5");

  for (const auto& e : cat.entries) cat.total_pulses += static_cast<int>(e.pulses.size());

  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) {
      const int id = cat.lookup(cat.entries[i].rb_action * cat.entries[j].rb_action);
      if (id < 0) throw std::runtime_error("build_clifford_catalogue: catalogue not closed under composition");
      cat.mult[i][j] = id;
    }

  cat.identity_id = cat.lookup(qcore::identity(2));
  cat.flip_id = cat.lookup(qcore::sigma_x());
  if (cat.identity_id < 0 || cat.flip_id < 0)
    throw std::runtime_error("build_clifford_catalogue: identity or flip class missing");

  for (int i = 0; i < 24; ++i) {
    cat.inverse[i] = -1;
    for (int j = 0; j < 24; ++j)
      if (cat.mult[i][j] == cat.identity_id) cat.inverse[i] = j;
    if (cat.inverse[i] < 0) throw std::runtime_error("build_clifford_catalogue: missing inverse");
  }
  return cat;
}

struct SlerbSequence {
  std::vector<int> clifford_ids;     // l random Cliffords plus the inversion
  std::vector<MsPulse> pulse_schedule;
  int target_state = 0;              // basis index, 0 (|00>) or 3 (|11>)
  std::uint64_t seed = 0;

  int length() const { return static_cast<int>(clifford_ids.size()) - 1; }
};

// l uniform draws plus an inversion Clifford chosen so the total S_RB action
// maps |00> to the Pauli-frame target (|00> or |11>, uniform per sequence).
inline SlerbSequence sample_sequence(const CliffordCatalogue& cat, int l, Rng& rng,
                                     std::uint64_t seed_tag = 0) {
  if (l < 0) throw std::invalid_argument("sample_sequence: negative length");
  std::uniform_int_distribution<int> pick(0, 23);
  SlerbSequence seq;
  seq.seed = seed_tag;
  seq.clifford_ids.reserve(l + 1);
  int running = cat.identity_id;
  for (int k = 0; k < l; ++k) {
    const int id = pick(rng);
    seq.clifford_ids.push_back(id);
    running = cat.mult[id][running];
  }
  const bool flip_target = (rng() & 1u) != 0;
  seq.target_state = flip_target ? 3 : 0;
  const int wanted = flip_target ? cat.flip_id : cat.identity_id;
  seq.clifford_ids.push_back(cat.mult[wanted][cat.inverse[running]]);

  for (int id : seq.clifford_ids)
    for (const auto& p : cat.entries[id].pulses) seq.pulse_schedule.push_back(p);
  return seq;
}

enum class OutcomeLabel { survival, flip, leak };

inline OutcomeLabel ideal_survival_label(const SlerbSequence& seq, int outcome) {
  if (outcome < 0 || outcome > 3) throw std::invalid_argument("ideal_survival_label: outcome out of range");
  if (outcome == 1 || outcome == 2) return OutcomeLabel::leak;
  return outcome == seq.target_state ? OutcomeLabel::survival : OutcomeLabel::flip;
}

// Line-oriented export: seed, l, target, clifford ids, then the flattened
// (theta, phi) pulse list in radians with 12 significant digits.
inline std::string sequence_to_line(const SlerbSequence& seq) {
  std::ostringstream os;
  os << seq.seed << ' ' << seq.length() << ' ' << (seq.target_state == 3 ? "11" : "00");
  for (int id : seq.clifford_ids) os << ' ' << id;
  os << " |";
  char buf[64];
  for (const auto& p : seq.pulse_schedule) {
    std::snprintf(buf, sizeof buf, " %.12g %.12g", p.theta, p.phi);
    os << buf;
  }
  return os.str();
}

inline SlerbSequence sequence_from_line(const std::string& line) {
  std::istringstream is(line);
  SlerbSequence seq;
  int l = 0;
  std::string target;
  if (!(is >> seq.seed >> l >> target))
    throw std::invalid_argument("sequence_from_line: malformed header");
  seq.target_state = (target == "11") ? 3 : 0;
  seq.clifford_ids.resize(l + 1);
  for (int& id : seq.clifford_ids)
    if (!(is >> id)) throw std::invalid_argument("sequence_from_line: missing clifford id");
  std::string bar;
  is >> bar;
  if (bar != "|") throw std::invalid_argument("sequence_from_line: missing pulse separator");
  double theta = 0.0, phi = 0.0;
  while (is >> theta >> phi) seq.pulse_schedule.push_back({theta, phi});
  return seq;
}

}  // namespace slerb::msgates
