#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pbb/rational.hpp"
#include "pbb/term.hpp"

namespace pbb {

/// Finite-support probability distribution over non-deterministic terms.
/// Entries are kept sorted by term, weights are positive exact rationals
/// summing to exactly 1, so equality is structural.
class Distribution {
 public:
  using Entry = std::pair<NTerm, Rat>;

  /// Defaults to the Dirac distribution on 0 (the only nullary value).
  Distribution() { entries_.emplace_back(NTerm::nil(), Rat(1)); }

  static Distribution dirac(const NTerm& e) {
    Distribution d;
    d.entries_.clear();
    d.entries_.emplace_back(e, Rat(1));
    return d;
  }

  /// Builds a distribution from (term, weight) pairs. Duplicate terms are
  /// merged, zero weights dropped; the total weight must be exactly 1.
  static Distribution make(std::vector<Entry> entries) {
    std::map<NTerm, Rat> acc;
    Rat total(0);
    for (auto& [t, w] : entries) {
      if (w < 0) throw std::invalid_argument("distribution weight negative: " + rat_str(w));
      if (w == 0) continue;
      acc[t] += w;
      total += w;
    }
    if (total != 1) throw std::invalid_argument("distribution weights sum to " + rat_str(total) + ", expected 1");
    Distribution d;
    d.entries_.assign(acc.begin(), acc.end());
    return d;
  }


  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  Rat at(const NTerm& t) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), t,
                               [](const Entry& e, const NTerm& k) { return e.first < k; });
    if (it != entries_.end() && it->first == t) return it->second;
    return Rat(0);
  }

  bool contains(const NTerm& t) const { return at(t) != 0; }

  std::vector<NTerm> support() const {
    std::vector<NTerm> s;
    s.reserve(entries_.size());
    for (const auto& [t, w] : entries_) s.push_back(t);
    return s;
  }

  std::string str() const {
    std::string out = "{";
    bool first = true;
    for (const auto& [t, w] : entries_) {
      if (!first) out += ", ";
      first = false;
      out += rat_str(w) + ": " + t.str();
    }
    out += "}";
    return out;
  }

  std::size_t hash() const {
    std::size_t h = 0;
    for (const auto& [t, w] : entries_) h = detail::hash_mix(detail::hash_mix(h, t.hash()), rat_hash(w));
    return h;
  }

  friend bool operator==(const Distribution& a, const Distribution& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Distribution& a, const Distribution& b) { return compare(a, b) != 0; }
  friend bool operator<(const Distribution& a, const Distribution& b) { return compare(a, b) < 0; }

  static int compare(const Distribution& a, const Distribution& b) {
    std::size_t n = std::min(a.entries_.size(), b.entries_.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (int c = NTerm::compare(a.entries_[i].first, b.entries_[i].first)) return c;
      if (a.entries_[i].second != b.entries_[i].second) return a.entries_[i].second < b.entries_[i].second ? -1 : 1;
    }
    if (a.entries_.size() != b.entries_.size()) return a.entries_.size() < b.entries_.size() ? -1 : 1;
    return 0;
  }

 private:
  std::vector<Entry> entries_;
};

/// A formal convex combination of distributions; coefficients are
/// non-negative and sum to exactly 1.
struct Mixture {
  std::vector<std::pair<Rat, Distribution>> parts;
};

inline Distribution mix(const Mixture& m) {
  Rat total(0);
  std::vector<Distribution::Entry> entries;
  for (const auto& [p, d] : m.parts) {
    if (p < 0) throw std::invalid_argument("mixture coefficient negative: " + rat_str(p));
    total += p;
    if (p == 0) continue;
    for (const auto& [t, w] : d.entries()) entries.emplace_back(t, p * w);
  }
  if (total != 1) throw std::invalid_argument("mixture coefficients sum to " + rat_str(total) + ", expected 1");
  return Distribution::make(std::move(entries));
}

/// r*a + (1-r)*b
inline Distribution mix2(const Rat& r, const Distribution& a, const Distribution& b) {
  if (!is_probability(r)) throw std::invalid_argument("mixture ratio out of [0,1]");
  return mix(Mixture{{{r, a}, {Rat(1) - r, b}}});
}

/// Chebyshev distance: the largest pointwise weight difference.
inline Rat distance(const Distribution& a, const Distribution& b) {
  Rat best(0);
  for (const auto& [t, w] : a.entries()) {
    Rat d = w - b.at(t);
    if (d < 0) d = -d;
    if (d > best) best = d;
  }
  for (const auto& [t, w] : b.entries()) {
    Rat d = w - a.at(t);
    if (d < 0) d = -d;
    if (d > best) best = d;
  }
  return best;
}

/// Result of jointly decomposing two equal mixtures: a matrix of
/// coefficients r[i][j] with component distributions rho[i][j] satisfying
/// the row/column marginal identities.
struct JointDecomposition {
  std::size_t rows = 0, cols = 0;
  std::vector<Rat> r;                  // row-major, rows*cols
  std::vector<Distribution> rho;       // row-major, rows*cols
  const Rat& coeff(std::size_t i, std::size_t j) const { return r[i * cols + j]; }
  const Distribution& part(std::size_t i, std::size_t j) const { return rho[i * cols + j]; }
};

/// Decomposes two presentations of the same distribution into a joint
/// refinement. Requires mix(left) == mix(right); cells with zero
/// coefficient carry the Dirac on 0 as a placeholder.
inline JointDecomposition joint_decompose(const Mixture& left, const Mixture& right) {
  Distribution xi = mix(left);
  if (xi != mix(right)) throw std::invalid_argument("joint_decompose: mixtures denote different distributions");

  JointDecomposition out;
  out.rows = left.parts.size();
  out.cols = right.parts.size();
  out.r.reserve(out.rows * out.cols);
  out.rho.reserve(out.rows * out.cols);

  const Distribution placeholder = Distribution::dirac(NTerm::nil());
  for (std::size_t i = 0; i < out.rows; ++i) {
    const auto& [pi, mi] = left.parts[i];
    for (std::size_t j = 0; j < out.cols; ++j) {
      const auto& [qj, nj] = right.parts[j];
      Rat rij(0);
      for (const auto& [x, xw] : xi.entries()) rij += pi * mi.at(x) * qj * nj.at(x) / xw;
      if (rij == 0) {
        out.r.push_back(Rat(0));
        out.rho.push_back(placeholder);
        continue;
      }
      std::vector<Distribution::Entry> entries;
      for (const auto& [x, xw] : xi.entries()) {
        Rat w = pi * mi.at(x) * qj * nj.at(x) / (rij * xw);
        if (w != 0) entries.emplace_back(x, w);
      }
      out.r.push_back(std::move(rij));
      out.rho.push_back(Distribution::make(std::move(entries)));
    }
  }
  return out;
}

/// One-step residual representation: returns (r, mu') such that
/// mu_i = (1-r)*mu + r*mu' exactly, with r = 1 - min over spt(mu) of
/// mu_i(x)/mu(x). For r == 0 the residual is mu itself.
inline std::pair<Rat, Distribution> limit_residual(const Distribution& mu_i, const Distribution& mu) {
  Rat minq;
  bool first = true;
  for (const auto& [x, w] : mu.entries()) {
    Rat q = mu_i.at(x) / w;
    if (first || q < minq) {
      minq = q;
      first = false;
    }
  }
  if (minq > 1) minq = 1;
  Rat r = Rat(1) - minq;
  if (r == 0) return {r, mu};

  std::vector<Distribution::Entry> entries;
  for (const auto& [x, w] : mu_i.entries()) {
    Rat v = (w - (Rat(1) - r) * mu.at(x)) / r;
    if (v != 0) entries.emplace_back(x, v);
  }
  return {r, Distribution::make(std::move(entries))};
}

}  // namespace pbb

template <>
struct std::hash<pbb::Distribution> {
  std::size_t operator()(const pbb::Distribution& d) const noexcept { return d.hash(); }
};
