#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pbb/distribution.hpp"
#include "pbb/term.hpp"

namespace pbb {

/// Distribution denoted by a probabilistic term.
inline Distribution den(const PTerm& p) {
  switch (p.kind()) {
    case PTerm::Kind::dirac:
      return Distribution::dirac(p.inner());
    case PTerm::Kind::pchoice:
      return mix2(p.ratio(), den(p.left()), den(p.right()));
  }
  throw std::logic_error("bad PTerm kind");
}

using Seed = std::variant<NTerm, PTerm, Distribution>;

/// A finite, transition-closed set of non-deterministic states together
/// with their derivable transitions. Immutable once built; queries are pure.
class Universe {
 public:
  using Transitions = std::vector<std::pair<Action, Distribution>>;

  static Universe build(const std::vector<Seed>& seeds) {
    std::vector<NTerm> roots;
    for (const auto& s : seeds) {
      if (const auto* e = std::get_if<NTerm>(&s)) {
        roots.push_back(*e);
      } else if (const auto* p = std::get_if<PTerm>(&s)) {
        for (const auto& [t, w] : den(*p).entries()) roots.push_back(t);
      } else {
        for (const auto& [t, w] : std::get<Distribution>(s).entries()) roots.push_back(t);
      }
    }

    std::map<NTerm, Transitions> table;
    std::vector<NTerm> todo = roots;
    while (!todo.empty()) {
      NTerm e = todo.back();
      todo.pop_back();
      if (table.count(e)) continue;
      Transitions tr;
      collect_sos(e, tr);
      std::sort(tr.begin(), tr.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
      });
      tr.erase(std::unique(tr.begin(), tr.end()), tr.end());
      for (const auto& [act, d] : tr)
        for (const auto& [t, w] : d.entries()) todo.push_back(t);
      table.emplace(std::move(e), std::move(tr));
    }

    Universe u;
    u.states_.reserve(table.size());
    for (auto& [e, tr] : table) {
      u.index_.emplace(e, static_cast<int>(u.states_.size()));
      u.states_.push_back(e);
      u.trans_.push_back(std::move(tr));
    }
    u.tau_height_.assign(u.states_.size(), -1);
    return u;
  }

  const std::vector<NTerm>& states() const { return states_; }

  bool contains(const NTerm& e) const { return index_.count(e) != 0; }

  bool covers(const Distribution& d) const {
    for (const auto& [t, w] : d.entries())
      if (!contains(t)) return false;
    return true;
  }

  int index_of(const NTerm& e) const {
    auto it = index_.find(e);
    return it == index_.end() ? -1 : it->second;
  }

  const Transitions& transitions(const NTerm& e) const {
    auto it = index_.find(e);
    if (it == index_.end()) throw std::invalid_argument("state not in universe: " + e.str());
    return trans_[it->second];
  }

  bool has_action(const NTerm& e, const Action& a) const {
    for (const auto& [act, d] : transitions(e))
      if (act == a) return true;
    return false;
  }

  /// Hard ceiling for weak-transition search depth: the sum of all state
  /// complexities. Every full tau-firing strictly decreases the weighted
  /// complexity, so chains never need to be longer than this.
  std::uint64_t weak_depth_bound() const {
    std::uint64_t n = 0;
    for (const auto& e : states_) n += e.complexity();
    return n;
  }

  /// Length of the longest chain of successive tau-firings reachable from
  /// this state (0 when the state has no tau-transition).
  int tau_height(const NTerm& e) const {
    int idx = index_of(e);
    if (idx < 0) throw std::invalid_argument("state not in universe: " + e.str());
    if (tau_height_[idx] >= 0) return tau_height_[idx];
    int h = 0;
    for (const auto& [act, d] : trans_[idx]) {
      if (!act.is_tau()) continue;
      for (const auto& [t, w] : d.entries()) h = std::max(h, 1 + tau_height(t));
    }
    tau_height_[idx] = h;
    return h;
  }

  int tau_height(const Distribution& d) const {
    int h = 0;
    for (const auto& [t, w] : d.entries()) h = std::max(h, tau_height(t));
    return h;
  }

  /// True when no state reachable from the given support (by any action)
  /// has a tau-transition; on such fragments weak transitions collapse to
  /// identity and branching equivalence coincides with the strong one.
  bool tau_free_reachable(const std::vector<NTerm>& from) const {
    std::vector<NTerm> todo = from;
    std::map<NTerm, bool> seen;
    while (!todo.empty()) {
      NTerm e = todo.back();
      todo.pop_back();
      if (seen.count(e)) continue;
      seen.emplace(e, true);
      for (const auto& [act, d] : transitions(e)) {
        if (act.is_tau()) return false;
        for (const auto& [t, w] : d.entries()) todo.push_back(t);
      }
    }
    return true;
  }

  bool tau_free_reachable(const Distribution& d) const { return tau_free_reachable(d.support()); }

  std::string dot() const {
    std::string out = "digraph universe {\n  rankdir=LR;\n  node [shape=box];\n";
    for (std::size_t i = 0; i < states_.size(); ++i)
      out += "  s" + std::to_string(i) + " [label=\"" + states_[i].str() + "\"];\n";
    int mid = 0;
    for (std::size_t i = 0; i < states_.size(); ++i) {
      for (const auto& [act, d] : trans_[i]) {
        std::string m = "d" + std::to_string(mid++);
        out += "  " + m + " [shape=point];\n";
        out += "  s" + std::to_string(i) + " -> " + m + " [label=\"" + act.name() + "\"];\n";
        for (const auto& [t, w] : d.entries())
          out += "  " + m + " -> s" + std::to_string(index_.at(t)) + " [label=\"" + rat_str(w) + "\"];\n";
      }
    }
    out += "}\n";
    return out;
  }

 private:
  Universe() = default;

  static void collect_sos(const NTerm& e, Transitions& out) {
    switch (e.kind()) {
      case NTerm::Kind::nil:
        return;
      case NTerm::Kind::prefix:
        out.emplace_back(e.action(), den(e.body()));
        return;
      case NTerm::Kind::choice:
        collect_sos(e.left(), out);
        collect_sos(e.right(), out);
        return;
    }
  }

  std::vector<NTerm> states_;
  std::map<NTerm, int> index_;
  std::vector<Transitions> trans_;
  mutable std::vector<int> tau_height_;
};

/// The finite vertex list of a state's after-set polytope; the denoted set
/// is the convex hull of the vertices. The partial variant (tau only)
/// additionally contains the Dirac on the state itself.
struct AfterSet {
  std::vector<Distribution> vertices;
  bool empty() const { return vertices.empty(); }
};

inline AfterSet after_set(const Universe& u, const NTerm& e, const Action& act, bool partial = false) {
  if (partial && !act.is_tau()) throw std::invalid_argument("partial after-set requires tau");
  AfterSet a;
  for (const auto& [h, d] : u.transitions(e))
    if (h == act) a.vertices.push_back(d);
  if (partial) a.vertices.push_back(Distribution::dirac(e));
  std::sort(a.vertices.begin(), a.vertices.end());
  a.vertices.erase(std::unique(a.vertices.begin(), a.vertices.end()), a.vertices.end());
  return a;
}

}  // namespace pbb
