#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pbb/semantics.hpp"

namespace pbb {

// ---------------------------------------------------------------------------
// state partitions and class vectors
// ---------------------------------------------------------------------------

/// A partition of the universe's states into disjoint blocks, canonically
/// ordered (members sorted, blocks sorted by smallest member).
struct StatePartition {
  std::vector<std::vector<NTerm>> blocks;

  static StatePartition from_blocks(std::vector<std::vector<NTerm>> bs) {
    StatePartition p;
    for (auto& b : bs) std::sort(b.begin(), b.end());
    std::sort(bs.begin(), bs.end());
    p.blocks = std::move(bs);
    p.rebuild_index();
    return p;
  }

  int block_of(const NTerm& e) const {
    auto it = index_.find(e);
    return it == index_.end() ? -1 : it->second;
  }

  std::size_t size() const { return blocks.size(); }

  /// Per-block probability mass of a distribution; throws when some support
  /// state is not covered by the partition.
  std::vector<Rat> vector_of(const Distribution& d) const {
    std::vector<Rat> v(blocks.size(), Rat(0));
    for (const auto& [t, w] : d.entries()) {
      int b = block_of(t);
      if (b < 0) throw std::invalid_argument("state not covered by partition: " + t.str());
      v[b] += w;
    }
    return v;
  }

 private:
  void rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < blocks.size(); ++i)
      for (const auto& e : blocks[i]) index_.emplace(e, static_cast<int>(i));
  }
  std::map<NTerm, int> index_;
};

namespace detail {

/// Convex-hull membership for plain rational vectors.
inline bool vector_in_hull(const std::vector<std::vector<Rat>>& vertices, const std::vector<Rat>& target) {
  for (const auto& v : vertices)
    if (v == target) return true;
  if (vertices.empty()) return false;
  LinearSystem sys;
  std::vector<int> lam;
  for (std::size_t i = 0; i < vertices.size(); ++i) lam.push_back(sys.add_var());
  std::vector<std::pair<int, Rat>> norm;
  for (std::size_t i = 0; i < vertices.size(); ++i) norm.emplace_back(lam[i], Rat(1));
  sys.add_row(std::move(norm), Rat(1));
  for (std::size_t d = 0; d < target.size(); ++d) {
    std::vector<std::pair<int, Rat>> row;
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i][d] != 0) row.emplace_back(lam[i], vertices[i][d]);
    sys.add_row(std::move(row), target[d]);
  }
  return sys.solve().has_value();
}

/// Per-action successor signature of a state: the class-vector images of
/// its after-set vertices under the current partition.
inline std::map<Action, std::vector<std::vector<Rat>>> state_signature(const Universe& u, const NTerm& e,
                                                                       const StatePartition& p) {
  std::map<Action, std::vector<std::vector<Rat>>> sig;
  for (const auto& [act, d] : u.transitions(e)) sig[act].push_back(p.vector_of(d));
  return sig;
}

/// Two states match when, per action, each vertex image lies in the hull of
/// the other's vertex images (combined transitions may mix vertices).
inline bool signatures_match(const std::map<Action, std::vector<std::vector<Rat>>>& a,
                             const std::map<Action, std::vector<std::vector<Rat>>>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [act, va] : a) {
    auto it = b.find(act);
    if (it == b.end()) return false;
    for (const auto& v : va)
      if (!vector_in_hull(it->second, v)) return false;
    for (const auto& v : it->second)
      if (!vector_in_hull(va, v)) return false;
  }
  return true;
}

}  // namespace detail

/// Coarsest partition of the states under which equivalent states have, per
/// action, the same hull of class-vector successor images. Computed by
/// refinement from the trivial partition; the fixpoint is unique.
inline StatePartition strong_partition(const Universe& u) {
  StatePartition p = StatePartition::from_blocks({u.states()});
  if (u.states().empty()) return p;
  while (true) {
    std::vector<std::vector<NTerm>> next;
    bool changed = false;
    for (const auto& block : p.blocks) {
      std::vector<std::map<Action, std::vector<std::vector<Rat>>>> sigs;
      sigs.reserve(block.size());
      for (const auto& e : block) sigs.push_back(detail::state_signature(u, e, p));
      std::vector<int> group(block.size(), -1);
      int groups = 0;
      for (std::size_t i = 0; i < block.size(); ++i) {
        if (group[i] >= 0) continue;
        group[i] = groups++;
        for (std::size_t j = i + 1; j < block.size(); ++j) {
          if (group[j] < 0 && detail::signatures_match(sigs[i], sigs[j])) group[j] = group[i];
        }
      }
      if (groups == 1) {
        next.push_back(block);
        continue;
      }
      changed = true;
      std::vector<std::vector<NTerm>> parts(groups);
      for (std::size_t i = 0; i < block.size(); ++i) parts[group[i]].push_back(block[i]);
      for (auto& b : parts) next.push_back(std::move(b));
    }
    p = StatePartition::from_blocks(std::move(next));
    if (!changed) break;
  }
  return p;
}

/// Strong probabilistic equivalence of distributions: equal class vectors
/// over the strong partition.
inline bool strong_equiv(const Universe& u, const Distribution& mu, const Distribution& nu) {
  StatePartition p = strong_partition(u);
  return p.vector_of(mu) == p.vector_of(nu);
}

// ---------------------------------------------------------------------------
// certificates
// ---------------------------------------------------------------------------

/// A claimed branching bisimulation: generator pairs plus closure flags.
/// The denoted relation is the pairs closed under the flagged operations
/// (mirroring, adjoining the diagonal, convex combination of pairs).
struct Certificate {
  std::vector<std::pair<Distribution, Distribution>> pairs;
  bool symmetric = false;
  bool diagonal = false;
  bool convex = false;
};

struct Counterexample {
  std::size_t pair_index = 0;
  bool mirrored = false;
  std::string clause;  // "symmetry" | "weak-decomposability" | "transfer"
  std::string detail;
  bool discipline_only = true;
};

/// Replayable evidence for one discharged obligation.
struct ObligationRecord {
  std::size_t pair_index = 0;
  bool mirrored = false;
  std::string clause;
  Distribution mu, nu;
  WeakWitness chain;    // nu => nu_bar
  Distribution nu_bar;
  // weak-decomposability: per support point x of mu, the matched component
  std::vector<std::pair<NTerm, Distribution>> parts;
  // transfer: checked vertex transition and its match
  Action act;
  Distribution mu_prime;
  std::optional<StepWitness> step;  // nu_bar ->(act) nu_prime
  Distribution nu_prime;
  // generator pairs used by the witness (indices into the ordered list)
  std::vector<std::size_t> used_pairs;
};

struct CheckResult {
  bool accepted = false;
  std::vector<ObligationRecord> obligations;
  std::optional<Counterexample> counterexample;
};

struct SearchBudget {
  std::size_t max_pairs = 256;
  std::optional<std::uint64_t> weak_depth;  // default: the universe ceiling
  std::uint64_t denominator_bound = 64;
  std::size_t max_candidates = 512;
  std::size_t max_vertices = 4096;
  // strict mode drops the weak unfolding from the decomposability clause
  // (plain decomposability, a strictly finer equivalence)
  bool strict_decomposition = false;
};

namespace detail {

struct OrderedGen {
  Distribution left, right;
  std::size_t pair_index;
  bool mirrored;
};

inline std::vector<OrderedGen> ordered_generators(const Certificate& c) {
  std::vector<OrderedGen> gens;
  for (std::size_t i = 0; i < c.pairs.size(); ++i) {
    gens.push_back({c.pairs[i].first, c.pairs[i].second, i, false});
    if (c.symmetric && !(c.pairs[i].first == c.pairs[i].second))
      gens.push_back({c.pairs[i].second, c.pairs[i].first, i, true});
  }
  return gens;
}

/// Linear parametrization of the partners of `mu` under the convex closure
/// of the generators (plus the diagonal when flagged): every partner equals
/// sum_g q_g * right_g + theta with sum_g q_g * left_g + theta = mu.
struct CcPartner {
  std::vector<std::pair<std::size_t, int>> qvars;  // (generator index, variable)
  std::map<NTerm, int> theta;                      // only over spt(mu)
  std::map<NTerm, std::vector<std::pair<int, Rat>>> value;  // partner(x) as linear terms
};

inline CcPartner add_cc_partner(LinearSystem& sys, const std::vector<OrderedGen>& gens, bool diagonal,
                                const Distribution& mu) {
  CcPartner out;
  for (std::size_t g = 0; g < gens.size(); ++g) {
    bool fits = true;
    for (const auto& [t, w] : gens[g].left.entries())
      if (mu.at(t) == 0) {
        fits = false;
        break;
      }
    if (fits) out.qvars.emplace_back(g, sys.add_var());
  }
  if (diagonal)
    for (const auto& [t, w] : mu.entries()) out.theta.emplace(t, sys.add_var());

  // sum_g q_g left_g + theta = mu, rows over spt(mu)
  for (const auto& [t, w] : mu.entries()) {
    std::vector<std::pair<int, Rat>> row;
    for (const auto& [g, var] : out.qvars) {
      Rat c = gens[g].left.at(t);
      if (c != 0) row.emplace_back(var, c);
    }
    auto it = out.theta.find(t);
    if (it != out.theta.end()) row.emplace_back(it->second, Rat(1));
    sys.add_row(std::move(row), w);
  }
  // partner value terms
  for (const auto& [g, var] : out.qvars)
    for (const auto& [t, w] : gens[g].right.entries()) out.value[t].emplace_back(var, w);
  for (const auto& [t, var] : out.theta) out.value[t].emplace_back(var, Rat(1));
  return out;
}

/// Layered weak-chain variables from a fixed source distribution.
struct ChainVars {
  int k = 0;
  std::vector<std::vector<NTerm>> layers;
  std::vector<std::vector<int>> stay;
  std::vector<std::vector<int>> mass;  // arrival mass vars for layers 1..k
  std::vector<std::vector<std::vector<int>>> fire;
  std::vector<std::vector<std::vector<Distribution>>> verts;
  const Distribution* source = nullptr;

  /// Final-layer mass of state x: either a constant (k == 0) or a variable.
  std::pair<Rat, int> final_mass(const NTerm& x) const {
    if (k == 0) return {source->at(x), -1};
    const auto& sup = layers[static_cast<std::size_t>(k)];
    auto it = std::lower_bound(sup.begin(), sup.end(), x);
    if (it == sup.end() || *it != x) return {Rat(0), -1};
    return {Rat(0), mass[static_cast<std::size_t>(k)][static_cast<std::size_t>(it - sup.begin())]};
  }
  const std::vector<NTerm>& final_support() const { return layers[static_cast<std::size_t>(k)]; }
};

inline ChainVars add_chain(LinearSystem& sys, const Universe& u, const Distribution& from, int k) {
  ChainVars cv;
  cv.k = k;
  cv.source = &from;
  cv.layers = layer_supports(u, from, k);
  cv.stay.resize(k);
  cv.fire.resize(k);
  cv.verts.resize(k);
  cv.mass.resize(k + 1);
  for (int t = 0; t < k; ++t) {
    const auto& sup = cv.layers[t];
    cv.stay[t].resize(sup.size());
    cv.fire[t].resize(sup.size());
    cv.verts[t].resize(sup.size());
    for (std::size_t s = 0; s < sup.size(); ++s) {
      cv.stay[t][s] = sys.add_var();
      cv.verts[t][s] = after_set(u, sup[s], Action::tau()).vertices;
      for (std::size_t i = 0; i < cv.verts[t][s].size(); ++i) cv.fire[t][s].push_back(sys.add_var());
    }
  }
  for (int t = 1; t <= k; ++t) {
    cv.mass[t].resize(cv.layers[t].size());
    for (std::size_t s = 0; s < cv.layers[t].size(); ++s) cv.mass[t][s] = sys.add_var();
  }

  auto index_in = [](const std::vector<NTerm>& sup, const NTerm& e) -> int {
    auto it = std::lower_bound(sup.begin(), sup.end(), e);
    if (it != sup.end() && *it == e) return static_cast<int>(it - sup.begin());
    return -1;
  };

  for (int t = 0; t < k; ++t) {
    for (std::size_t s = 0; s < cv.layers[t].size(); ++s) {
      std::vector<std::pair<int, Rat>> row{{cv.stay[t][s], Rat(1)}};
      for (int v : cv.fire[t][s]) row.emplace_back(v, Rat(1));
      if (t == 0) {
        sys.add_row(std::move(row), from.at(cv.layers[t][s]));
      } else {
        row.emplace_back(cv.mass[t][s], Rat(-1));
        sys.add_row(std::move(row), Rat(0));
      }
    }
  }
  for (int t = 1; t <= k; ++t) {
    for (std::size_t s = 0; s < cv.layers[t].size(); ++s) {
      const NTerm& e = cv.layers[t][s];
      std::vector<std::pair<int, Rat>> row{{cv.mass[t][s], Rat(-1)}};
      int prev = index_in(cv.layers[t - 1], e);
      if (prev >= 0) row.emplace_back(cv.stay[t - 1][prev], Rat(1));
      for (std::size_t s2 = 0; s2 < cv.layers[t - 1].size(); ++s2)
        for (std::size_t i = 0; i < cv.verts[t - 1][s2].size(); ++i) {
          Rat w = cv.verts[t - 1][s2][i].at(e);
          if (w != 0) row.emplace_back(cv.fire[t - 1][s2][i], w);
        }
      sys.add_row(std::move(row), Rat(0));
    }
  }
  return cv;
}

inline WeakWitness extract_chain(const Universe& u, const Distribution& from, const ChainVars& cv,
                                 const std::vector<Rat>& sol) {
  WeakWitness w;
  Distribution cur = from;
  for (int t = 0; t < cv.k; ++t) {
    StepWitness step;
    step.act = Action::tau();
    step.partial = true;
    bool fired = false;
    for (std::size_t s = 0; s < cv.layers[t].size(); ++s) {
      StateMove mv;
      mv.state = cv.layers[t][s];
      mv.stay = sol[cv.stay[t][s]];
      for (std::size_t i = 0; i < cv.verts[t][s].size(); ++i) {
        Rat m = sol[cv.fire[t][s][i]];
        if (m != 0) {
          mv.fires.emplace_back(m, cv.verts[t][s][i]);
          fired = true;
        }
      }
      if (mv.stay != 0 || !mv.fires.empty()) step.moves.push_back(std::move(mv));
    }
    if (!fired) continue;
    cur = apply_step(u, cur, step);
    w.steps.push_back(std::move(step));
  }
  return w;
}

/// Per-state stay/fire variables for one ->(alpha) step whose source masses
/// are the final layer of a chain.
struct StepVars {
  std::vector<NTerm> states;
  std::vector<int> stay;                          // -1 when the action is visible
  std::vector<std::vector<int>> fire;
  std::vector<std::vector<Distribution>> verts;
  std::map<NTerm, std::vector<std::pair<int, Rat>>> value;  // nu'(x) terms
};

inline StepVars add_partial_step(LinearSystem& sys, const Universe& u, const ChainVars& cv,
                                 const Action& act) {
  StepVars sv;
  sv.states = cv.final_support();
  bool tau = act.is_tau();
  sv.stay.resize(sv.states.size(), -1);
  sv.fire.resize(sv.states.size());
  sv.verts.resize(sv.states.size());
  for (std::size_t s = 0; s < sv.states.size(); ++s) {
    sv.verts[s] = after_set(u, sv.states[s], act).vertices;
    if (tau) sv.stay[s] = sys.add_var();
    for (std::size_t i = 0; i < sv.verts[s].size(); ++i) sv.fire[s].push_back(sys.add_var());
  }
  // conservation: stay + fired = final chain mass
  for (std::size_t s = 0; s < sv.states.size(); ++s) {
    std::vector<std::pair<int, Rat>> row;
    if (sv.stay[s] >= 0) row.emplace_back(sv.stay[s], Rat(1));
    for (int v : sv.fire[s]) row.emplace_back(v, Rat(1));
    auto [c, var] = cv.final_mass(sv.states[s]);
    if (var >= 0) {
      row.emplace_back(var, Rat(-1));
      sys.add_row(std::move(row), Rat(0));
    } else {
      sys.add_row(std::move(row), c);
    }
  }
  for (std::size_t s = 0; s < sv.states.size(); ++s) {
    if (sv.stay[s] >= 0) sv.value[sv.states[s]].emplace_back(sv.stay[s], Rat(1));
    for (std::size_t i = 0; i < sv.verts[s].size(); ++i)
      for (const auto& [t, w] : sv.verts[s][i].entries()) sv.value[t].emplace_back(sv.fire[s][i], w);
  }
  return sv;
}

inline StepWitness extract_step_vars(const StepVars& sv, const Action& act, const std::vector<Rat>& sol) {
  StepWitness w;
  w.act = act;
  w.partial = act.is_tau();
  for (std::size_t s = 0; s < sv.states.size(); ++s) {
    StateMove mv;
    mv.state = sv.states[s];
    if (sv.stay[s] >= 0) mv.stay = sol[sv.stay[s]];
    for (std::size_t i = 0; i < sv.verts[s].size(); ++i) {
      Rat m = sol[sv.fire[s][i]];
      if (m != 0) mv.fires.emplace_back(m, sv.verts[s][i]);
    }
    if (mv.stay != 0 || !mv.fires.empty()) w.moves.push_back(std::move(mv));
  }
  return w;
}

inline Distribution eval_value(const std::map<NTerm, std::vector<std::pair<int, Rat>>>& value,
                               const std::vector<Rat>& sol) {
  std::vector<Distribution::Entry> entries;
  for (const auto& [t, terms] : value) {
    Rat w(0);
    for (const auto& [var, c] : terms) w += c * sol[var];
    if (w != 0) entries.emplace_back(t, w);
  }
  return Distribution::make(std::move(entries));
}

inline std::vector<std::size_t> used_generators(const CcPartner& p, const std::vector<Rat>& sol,
                                                const std::vector<OrderedGen>& gens) {
  std::vector<std::size_t> used;
  for (const auto& [g, var] : p.qvars)
    if (sol[var] != 0) used.push_back(gens[g].pair_index);
  return used;
}

}  // namespace detail

/// Membership of a fixed pair in the denoted closure of a certificate.
inline bool closure_member(const Certificate& cert, const Distribution& mu, const Distribution& nu) {
  if (cert.diagonal && mu == nu) return true;
  auto gens = detail::ordered_generators(cert);
  for (const auto& g : gens)
    if (g.left == mu && g.right == nu) return true;
  if (!cert.convex) return false;

  LinearSystem sys;
  detail::CcPartner p = detail::add_cc_partner(sys, gens, cert.diagonal, mu);
  std::set<NTerm> dims;
  for (const auto& [t, w] : nu.entries()) dims.insert(t);
  for (const auto& [t, terms] : p.value) dims.insert(t);
  for (const auto& x : dims) {
    std::vector<std::pair<int, Rat>> row;
    auto it = p.value.find(x);
    if (it != p.value.end()) row = it->second;
    sys.add_row(std::move(row), nu.at(x));
  }
  return sys.solve().has_value();
}

namespace detail {

inline int chain_depth(const Universe& u, const Distribution& from, const SearchBudget& b) {
  std::uint64_t ceiling = b.weak_depth.value_or(u.weak_depth_bound());
  return static_cast<int>(std::min<std::uint64_t>(ceiling, static_cast<std::uint64_t>(u.tau_height(from))));
}

/// Weak-decomposability obligation for an ordered pair under the finite
/// checking discipline; the decomposition argument lists (p_i, mu_i).
inline std::optional<ObligationRecord> check_decomposability(
    const Universe& u, const std::vector<OrderedGen>& gens, const Certificate& cert,
    const std::vector<std::pair<Rat, Distribution>>& parts, const Distribution& mu, const Distribution& nu,
    const SearchBudget& budget) {
  int k = budget.strict_decomposition ? 0 : chain_depth(u, nu, budget);

  if (cert.convex) {
    LinearSystem sys;
    ChainVars cv = add_chain(sys, u, nu, k);
    std::vector<CcPartner> partner;
    partner.reserve(parts.size());
    for (const auto& [p, mu_i] : parts) partner.push_back(add_cc_partner(sys, gens, cert.diagonal, mu_i));

    std::set<NTerm> dims;
    for (const auto& x : cv.final_support()) dims.insert(x);
    for (const auto& pr : partner)
      for (const auto& [t, terms] : pr.value) dims.insert(t);
    for (const auto& x : dims) {
      // final chain mass equals sum_i p_i * partner_i(x)
      std::vector<std::pair<int, Rat>> row;
      auto [c, var] = cv.final_mass(x);
      if (var >= 0) row.emplace_back(var, Rat(1));
      for (std::size_t i = 0; i < parts.size(); ++i) {
        auto it = partner[i].value.find(x);
        if (it == partner[i].value.end()) continue;
        for (const auto& [v, coef] : it->second) row.emplace_back(v, -parts[i].first * coef);
      }
      sys.add_row(std::move(row), -c);
    }
    auto sol = sys.solve();
    if (!sol) return std::nullopt;

    ObligationRecord rec;
    rec.clause = "weak-decomposability";
    rec.mu = mu;
    rec.nu = nu;
    rec.chain = extract_chain(u, nu, cv, *sol);
    rec.nu_bar = apply_weak(u, nu, rec.chain);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      rec.parts.emplace_back(parts[i].second.entries().front().first, eval_value(partner[i].value, *sol));
      auto used = used_generators(partner[i], *sol, gens);
      rec.used_pairs.insert(rec.used_pairs.end(), used.begin(), used.end());
    }
    return rec;
  }

  // enumerative discipline without the convex flag: literal partners only
  std::vector<std::vector<std::pair<Distribution, std::size_t>>> choices;
  for (const auto& [p, mu_i] : parts) {
    std::vector<std::pair<Distribution, std::size_t>> cand;
    for (std::size_t g = 0; g < gens.size(); ++g)
      if (gens[g].left == mu_i) cand.emplace_back(gens[g].right, gens[g].pair_index);
    if (cert.diagonal) cand.emplace_back(mu_i, static_cast<std::size_t>(-1));
    if (cand.empty()) return std::nullopt;
    choices.push_back(std::move(cand));
  }
  std::size_t total = 1;
  for (const auto& c : choices) {
    total *= c.size();
    if (total > 4096) return std::nullopt;  // discipline cap
  }
  std::vector<std::size_t> pick(choices.size(), 0);
  while (true) {
    Mixture m;
    for (std::size_t i = 0; i < parts.size(); ++i) m.parts.emplace_back(parts[i].first, choices[i][pick[i]].first);
    Distribution nu_bar = mix(m);
    bool related = (cert.diagonal && mu == nu_bar);
    if (!related)
      for (const auto& g : gens)
        if (g.left == mu && g.right == nu_bar) {
          related = true;
          break;
        }
    if (related) {
      auto reach = weak_reach(u, nu, nu_bar, static_cast<std::uint64_t>(k));
      if (std::holds_alternative<WeakWitness>(reach)) {
        ObligationRecord rec;
        rec.clause = "weak-decomposability";
        rec.mu = mu;
        rec.nu = nu;
        rec.chain = std::get<WeakWitness>(reach);
        rec.nu_bar = nu_bar;
        for (std::size_t i = 0; i < parts.size(); ++i) {
          rec.parts.emplace_back(parts[i].second.entries().front().first, choices[i][pick[i]].first);
          if (choices[i][pick[i]].second != static_cast<std::size_t>(-1))
            rec.used_pairs.push_back(choices[i][pick[i]].second);
        }
        return rec;
      }
    }
    std::size_t i = 0;
    for (; i < choices.size(); ++i) {
      if (++pick[i] < choices[i].size()) break;
      pick[i] = 0;
    }
    if (i == choices.size()) break;
  }
  return std::nullopt;
}

/// Transfer obligation for one vertex transition mu -alpha-> mu_prime.
inline std::optional<ObligationRecord> check_transfer(const Universe& u, const std::vector<OrderedGen>& gens,
                                                      const Certificate& cert, const Distribution& mu,
                                                      const Distribution& nu, const Action& act,
                                                      const Distribution& mu_prime, const SearchBudget& budget) {
  int k = chain_depth(u, nu, budget);

  if (cert.convex) {
    LinearSystem sys;
    ChainVars cv = add_chain(sys, u, nu, k);
    CcPartner bar = add_cc_partner(sys, gens, cert.diagonal, mu);  // (mu, nu_bar)
    // nu_bar equals the chain end
    std::set<NTerm> dims;
    for (const auto& x : cv.final_support()) dims.insert(x);
    for (const auto& [t, terms] : bar.value) dims.insert(t);
    for (const auto& x : dims) {
      std::vector<std::pair<int, Rat>> row;
      auto [c, var] = cv.final_mass(x);
      if (var >= 0) row.emplace_back(var, Rat(1));
      auto it = bar.value.find(x);
      if (it != bar.value.end())
        for (const auto& [v, coef] : it->second) row.emplace_back(v, -coef);
      sys.add_row(std::move(row), -c);
    }
    // step from the chain end
    StepVars sv = add_partial_step(sys, u, cv, act);
    CcPartner prime = add_cc_partner(sys, gens, cert.diagonal, mu_prime);  // (mu', nu')
    std::set<NTerm> dims2;
    for (const auto& [t, terms] : sv.value) dims2.insert(t);
    for (const auto& [t, terms] : prime.value) dims2.insert(t);
    for (const auto& x : dims2) {
      std::vector<std::pair<int, Rat>> row;
      auto it = sv.value.find(x);
      if (it != sv.value.end()) row = it->second;
      auto it2 = prime.value.find(x);
      if (it2 != prime.value.end())
        for (const auto& [v, coef] : it2->second) row.emplace_back(v, -coef);
      sys.add_row(std::move(row), Rat(0));
    }
    auto sol = sys.solve();
    if (!sol) return std::nullopt;

    ObligationRecord rec;
    rec.clause = "transfer";
    rec.mu = mu;
    rec.nu = nu;
    rec.act = act;
    rec.mu_prime = mu_prime;
    rec.chain = extract_chain(u, nu, cv, *sol);
    rec.nu_bar = apply_weak(u, nu, rec.chain);
    rec.step = extract_step_vars(sv, act, *sol);
    rec.nu_prime = apply_step(u, rec.nu_bar, *rec.step);
    auto used1 = used_generators(bar, *sol, gens);
    auto used2 = used_generators(prime, *sol, gens);
    rec.used_pairs.insert(rec.used_pairs.end(), used1.begin(), used1.end());
    rec.used_pairs.insert(rec.used_pairs.end(), used2.begin(), used2.end());
    return rec;
  }

  // enumerative path: literal nu_bar and nu_prime candidates
  std::vector<std::pair<Distribution, std::size_t>> bars, primes;
  for (std::size_t g = 0; g < gens.size(); ++g) {
    if (gens[g].left == mu) bars.emplace_back(gens[g].right, gens[g].pair_index);
    if (gens[g].left == mu_prime) primes.emplace_back(gens[g].right, gens[g].pair_index);
  }
  if (cert.diagonal) {
    bars.emplace_back(mu, static_cast<std::size_t>(-1));
    primes.emplace_back(mu_prime, static_cast<std::size_t>(-1));
  }
  for (const auto& [nu_bar, gbar] : bars) {
    auto reach = weak_reach(u, nu, nu_bar, static_cast<std::uint64_t>(k));
    if (!std::holds_alternative<WeakWitness>(reach)) continue;
    for (const auto& [nu_prime, gprime] : primes) {
      std::optional<StepWitness> step;
      if (act.is_tau()) {
        auto v = partial_tau_step(u, nu_bar, nu_prime);
        if (std::holds_alternative<StepWitness>(v)) step = std::get<StepWitness>(v);
      } else {
        step = distribution_step(u, nu_bar, act).find(nu_prime);
      }
      if (!step) continue;
      ObligationRecord rec;
      rec.clause = "transfer";
      rec.mu = mu;
      rec.nu = nu;
      rec.act = act;
      rec.mu_prime = mu_prime;
      rec.chain = std::get<WeakWitness>(reach);
      rec.nu_bar = nu_bar;
      rec.step = step;
      rec.nu_prime = nu_prime;
      if (gbar != static_cast<std::size_t>(-1)) rec.used_pairs.push_back(gbar);
      if (gprime != static_cast<std::size_t>(-1)) rec.used_pairs.push_back(gprime);
      return rec;
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Verifies that the closure of the certificate is a branching probabilistic
/// bisimulation under the finite checking discipline: weak decomposability
/// for the finest (Dirac point) decomposition of each generator's left side,
/// and the transfer condition for every vertex transition. Combined
/// transitions and coarser decompositions are discharged by convexity.
inline CheckResult check_certificate(const Universe& u, const Certificate& cert,
                                     const SearchBudget& budget = {}) {
  CheckResult res;
  for (const auto& [l, r] : cert.pairs) {
    if (!u.covers(l) || !u.covers(r))
      throw std::invalid_argument("certificate pair mentions states outside the universe");
  }

  // the denoted relation must be symmetric
  if (!cert.symmetric) {
    for (std::size_t i = 0; i < cert.pairs.size(); ++i) {
      const auto& [l, r] = cert.pairs[i];
      if (l == r) continue;
      bool found = false;
      for (const auto& [l2, r2] : cert.pairs)
        if (l2 == r && r2 == l) {
          found = true;
          break;
        }
      if (!found) {
        res.counterexample = Counterexample{i, false, "symmetry",
                                            "pair has no mirror and the symmetric flag is off", false};
        return res;
      }
    }
  }

  auto gens = detail::ordered_generators(cert);
  for (std::size_t gi = 0; gi < gens.size(); ++gi) {
    const auto& g = gens[gi];
    // reflexive pairs hold trivially once the diagonal supplies the
    // component pairs; without the flag they are checked like any other
    if (g.left == g.right && cert.diagonal) continue;

    // weak decomposability, finest decomposition
    std::vector<std::pair<Rat, Distribution>> finest;
    for (const auto& [x, w] : g.left.entries()) finest.emplace_back(w, Distribution::dirac(x));
    auto dec = detail::check_decomposability(u, gens, cert, finest, g.left, g.right, budget);
    if (!dec) {
      res.counterexample = Counterexample{g.pair_index, g.mirrored, "weak-decomposability",
                                          "no weak unfolding of the right side matches the Dirac "
                                          "decomposition of the left side",
                                          true};
      return res;
    }
    dec->pair_index = g.pair_index;
    dec->mirrored = g.mirrored;
    res.obligations.push_back(std::move(*dec));

    // transfer for every vertex transition of the left side
    std::set<Action> acts;
    for (const auto& [x, w] : g.left.entries())
      for (const auto& [a, d] : u.transitions(x)) acts.insert(a);
    for (const auto& a : acts) {
      StepSet step = distribution_step(u, g.left, a);
      if (!step.enabled()) continue;
      std::vector<Distribution> vertices;
      try {
        vertices = step.vertices(budget.max_vertices);
      } catch (const std::length_error&) {
        res.counterexample = Counterexample{g.pair_index, g.mirrored, "transfer",
                                            "vertex enumeration exceeded the budget for action " + a.name(),
                                            true};
        return res;
      }
      for (const auto& mu_prime : vertices) {
        auto tr = detail::check_transfer(u, gens, cert, g.left, g.right, a, mu_prime, budget);
        if (!tr) {
          res.counterexample = Counterexample{
              g.pair_index, g.mirrored, "transfer",
              "vertex transition by " + a.name() + " to " + mu_prime.str() + " has no match", true};
          return res;
        }
        tr->pair_index = g.pair_index;
        tr->mirrored = g.mirrored;
        res.obligations.push_back(std::move(*tr));
      }
    }
  }
  res.accepted = true;
  return res;
}

/// Independent replay of the evidence produced by check_certificate: every
/// chain and step is validated against the SOS tables and every claimed
/// relation membership is rechecked.
inline bool replay_obligations(const Universe& u, const Certificate& cert, const CheckResult& res) {
  if (!res.accepted) return false;
  for (const auto& rec : res.obligations) {
    Distribution nu_bar = apply_weak(u, rec.nu, rec.chain);
    if (nu_bar != rec.nu_bar) return false;
    if (rec.clause == "weak-decomposability") {
      if (!closure_member(cert, rec.mu, rec.nu_bar)) return false;
      Mixture m;
      for (const auto& [x, part] : rec.parts) {
        if (!closure_member(cert, Distribution::dirac(x), part)) return false;
        m.parts.emplace_back(rec.mu.at(x), part);
      }
      if (mix(m) != rec.nu_bar) return false;
    } else if (rec.clause == "transfer") {
      if (!closure_member(cert, rec.mu, rec.nu_bar)) return false;
      if (!rec.step) return false;
      Distribution nu_prime = apply_step(u, rec.nu_bar, *rec.step);
      if (nu_prime != rec.nu_prime) return false;
      if (!rec.step->act.is_tau() && rec.step->act != rec.act) return false;
      if (!closure_member(cert, rec.mu_prime, rec.nu_prime)) return false;
    } else {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// branching equivalence search engine
// ---------------------------------------------------------------------------

/// Greatest-fixpoint search for branching probabilistic bisimilarity over a
/// finite candidate set: all state Diracs, all transition targets, and the
/// query seeds. Pairs are eliminated until every surviving pair discharges
/// its obligations against the convex closure of the survivors; surviving
/// pairs therefore form one big acceptable certificate.
class BranchingEngine {
 public:
  BranchingEngine(const Universe& u, SearchBudget budget = {}) : u_(&u), budget_(budget) {
    for (const auto& e : u.states()) {
      add_candidate(Distribution::dirac(e), /*force=*/true);
      for (const auto& [a, d] : u.transitions(e)) add_candidate(d, /*force=*/false);
    }
  }

  void add_seed(const Distribution& d) {
    if (!u_->covers(d)) throw std::invalid_argument("seed support not in universe");
    if (add_candidate(d, /*force=*/true)) done_ = false;
  }

  bool exhausted() const { return exhausted_; }
  const std::vector<Distribution>& candidates() const { return cand_; }

  void run() {
    if (done_) return;
    done_ = true;
    const std::size_t n = cand_.size();
    rel_.assign(n, std::vector<char>(n, 1));

    // cheap necessary condition for tau-free pairs: equal enabled-action sets
    std::vector<std::set<std::string>> enabled(n);
    std::vector<bool> tau_free(n);
    for (std::size_t i = 0; i < n; ++i) {
      tau_free[i] = u_->tau_height(cand_[i]) == 0;
      std::set<Action> acts;
      for (const auto& [t, w] : cand_[i].entries())
        for (const auto& [a, d] : u_->transitions(t)) acts.insert(a);
      for (const auto& a : acts)
        if (distribution_step(*u_, cand_[i], a).enabled()) enabled[i].insert(a.name());
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (tau_free[i] && tau_free[j] && enabled[i] != enabled[j]) rel_[i][j] = rel_[j][i] = 0;

    bool changed = true;
    while (changed) {
      changed = false;
      Certificate cert = current_certificate();
      auto gens = detail::ordered_generators(cert);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (!rel_[i][j]) continue;
          if (!pair_obligations_hold(gens, cert, cand_[i], cand_[j]) ||
              !pair_obligations_hold(gens, cert, cand_[j], cand_[i])) {
            rel_[i][j] = rel_[j][i] = 0;
            changed = true;
          }
        }
      }
    }
  }

  bool related(const Distribution& a, const Distribution& b) {
    run();
    int i = find(a), j = find(b);
    if (i < 0 || j < 0) return false;
    return i == j || rel_[i][j];
  }

  /// The surviving relation as one certificate (symmetric + diagonal +
  /// convex closed).
  Certificate relation_certificate() {
    run();
    return current_certificate();
  }

  /// Covering certificate for a query pair; optionally pruned greedily to a
  /// small generator set. Empty when the pair is not covered.
  std::optional<Certificate> certificate(const Distribution& a, const Distribution& b, bool prune = true) {
    run();
    if (exhausted_) return std::nullopt;
    if (a == b) {
      Certificate c;
      c.diagonal = true;
      return c;
    }
    Certificate full = current_certificate();
    if (!closure_member(full, a, b)) return std::nullopt;
    if (!prune) {
      if (full.pairs.size() > budget_.max_pairs) return std::nullopt;
      return full;
    }

    // prune greedily while the pair stays covered and the cert accepted
    Certificate pruned = full;
    for (std::size_t i = pruned.pairs.size(); i-- > 0;) {
      Certificate trial = pruned;
      trial.pairs.erase(trial.pairs.begin() + static_cast<std::ptrdiff_t>(i));
      if (closure_member(trial, a, b) && check_certificate(*u_, trial, budget_).accepted) pruned = trial;
    }
    if (pruned.pairs.size() > budget_.max_pairs) return std::nullopt;
    if (!check_certificate(*u_, pruned, budget_).accepted) return std::nullopt;
    return pruned;
  }

  /// Union-find over surviving Dirac pairs; blocks merge only when the
  /// relation kept the pair.
  StatePartition dirac_partition() {
    run();
    const auto& states = u_->states();
    std::vector<int> parent(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) parent[i] = static_cast<int>(i);
    std::function<int(int)> root = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t i = 0; i < states.size(); ++i) {
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        int ci = find(Distribution::dirac(states[i]));
        int cj = find(Distribution::dirac(states[j]));
        if (ci >= 0 && cj >= 0 && rel_[ci][cj]) parent[root(static_cast<int>(j))] = root(static_cast<int>(i));
      }
    }
    std::map<int, std::vector<NTerm>> blocks;
    for (std::size_t i = 0; i < states.size(); ++i) blocks[root(static_cast<int>(i))].push_back(states[i]);
    std::vector<std::vector<NTerm>> bs;
    for (auto& [r, b] : blocks) bs.push_back(std::move(b));
    return StatePartition::from_blocks(std::move(bs));
  }

 private:
  bool add_candidate(const Distribution& d, bool force) {
    if (find(d) >= 0) return false;
    // derived candidates beyond the coefficient budget are skipped; query
    // seeds and state Diracs are always admitted. Dropping candidates only
    // shrinks the searched relation, never its soundness.
    if (!force) {
      for (const auto& [t, w] : d.entries())
        if (boost::multiprecision::denominator(w) > budget_.denominator_bound) return false;
    }
    if (cand_.size() >= budget_.max_candidates) {
      exhausted_ = true;
      return false;
    }
    cand_.push_back(d);
    index_.emplace(d, static_cast<int>(cand_.size() - 1));
    return true;
  }

  int find(const Distribution& d) const {
    auto it = index_.find(d);
    return it == index_.end() ? -1 : it->second;
  }

  Certificate current_certificate() const {
    Certificate c;
    c.symmetric = true;
    c.diagonal = true;
    c.convex = true;
    for (std::size_t i = 0; i < cand_.size(); ++i)
      for (std::size_t j = i + 1; j < cand_.size(); ++j)
        if (rel_[i][j]) c.pairs.emplace_back(cand_[i], cand_[j]);
    return c;
  }

  bool pair_obligations_hold(const std::vector<detail::OrderedGen>& gens, const Certificate& cert,
                             const Distribution& mu, const Distribution& nu) {
    std::vector<std::pair<Rat, Distribution>> finest;
    for (const auto& [x, w] : mu.entries()) finest.emplace_back(w, Distribution::dirac(x));
    if (!detail::check_decomposability(*u_, gens, cert, finest, mu, nu, budget_)) return false;

    std::set<Action> acts;
    for (const auto& [x, w] : mu.entries())
      for (const auto& [a, d] : u_->transitions(x)) acts.insert(a);
    for (const auto& a : acts) {
      StepSet step = distribution_step(*u_, mu, a);
      if (!step.enabled()) continue;
      std::vector<Distribution> vertices;
      try {
        vertices = step.vertices(budget_.max_vertices);
      } catch (const std::length_error&) {
        return false;
      }
      for (const auto& mu_prime : vertices)
        if (!detail::check_transfer(*u_, gens, cert, mu, nu, a, mu_prime, budget_)) return false;
    }
    return true;
  }

  const Universe* u_;
  SearchBudget budget_;
  std::vector<Distribution> cand_;
  std::map<Distribution, int> index_;
  std::vector<std::vector<char>> rel_;
  bool exhausted_ = false;
  bool done_ = false;
};

/// Bounded certificate search. A found certificate is re-verified by
/// check_certificate before being returned; absence of a certificate is
/// never a semantic negative.
inline std::optional<Certificate> search_branching(const Universe& u, const Distribution& mu,
                                                   const Distribution& nu, const SearchBudget& budget = {}) {
  if (mu == nu) {
    Certificate c;
    c.diagonal = true;
    return c;
  }
  BranchingEngine engine(u, budget);
  engine.add_seed(mu);
  engine.add_seed(nu);
  return engine.certificate(mu, nu);
}

/// Builds and verifies the congruence certificate for the r-mixture of two
/// certified pairs.
struct CongruenceResult {
  bool accepted = false;
  Certificate certificate;
  std::string note;
};

inline CongruenceResult check_congruence(const Universe& u, const Distribution& mu1, const Distribution& mu2,
                                         const Distribution& nu1, const Distribution& nu2, const Rat& r,
                                         const Certificate& cert1, const Certificate& cert2,
                                         const SearchBudget& budget = {}) {
  CongruenceResult out;
  if (!is_probability(r)) throw std::invalid_argument("mixture ratio out of [0,1]");

  auto verify_input = [&](const Certificate& c, const Distribution& l, const Distribution& rr,
                          const char* which) {
    if (!check_certificate(u, c, budget).accepted) {
      out.note = std::string(which) + " certificate rejected";
      return false;
    }
    if (!closure_member(c, l, rr)) {
      out.note = std::string(which) + " certificate does not cover its pair";
      return false;
    }
    return true;
  };
  if (!verify_input(cert1, mu1, nu1, "first")) return out;
  if (!verify_input(cert2, mu2, nu2, "second")) return out;

  if (r == 1) {
    out.accepted = true;
    out.certificate = cert1;
    return out;
  }
  if (r == 0) {
    out.accepted = true;
    out.certificate = cert2;
    return out;
  }

  Certificate combined;
  combined.pairs = cert1.pairs;
  for (const auto& p : cert2.pairs)
    if (std::find(combined.pairs.begin(), combined.pairs.end(), p) == combined.pairs.end())
      combined.pairs.push_back(p);
  combined.symmetric = cert1.symmetric || cert2.symmetric;
  combined.diagonal = cert1.diagonal || cert2.diagonal;
  combined.convex = true;

  if (!check_certificate(u, combined, budget).accepted) {
    out.note = "combined certificate rejected";
    return out;
  }
  Distribution ml = mix2(r, mu1, mu2), nl = mix2(r, nu1, nu2);
  if (!closure_member(combined, ml, nl)) {
    out.note = "combined certificate does not cover the mixture pair";
    return out;
  }
  out.accepted = true;
  out.certificate = std::move(combined);
  return out;
}

}  // namespace pbb
