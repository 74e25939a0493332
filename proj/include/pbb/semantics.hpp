#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "pbb/distribution.hpp"
#include "pbb/linear.hpp"
#include "pbb/universe.hpp"

namespace pbb {

/// Convex-hull membership over an explicit vertex list. Returns the mixing
/// coefficients when the target lies in the hull.
inline std::optional<std::vector<Rat>> hull_member(const std::vector<Distribution>& vertices,
                                                   const Distribution& target) {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i] == target) {
      std::vector<Rat> lambda(vertices.size(), Rat(0));
      lambda[i] = 1;
      return lambda;
    }
  }
  if (vertices.empty()) return std::nullopt;

  LinearSystem sys;
  std::vector<int> lam(vertices.size());
  for (auto& v : lam) v = sys.add_var();

  std::map<NTerm, std::vector<std::pair<int, Rat>>> rows;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    for (const auto& [t, w] : vertices[i].entries()) rows[t].emplace_back(lam[i], w);
  for (const auto& [t, w] : target.entries()) rows[t];  // ensure a row exists

  std::vector<std::pair<int, Rat>> norm;
  for (std::size_t i = 0; i < vertices.size(); ++i) norm.emplace_back(lam[i], Rat(1));
  sys.add_row(std::move(norm), Rat(1));
  for (auto& [t, terms] : rows) sys.add_row(std::move(terms), target.at(t));

  auto sol = sys.solve();
  if (!sol) return std::nullopt;
  std::vector<Rat> lambda(vertices.size());
  for (std::size_t i = 0; i < vertices.size(); ++i) lambda[i] = (*sol)[lam[i]];
  return lambda;
}

/// How one support state contributes to a distribution transition: part of
/// its mass may stay put (tau-partial steps only) and the rest fires chosen
/// members of the state's after-set.
struct StateMove {
  NTerm state;
  Rat stay{0};
  std::vector<std::pair<Rat, Distribution>> fires;

  Rat mass() const {
    Rat m = stay;
    for (const auto& [w, d] : fires) m += w;
    return m;
  }
  Rat fired() const {
    Rat m(0);
    for (const auto& [w, d] : fires) m += w;
    return m;
  }
};

/// Witness for a single transition mu -> nu of a distribution. `partial`
/// marks tau-steps that may leave mass in place; full steps fire every
/// support state completely.
struct StepWitness {
  Action act;
  bool partial = false;
  std::vector<StateMove> moves;

  Rat fired_mass() const {
    Rat m(0);
    for (const auto& mv : moves) m += mv.fired();
    return m;
  }
};

/// Witness for a weak transition: a chain of partial tau-steps.
struct WeakWitness {
  std::vector<StepWitness> steps;
  std::size_t length() const { return steps.size(); }
};

struct Refusal {
  std::string reason;
  std::string system;
};

/// Replays a step witness against the SOS tables: validates the masses and
/// that every fired target lies in the firing state's after-set hull, then
/// returns the resulting distribution.
inline Distribution apply_step(const Universe& u, const Distribution& from, const StepWitness& w) {
  if (w.partial && !w.act.is_tau()) throw std::invalid_argument("partial step must be a tau step");

  std::map<NTerm, const StateMove*> by_state;
  for (const auto& mv : w.moves) {
    if (!by_state.emplace(mv.state, &mv).second)
      throw std::invalid_argument("duplicate move for state " + mv.state.str());
  }
  if (by_state.size() != from.size()) throw std::invalid_argument("witness moves do not cover the support");

  std::vector<Distribution::Entry> acc;
  for (const auto& [state, mass] : from.entries()) {
    auto it = by_state.find(state);
    if (it == by_state.end()) throw std::invalid_argument("missing move for state " + state.str());
    const StateMove& mv = *it->second;
    if (mv.stay < 0) throw std::invalid_argument("negative stay mass");
    if (!w.partial && mv.stay != 0) throw std::invalid_argument("full step cannot leave mass in place");
    if (mv.mass() != mass) throw std::invalid_argument("move mass mismatch at state " + state.str());
    if (!w.partial && mv.fires.empty()) throw std::invalid_argument("full step must fire state " + state.str());

    if (!mv.fires.empty()) {
      AfterSet after = after_set(u, state, w.act);
      for (const auto& [fw, target] : mv.fires) {
        if (fw < 0) throw std::invalid_argument("negative fire mass");
        if (fw == 0) continue;
        if (!hull_member(after.vertices, target))
          throw std::invalid_argument("fired target not derivable from " + state.str() + " by " + w.act.name());
        for (const auto& [t, tw] : target.entries()) acc.emplace_back(t, fw * tw);
      }
    }
    if (mv.stay != 0) acc.emplace_back(state, mv.stay);
  }
  return Distribution::make(std::move(acc));
}

inline Distribution apply_weak(const Universe& u, const Distribution& from, const WeakWitness& w) {
  Distribution cur = from;
  for (const auto& step : w.steps) {
    if (!step.act.is_tau() || !step.partial)
      throw std::invalid_argument("weak chains consist of partial tau steps");
    cur = apply_step(u, cur, step);
  }
  return cur;
}

namespace detail {

inline StepWitness extract_step(const Action& act, bool partial,
                                const std::vector<std::pair<NTerm, std::vector<Distribution>>>& per_state,
                                const std::vector<std::vector<int>>& fire_vars,
                                const std::vector<int>& stay_vars, const std::vector<Rat>& sol) {
  StepWitness w;
  w.act = act;
  w.partial = partial;
  for (std::size_t s = 0; s < per_state.size(); ++s) {
    StateMove mv;
    mv.state = per_state[s].first;
    if (!stay_vars.empty() && stay_vars[s] >= 0) mv.stay = sol[stay_vars[s]];
    for (std::size_t i = 0; i < per_state[s].second.size(); ++i) {
      Rat m = sol[fire_vars[s][i]];
      if (m != 0) mv.fires.emplace_back(m, per_state[s].second[i]);
    }
    if (mv.stay != 0 || !mv.fires.empty()) w.moves.push_back(std::move(mv));
  }
  return w;
}

}  // namespace detail

/// The set of successors of a distribution under one action: a convex
/// polytope described per support state by the state's after-set vertices.
/// Membership is decided by exact feasibility; vertex enumeration returns
/// all products of per-state vertex choices.
class StepSet {
 public:
  StepSet(const Universe& u, Distribution mu, Action act) : u_(&u), mu_(std::move(mu)), act_(std::move(act)) {
    enabled_ = true;
    for (const auto& [state, w] : mu_.entries()) {
      AfterSet a = after_set(u, state, act_);
      if (a.empty()) enabled_ = false;
      per_state_.emplace_back(state, std::move(a.vertices));
    }
  }

  bool enabled() const { return enabled_; }
  const Distribution& source() const { return mu_; }
  const Action& action() const { return act_; }

  std::variant<StepWitness, Refusal> decide(const Distribution& target) const {
    if (!enabled_) {
      return Refusal{"a support state has no " + act_.name() + "-transition", ""};
    }
    LinearSystem sys;
    std::vector<std::vector<int>> fire_vars(per_state_.size());
    for (std::size_t s = 0; s < per_state_.size(); ++s)
      for (std::size_t i = 0; i < per_state_[s].second.size(); ++i)
        fire_vars[s].push_back(sys.add_var());

    std::map<NTerm, std::vector<std::pair<int, Rat>>> rows;
    for (std::size_t s = 0; s < per_state_.size(); ++s) {
      std::vector<std::pair<int, Rat>> norm;
      for (std::size_t i = 0; i < per_state_[s].second.size(); ++i) {
        norm.emplace_back(fire_vars[s][i], Rat(1));
        for (const auto& [t, w] : per_state_[s].second[i].entries()) rows[t].emplace_back(fire_vars[s][i], w);
      }
      sys.add_row(std::move(norm), mu_.at(per_state_[s].first));
    }
    for (const auto& [t, w] : target.entries()) rows[t];
    for (auto& [t, terms] : rows) sys.add_row(std::move(terms), target.at(t));

    auto sol = sys.solve();
    if (!sol) return Refusal{"target is outside the successor polytope", sys.describe()};
    return detail::extract_step(act_, false, per_state_, fire_vars, {}, *sol);
  }

  std::optional<StepWitness> find(const Distribution& target) const {
    auto v = decide(target);
    if (auto* w = std::get_if<StepWitness>(&v)) return std::move(*w);
    return std::nullopt;
  }

  /// All products of per-state vertex choices. The successor polytope is
  /// the convex hull of these distributions.
  std::vector<Distribution> vertices(std::size_t cap = 65536) const {
    std::vector<Distribution> out;
    if (!enabled_) return out;
    std::size_t count = 1;
    for (const auto& [s, verts] : per_state_) {
      count *= verts.size();
      if (count > cap) throw std::length_error("successor vertex enumeration exceeds cap");
    }
    std::vector<std::size_t> choice(per_state_.size(), 0);
    while (true) {
      Mixture m;
      for (std::size_t s = 0; s < per_state_.size(); ++s)
        m.parts.emplace_back(mu_.at(per_state_[s].first), per_state_[s].second[choice[s]]);
      out.push_back(mix(m));
      std::size_t s = 0;
      for (; s < per_state_.size(); ++s) {
        if (++choice[s] < per_state_[s].second.size()) break;
        choice[s] = 0;
      }
      if (s == per_state_.size()) break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  const Universe* u_;
  Distribution mu_;
  Action act_;
  std::vector<std::pair<NTerm, std::vector<Distribution>>> per_state_;
  bool enabled_;
};

inline StepSet distribution_step(const Universe& u, const Distribution& mu, const Action& act) {
  for (const auto& [t, w] : mu.entries())
    if (!u.contains(t)) throw std::invalid_argument("support state not in universe: " + t.str());
  return StepSet(u, mu, act);
}

/// Decides one partial tau-step mu ->(tau) nu. Every support state may
/// split its mass between staying and firing members of its tau-after-set;
/// the identity split (everything stays) realizes nu == mu.
inline std::variant<StepWitness, Refusal> partial_tau_step(const Universe& u, const Distribution& mu,
                                                           const Distribution& nu) {
  std::vector<std::pair<NTerm, std::vector<Distribution>>> per_state;
  for (const auto& [state, w] : mu.entries()) {
    if (!u.contains(state)) throw std::invalid_argument("support state not in universe: " + state.str());
    per_state.emplace_back(state, after_set(u, state, Action::tau()).vertices);
  }

  LinearSystem sys;
  std::vector<int> stay_vars(per_state.size());
  std::vector<std::vector<int>> fire_vars(per_state.size());
  for (std::size_t s = 0; s < per_state.size(); ++s) {
    stay_vars[s] = sys.add_var();
    for (std::size_t i = 0; i < per_state[s].second.size(); ++i) fire_vars[s].push_back(sys.add_var());
  }

  std::map<NTerm, std::vector<std::pair<int, Rat>>> rows;
  for (std::size_t s = 0; s < per_state.size(); ++s) {
    std::vector<std::pair<int, Rat>> norm{{stay_vars[s], Rat(1)}};
    rows[per_state[s].first].emplace_back(stay_vars[s], Rat(1));
    for (std::size_t i = 0; i < per_state[s].second.size(); ++i) {
      norm.emplace_back(fire_vars[s][i], Rat(1));
      for (const auto& [t, w] : per_state[s].second[i].entries()) rows[t].emplace_back(fire_vars[s][i], w);
    }
    sys.add_row(std::move(norm), mu.at(per_state[s].first));
  }
  for (const auto& [t, w] : nu.entries()) rows[t];
  for (auto& [t, terms] : rows) sys.add_row(std::move(terms), nu.at(t));

  auto sol = sys.solve();
  if (!sol) return Refusal{"no partial tau-step reaches the target", sys.describe()};
  return detail::extract_step(Action::tau(), true, per_state, fire_vars, stay_vars, *sol);
}

namespace detail {

/// Support sets reachable at each layer of a weak chain.
inline std::vector<std::vector<NTerm>> layer_supports(const Universe& u, const Distribution& mu, int k) {
  std::vector<std::vector<NTerm>> layers;
  std::map<NTerm, bool> cur;
  for (const auto& [t, w] : mu.entries()) cur.emplace(t, true);
  for (int t = 0; t <= k; ++t) {
    std::vector<NTerm> s;
    for (const auto& [e, b] : cur) s.push_back(e);
    layers.push_back(s);
    if (t == k) break;
    std::map<NTerm, bool> next = cur;
    for (const auto& e : s)
      for (const auto& v : after_set(u, e, Action::tau()).vertices)
        for (const auto& [f, w] : v.entries()) next.emplace(f, true);
    cur = std::move(next);
  }
  return layers;
}

}  // namespace detail

/// Searches for a weak transition mu => nu within the given number of
/// partial tau-steps (default: the universe's hard ceiling N). Each layer
/// of the feasibility system is one fully general partial step, so the
/// search is complete for chains up to the effective depth; refusals are
/// relative to that searched family.
inline std::variant<WeakWitness, Refusal> weak_reach(const Universe& u, const Distribution& mu,
                                                     const Distribution& nu,
                                                     std::optional<std::uint64_t> depth = std::nullopt) {
  for (const auto& [t, w] : mu.entries())
    if (!u.contains(t)) throw std::invalid_argument("support state not in universe: " + t.str());
  for (const auto& [t, w] : nu.entries())
    if (!u.contains(t)) throw std::invalid_argument("support state not in universe: " + t.str());

  const std::uint64_t ceiling = u.weak_depth_bound();
  std::uint64_t d = depth.value_or(ceiling);
  if (d > ceiling)
    throw std::invalid_argument("depth " + std::to_string(d) + " exceeds the universe bound " +
                                std::to_string(ceiling));
  if (nu == mu) return WeakWitness{};

  // one firing strictly lowers a parcel's complexity, so chains compress
  // to at most the tau-height of the source
  int k = static_cast<int>(std::min<std::uint64_t>(d, static_cast<std::uint64_t>(u.tau_height(mu))));
  if (k == 0) return Refusal{"no tau-unfolding can leave the source distribution", ""};

  auto layers = detail::layer_supports(u, mu, k);

  // quick reject: target support must be reachable
  {
    std::map<NTerm, bool> last;
    for (const auto& e : layers[static_cast<std::size_t>(k)]) last.emplace(e, true);
    for (const auto& [t, w] : nu.entries())
      if (!last.count(t))
        return Refusal{"target state " + t.str() + " is not tau-reachable from the source", ""};
  }

  LinearSystem sys;
  // per layer t < k: stay/fire variables; per layer t >= 1: arrival masses
  std::vector<std::vector<int>> stay(k), mass(k + 1);
  std::vector<std::vector<std::vector<int>>> fire(k);
  std::vector<std::vector<std::vector<Distribution>>> verts(k);
  for (int t = 0; t < k; ++t) {
    const auto& sup = layers[t];
    stay[t].resize(sup.size());
    fire[t].resize(sup.size());
    verts[t].resize(sup.size());
    for (std::size_t s = 0; s < sup.size(); ++s) {
      stay[t][s] = sys.add_var();
      verts[t][s] = after_set(u, sup[s], Action::tau()).vertices;
      for (std::size_t i = 0; i < verts[t][s].size(); ++i) fire[t][s].push_back(sys.add_var());
    }
  }
  for (int t = 1; t <= k; ++t) {
    mass[t].resize(layers[t].size());
    for (std::size_t s = 0; s < layers[t].size(); ++s) mass[t][s] = sys.add_var();
  }

  auto index_in = [](const std::vector<NTerm>& sup, const NTerm& e) -> int {
    auto it = std::lower_bound(sup.begin(), sup.end(), e);
    if (it != sup.end() && *it == e) return static_cast<int>(it - sup.begin());
    return -1;
  };

  // conservation at each layer: stay + fired = arriving mass
  for (int t = 0; t < k; ++t) {
    for (std::size_t s = 0; s < layers[t].size(); ++s) {
      std::vector<std::pair<int, Rat>> row{{stay[t][s], Rat(1)}};
      for (int v : fire[t][s]) row.emplace_back(v, Rat(1));
      if (t == 0) {
        sys.add_row(std::move(row), mu.at(layers[t][s]));
      } else {
        row.emplace_back(mass[t][s], Rat(-1));
        sys.add_row(std::move(row), Rat(0));
      }
    }
  }
  // arrival definition for layers 1..k
  for (int t = 1; t <= k; ++t) {
    for (std::size_t s = 0; s < layers[t].size(); ++s) {
      const NTerm& e = layers[t][s];
      std::vector<std::pair<int, Rat>> row{{mass[t][s], Rat(-1)}};
      int prev = index_in(layers[t - 1], e);
      if (prev >= 0) row.emplace_back(stay[t - 1][prev], Rat(1));
      for (std::size_t s2 = 0; s2 < layers[t - 1].size(); ++s2)
        for (std::size_t i = 0; i < verts[t - 1][s2].size(); ++i) {
          Rat w = verts[t - 1][s2][i].at(e);
          if (w != 0) row.emplace_back(fire[t - 1][s2][i], w);
        }
      sys.add_row(std::move(row), Rat(0));
    }
  }
  // final layer equals the target
  for (std::size_t s = 0; s < layers[static_cast<std::size_t>(k)].size(); ++s)
    sys.add_row({{mass[k][s], Rat(1)}}, nu.at(layers[static_cast<std::size_t>(k)][s]));

  auto sol = sys.solve();
  if (!sol)
    return Refusal{"no weak schedule within depth " + std::to_string(k) + " reaches the target",
                   sys.describe()};

  WeakWitness w;
  Distribution cur = mu;
  for (int t = 0; t < k; ++t) {
    StepWitness step;
    step.act = Action::tau();
    step.partial = true;
    bool fired = false;
    for (std::size_t s = 0; s < layers[t].size(); ++s) {
      StateMove mv;
      mv.state = layers[t][s];
      mv.stay = (*sol)[stay[t][s]];
      for (std::size_t i = 0; i < verts[t][s].size(); ++i) {
        Rat m = (*sol)[fire[t][s][i]];
        if (m != 0) {
          mv.fires.emplace_back(m, verts[t][s][i]);
          fired = true;
        }
      }
      if (mv.stay != 0 || !mv.fires.empty()) step.moves.push_back(std::move(mv));
    }
    if (!fired) continue;  // identity layer, drop
    cur = apply_step(u, cur, step);
    w.steps.push_back(std::move(step));
  }
  if (apply_weak(u, mu, w) != nu) throw std::logic_error("weak witness extraction is inconsistent");
  return w;
}

/// Probabilistic composition of same-kind transition witnesses into one
/// witness for the mixture.
struct ComposedStep {
  Distribution source, target;
  StepWitness witness;
};

inline ComposedStep compose_steps(const Universe& u,
                                  const std::vector<std::tuple<Rat, Distribution, StepWitness>>& parts) {
  if (parts.empty()) throw std::invalid_argument("compose_steps: no parts");
  const Action& act = std::get<2>(parts.front()).act;
  bool partial = std::get<2>(parts.front()).partial;

  Mixture src;
  std::map<NTerm, StateMove> merged;
  std::map<NTerm, std::map<Distribution, Rat>> fire_acc;
  for (const auto& [p, mu_i, w_i] : parts) {
    if (w_i.act != act || w_i.partial != partial)
      throw std::invalid_argument("compose_steps: witnesses of different kinds");
    apply_step(u, mu_i, w_i);  // validate the part
    src.parts.emplace_back(p, mu_i);
    if (p == 0) continue;
    for (const auto& mv : w_i.moves) {
      auto& m = merged[mv.state];
      m.state = mv.state;
      m.stay += p * mv.stay;
      for (const auto& [fw, target] : mv.fires) fire_acc[mv.state][target] += p * fw;
    }
  }
  ComposedStep out;
  out.source = mix(src);
  out.witness.act = act;
  out.witness.partial = partial;
  for (auto& [state, mv] : merged) {
    for (auto& [target, fw] : fire_acc[state])
      if (fw != 0) mv.fires.emplace_back(fw, target);
    out.witness.moves.push_back(std::move(mv));
  }
  out.target = apply_step(u, out.source, out.witness);
  return out;
}

struct ComposedWeak {
  Distribution source, target;
  WeakWitness witness;
};

inline StepWitness identity_step(const Distribution& d) {
  StepWitness w;
  w.act = Action::tau();
  w.partial = true;
  for (const auto& [t, m] : d.entries()) {
    StateMove mv;
    mv.state = t;
    mv.stay = m;
    w.moves.push_back(std::move(mv));
  }
  return w;
}

/// Composes weak witnesses by padding the shorter chains with identity
/// steps, then composing layerwise.
inline ComposedWeak compose_weak(const Universe& u,
                                 const std::vector<std::tuple<Rat, Distribution, WeakWitness>>& parts) {
  if (parts.empty()) throw std::invalid_argument("compose_weak: no parts");
  std::size_t n = 0;
  for (const auto& [p, mu_i, w_i] : parts) n = std::max(n, w_i.steps.size());

  std::vector<Distribution> cur;
  Mixture src;
  for (const auto& [p, mu_i, w_i] : parts) {
    cur.push_back(mu_i);
    src.parts.emplace_back(p, mu_i);
  }

  ComposedWeak out;
  out.source = mix(src);
  Distribution acc = out.source;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::tuple<Rat, Distribution, StepWitness>> layer;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto& [p, mu_i, w_i] = parts[i];
      StepWitness sw = t < w_i.steps.size() ? w_i.steps[t] : identity_step(cur[i]);
      layer.emplace_back(p, cur[i], sw);
      cur[i] = apply_step(u, cur[i], sw);
    }
    ComposedStep cs = compose_steps(u, layer);
    if (cs.source != acc) throw std::logic_error("compose_weak: layer source mismatch");
    if (cs.witness.fired_mass() != 0) out.witness.steps.push_back(cs.witness);
    acc = cs.target;
  }
  out.target = acc;
  return out;
}

/// Probabilistic decomposition of a transition witness along a mixture
/// presentation of its source, built on the joint refinement of the two
/// presentations (parts vs. the witness's per-state atoms).
struct DecomposedStep {
  std::vector<Distribution> targets;
  std::vector<StepWitness> witnesses;
};

inline DecomposedStep decompose_step(const Universe& u, const std::vector<std::pair<Rat, Distribution>>& parts,
                                     const Distribution& source, const StepWitness& w) {
  for (const auto& [p, d] : parts)
    if (p <= 0) throw std::invalid_argument("decompose_step: parts must have positive coefficients");
  Mixture left{parts};
  if (mix(left) != source) throw std::invalid_argument("decompose_step: parts do not present the source");
  apply_step(u, source, w);  // validate

  // witness atoms: (state, stay) and (state, fired target) entries
  struct Atom {
    NTerm state;
    bool stay;
    Distribution target;
    Rat mass;
  };
  std::vector<Atom> atoms;
  Mixture right;
  for (const auto& mv : w.moves) {
    if (mv.stay != 0) {
      atoms.push_back({mv.state, true, Distribution::dirac(mv.state), mv.stay});
      right.parts.emplace_back(mv.stay, Distribution::dirac(mv.state));
    }
    for (const auto& [fw, target] : mv.fires) {
      if (fw == 0) continue;
      atoms.push_back({mv.state, false, target, fw});
      right.parts.emplace_back(fw, Distribution::dirac(mv.state));
    }
  }

  JointDecomposition jd = joint_decompose(left, right);

  DecomposedStep out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Rat& p = parts[i].first;
    std::map<NTerm, StateMove> moves;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
      Rat share = jd.coeff(i, j) / p;
      if (share == 0) continue;
      auto& mv = moves[atoms[j].state];
      mv.state = atoms[j].state;
      if (atoms[j].stay) {
        mv.stay += share;
      } else {
        mv.fires.emplace_back(share, atoms[j].target);
      }
    }
    StepWitness wi;
    wi.act = w.act;
    wi.partial = w.partial;
    for (auto& [s, mv] : moves) wi.moves.push_back(std::move(mv));
    out.targets.push_back(apply_step(u, parts[i].second, wi));
    out.witnesses.push_back(std::move(wi));
  }

  // the decomposed targets recompose to the original target
  Mixture recomposed;
  for (std::size_t i = 0; i < parts.size(); ++i) recomposed.parts.emplace_back(parts[i].first, out.targets[i]);
  if (mix(recomposed) != apply_step(u, source, w))
    throw std::logic_error("decompose_step: marginal identity violated");
  return out;
}

struct DecomposedWeak {
  std::vector<Distribution> targets;
  std::vector<WeakWitness> witnesses;
};

inline DecomposedWeak decompose_weak(const Universe& u, const std::vector<std::pair<Rat, Distribution>>& parts,
                                     const Distribution& source, const WeakWitness& w) {
  std::vector<std::pair<Rat, Distribution>> cur = parts;
  Distribution acc = source;
  DecomposedWeak out;
  out.witnesses.resize(parts.size());
  for (const auto& step : w.steps) {
    DecomposedStep ds = decompose_step(u, cur, acc, step);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (ds.witnesses[i].fired_mass() != 0) out.witnesses[i].steps.push_back(ds.witnesses[i]);
      cur[i].second = ds.targets[i];
    }
    acc = apply_step(u, acc, step);
  }
  for (auto& [p, d] : cur) out.targets.push_back(d);
  return out;
}

}  // namespace pbb
