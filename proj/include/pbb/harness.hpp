#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbb/parser.hpp"
#include "pbb/stability.hpp"

namespace pbb {

/// Generator configuration; tau is always part of the effective alphabet.
struct GenConfig {
  unsigned max_depth = 3;
  unsigned max_branch = 2;
  std::vector<Action> alphabet{Action("a"), Action("b")};
  unsigned denominator_bound = 4;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_depth < 1 || max_branch < 1 || denominator_bound < 1)
      throw std::invalid_argument("generator bounds must be at least 1");
    if (alphabet.empty()) throw std::invalid_argument("generator alphabet must be non-empty");
  }
};

namespace gen {

inline Rat ratio(std::mt19937_64& rng, unsigned denom_bound) {
  unsigned q = 1 + static_cast<unsigned>(rng() % denom_bound);
  unsigned p = static_cast<unsigned>(rng() % (q + 1));
  return Rat(p, q);
}

inline Action action(std::mt19937_64& rng, const GenConfig& cfg, bool allow_tau = true) {
  std::size_t n = cfg.alphabet.size() + (allow_tau ? 1 : 0);
  std::size_t k = rng() % n;
  if (k == cfg.alphabet.size()) return Action::tau();
  return cfg.alphabet[k];
}

inline NTerm nterm(std::mt19937_64& rng, const GenConfig& cfg, unsigned depth);

inline PTerm pterm(std::mt19937_64& rng, const GenConfig& cfg, unsigned depth) {
  if (depth == 0 || rng() % 2 == 0) return PTerm::dirac(nterm(rng, cfg, depth == 0 ? 0 : depth - 1));
  return PTerm::pchoice(pterm(rng, cfg, depth - 1), ratio(rng, cfg.denominator_bound),
                        pterm(rng, cfg, depth - 1));
}

inline NTerm nterm(std::mt19937_64& rng, const GenConfig& cfg, unsigned depth) {
  if (depth == 0) return NTerm::nil();
  switch (rng() % 4) {
    case 0:
      return NTerm::nil();
    case 1:
    case 2:
      return NTerm::prefix(action(rng, cfg), pterm(rng, cfg, depth - 1));
    default: {
      NTerm acc = nterm(rng, cfg, depth - 1);
      unsigned branches = 1 + static_cast<unsigned>(rng() % cfg.max_branch);
      for (unsigned i = 1; i < branches; ++i) acc = NTerm::choice(acc, nterm(rng, cfg, depth - 1));
      return acc;
    }
  }
}

/// Random distribution over the given states with weights whose
/// denominators divide the configured bound.
inline Distribution distribution(std::mt19937_64& rng, const GenConfig& cfg,
                                 const std::vector<NTerm>& states, unsigned max_support = 3) {
  unsigned denom = cfg.denominator_bound;
  unsigned n = 1 + static_cast<unsigned>(rng() % max_support);
  std::vector<Rat> cuts{Rat(0), Rat(1)};
  for (unsigned i = 1; i < n; ++i) cuts.emplace_back(rng() % (denom + 1), denom);
  std::sort(cuts.begin(), cuts.end());
  std::vector<Distribution::Entry> entries;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Rat w = cuts[i + 1] - cuts[i];
    if (w != 0) entries.emplace_back(states[rng() % states.size()], w);
  }
  return Distribution::make(std::move(entries));
}

}  // namespace gen

/// Deterministic random term; identical output for identical config.
inline Parsed gen_term(const GenConfig& cfg, Sort sort) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  switch (sort) {
    case Sort::nondet:
      return gen::nterm(rng, cfg, cfg.max_depth);
    case Sort::prob:
      return gen::pterm(rng, cfg, cfg.max_depth);
    case Sort::distribution: {
      NTerm t = gen::nterm(rng, cfg, cfg.max_depth);
      Universe u = Universe::build({t});
      return gen::distribution(rng, cfg, u.states());
    }
  }
  throw std::logic_error("bad sort");
}

/// A term and its inert-tau graft: the grafted term adds a tau-summand that
/// unfolds back to the original, so the pair is branching-equivalent.
inline std::pair<NTerm, NTerm> gen_grafted_pair(const GenConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  NTerm base = gen::nterm(rng, cfg, cfg.max_depth);
  NTerm grafted = NTerm::choice(NTerm::prefix(Action::tau(), PTerm::dirac(base)), base);
  return {base, grafted};
}

inline Universe gen_universe(std::mt19937_64& rng, const GenConfig& cfg, unsigned seeds = 2) {
  std::vector<Seed> s;
  for (unsigned i = 0; i < seeds; ++i) s.emplace_back(gen::nterm(rng, cfg, cfg.max_depth));
  return Universe::build(s);
}

// ---------------------------------------------------------------------------
// property suites
// ---------------------------------------------------------------------------

/// One generated case: a bag of values the suite predicate consumes.
/// Keeping the values explicit makes greedy shrinking uniform.
struct CaseValue {
  std::vector<NTerm> terms;
  std::vector<Distribution> dists;
  std::vector<Rat> rats;

  std::string str() const {
    std::string out;
    for (const auto& t : terms) out += "term: " + t.str() + "\n";
    for (const auto& d : dists) out += "dist: " + d.str() + "\n";
    for (const auto& r : rats) out += "rat: " + rat_str(r) + "\n";
    return out;
  }
};

struct Suite {
  std::string name;
  std::function<CaseValue(std::mt19937_64&, const GenConfig&)> generate;
  std::function<bool(const CaseValue&)> predicate;  // true = pass
};

struct SuiteReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::size_t count = 0, passes = 0, failures = 0;
  std::string first_failure;  // minimized, printable
  double seconds = 0;
  bool ok() const { return failures == 0; }
};

namespace shrinkers {

inline std::vector<NTerm> shrink_nterm(const NTerm& t) {
  std::vector<NTerm> out;
  if (t.kind() == NTerm::Kind::nil) return out;
  out.push_back(NTerm::nil());
  if (t.kind() == NTerm::Kind::choice) {
    out.push_back(t.left());
    out.push_back(t.right());
  }
  if (t.kind() == NTerm::Kind::prefix) {
    // pull states out of the prefix body
    std::function<void(const PTerm&)> walk = [&](const PTerm& p) {
      if (p.kind() == PTerm::Kind::dirac) {
        if (!(p.inner() == t)) out.push_back(p.inner());
      } else {
        walk(p.left());
        walk(p.right());
      }
    };
    walk(t.body());
  }
  return out;
}

/// Candidates in the configured order: term depth, then support size, then
/// coefficient simplification.
inline std::vector<CaseValue> candidates(const CaseValue& c) {
  std::vector<CaseValue> out;
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    for (const auto& t : shrink_nterm(c.terms[i])) {
      CaseValue n = c;
      n.terms[i] = t;
      out.push_back(std::move(n));
    }
  }
  for (std::size_t i = 0; i < c.dists.size(); ++i) {
    const auto& entries = c.dists[i].entries();
    for (std::size_t k = 0; k < entries.size(); ++k) {
      for (const auto& t : shrink_nterm(entries[k].first)) {
        std::vector<Distribution::Entry> ne(entries.begin(), entries.end());
        ne[k].first = t;
        CaseValue n = c;
        n.dists[i] = Distribution::make(std::move(ne));
        out.push_back(std::move(n));
      }
    }
    if (entries.size() > 1) {
      for (std::size_t k = 0; k < entries.size(); ++k) {
        std::vector<Distribution::Entry> ne;
        Rat dropped = entries[k].second;
        for (std::size_t j = 0; j < entries.size(); ++j)
          if (j != k) ne.emplace_back(entries[j].first, entries[j].second / (Rat(1) - dropped));
        CaseValue n = c;
        n.dists[i] = Distribution::make(std::move(ne));
        out.push_back(std::move(n));
      }
    }
  }
  for (std::size_t i = 0; i < c.rats.size(); ++i) {
    for (Rat r : {Rat(1, 2), Rat(1), Rat(0)}) {
      if (r == c.rats[i]) continue;
      CaseValue n = c;
      n.rats[i] = r;
      out.push_back(std::move(n));
    }
  }
  return out;
}

}  // namespace shrinkers

/// Greedy shrink: repeatedly adopt the first candidate that still fails.
/// Candidates that throw are not valid counterexamples and are skipped.
inline CaseValue shrink_case(CaseValue c, const std::function<bool(const CaseValue&)>& predicate,
                             int rounds = 64) {
  auto fails = [&](const CaseValue& v) {
    try {
      return !predicate(v);
    } catch (const std::exception&) {
      return false;
    }
  };
  while (rounds-- > 0) {
    bool shrunk = false;
    for (const auto& cand : shrinkers::candidates(c)) {
      if (fails(cand)) {
        c = cand;
        shrunk = true;
        break;
      }
    }
    if (!shrunk) break;
  }
  return c;
}

namespace detail {

inline Universe case_universe(const CaseValue& c) {
  std::vector<Seed> seeds;
  for (const auto& t : c.terms) seeds.emplace_back(t);
  for (const auto& d : c.dists) seeds.emplace_back(d);
  return Universe::build(seeds);
}

/// Random single-step witness of the requested kind from mu, if one exists.
inline std::optional<StepWitness> random_step(std::mt19937_64& rng, const Universe& u, const Distribution& mu,
                                              const Action& act, bool partial) {
  StepWitness w;
  w.act = act;
  w.partial = partial;
  for (const auto& [state, mass] : mu.entries()) {
    AfterSet a = after_set(u, state, act);
    StateMove mv;
    mv.state = state;
    if (a.empty()) {
      if (!partial) return std::nullopt;
      mv.stay = mass;
    } else if (partial && rng() % 2 == 0) {
      // split the mass between staying and one vertex
      Rat s = mass * Rat(rng() % 3, 2) / 2;  // 0, 1/4 or 1/2 of the mass
      if (s > mass) s = mass;
      mv.stay = s;
      if (mass - s != 0) mv.fires.emplace_back(mass - s, a.vertices[rng() % a.vertices.size()]);
    } else {
      mv.fires.emplace_back(mass, a.vertices[rng() % a.vertices.size()]);
    }
    w.moves.push_back(std::move(mv));
  }
  return w;
}

inline WeakWitness random_weak(std::mt19937_64& rng, const Universe& u, Distribution mu, unsigned max_len) {
  WeakWitness w;
  unsigned len = static_cast<unsigned>(rng() % (max_len + 1));
  for (unsigned i = 0; i < len; ++i) {
    auto s = random_step(rng, u, mu, Action::tau(), true);
    if (!s || s->fired_mass() == 0) break;
    mu = apply_step(u, mu, *s);
    w.steps.push_back(std::move(*s));
  }
  return w;
}

/// Does nu weakly reach some nu' with (mu', nu') in the closure? One joint
/// feasibility query; used by the weak-transfer suite.
inline bool weak_transfer_matchable(const Universe& u, const Certificate& cert, const Distribution& nu,
                                    const Distribution& mu_prime) {
  auto gens = ordered_generators(cert);
  LinearSystem sys;
  int k = static_cast<int>(u.tau_height(nu));
  ChainVars cv = add_chain(sys, u, nu, k);
  CcPartner p = add_cc_partner(sys, gens, cert.diagonal, mu_prime);
  std::set<NTerm> dims;
  for (const auto& x : cv.final_support()) dims.insert(x);
  for (const auto& [t, terms] : p.value) dims.insert(t);
  for (const auto& x : dims) {
    std::vector<std::pair<int, Rat>> row;
    auto [c, var] = cv.final_mass(x);
    if (var >= 0) row.emplace_back(var, Rat(1));
    auto it = p.value.find(x);
    if (it != p.value.end())
      for (const auto& [v, coef] : it->second) row.emplace_back(v, -coef);
    sys.add_row(std::move(row), -c);
  }
  return sys.solve().has_value();
}

}  // namespace detail

// --- suite definitions ------------------------------------------------------

namespace suites {

inline Suite flexibel_delen() {
  Suite s;
  s.name = "flexibel_delen";
  s.generate = [](std::mt19937_64& rng, const GenConfig& cfg) {
    CaseValue c;
    GenConfig tf = cfg;
    NTerm t1 = gen::nterm(rng, tf, cfg.max_depth);
    NTerm t2 = gen::nterm(rng, tf, cfg.max_depth);
    Universe u = Universe::build({t1, t2});
    c.terms = {t1, t2};
    c.dists = {gen::distribution(rng, cfg, u.states(), 4)};
    c.rats = {gen::ratio(rng, cfg.denominator_bound), gen::ratio(rng, cfg.denominator_bound)};
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    const Distribution& xi = c.dists[0];
    auto presentation = [&](const Rat& cut) {
      Mixture m;
      if (cut == 0 || cut == 1 || xi.size() < 2) {
        m.parts.emplace_back(Rat(1), xi);
        return m;
      }
      // split off a sub-distribution of mass `cut` taken from the support
      // prefix, rest in the second part
      std::vector<Distribution::Entry> first, second;
      Rat need = cut;
      for (const auto& [t, w] : xi.entries()) {
        Rat take = std::min(w, need);
        if (take != 0) first.emplace_back(t, take / cut);
        if (w - take != 0) second.emplace_back(t, (w - take) / (Rat(1) - cut));
        need -= take;
      }
      if (need != 0) {
        Mixture whole;
        whole.parts.emplace_back(Rat(1), xi);
        return whole;
      }
      m.parts.emplace_back(cut, Distribution::make(std::move(first)));
      m.parts.emplace_back(Rat(1) - cut, Distribution::make(std::move(second)));
      return m;
    };
    Mixture left = presentation(c.rats[0]);
    Mixture right = presentation(c.rats[1]);
    if (mix(left) != xi || mix(right) != xi) return false;
    JointDecomposition jd = joint_decompose(left, right);
    for (std::size_t i = 0; i < jd.rows; ++i) {
      Rat row(0);
      Mixture m;
      for (std::size_t j = 0; j < jd.cols; ++j) {
        row += jd.coeff(i, j);
        if (jd.coeff(i, j) != 0) m.parts.emplace_back(jd.coeff(i, j) / left.parts[i].first, jd.part(i, j));
      }
      if (row != left.parts[i].first) return false;
      if (left.parts[i].first != 0 && mix(m) != left.parts[i].second) return false;
    }
    for (std::size_t j = 0; j < jd.cols; ++j) {
      Rat col(0);
      Mixture m;
      for (std::size_t i = 0; i < jd.rows; ++i) {
        col += jd.coeff(i, j);
        if (jd.coeff(i, j) != 0) m.parts.emplace_back(jd.coeff(i, j) / right.parts[j].first, jd.part(i, j));
      }
      if (col != right.parts[j].first) return false;
      if (right.parts[j].first != 0 && mix(m) != right.parts[j].second) return false;
    }
    return true;
  };
  return s;
}

inline Suite limit_residual_suite() {
  Suite s;
  s.name = "limit_residual";
  s.generate = [](std::mt19937_64& rng, const GenConfig& cfg) {
    CaseValue c;
    NTerm t = gen::nterm(rng, cfg, cfg.max_depth);
    Universe u = Universe::build({t});
    c.terms = {t};
    c.dists = {gen::distribution(rng, cfg, u.states(), 3), gen::distribution(rng, cfg, u.states(), 3)};
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    const Distribution& mu_i = c.dists[0];
    const Distribution& mu = c.dists[1];
    auto [r, res] = limit_residual(mu_i, mu);
    if (!is_probability(r)) return false;
    if (r == 0 && !(res == mu)) return false;
    return mix2(Rat(1) - r, mu, res) == mu_i;
  };
  return s;
}

inline Suite composition() {
  Suite s;
  s.name = "composition";
  s.generate = [](std::mt19937_64& rng, const GenConfig& cfg) {
    CaseValue c;
    NTerm t1 = gen::nterm(rng, cfg, cfg.max_depth);
    NTerm t2 = gen::nterm(rng, cfg, cfg.max_depth);
    Universe u = Universe::build({t1, t2});
    c.terms = {t1, t2};
    c.dists = {gen::distribution(rng, cfg, u.states(), 2), gen::distribution(rng, cfg, u.states(), 2)};
    c.rats = {gen::ratio(rng, cfg.denominator_bound)};
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    Universe u = detail::case_universe(c);
    std::mt19937_64 rng(c.dists[0].hash() ^ c.dists[1].hash());
    const Rat& p = c.rats[0];
    // weak chains compose to a witness for the mixture reaching the mixture
    // of the endpoints
    WeakWitness w1 = detail::random_weak(rng, u, c.dists[0], 2);
    WeakWitness w2 = detail::random_weak(rng, u, c.dists[1], 2);
    if (p == 0 || p == 1) return true;
    ComposedWeak cw = compose_weak(u, {{p, c.dists[0], w1}, {Rat(1) - p, c.dists[1], w2}});
    Distribution e1 = apply_weak(u, c.dists[0], w1);
    Distribution e2 = apply_weak(u, c.dists[1], w2);
    return cw.target == mix2(p, e1, e2) && apply_weak(u, cw.source, cw.witness) == cw.target;
  };
  return s;
}

inline Suite decomposition() {
  Suite s;
  s.name = "decomposition";
  s.generate = composition().generate;
  s.predicate = [](const CaseValue& c) {
    Universe u = detail::case_universe(c);
    std::mt19937_64 rng(c.dists[0].hash() ^ (c.dists[1].hash() << 1));
    const Distribution& mu = c.dists[0];
    const Rat& p = c.rats[0];
    if (p == 0 || p == 1) return true;
    // a partial tau-step decomposed along a binary split and recomposed
    auto w = detail::random_step(rng, u, mu, Action::tau(), true);
    if (!w) return true;
    std::vector<std::pair<Rat, Distribution>> parts{{p, mu}, {Rat(1) - p, mu}};
    DecomposedStep d = decompose_step(u, parts, mu, *w);
    std::vector<std::tuple<Rat, Distribution, StepWitness>> back;
    for (std::size_t i = 0; i < parts.size(); ++i)
      back.emplace_back(parts[i].first, parts[i].second, d.witnesses[i]);
    ComposedStep cs = compose_steps(u, back);
    return cs.source == mu && cs.target == apply_step(u, mu, *w);
  };
  return s;
}

inline Suite congruence() {
  Suite s;
  s.name = "congruence";
  s.generate = [](std::mt19937_64& rng, const GenConfig& cfg) {
    GenConfig sub = cfg;
    sub.max_depth = std::min(cfg.max_depth, 2u);
    CaseValue c;
    NTerm base1 = gen::nterm(rng, sub, sub.max_depth);
    NTerm base2 = gen::nterm(rng, sub, sub.max_depth);
    c.terms = {base1, NTerm::choice(NTerm::prefix(Action::tau(), PTerm::dirac(base1)), base1), base2,
               NTerm::choice(NTerm::prefix(Action::tau(), PTerm::dirac(base2)), base2)};
    c.rats = {gen::ratio(rng, cfg.denominator_bound)};
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    Universe u = detail::case_universe(c);
    Distribution m1 = Distribution::dirac(c.terms[0]), n1 = Distribution::dirac(c.terms[1]);
    Distribution m2 = Distribution::dirac(c.terms[2]), n2 = Distribution::dirac(c.terms[3]);
    Certificate c1;
    c1.pairs.emplace_back(m1, n1);
    c1.symmetric = c1.diagonal = c1.convex = true;
    Certificate c2;
    c2.pairs.emplace_back(m2, n2);
    c2.symmetric = c2.diagonal = c2.convex = true;
    CongruenceResult r = check_congruence(u, m1, m2, n1, n2, c.rats[0], c1, c2);
    if (!r.accepted) return false;
    return closure_member(r.certificate, mix2(c.rats[0], m1, m2), mix2(c.rats[0], n1, n2));
  };
  return s;
}

inline Suite weak_transfer() {
  Suite s;
  s.name = "weak_transfer";
  s.generate = [](std::mt19937_64& rng, const GenConfig&) {
    CaseValue c;
    c.rats = {Rat(rng() % 3), Rat(rng() % 1000000007)};  // pair selector, schedule seed
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    // the three worked example pairs
    static const std::vector<std::array<std::string, 2>> pairs = {
        {"{1/2: a.D(0), 1/2: b.D(0)}",
         "{1/3: tau.(D(a.D(0)) +[1/2] D(b.D(0))), 1/3: a.D(0), 1/3: b.D(0)}"},
        {"{1: a.(D(p.D(0)) +[1/2] D(q.D(0)))}",
         "{1: a.(D(tau.(D(p.D(0)) +[1/2] D(q.D(0)))) +[1/3] (D(p.D(0)) +[1/2] D(q.D(0))))}"},
        {"{1: a.D(b.D(p.D(0)) + tau.D(q.D(0)))}",
         "{1: a.D(tau.D(b.D(p.D(0)) + tau.D(q.D(0))) + b.D(p.D(0)) + tau.D(q.D(0)))}"}};
    // one universe and certificate per pair, built once (thread-safe
    // magic-static initialization keeps concurrent runners correct)
    static const auto memo = [] {
      std::vector<std::pair<Universe, Certificate>> m;
      for (const auto& [l, r] : pairs) {
        Distribution a = parse_distribution(l), b = parse_distribution(r);
        Universe u = Universe::build({a, b});
        auto cert = search_branching(u, a, b);
        if (!cert) throw std::logic_error("worked example pair lacks a certificate");
        m.emplace_back(std::move(u), std::move(*cert));
      }
      return m;
    }();
    std::size_t k = static_cast<std::size_t>(c.rats[0].convert_to<long>()) % pairs.size();
    Distribution mu = parse_distribution(pairs[k][0]);
    Distribution nu = parse_distribution(pairs[k][1]);
    const Universe& u = memo[k].first;
    const Certificate& cert = memo[k].second;
    std::mt19937_64 rng(c.rats[1].convert_to<std::uint64_t>());
    WeakWitness w = detail::random_weak(rng, u, mu, 2);
    Distribution mu_prime = apply_weak(u, mu, w);
    return detail::weak_transfer_matchable(u, cert, nu, mu_prime);
  };
  return s;
}

inline Suite decomp_stable() {
  Suite s;
  s.name = "decomp_stable";
  s.generate = [](std::mt19937_64& rng, const GenConfig& cfg) {
    GenConfig tf = cfg;  // tau-free terms keep both sides stable
    CaseValue c;
    NTerm t = NTerm::prefix(gen::action(rng, tf, false), gen::pterm(rng, tf, 1));
    NTerm dup = NTerm::choice(t, t);
    Universe u = Universe::build({t, dup});
    c.terms = {t, dup};
    c.dists = {gen::distribution(rng, cfg, u.states(), 3)};
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    Universe u = detail::case_universe(c);
    // sigma2 swaps the duplicated-choice state for the original
    const Distribution& s1 = c.dists[0];
    std::vector<Distribution::Entry> entries;
    for (const auto& [t, w] : s1.entries()) entries.emplace_back(t == c.terms[0] ? c.terms[1] : t, w);
    Distribution s2 = Distribution::make(std::move(entries));
    if (u.tau_height(s1) != 0 || u.tau_height(s2) != 0) return true;
    auto cert = search_branching(u, s1, s2);
    if (!cert) return false;
    BranchingEngine e(u);
    e.add_seed(s1);
    e.add_seed(s2);
    StatePartition p = e.dirac_partition();
    return p.vector_of(s1) == p.vector_of(s2);
  };
  return s;
}

inline Suite wgt_monotone() {
  Suite s;
  s.name = "wgt_monotone";
  s.generate = [](std::mt19937_64& rng, const GenConfig& cfg) {
    CaseValue c;
    NTerm t = gen::nterm(rng, cfg, cfg.max_depth);
    Universe u = Universe::build({t});
    c.terms = {t};
    c.dists = {gen::distribution(rng, cfg, u.states(), 3)};
    c.rats = {Rat(rng() % 1000000007)};
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    Universe u = detail::case_universe(c);
    const Distribution& mu = c.dists[0];
    // full steps strictly decrease the weight
    std::set<Action> acts;
    for (const auto& [t, w] : mu.entries())
      for (const auto& [a, d] : u.transitions(t)) acts.insert(a);
    for (const auto& a : acts) {
      StepSet step = distribution_step(u, mu, a);
      if (!step.enabled()) continue;
      for (const auto& v : step.vertices())
        if (!(wgt(v) < wgt(mu))) return false;
    }
    // weak chains never increase it
    std::mt19937_64 rng(c.rats[0].convert_to<std::uint64_t>());
    WeakWitness w = detail::random_weak(rng, u, mu, 3);
    Distribution cur = mu;
    Rat prev = wgt(cur);
    for (const auto& st : w.steps) {
      cur = apply_step(u, cur, st);
      if (wgt(cur) > prev) return false;
      if (st.fired_mass() != 0 && !(wgt(cur) < prev)) return false;
      prev = wgt(cur);
    }
    return true;
  };
  return s;
}

inline Suite cancellation() {
  Suite s;
  s.name = "cancellation";
  s.generate = [](std::mt19937_64& rng, const GenConfig& cfg) {
    GenConfig sub = cfg;
    sub.max_depth = std::min(cfg.max_depth, 2u);
    CaseValue c;
    NTerm base = gen::nterm(rng, sub, sub.max_depth);
    NTerm grafted = NTerm::choice(NTerm::prefix(Action::tau(), PTerm::dirac(base)), base);
    NTerm other = gen::nterm(rng, sub, sub.max_depth);
    Universe u = Universe::build({base, grafted, other});
    c.terms = {base, grafted, other};
    c.dists = {gen::distribution(rng, cfg, u.states(), 2)};
    unsigned q = 1 + static_cast<unsigned>(rng() % cfg.denominator_bound);
    unsigned p = 1 + static_cast<unsigned>(rng() % q);
    c.rats = {Rat(p, q)};  // r in (0, 1]
    return c;
  };
  s.predicate = [](const CaseValue& c) {
    Universe u = detail::case_universe(c);
    Distribution mu = Distribution::dirac(c.terms[0]);
    Distribution mu_prime = Distribution::dirac(c.terms[1]);
    const Distribution& nu = c.dists[0];
    const Rat& r = c.rats[0];

    // certified premises: the graft certificate lifted by congruence plus a
    // diagonal certificate for nu = nu'
    Certificate graft;
    graft.pairs.emplace_back(mu, mu_prime);
    graft.symmetric = graft.diagonal = graft.convex = true;
    Certificate diag;
    diag.diagonal = true;
    CongruenceResult pre = check_congruence(u, mu, nu, mu_prime, nu, r, graft, diag);
    if (!pre.accepted) return false;

    CancelResult res = cancel_check(u, mu, mu_prime, nu, nu, r, pre.certificate, diag);
    if (res.verdict != CancelResult::Verdict::accepted) return false;
    // independent re-verification of the produced certificate
    if (!check_certificate(u, res.certificate).accepted) return false;
    return closure_member(res.certificate, mu, mu_prime);
  };
  return s;
}

}  // namespace suites

inline const std::vector<Suite>& all_suites() {
  static const std::vector<Suite> s = {
      suites::flexibel_delen(), suites::limit_residual_suite(), suites::composition(),
      suites::decomposition(),  suites::congruence(),           suites::weak_transfer(),
      suites::decomp_stable(),  suites::wgt_monotone(),         suites::cancellation()};
  return s;
}

inline std::vector<std::string> suite_names() {
  std::vector<std::string> names;
  for (const auto& s : all_suites()) names.push_back(s.name);
  return names;
}

/// Runs `count` cases of the named suite; failures are minimized by greedy
/// shrinking and reported with the first counterexample.
inline SuiteReport run_suite(const std::string& name, const GenConfig& cfg, std::size_t count) {
  cfg.validate();
  const Suite* suite = nullptr;
  for (const auto& s : all_suites())
    if (s.name == name) suite = &s;
  if (!suite) throw std::invalid_argument("unknown suite: " + name);

  SuiteReport rep;
  rep.suite = name;
  rep.seed = cfg.seed;
  rep.count = count;
  auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(cfg.seed + 0x9e3779b97f4a7c15ull * (i + 1));
    CaseValue c = suite->generate(rng, cfg);
    bool pass;
    std::string thrown;
    try {
      pass = suite->predicate(c);
    } catch (const std::exception& e) {
      pass = false;
      thrown = e.what();
    }
    if (pass) {
      ++rep.passes;
    } else {
      ++rep.failures;
      if (rep.first_failure.empty()) {
        CaseValue min = shrink_case(c, suite->predicate);
        rep.first_failure = min.str();
        if (!thrown.empty()) rep.first_failure += "threw: " + thrown + "\n";
      }
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------------------
// brute-force strong-bisimulation oracle
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<int>> set_partitions(int n) {
  // restricted growth strings
  std::vector<std::vector<int>> out;
  std::vector<int> a(n, 0);
  while (true) {
    out.push_back(a);
    int i = n - 1;
    for (; i > 0; --i) {
      int maxpre = 0;
      for (int j = 0; j < i; ++j) maxpre = std::max(maxpre, a[j]);
      if (a[i] <= maxpre) break;
    }
    if (i == 0) break;
    ++a[i];
    for (int j = i + 1; j < n; ++j) a[j] = 0;
  }
  return out;
}

inline StatePartition partition_from_labels(const std::vector<NTerm>& states, const std::vector<int>& lab) {
  std::map<int, std::vector<NTerm>> blocks;
  for (std::size_t i = 0; i < states.size(); ++i) blocks[lab[i]].push_back(states[i]);
  std::vector<std::vector<NTerm>> bs;
  for (auto& [k, b] : blocks) bs.push_back(std::move(b));
  return StatePartition::from_blocks(std::move(bs));
}

/// Is this partition a strong bisimulation: do co-blocked states match per
/// action up to hulls of class vectors?
inline bool partition_is_bisimulation(const Universe& u, const StatePartition& p) {
  for (const auto& block : p.blocks) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      auto si = state_signature(u, block[i], p);
      for (std::size_t j = i + 1; j < block.size(); ++j) {
        if (!signatures_match(si, state_signature(u, block[j], p))) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

struct OracleReport {
  std::size_t universes = 0;
  std::size_t equivalent_pairs = 0;
  bool ok = true;
  std::string detail;
};

/// Cross-checks strong_partition against exhaustive enumeration of state
/// partitions (the union of all strong bisimulations) on every universe in
/// the given family; optionally also checks that strong equivalence of
/// Dirac pairs yields a branching certificate.
inline OracleReport strong_oracle_sweep(const std::vector<Universe>& family, bool check_branching) {
  OracleReport rep;
  for (const auto& u : family) {
    ++rep.universes;
    const auto& states = u.states();
    auto labelings = detail::set_partitions(static_cast<int>(states.size()));

    // oracle relation: pairs co-blocked by some bisimulation partition
    std::set<std::pair<std::size_t, std::size_t>> oracle;
    for (const auto& lab : labelings) {
      StatePartition p = detail::partition_from_labels(states, lab);
      if (!detail::partition_is_bisimulation(u, p)) continue;
      for (std::size_t i = 0; i < states.size(); ++i)
        for (std::size_t j = i + 1; j < states.size(); ++j)
          if (p.block_of(states[i]) == p.block_of(states[j])) oracle.emplace(i, j);
    }

    StatePartition refined = strong_partition(u);
    for (std::size_t i = 0; i < states.size(); ++i) {
      for (std::size_t j = i + 1; j < states.size(); ++j) {
        bool by_oracle = oracle.count({i, j}) != 0;
        bool by_refinement = refined.block_of(states[i]) == refined.block_of(states[j]);
        if (by_oracle != by_refinement) {
          rep.ok = false;
          rep.detail = "mismatch on " + states[i].str() + " vs " + states[j].str();
          return rep;
        }
        if (by_oracle) {
          ++rep.equivalent_pairs;
          if (check_branching) {
            auto cert = search_branching(u, Distribution::dirac(states[i]), Distribution::dirac(states[j]));
            if (!cert) {
              rep.ok = false;
              rep.detail = "strong pair lacks branching certificate: " + states[i].str() + " vs " +
                           states[j].str();
              return rep;
            }
          }
        }
      }
    }
  }
  return rep;
}

/// Deterministic family of small universes: all terms from a bounded
/// structural enumeration, filtered to the requested state count.
inline std::vector<Universe> small_universe_family(std::size_t max_states, std::size_t max_universes) {
  std::vector<std::string> pool = {
      "0",
      "a.D(0)",
      "b.D(0)",
      "tau.D(0)",
      "a.D(0) + a.D(0)",
      "a.D(0) + b.D(0)",
      "a.D(a.D(0))",
      "a.D(b.D(0))",
      "tau.D(a.D(0))",
      "a.D(0) + tau.D(0)",
      "a.(D(0) +[1/2] D(a.D(0)))",
      "a.(D(0) +[1/3] D(a.D(0)))",
      "a.(D(0) +[1/4] D(b.D(0)))",
      "a.(D(0) +[1/2] D(0))",
      "a.(D(a.D(0)) +[2/3] D(b.D(0)))",
      "b.(D(0) +[1/2] D(a.D(0)))",
      "a.(D(0) +[1/2] D(a.D(0))) + a.(D(0) +[1/3] D(a.D(0)))",
      "a.(D(0) +[1/2] D(a.D(0))) + b.D(0)",
      "a.D(0) + a.D(a.D(0))",
      "tau.(D(a.D(0)) +[1/2] D(0))",
      "a.D(a.D(0) + b.D(0))",
      "a.D(0) + a.D(0) + a.D(0)",
      "b.D(a.D(0)) + a.D(0)",
      "a.(D(0) +[3/4] D(b.D(0))) + a.(D(0) +[1/4] D(b.D(0)))",
  };
  std::vector<Universe> family;
  std::set<std::string> seen;
  auto consider = [&](const std::vector<std::string>& seeds) {
    if (family.size() >= max_universes) return;
    std::vector<Seed> s;
    for (const auto& t : seeds) s.emplace_back(parse_nterm(t));
    Universe u = Universe::build(s);
    if (u.states().size() > max_states) return;
    std::string key;
    for (const auto& e : u.states()) key += e.str() + ";";
    if (!seen.insert(key).second) return;
    family.push_back(std::move(u));
  };
  for (const auto& t : pool) consider({t});
  for (std::size_t i = 0; i < pool.size() && family.size() < max_universes; ++i)
    for (std::size_t j = i + 1; j < pool.size() && family.size() < max_universes; ++j)
      consider({pool[i], pool[j]});
  return family;
}

}  // namespace pbb
