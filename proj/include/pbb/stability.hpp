#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pbb/equiv.hpp"

namespace pbb {

/// Support-weighted average of term complexity. Strictly decreases under
/// full transitions and never increases along weak transitions.
inline Rat wgt(const Distribution& d) {
  Rat w(0);
  for (const auto& [t, m] : d.entries()) w += m * Rat(t.complexity());
  return w;
}

/// Per-block probability mass of a distribution under a state partition.
inline std::vector<Rat> class_vector(const Distribution& d, const StatePartition& p) {
  return p.vector_of(d);
}

enum class Stability { stable, unstable, inconclusive };

struct StabilityVerdict {
  Stability verdict = Stability::inconclusive;
  std::optional<Distribution> unfolded;   // unstable: the equivalent proper unfolding
  std::optional<WeakWitness> witness;     // unstable: schedule reaching it
  std::optional<Certificate> cert;        // unstable: equivalence certificate
  std::string note;
};

namespace detail {

/// Distributions reachable by repeatedly firing one support state's full
/// mass into one tau-successor vertex; breadth-first with deduplication.
inline std::vector<Distribution> full_firing_descendants(const Universe& u, const Distribution& from,
                                                         std::size_t cap, bool* truncated = nullptr) {
  std::vector<Distribution> out;
  std::set<Distribution> seen{from};
  std::vector<Distribution> todo{from};
  if (truncated) *truncated = false;
  while (!todo.empty()) {
    Distribution d = todo.back();
    todo.pop_back();
    for (const auto& [state, mass] : d.entries()) {
      for (const auto& v : after_set(u, state, Action::tau()).vertices) {
        std::vector<Distribution::Entry> entries;
        for (const auto& [t, w] : d.entries())
          if (!(t == state)) entries.emplace_back(t, w);
        for (const auto& [t, w] : v.entries()) entries.emplace_back(t, mass * w);
        Distribution succ = Distribution::make(std::move(entries));
        if (seen.insert(succ).second) {
          if (out.size() >= cap) {
            if (truncated) *truncated = true;
            return out;
          }
          out.push_back(succ);
          todo.push_back(succ);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Stability of a distribution: stable means no weak unfolding other than
/// the distribution itself stays in its equivalence class. The verdict is
/// `stable` only in the authoritative syntactic case (no support state has
/// a tau-transition); a found inert unfolding yields `unstable`; anything
/// else is inconclusive.
inline StabilityVerdict is_stable(const Universe& u, const Distribution& mu, const SearchBudget& budget = {},
                                  BranchingEngine* shared = nullptr) {
  StabilityVerdict out;
  bool has_tau = false;
  for (const auto& [t, w] : mu.entries())
    if (u.has_action(t, Action::tau())) has_tau = true;
  if (!has_tau) {
    out.verdict = Stability::stable;
    out.note = "no support state has a tau-transition";
    return out;
  }

  bool truncated = false;
  auto descendants = detail::full_firing_descendants(u, mu, 128, &truncated);

  std::optional<BranchingEngine> own;
  BranchingEngine* engine = shared;
  if (!engine) {
    own.emplace(u, budget);
    engine = &*own;
  }
  engine->add_seed(mu);
  for (const auto& d : descendants) engine->add_seed(d);

  Certificate rel = engine->relation_certificate();
  for (const auto& d : descendants) {
    if (d == mu) continue;
    if (closure_member(rel, mu, d)) {
      auto reach = weak_reach(u, mu, d, budget.weak_depth);
      if (!std::holds_alternative<WeakWitness>(reach)) continue;
      out.verdict = Stability::unstable;
      out.unfolded = d;
      out.witness = std::get<WeakWitness>(reach);
      out.cert = engine->certificate(mu, d);
      out.note = "inert tau-unfolding found";
      return out;
    }
  }
  out.verdict = Stability::inconclusive;
  out.note = truncated ? "descendant exploration truncated by budget"
                       : "support has tau-transitions and no inert unfolding was found";
  return out;
}

/// Result of unfolding a distribution towards a stable equivalent.
struct StabilizeResult {
  Distribution input, sigma;
  WeakWitness schedule;                 // input => sigma, replayable
  Certificate cert;                     // covers (input, sigma)
  Rat wgt_input, wgt_sigma;
  StabilityVerdict sigma_stability;
  bool truncated = false;
};

/// Best-first weight-descent over full tau-firings: among the explored
/// unfoldings equivalent to the input, the one of minimal weight is
/// returned together with a replayable schedule and a covering certificate.
inline StabilizeResult stabilize(const Universe& u, const Distribution& mu, const SearchBudget& budget = {},
                                 BranchingEngine* shared = nullptr) {
  StabilizeResult out;
  out.input = mu;
  out.wgt_input = wgt(mu);

  bool truncated = false;
  auto descendants = detail::full_firing_descendants(u, mu, 128, &truncated);
  out.truncated = truncated;

  std::optional<BranchingEngine> own;
  BranchingEngine* engine = shared;
  if (!engine) {
    own.emplace(u, budget);
    engine = &*own;
  }
  engine->add_seed(mu);
  for (const auto& d : descendants) engine->add_seed(d);

  // fire the largest weight drops first
  std::sort(descendants.begin(), descendants.end(),
            [](const Distribution& a, const Distribution& b) { return wgt(a) < wgt(b); });

  Certificate rel = engine->relation_certificate();
  Distribution best = mu;
  Rat best_w = out.wgt_input;
  for (const auto& d : descendants) {
    if (wgt(d) >= best_w) continue;
    if (closure_member(rel, mu, d)) {
      best = d;
      best_w = wgt(d);
    }
  }

  out.sigma = best;
  out.wgt_sigma = best_w;
  if (best == mu) {
    out.cert.diagonal = true;
  } else {
    auto reach = weak_reach(u, mu, best, budget.weak_depth);
    if (!std::holds_alternative<WeakWitness>(reach))
      throw std::logic_error("stabilize: descendant not weakly reachable");
    out.schedule = std::get<WeakWitness>(reach);
    auto cert = engine->certificate(mu, best, /*prune=*/false);
    if (!cert) cert = engine->certificate(mu, best);
    if (!cert) {
      // certificate capped away: report the input itself as best-so-far
      out.sigma = mu;
      out.wgt_sigma = out.wgt_input;
      out.schedule = WeakWitness{};
      out.cert = Certificate{};
      out.cert.diagonal = true;
      out.truncated = true;
    } else {
      out.cert = std::move(*cert);
    }
  }
  out.sigma_stability = is_stable(u, out.sigma, budget, engine);
  return out;
}

/// Class-vector comparison of verified-stable distributions over the
/// branching state partition; by the stable-decomposition property this
/// coincides with branching equivalence on such inputs.
inline bool stable_equiv(const Universe&, const Distribution& s1, const StabilityVerdict& v1,
                         const Distribution& s2, const StabilityVerdict& v2, const StatePartition& p) {
  if (v1.verdict != Stability::stable || v2.verdict != Stability::stable)
    throw std::invalid_argument("stable_equiv requires verified-stable inputs");
  return p.vector_of(s1) == p.vector_of(s2);
}

// ---------------------------------------------------------------------------
// authoritative query front-end
// ---------------------------------------------------------------------------

struct BranchingQuery {
  enum class Verdict { equivalent, refuted, inconclusive };
  Verdict verdict = Verdict::inconclusive;
  std::optional<Certificate> certificate;
  std::optional<Counterexample> counterexample;
  bool authoritative = false;
  std::string note;
};

namespace detail {

inline std::optional<Counterexample> single_pair_counterexample(const Universe& u, const Distribution& mu,
                                                                const Distribution& nu,
                                                                const SearchBudget& budget) {
  Certificate c;
  c.pairs.emplace_back(mu, nu);
  c.symmetric = c.diagonal = c.convex = true;
  CheckResult r = check_certificate(u, c, budget);
  return r.counterexample;
}

}  // namespace detail

/// Decides branching equivalence where possible. Acceptance always comes
/// with a verified certificate. Refutations are only issued on the
/// decidable fragment: tau-free reachable sub-universes (where branching
/// and strong equivalence coincide) and verified-stable inputs whose
/// cross-support state pairs are each merged or tau-free-refuted.
inline BranchingQuery branching_query(const Universe& u, const Distribution& mu, const Distribution& nu,
                                      const SearchBudget& budget = {}) {
  BranchingQuery out;
  if (auto cert = search_branching(u, mu, nu, budget)) {
    out.verdict = BranchingQuery::Verdict::equivalent;
    out.certificate = std::move(*cert);
    return out;
  }

  std::vector<NTerm> support;
  for (const auto& [t, w] : mu.entries()) support.push_back(t);
  for (const auto& [t, w] : nu.entries()) support.push_back(t);

  if (u.tau_free_reachable(support)) {
    // weak transitions collapse to identity here, so strong class vectors
    // decide the question
    if (!strong_equiv(u, mu, nu)) {
      out.verdict = BranchingQuery::Verdict::refuted;
      out.authoritative = true;
      out.counterexample = detail::single_pair_counterexample(u, mu, nu, budget);
      out.note = "tau-free fragment: strong class vectors differ";
      return out;
    }
    out.note = "tau-free fragment with equal strong class vectors but no certificate found";
    return out;
  }

  // stable distributions separate when their class vectors differ over a
  // partition that is exact on the supports: every unmerged support pair
  // must itself be refuted on a tau-free fragment
  auto stable_vectors_separate = [&](const Distribution& a, const Distribution& b) {
    BranchingEngine engine(u, budget);
    engine.add_seed(a);
    engine.add_seed(b);
    StatePartition p = engine.dirac_partition();
    std::vector<NTerm> sup;
    for (const auto& [t, w] : a.entries()) sup.push_back(t);
    for (const auto& [t, w] : b.entries()) sup.push_back(t);
    for (const auto& e : sup) {
      for (const auto& f : sup) {
        if (!(e < f) || p.block_of(e) == p.block_of(f)) continue;
        if (!u.tau_free_reachable(std::vector<NTerm>{e, f}) ||
            strong_equiv(u, Distribution::dirac(e), Distribution::dirac(f)))
          return false;  // partition not known to be exact here
      }
    }
    return p.vector_of(a) != p.vector_of(b);
  };

  StabilityVerdict v1 = is_stable(u, mu, budget);
  StabilityVerdict v2 = is_stable(u, nu, budget);
  if (v1.verdict == Stability::stable && v2.verdict == Stability::stable &&
      stable_vectors_separate(mu, nu)) {
    out.verdict = BranchingQuery::Verdict::refuted;
    out.authoritative = true;
    out.counterexample = detail::single_pair_counterexample(u, mu, nu, budget);
    out.note = "stable inputs with differing class vectors over an exact partition";
    return out;
  }

  // otherwise transport the question along verified stabilization
  // certificates and separate the stable forms
  StabilizeResult sl = stabilize(u, mu, budget);
  StabilizeResult sr = stabilize(u, nu, budget);
  auto transported = [&](const StabilizeResult& s, const Distribution& from) {
    return !s.truncated && s.sigma_stability.verdict == Stability::stable &&
           check_certificate(u, s.cert, budget).accepted && closure_member(s.cert, from, s.sigma);
  };
  if (transported(sl, mu) && transported(sr, nu) && stable_vectors_separate(sl.sigma, sr.sigma)) {
    out.verdict = BranchingQuery::Verdict::refuted;
    out.authoritative = true;
    out.counterexample = detail::single_pair_counterexample(u, mu, nu, budget);
    out.note = "stabilized forms have differing class vectors over an exact partition";
    return out;
  }

  out.note = "no certificate found within budget; refutation fragment does not apply";
  return out;
}

// ---------------------------------------------------------------------------
// cancellation
// ---------------------------------------------------------------------------

struct CancelResult {
  enum class Verdict { accepted, inconclusive };
  Verdict verdict = Verdict::inconclusive;
  Certificate certificate;  // covers (mu, mu_prime) when accepted
  StabilizeResult left, right;
  StatePartition partition;
  // class vectors over the partition: stable mixtures, their nu-components,
  // and the mu-components recovered by the r-scaled subtraction
  std::vector<Rat> sigma_left, sigma_right, nu_bar_left, nu_bar_right, mu_bar_left, mu_bar_right;
  Distribution mu_bar, mu_bar_prime, nu_bar, nu_bar_prime;
  std::string note;
};

namespace detail {

/// Splits a stable mixture sigma into r*mu_bar + (1-r)*nu_bar with mu_bar a
/// closure partner of mu and nu_bar a closure partner of nu.
inline std::optional<std::pair<Distribution, Distribution>> split_stable(const Universe&,
                                                                         const Certificate& rel,
                                                                         const Distribution& sigma,
                                                                         const Rat& r, const Distribution& mu,
                                                                         const Distribution& nu) {
  auto gens = ordered_generators(rel);
  LinearSystem sys;
  CcPartner pm = add_cc_partner(sys, gens, rel.diagonal, mu);
  CcPartner pn = add_cc_partner(sys, gens, rel.diagonal, nu);
  std::set<NTerm> dims;
  for (const auto& [t, w] : sigma.entries()) dims.insert(t);
  for (const auto& [t, terms] : pm.value) dims.insert(t);
  for (const auto& [t, terms] : pn.value) dims.insert(t);
  for (const auto& x : dims) {
    std::vector<std::pair<int, Rat>> row;
    auto it = pm.value.find(x);
    if (it != pm.value.end())
      for (const auto& [v, c] : it->second) row.emplace_back(v, r * c);
    it = pn.value.find(x);
    if (it != pn.value.end())
      for (const auto& [v, c] : it->second) row.emplace_back(v, (Rat(1) - r) * c);
    sys.add_row(std::move(row), sigma.at(x));
  }
  auto sol = sys.solve();
  if (!sol) return std::nullopt;
  return std::make_pair(eval_value(pm.value, *sol), eval_value(pn.value, *sol));
}

}  // namespace detail

/// Executes the cancellation argument: stabilize both mixtures, split the
/// stable forms along the r-decomposition by weak decomposability, compare
/// the class vectors of the nu- and mu-components (the latter via the
/// r-scaled subtraction), and return an accepted certificate for the
/// cancelled pair.
inline CancelResult cancel_check(const Universe& u, const Distribution& mu, const Distribution& mu_prime,
                                 const Distribution& nu, const Distribution& nu_prime, const Rat& r,
                                 std::optional<Certificate> cert_mix, std::optional<Certificate> cert_nu,
                                 const SearchBudget& budget = {}) {
  if (!(r > 0 && r <= 1)) throw std::invalid_argument("cancellation requires 0 < r <= 1");
  CancelResult out;

  Distribution mix_l = mix2(r, mu, nu), mix_r = mix2(r, mu_prime, nu_prime);

  // prerequisite certificates: given or searched
  if (!cert_mix) cert_mix = search_branching(u, mix_l, mix_r, budget);
  if (!cert_mix) {
    out.note = "prerequisite certificate for the mixtures is inconclusive";
    return out;
  }
  if (!check_certificate(u, *cert_mix, budget).accepted || !closure_member(*cert_mix, mix_l, mix_r)) {
    out.note = "prerequisite mixture certificate rejected";
    return out;
  }
  if (!cert_nu) cert_nu = search_branching(u, nu, nu_prime, budget);
  if (!cert_nu) {
    out.note = "prerequisite certificate for the nu-components is inconclusive";
    return out;
  }
  if (!check_certificate(u, *cert_nu, budget).accepted || !closure_member(*cert_nu, nu, nu_prime)) {
    out.note = "prerequisite nu certificate rejected";
    return out;
  }

  // one shared engine per query; all analysis artifacts become seeds
  BranchingEngine engine(u, budget);
  for (const auto& d : {mix_l, mix_r, mu, mu_prime, nu, nu_prime}) engine.add_seed(d);

  if (r == 1) {
    // degenerate case: the premise already relates mu and mu_prime
    out.certificate = *cert_mix;
    out.mu_bar = mu;
    out.mu_bar_prime = mu_prime;
    out.verdict = CancelResult::Verdict::accepted;
    out.note = "r = 1 reduces to the mixture premise";
    return out;
  }

  out.left = stabilize(u, mix_l, budget, &engine);
  out.right = stabilize(u, mix_r, budget, &engine);
  if (out.left.sigma_stability.verdict == Stability::unstable ||
      out.right.sigma_stability.verdict == Stability::unstable) {
    out.note = "stabilization left an unstable form";
    return out;
  }

  Certificate rel = engine.relation_certificate();
  auto split_l = detail::split_stable(u, rel, out.left.sigma, r, mu, nu);
  auto split_r = detail::split_stable(u, rel, out.right.sigma, r, mu_prime, nu_prime);
  if (!split_l || !split_r) {
    out.note = "stable form does not split along the r-decomposition";
    return out;
  }
  out.mu_bar = split_l->first;
  out.nu_bar = split_l->second;
  out.mu_bar_prime = split_r->first;
  out.nu_bar_prime = split_r->second;

  out.partition = engine.dirac_partition();
  out.sigma_left = out.partition.vector_of(out.left.sigma);
  out.sigma_right = out.partition.vector_of(out.right.sigma);
  out.nu_bar_left = out.partition.vector_of(out.nu_bar);
  out.nu_bar_right = out.partition.vector_of(out.nu_bar_prime);
  if (out.nu_bar_left != out.nu_bar_right) {
    out.note = "nu-components disagree on class vectors";
    return out;
  }

  // r * mu_bar[C] = sigma[C] - (1-r) * nu_bar[C], on both sides
  out.mu_bar_left.resize(out.partition.size());
  out.mu_bar_right.resize(out.partition.size());
  for (std::size_t c = 0; c < out.partition.size(); ++c) {
    out.mu_bar_left[c] = (out.sigma_left[c] - (Rat(1) - r) * out.nu_bar_left[c]) / r;
    out.mu_bar_right[c] = (out.sigma_right[c] - (Rat(1) - r) * out.nu_bar_right[c]) / r;
  }
  if (out.mu_bar_left != out.partition.vector_of(out.mu_bar) ||
      out.mu_bar_right != out.partition.vector_of(out.mu_bar_prime))
    throw std::logic_error("cancel_check: subtraction disagrees with the split");
  if (out.mu_bar_left != out.mu_bar_right) {
    out.note = "mu-components disagree on class vectors";
    return out;
  }

  auto final_cert = engine.certificate(mu, mu_prime, /*prune=*/false);
  if (!final_cert || !check_certificate(u, *final_cert, budget).accepted ||
      !closure_member(*final_cert, mu, mu_prime)) {
    out.note = "analysis succeeded but no covering certificate was assembled";
    return out;
  }
  out.certificate = std::move(*final_cert);
  out.verdict = CancelResult::Verdict::accepted;
  return out;
}

}  // namespace pbb
