#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "pbb/harness.hpp"
#include "pbb/parser.hpp"
#include "pbb/stability.hpp"

namespace pbb {

using Json = nlohmann::json;

// Rationals and distributions travel as strings in the module grammars, so
// files stay diff-friendly and exact.

inline Json to_json(const Distribution& d) { return d.str(); }

inline Json to_json(const StateMove& m) {
  Json fires = Json::array();
  for (const auto& [w, t] : m.fires) fires.push_back({{"mass", rat_str(w)}, {"target", t.str()}});
  return {{"state", m.state.str()}, {"stay", rat_str(m.stay)}, {"fire", fires}};
}

inline Json to_json(const StepWitness& w) {
  Json moves = Json::array();
  for (const auto& m : w.moves) moves.push_back(to_json(m));
  return {{"action", w.act.name()}, {"partial", w.partial}, {"fired_mass", rat_str(w.fired_mass())},
          {"moves", moves}};
}

inline Json to_json(const WeakWitness& w) {
  Json steps = Json::array();
  for (const auto& s : w.steps) steps.push_back(to_json(s));
  return steps;
}

inline Json to_json(const Certificate& c) {
  Json pairs = Json::array();
  for (const auto& [l, r] : c.pairs) pairs.push_back(Json::array({l.str(), r.str()}));
  Json closures = Json::array();
  if (c.symmetric) closures.push_back("symmetric");
  if (c.diagonal) closures.push_back("diagonal");
  if (c.convex) closures.push_back("convex");
  return {{"pairs", pairs}, {"closures", closures}};
}

inline Certificate certificate_from_json(const Json& j) {
  Certificate c;
  if (!j.is_object() || !j.contains("pairs") || !j["pairs"].is_array())
    throw std::invalid_argument("malformed certificate: expected an object with a \"pairs\" array");
  for (const auto& p : j["pairs"]) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
      throw std::invalid_argument("malformed certificate: each pair is a [DIST, DIST] string array");
    c.pairs.emplace_back(parse_distribution(p[0].get<std::string>()),
                         parse_distribution(p[1].get<std::string>()));
  }
  if (j.contains("closures")) {
    for (const auto& f : j["closures"]) {
      std::string name = f.get<std::string>();
      if (name == "symmetric")
        c.symmetric = true;
      else if (name == "diagonal")
        c.diagonal = true;
      else if (name == "convex")
        c.convex = true;
      else
        throw std::invalid_argument("malformed certificate: unknown closure flag " + name);
    }
  }
  return c;
}

inline Json to_json(const Counterexample& c) {
  return {{"pair", c.pair_index},
          {"mirrored", c.mirrored},
          {"clause", c.clause},
          {"detail", c.detail},
          {"discipline_only", c.discipline_only}};
}

inline Json to_json(const StatePartition& p, const std::vector<const Distribution*>& dists = {}) {
  Json blocks = Json::array();
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    Json members = Json::array();
    for (const auto& e : p.blocks[i]) members.push_back(e.str());
    blocks.push_back({{"id", i}, {"members", members}});
  }
  Json out{{"classes", blocks}};
  if (!dists.empty()) {
    Json vectors = Json::array();
    for (const auto* d : dists) {
      Json v = Json::array();
      auto vec = p.vector_of(*d);
      for (const auto& r : vec) v.push_back(rat_str(r));
      vectors.push_back({{"dist", d->str()}, {"vector", v}});
    }
    out["vectors"] = vectors;
  }
  return out;
}

inline Json to_json(const StabilizeResult& r) {
  const char* verdict = r.sigma_stability.verdict == Stability::stable       ? "stable"
                        : r.sigma_stability.verdict == Stability::unstable   ? "unstable"
                                                                             : "inconclusive";
  return {{"input", r.input.str()},
          {"sigma", r.sigma.str()},
          {"wgt_input", rat_str(r.wgt_input)},
          {"wgt_sigma", rat_str(r.wgt_sigma)},
          {"schedule", to_json(r.schedule)},
          {"certificate", to_json(r.cert)},
          {"sigma_stability", verdict},
          {"stability_note", r.sigma_stability.note},
          {"truncated", r.truncated}};
}

inline Json vector_json(const std::vector<Rat>& v) {
  Json out = Json::array();
  for (const auto& r : v) out.push_back(rat_str(r));
  return out;
}

inline Json to_json(const CancelResult& r) {
  Json out{{"verdict", r.verdict == CancelResult::Verdict::accepted ? "accepted" : "inconclusive"},
           {"note", r.note}};
  out["left"] = to_json(r.left);
  out["right"] = to_json(r.right);
  out["partition"] = to_json(r.partition);
  out["class_vectors"] = {{"sigma_left", vector_json(r.sigma_left)},
                          {"sigma_right", vector_json(r.sigma_right)},
                          {"nu_bar_left", vector_json(r.nu_bar_left)},
                          {"nu_bar_right", vector_json(r.nu_bar_right)},
                          {"mu_bar_left", vector_json(r.mu_bar_left)},
                          {"mu_bar_right", vector_json(r.mu_bar_right)}};
  out["split"] = {{"mu_bar", r.mu_bar.str()},
                  {"nu_bar", r.nu_bar.str()},
                  {"mu_bar_prime", r.mu_bar_prime.str()},
                  {"nu_bar_prime", r.nu_bar_prime.str()}};
  if (r.verdict == CancelResult::Verdict::accepted) out["certificate"] = to_json(r.certificate);
  return out;
}

inline Json to_json(const SuiteReport& r) {
  Json out{{"suite", r.suite},   {"seed", r.seed},         {"count", r.count},
           {"passes", r.passes}, {"failures", r.failures}, {"seconds", r.seconds}};
  if (!r.first_failure.empty()) out["first_failure"] = r.first_failure;
  return out;
}

}  // namespace pbb
