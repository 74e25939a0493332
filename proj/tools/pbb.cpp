// pbb — probabilistic branching bisimilarity toolkit
//
// Exit codes: 0 accepted/true/success, 1 refuted/false, 2 inconclusive,
// 3 usage or parse error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pbb/json_io.hpp"

using namespace pbb;

namespace {

constexpr int kAccepted = 0;
constexpr int kRefuted = 1;
constexpr int kInconclusive = 2;
constexpr int kUsage = 3;

SearchBudget budget_from_env() {
  SearchBudget b;
  const char* env = std::getenv("PBB_BUDGET");
  if (!env) return b;
  std::stringstream ss(env);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, ',')) parts.push_back(part);
  if (parts.size() != 3) throw std::invalid_argument("PBB_BUDGET must be \"pairs,depth,denominators\"");
  b.max_pairs = std::stoul(parts[0]);
  b.weak_depth = std::stoull(parts[1]);
  b.denominator_bound = std::stoull(parts[2]);
  return b;
}

std::vector<Seed> seeds_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open seeds file: " + path);
  std::vector<Seed> seeds;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t h = line.find('#');
    if (h != std::string::npos) line = line.substr(0, h);
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    Parsed p = parse_any(line);
    std::visit([&](auto&& v) { seeds.emplace_back(std::move(v)); }, std::move(p));
  }
  return seeds;
}

Distribution dist_arg(const std::string& text) {
  Parsed p = parse_any(text);
  if (auto* d = std::get_if<Distribution>(&p)) return *d;
  if (auto* t = std::get_if<PTerm>(&p)) return den(*t);
  return Distribution::dirac(std::get<NTerm>(p));
}

Universe build_universe(const std::vector<std::string>& seed_files, const std::vector<Distribution>& dists) {
  std::vector<Seed> seeds;
  for (const auto& f : seed_files)
    for (auto& s : seeds_from_file(f)) seeds.push_back(std::move(s));
  for (const auto& d : dists) seeds.emplace_back(d);
  return Universe::build(seeds);
}

void maybe_write_dot(const Universe& u, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write dot file: " + path);
  out << u.dot();
}

Certificate certificate_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open certificate file: " + path);
  Json j;
  in >> j;
  return certificate_from_json(j);
}

struct StepOpts {
  std::string state, action, target;
  std::vector<std::string> seeds;
  std::string dot;
  bool json = false;
};

int run_step(const StepOpts& o) {
  Distribution mu = dist_arg(o.state);
  Universe u = build_universe(o.seeds, {mu});
  maybe_write_dot(u, o.dot);
  Action act = o.action == "tau" ? Action::tau() : Action(o.action);
  StepSet s = distribution_step(u, mu, act);

  if (o.target.empty()) {
    auto vs = s.vertices();
    if (o.json) {
      Json out{{"source", mu.str()}, {"action", act.name()}, {"enabled", s.enabled()}};
      Json arr = Json::array();
      for (const auto& v : vs) arr.push_back(v.str());
      out["successors"] = arr;
      std::cout << out.dump(2) << "\n";
    } else {
      if (!s.enabled()) {
        std::cout << "no full " << act.name() << "-transition (a support state lacks the action)\n";
      } else {
        for (const auto& v : vs) std::cout << v.str() << "\n";
      }
    }
    return s.enabled() ? kAccepted : kRefuted;
  }

  Distribution target = dist_arg(o.target);
  auto v = s.decide(target);
  if (auto* w = std::get_if<StepWitness>(&v)) {
    if (o.json) {
      std::cout << Json{{"member", true}, {"witness", to_json(*w)}}.dump(2) << "\n";
    } else {
      std::cout << "member: " << mu.str() << " -" << act.name() << "-> " << target.str() << "\n";
    }
    return kAccepted;
  }
  const Refusal& r = std::get<Refusal>(v);
  if (o.json) {
    std::cout << Json{{"member", false}, {"reason", r.reason}, {"system", r.system}}.dump(2) << "\n";
  } else {
    std::cout << "not a member: " << r.reason << "\n";
  }
  return kRefuted;
}

struct TraceOpts {
  std::string from, to;
  std::optional<std::uint64_t> depth;
  std::vector<std::string> seeds;
  bool json = false;
};

int run_trace(const TraceOpts& o) {
  Distribution from = dist_arg(o.from), to = dist_arg(o.to);
  Universe u = build_universe(o.seeds, {from, to});
  auto v = weak_reach(u, from, to, o.depth);
  if (auto* w = std::get_if<WeakWitness>(&v)) {
    // one JSON-lines record per step
    Distribution cur = from;
    for (std::size_t i = 0; i < w->steps.size(); ++i) {
      Distribution next = apply_step(u, cur, w->steps[i]);
      if (o.json) {
        Json rec = to_json(w->steps[i]);
        rec["step"] = i;
        rec["from"] = cur.str();
        rec["to"] = next.str();
        std::cout << rec.dump() << "\n";
      } else {
        std::cout << "step " << i << ": " << cur.str() << " ->(tau) " << next.str()
                  << "  [fired " << rat_str(w->steps[i].fired_mass()) << "]\n";
      }
      cur = next;
    }
    if (!o.json && w->steps.empty()) std::cout << "empty chain (target equals source)\n";
    return kAccepted;
  }
  const Refusal& r = std::get<Refusal>(v);
  if (o.json) {
    std::cout << Json{{"found", false}, {"reason", r.reason}, {"system", r.system}}.dump() << "\n";
  } else {
    std::cout << "not found within the searched schedule family: " << r.reason << "\n";
  }
  return kInconclusive;
}

struct PairOpts {
  std::string left, right, cert;
  bool search = false;
  bool strict = false;
  std::vector<std::string> seeds;
  bool json = false;
};

int run_check_strong(const PairOpts& o) {
  Distribution l = dist_arg(o.left), r = dist_arg(o.right);
  Universe u = build_universe(o.seeds, {l, r});
  bool eq = strong_equiv(u, l, r);
  if (o.json) {
    std::cout << Json{{"equivalent", eq}}.dump(2) << "\n";
  } else {
    std::cout << (eq ? "strongly equivalent" : "not strongly equivalent") << "\n";
  }
  return eq ? kAccepted : kRefuted;
}

int run_check_branching(const PairOpts& o, const SearchBudget& budget) {
  Distribution l = dist_arg(o.left), r = dist_arg(o.right);

  if (!o.cert.empty()) {
    Certificate cert = certificate_from_file(o.cert);
    std::vector<Distribution> dists{l, r};
    for (const auto& [a, b] : cert.pairs) {
      dists.push_back(a);
      dists.push_back(b);
    }
    Universe u = build_universe(o.seeds, dists);
    CheckResult res = check_certificate(u, cert, budget);
    bool covered = res.accepted && closure_member(cert, l, r);
    if (o.json) {
      Json out{{"accepted", res.accepted}, {"covers_query", covered}};
      if (res.counterexample) out["counterexample"] = to_json(*res.counterexample);
      std::cout << out.dump(2) << "\n";
    } else if (!res.accepted) {
      std::cout << "certificate rejected: pair " << res.counterexample->pair_index
                << (res.counterexample->mirrored ? " (mirrored)" : "") << ", clause "
                << res.counterexample->clause << ": " << res.counterexample->detail << "\n";
    } else if (!covered) {
      std::cout << "certificate accepted but does not cover the queried pair\n";
    } else {
      std::cout << "certificate accepted; queried pair covered\n";
    }
    return covered ? kAccepted : kRefuted;
  }

  Universe u = build_universe(o.seeds, {l, r});
  BranchingQuery q = branching_query(u, l, r, budget);
  switch (q.verdict) {
    case BranchingQuery::Verdict::equivalent: {
      if (o.json) {
        std::cout << Json{{"verdict", "equivalent"}, {"certificate", to_json(*q.certificate)}}.dump(2)
                  << "\n";
      } else {
        std::cout << "branching equivalent; certificate with " << q.certificate->pairs.size()
                  << " generator pair(s)\n";
      }
      return kAccepted;
    }
    case BranchingQuery::Verdict::refuted: {
      if (o.json) {
        Json out{{"verdict", "refuted"}, {"authoritative", q.authoritative}, {"note", q.note}};
        if (q.counterexample) out["counterexample"] = to_json(*q.counterexample);
        std::cout << out.dump(2) << "\n";
      } else {
        std::cout << "refuted (" << q.note << ")";
        if (q.counterexample) std::cout << ": clause " << q.counterexample->clause;
        std::cout << "\n";
      }
      return kRefuted;
    }
    case BranchingQuery::Verdict::inconclusive:
      break;
  }
  if (o.json) {
    std::cout << Json{{"verdict", "inconclusive"}, {"note", q.note}}.dump(2) << "\n";
  } else {
    std::cout << "inconclusive: " << q.note << "\n";
  }
  return kInconclusive;
}

struct ClassesOpts {
  std::vector<std::string> seeds;
  bool all = false;
  std::string dot;
  bool json = false;
};

int run_classes(const ClassesOpts& o, const SearchBudget& budget) {
  if (o.seeds.empty()) throw CLI::ValidationError("classes requires --seeds");
  std::vector<Seed> seeds;
  std::vector<Distribution> dists;  // lines denoting distributions get vectors
  for (const auto& f : o.seeds) {
    for (auto& s : seeds_from_file(f)) {
      if (const auto* p = std::get_if<PTerm>(&s)) dists.push_back(den(*p));
      if (const auto* d = std::get_if<Distribution>(&s)) dists.push_back(*d);
      seeds.push_back(std::move(s));
    }
  }
  Universe u = Universe::build(seeds);
  maybe_write_dot(u, o.dot);
  BranchingEngine engine(u, budget);
  for (const auto& d : dists) engine.add_seed(d);
  StatePartition p = engine.dirac_partition();

  // restrict the report to classes touching the queried supports unless
  // --all is given
  std::set<int> keep;
  if (o.all || dists.empty()) {
    for (std::size_t i = 0; i < p.blocks.size(); ++i) keep.insert(static_cast<int>(i));
  } else {
    for (const auto& d : dists)
      for (const auto& [t, w] : d.entries()) keep.insert(p.block_of(t));
  }

  if (o.json) {
    Json blocks = Json::array();
    for (int b : keep) {
      Json members = Json::array();
      for (const auto& e : p.blocks[static_cast<std::size_t>(b)]) members.push_back(e.str());
      blocks.push_back({{"id", b}, {"members", members}});
    }
    Json vectors = Json::array();
    for (const auto& d : dists) {
      auto v = p.vector_of(d);
      Json entry = Json::array();
      for (int b : keep) entry.push_back(rat_str(v[static_cast<std::size_t>(b)]));
      vectors.push_back({{"dist", d.str()}, {"vector", entry}});
    }
    std::cout << Json{{"classes", blocks}, {"vectors", vectors}}.dump(2) << "\n";
  } else {
    for (int b : keep) {
      std::cout << "class " << b << ":";
      for (const auto& e : p.blocks[static_cast<std::size_t>(b)]) std::cout << " " << e.str();
      std::cout << "\n";
    }
    for (const auto& d : dists) {
      auto v = p.vector_of(d);
      std::cout << d.str() << ": (";
      bool first = true;
      for (int b : keep) {
        if (!first) std::cout << ", ";
        first = false;
        std::cout << rat_str(v[static_cast<std::size_t>(b)]);
      }
      std::cout << ")\n";
    }
  }
  return kAccepted;
}

struct StabilizeOpts {
  std::string dist;
  std::vector<std::string> seeds;
  bool json = false;
};

int run_stabilize(const StabilizeOpts& o, const SearchBudget& budget) {
  Distribution d = dist_arg(o.dist);
  Universe u = build_universe(o.seeds, {d});
  StabilizeResult r = stabilize(u, d, budget);
  if (o.json) {
    std::cout << to_json(r).dump(2) << "\n";
  } else {
    std::cout << "sigma: " << r.sigma.str() << "\n";
    std::cout << "wgt: " << rat_str(r.wgt_input) << " -> " << rat_str(r.wgt_sigma) << "\n";
    std::cout << "schedule length: " << r.schedule.length() << "\n";
    std::cout << "sigma stability: "
              << (r.sigma_stability.verdict == Stability::stable ? "stable" : "inconclusive") << "\n";
  }
  return r.sigma_stability.verdict == Stability::stable ? kAccepted : kInconclusive;
}

struct CancelOpts {
  std::string mu, mu_prime, nu, nu_prime, ratio;
  std::string cert_mix, cert_nu;
  std::vector<std::string> seeds;
  bool json = false;
};

int run_cancel(const CancelOpts& o, const SearchBudget& budget) {
  Distribution mu = dist_arg(o.mu), mu_prime = dist_arg(o.mu_prime);
  Distribution nu = dist_arg(o.nu), nu_prime = dist_arg(o.nu_prime);
  std::stringstream ss(o.ratio);
  std::string num, den;
  std::getline(ss, num, '/');
  Rat r;
  if (std::getline(ss, den)) {
    r = Rat(boost::multiprecision::cpp_int(num), boost::multiprecision::cpp_int(den));
  } else {
    r = Rat(boost::multiprecision::cpp_int(num));
  }
  Universe u = build_universe(o.seeds, {mu, mu_prime, nu, nu_prime});
  std::optional<Certificate> cm, cn;
  if (!o.cert_mix.empty()) cm = certificate_from_file(o.cert_mix);
  if (!o.cert_nu.empty()) cn = certificate_from_file(o.cert_nu);
  CancelResult res = cancel_check(u, mu, mu_prime, nu, nu_prime, r, cm, cn, budget);
  if (o.json) {
    std::cout << to_json(res).dump(2) << "\n";
  } else if (res.verdict == CancelResult::Verdict::accepted) {
    std::cout << "cancellation holds: certificate with " << res.certificate.pairs.size()
              << " generator pair(s)\n";
  } else {
    std::cout << "inconclusive: " << res.note << "\n";
  }
  return res.verdict == CancelResult::Verdict::accepted ? kAccepted : kInconclusive;
}

struct FuzzOpts {
  std::string suite;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  unsigned max_depth = 3;
  bool json = false;
};

int run_fuzz(const FuzzOpts& o) {
  GenConfig cfg;
  cfg.seed = o.seed;
  cfg.max_depth = o.max_depth;
  SuiteReport r = run_suite(o.suite, cfg, o.count);
  if (o.json) {
    std::cout << to_json(r).dump(2) << "\n";
  } else {
    std::printf("%-16s %8s %8s %8s %10s\n", "suite", "count", "pass", "fail", "seconds");
    std::printf("%-16s %8zu %8zu %8zu %10.2f\n", r.suite.c_str(), r.count, r.passes, r.failures, r.seconds);
    if (!r.first_failure.empty()) std::cout << "first failure (minimized):\n" << r.first_failure;
  }
  return r.ok() ? kAccepted : kRefuted;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probabilistic branching bisimilarity toolkit"};
  app.require_subcommand(1);

  // parse
  std::string parse_text, parse_sort = "auto";
  bool parse_json = false;
  auto* cmd_parse = app.add_subcommand("parse", "parse a term or distribution and echo its canonical form");
  cmd_parse->add_option("text", parse_text, "term or distribution text")->required();
  cmd_parse->add_option("--sort", parse_sort, "nondet|prob|distribution|auto");
  cmd_parse->add_flag("--json", parse_json);

  StepOpts step;
  auto* cmd_step = app.add_subcommand("step", "enumerate or test one-action successors of a distribution");
  cmd_step->add_option("--state", step.state, "source distribution")->required();
  cmd_step->add_option("--action", step.action, "action name")->required();
  cmd_step->add_option("--target", step.target, "candidate successor (hull membership test)");
  cmd_step->add_option("--seeds", step.seeds, "extra universe seed files");
  cmd_step->add_option("--dot", step.dot, "write the universe as DOT");
  cmd_step->add_flag("--json", step.json);

  TraceOpts trace;
  std::int64_t trace_depth = -1;
  auto* cmd_trace = app.add_subcommand("trace", "search a weak tau-schedule between distributions");
  cmd_trace->add_option("--from", trace.from)->required();
  cmd_trace->add_option("--to", trace.to)->required();
  cmd_trace->add_option("--depth", trace_depth, "maximum chain length");
  cmd_trace->add_option("--seeds", trace.seeds);
  cmd_trace->add_flag("--json", trace.json);

  PairOpts strong;
  auto* cmd_strong = app.add_subcommand("check-strong", "decide strong probabilistic equivalence");
  cmd_strong->add_option("--left", strong.left)->required();
  cmd_strong->add_option("--right", strong.right)->required();
  cmd_strong->add_option("--seeds", strong.seeds);
  cmd_strong->add_flag("--json", strong.json);

  PairOpts branching;
  auto* cmd_branch = app.add_subcommand("check-branching", "check or search branching equivalence");
  cmd_branch->add_option("--left", branching.left)->required();
  cmd_branch->add_option("--right", branching.right)->required();
  cmd_branch->add_option("--cert", branching.cert, "certificate file to verify");
  cmd_branch->add_flag("--search", branching.search, "search for a certificate");
  cmd_branch->add_flag("--strict", branching.strict,
                       "plain decomposability (no weak unfolding); a strictly finer equivalence");
  cmd_branch->add_option("--seeds", branching.seeds);
  cmd_branch->add_flag("--json", branching.json);

  ClassesOpts classes;
  auto* cmd_classes = app.add_subcommand("classes", "branching classes and class vectors of seed terms");
  cmd_classes->add_option("--seeds", classes.seeds, "seed files (term or distribution per line)")->required();
  cmd_classes->add_flag("--all", classes.all, "report all classes, not only support classes");
  cmd_classes->add_option("--dot", classes.dot, "write the universe as DOT");
  cmd_classes->add_flag("--json", classes.json);

  StabilizeOpts stab;
  auto* cmd_stab = app.add_subcommand("stabilize", "unfold a distribution to a minimal-weight equivalent");
  cmd_stab->add_option("--dist", stab.dist)->required();
  cmd_stab->add_option("--seeds", stab.seeds);
  cmd_stab->add_flag("--json", stab.json);

  CancelOpts cancel;
  auto* cmd_cancel = app.add_subcommand("cancel", "run the cancellation argument on a mixture pair");
  cmd_cancel->add_option("--mu", cancel.mu)->required();
  cmd_cancel->add_option("--mu-prime", cancel.mu_prime)->required();
  cmd_cancel->add_option("--nu", cancel.nu)->required();
  cmd_cancel->add_option("--nu-prime", cancel.nu_prime)->required();
  cmd_cancel->add_option("--r", cancel.ratio, "mixture ratio, 0 < r <= 1")->required();
  cmd_cancel->add_option("--cert-mix", cancel.cert_mix, "certificate file for the mixtures");
  cmd_cancel->add_option("--cert-nu", cancel.cert_nu, "certificate file for the nu pair");
  cmd_cancel->add_option("--seeds", cancel.seeds);
  cmd_cancel->add_flag("--json", cancel.json);

  FuzzOpts fuzz;
  auto* cmd_fuzz = app.add_subcommand("fuzz", "run a property suite");
  cmd_fuzz->add_option("--suite", fuzz.suite, "suite name")->required();
  cmd_fuzz->add_option("--count", fuzz.count)->required();
  cmd_fuzz->add_option("--seed", fuzz.seed);
  cmd_fuzz->add_option("--max-depth", fuzz.max_depth);
  cmd_fuzz->add_flag("--json", fuzz.json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kUsage;
  }

  try {
    SearchBudget budget = budget_from_env();
    if (cmd_parse->parsed()) {
      Parsed p;
      if (parse_sort == "auto") {
        p = parse_any(parse_text);
      } else if (parse_sort == "nondet") {
        p = parse(parse_text, Sort::nondet);
      } else if (parse_sort == "prob") {
        p = parse(parse_text, Sort::prob);
      } else if (parse_sort == "distribution") {
        p = parse(parse_text, Sort::distribution);
      } else {
        throw CLI::ValidationError("--sort must be nondet, prob, distribution or auto");
      }
      std::string canon = std::visit([](const auto& v) { return v.str(); }, p);
      if (parse_json) {
        const char* sort = std::holds_alternative<NTerm>(p)   ? "nondet"
                           : std::holds_alternative<PTerm>(p) ? "prob"
                                                              : "distribution";
        std::cout << Json{{"canonical", canon}, {"sort", sort}}.dump(2) << "\n";
      } else {
        std::cout << canon << "\n";
      }
      return kAccepted;
    }
    if (cmd_step->parsed()) return run_step(step);
    if (cmd_trace->parsed()) {
      if (trace_depth >= 0) trace.depth = static_cast<std::uint64_t>(trace_depth);
      return run_trace(trace);
    }
    if (cmd_strong->parsed()) return run_check_strong(strong);
    if (cmd_branch->parsed()) {
      if (branching.cert.empty() && !branching.search)
        throw CLI::ValidationError("check-branching needs --cert FILE or --search");
      SearchBudget b = budget;
      b.strict_decomposition = branching.strict;
      return run_check_branching(branching, b);
    }
    if (cmd_classes->parsed()) return run_classes(classes, budget);
    if (cmd_stab->parsed()) return run_stabilize(stab, budget);
    if (cmd_cancel->parsed()) return run_cancel(cancel, budget);
    if (cmd_fuzz->parsed()) return run_fuzz(fuzz);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
