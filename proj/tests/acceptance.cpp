// Acceptance suite: one pass/fail line per criterion; nonzero exit on any
// failure. Uses both the library and the command-line tool.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "pbb/json_io.hpp"

using namespace pbb;

namespace {

int failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(int criterion, const std::string& what, bool ok, double secs, double limit) {
  bool in_time = secs < limit;
  std::printf("%s criterion %d: %s (%.2fs, limit %.0fs)\n", ok && in_time ? "PASS" : "FAIL", criterion,
              what.c_str(), secs, limit);
  std::fflush(stdout);
  if (!ok || !in_time) ++failures;
}

struct CmdResult {
  int status = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& args) {
  CmdResult res;
  std::string cmd = std::string(PBB_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return res;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) res.out.append(buf, n);
  int rc = pclose(p);
  res.status = WEXITSTATUS(rc);
  return res;
}

std::string data_path(const std::string& name) { return std::string(PBB_DATA_DIR) + "/" + name; }

Universe universe_of(const std::vector<std::string>& seeds) {
  std::vector<Seed> s;
  for (const auto& t : seeds) {
    Parsed p = parse_any(t);
    std::visit([&](auto&& v) { s.emplace_back(std::move(v)); }, std::move(p));
  }
  return Universe::build(s);
}

const std::string P = "D(p.D(0))";
const std::string Q = "D(q.D(0))";
const std::string INTRO_TAU = "tau.(D(a.D(0)) +[1/2] D(b.D(0)))";
const std::string INTRO_MU = "{1/2: a.D(0), 1/2: b.D(0)}";
const std::string INTRO_NU = "{1/3: " + INTRO_TAU + ", 1/3: a.D(0), 1/3: b.D(0)}";

// 1. intro example: three classes with the displayed vectors, and an
//    accepted certificate for the pair
void criterion1() {
  Timer t;
  bool ok = true;

  auto cls = run_cmd("classes --seeds " + data_path("intro.terms") + " --json");
  ok = ok && cls.status == 0;
  if (ok) {
    Json j = Json::parse(cls.out);
    ok = ok && j["classes"].size() == 3;
    ok = ok && j["vectors"].size() == 2;
    // locate the three singleton classes by member
    std::map<std::string, std::size_t> pos;  // member -> position in the kept list
    for (std::size_t i = 0; i < j["classes"].size(); ++i) {
      ok = ok && j["classes"][i]["members"].size() == 1;
      if (!j["classes"][i]["members"].empty())
        pos[j["classes"][i]["members"][0].get<std::string>()] = i;
    }
    ok = ok && pos.count(INTRO_TAU) && pos.count("a.D(0)") && pos.count("b.D(0)");
    if (ok) {
      auto vec = [&](std::size_t line, const std::string& member) {
        return j["vectors"][line]["vector"][pos[member]].get<std::string>();
      };
      ok = ok && vec(0, INTRO_TAU) == "0" && vec(0, "a.D(0)") == "1/2" && vec(0, "b.D(0)") == "1/2";
      ok = ok && vec(1, INTRO_TAU) == "1/3" && vec(1, "a.D(0)") == "1/3" && vec(1, "b.D(0)") == "1/3";
    }
  }

  auto chk = run_cmd("check-branching --left '" + INTRO_MU + "' --right '" + INTRO_NU + "' --search --json");
  ok = ok && chk.status == 0;
  if (ok) {
    Json j = Json::parse(chk.out);
    ok = ok && j["verdict"] == "equivalent";
    Universe u = universe_of({INTRO_MU, INTRO_NU});
    Certificate cert = certificate_from_json(j["certificate"]);
    ok = ok && check_certificate(u, cert).accepted;
    ok = ok && closure_member(cert, parse_distribution(INTRO_MU), parse_distribution(INTRO_NU));
  }

  report(1, "intro example classes, vectors and certificate", ok, t.seconds(), 5);
}

// 2. golden transitions: H-pair targets coincide, the 5/12 combined
//    transition is a hull member, and the worked weak/partial chains replay;
//    each worked example must finish within one second
void criterion2() {
  Timer t;
  bool ok = true;
  double slowest = 0;
  auto timed = [&](auto&& body) {
    Timer part;
    body();
    slowest = std::max(slowest, part.seconds());
  };

  timed([&] {
    std::string h1 = "a.(" + P + " +[1/4] (" + P + " +[1/3] " + Q + "))";
    std::string h2 = "a.(" + P + " +[1/2] (" + Q + " +[1/2] " + Q + "))";
    Universe u = universe_of({h1, h2});
    auto v1 = distribution_step(u, Distribution::dirac(parse_nterm(h1)), Action("a")).vertices();
    auto v2 = distribution_step(u, Distribution::dirac(parse_nterm(h2)), Action("a")).vertices();
    Distribution even = parse_distribution("{1/2: p.D(0), 1/2: q.D(0)}");
    ok = ok && v1.size() == 1 && v2.size() == 1 && v1[0] == even && v2[0] == even;
  });
  timed([&] {
    std::string e = "a.(" + P + " +[1/2] " + Q + ") + a.(" + P + " +[1/3] " + Q + ")";
    Universe u = universe_of({e});
    StepSet s = distribution_step(u, Distribution::dirac(parse_nterm(e)), Action("a"));
    ok = ok && s.find(parse_distribution("{5/12: p.D(0), 7/12: q.D(0)}")).has_value();
  });
  timed([&] {
    // example (a): one third of the mass fires
    std::string tst = "tau.(" + P + " +[1/2] " + Q + ")";
    Universe u = universe_of({tst});
    Distribution even = parse_distribution("{1/2: p.D(0), 1/2: q.D(0)}");
    Distribution mu = mix2(Rat(1, 3), Distribution::dirac(parse_nterm(tst)), even);
    auto v = partial_tau_step(u, mu, even);
    ok = ok && std::holds_alternative<StepWitness>(v) &&
         std::get<StepWitness>(v).fired_mass() == Rat(1, 3);
  });
  timed([&] {
    // example (b): the two listed schedules replay and the searcher finds one
    std::string tp = "tau." + P;
    std::string ttp = "tau.D(" + tp + ")";
    Universe u = universe_of({ttp, tp, "p.D(0)"});
    Distribution mu = parse_distribution("{1/2: " + ttp + ", 1/3: " + tp + ", 1/6: p.D(0)}");
    Distribution target = parse_distribution("{1: p.D(0)}");
    ok = ok && std::holds_alternative<WeakWitness>(weak_reach(u, mu, target));

    WeakWitness s1;
    {
      StepWitness a;
      a.act = Action::tau();
      a.partial = true;
      a.moves.push_back({parse_nterm(ttp), Rat(0), {{Rat(1, 2), Distribution::dirac(parse_nterm(tp))}}});
      a.moves.push_back({parse_nterm(tp), Rat(1, 3), {}});
      a.moves.push_back({parse_nterm("p.D(0)"), Rat(1, 6), {}});
      StepWitness b;
      b.act = Action::tau();
      b.partial = true;
      b.moves.push_back({parse_nterm(tp), Rat(0), {{Rat(5, 6), target}}});
      b.moves.push_back({parse_nterm("p.D(0)"), Rat(1, 6), {}});
      s1.steps = {a, b};
    }
    WeakWitness s2;
    {
      StepWitness a;
      a.act = Action::tau();
      a.partial = true;
      a.moves.push_back({parse_nterm(ttp), Rat(1, 2), {}});
      a.moves.push_back({parse_nterm(tp), Rat(0), {{Rat(1, 3), target}}});
      a.moves.push_back({parse_nterm("p.D(0)"), Rat(1, 6), {}});
      StepWitness b;
      b.act = Action::tau();
      b.partial = true;
      b.moves.push_back({parse_nterm(ttp), Rat(0), {{Rat(1, 2), Distribution::dirac(parse_nterm(tp))}}});
      b.moves.push_back({parse_nterm("p.D(0)"), Rat(1, 2), {}});
      StepWitness c;
      c.act = Action::tau();
      c.partial = true;
      c.moves.push_back({parse_nterm(tp), Rat(0), {{Rat(1, 2), target}}});
      c.moves.push_back({parse_nterm("p.D(0)"), Rat(1, 2), {}});
      s2.steps = {a, b, c};
    }
    ok = ok && apply_weak(u, mu, s1) == target && apply_weak(u, mu, s2) == target;
  });
  timed([&] {
    // example (c): tau-unfold then a full a-step
    std::string t1 = "tau.D(a.D(0) + b.D(0))";
    std::string t2 = "a.D(c.D(0))";
    Universe u = universe_of({t1, t2});
    Distribution mu = parse_distribution("{1/2: " + t1 + ", 1/2: " + t2 + "}");
    ok = ok && !distribution_step(u, mu, Action::tau()).enabled();
    ok = ok && !distribution_step(u, mu, Action("a")).enabled();
    Distribution mid = parse_distribution("{1/2: a.D(0) + b.D(0), 1/2: a.D(c.D(0))}");
    ok = ok && std::holds_alternative<WeakWitness>(weak_reach(u, mu, mid));
    ok = ok && distribution_step(u, mid, Action("a"))
                   .find(parse_distribution("{1/2: 0, 1/2: c.D(0)}"))
                   .has_value();
  });

  ok = ok && slowest < 1.0;  // each worked example under one second
  report(2, "golden transitions and worked chains", ok, t.seconds(), 3);
}

// 3. the shipped certificates verify verbatim; the deadlock pair is refuted
//    with a weak-decomposability counterexample
void criterion3() {
  Timer t;
  bool ok = true;

  std::string g1 = "{1: a.(" + P + " +[1/2] " + Q + ")}";
  std::string g2 = "{1: a.(D(tau.(" + P + " +[1/2] " + Q + ")) +[1/3] (" + P + " +[1/2] " + Q + "))}";
  auto g = run_cmd("check-branching --left '" + g1 + "' --right '" + g2 + "' --cert " +
                   data_path("g.cert.json"));
  ok = ok && g.status == 0;

  std::string i1 = "{1: a.D(b." + P + " + tau." + Q + ")}";
  std::string i2 = "{1: a.D(tau.D(b." + P + " + tau." + Q + ") + b." + P + " + tau." + Q + ")}";
  auto i = run_cmd("check-branching --left '" + i1 + "' --right '" + i2 + "' --cert " +
                   data_path("i.cert.json"));
  ok = ok && i.status == 0;

  auto r = run_cmd("check-branching --left '" + INTRO_MU + "' --right '{1: 0}' --search --json");
  ok = ok && r.status == 1;
  if (ok) {
    Json j = Json::parse(r.out);
    ok = ok && j["verdict"] == "refuted" && j["authoritative"] == true;
    ok = ok && j["counterexample"]["clause"] == "weak-decomposability";
  }

  report(3, "worked-example certificates verbatim plus deadlock refutation", ok, t.seconds(), 5);
}

// 4. stabilization of the intro distribution and identity on stable inputs
void criterion4() {
  Timer t;
  bool ok = true;

  Universe u = universe_of({INTRO_NU});
  Distribution nu = parse_distribution(INTRO_NU);
  StabilizeResult r = stabilize(u, nu);
  ok = ok && r.sigma == parse_distribution(INTRO_MU);
  ok = ok && r.wgt_input == Rat(11, 3) && r.wgt_sigma == Rat(2);
  ok = ok && r.schedule.length() == 1;
  ok = ok && apply_weak(u, nu, r.schedule) == r.sigma;  // replayable
  ok = ok && check_certificate(u, r.cert).accepted && closure_member(r.cert, nu, r.sigma);
  ok = ok && r.sigma_stability.verdict == Stability::stable;

  StabilizeResult s = stabilize(u, parse_distribution(INTRO_MU));
  ok = ok && s.sigma == parse_distribution(INTRO_MU) && s.schedule.length() == 0;

  report(4, "intro stabilization with replayable schedule", ok, t.seconds(), 5);
}

// 5. 200 cancellation instances with certified premises, zero failures
void criterion5() {
  Timer t;
  GenConfig cfg;
  cfg.seed = 42;
  SuiteReport r = run_suite("cancellation", cfg, 200);
  bool ok = r.failures == 0 && r.passes == 200;
  report(5, "cancellation on 200 certified-premise instances", ok, t.seconds(), 60);
}

// 6. lemma property suites, 1000 cases each, zero failures
void criterion6() {
  Timer t;
  GenConfig cfg;
  cfg.seed = 20240817;
  bool ok = true;
  for (const char* name :
       {"flexibel_delen", "limit_residual", "composition", "decomposition", "congruence", "wgt_monotone"}) {
    SuiteReport r = run_suite(name, cfg, 1000);
    if (!r.ok()) {
      ok = false;
      std::printf("  suite %s: %zu failures\n", name, r.failures);
    }
  }
  report(6, "lemma property suites at 1000 cases each", ok, t.seconds(), 120);
}

// 7. oracle sweep: refinement matches brute-force enumeration and strong
//    pairs receive branching certificates
void criterion7() {
  Timer t;
  auto family = small_universe_family(4, 200);
  OracleReport r = strong_oracle_sweep(family, /*check_branching=*/true);
  bool ok = r.ok && r.universes >= 50;
  if (!r.ok) std::printf("  oracle mismatch: %s\n", r.detail.c_str());
  report(7, "strong-bisimulation oracle on small universes", ok, t.seconds(), 120);
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  if (failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", failures);
  return 1;
}
