#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "json.hpp"

namespace {

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

}  // namespace

TEST(Cli, ParseEchoesCanonicalForm) {
  auto r = run_cmd("parse '0'");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "0\n");
  auto s = run_cmd("parse 'D(a.D(0))+[2/4]D(b.D(0))'");
  EXPECT_EQ(s.status, 0);
  EXPECT_EQ(s.out, "D(a.D(0)) +[1/2] D(b.D(0))\n");
}

TEST(Cli, ParseErrorsExitThree) {
  EXPECT_EQ(run_cmd("parse 'a.'").status, 3);
  EXPECT_EQ(run_cmd("parse 'D(0) +[3/2] D(0)' --sort prob").status, 3);
}

TEST(Cli, UnknownFlagsExitThree) {
  EXPECT_EQ(run_cmd("parse '0' --no-such-flag").status, 3);
  EXPECT_EQ(run_cmd("no-such-subcommand").status, 3);
}

TEST(Cli, FuzzUnknownSuiteExitsThree) { EXPECT_EQ(run_cmd("fuzz --suite nope --count 1").status, 3); }

TEST(Cli, FuzzJsonReport) {
  auto r = run_cmd("fuzz --suite limit_residual --count 20 --seed 5 --json");
  EXPECT_EQ(r.status, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["count"], 20);
  EXPECT_EQ(j["failures"], 0);
}

TEST(Cli, StepMembershipExitCodes) {
  std::string e = "a.(D(p.D(0)) +[1/2] D(q.D(0))) + a.(D(p.D(0)) +[1/3] D(q.D(0)))";
  EXPECT_EQ(run_cmd("step --state '{1: " + e + "}' --action a --target '{5/12: p.D(0), 7/12: q.D(0)}'").status,
            0);
  EXPECT_EQ(run_cmd("step --state '{1: " + e + "}' --action a --target '{1: p.D(0)}'").status, 1);
  EXPECT_EQ(run_cmd("step --state '{1: 0}' --action a").status, 1);
}

TEST(Cli, TraceEmitsJsonLines) {
  auto r = run_cmd("trace --from '{1/2: tau.D(a.D(0)), 1/2: a.D(0)}' --to '{1: a.D(0)}' --json");
  EXPECT_EQ(r.status, 0);
  std::stringstream ss(r.out);
  std::string line;
  int lines = 0;
  while (std::getline(ss, line)) {
    auto j = nlohmann::json::parse(line);  // each line is one JSON record
    EXPECT_TRUE(j.contains("from") && j.contains("to") && j.contains("moves"));
    ++lines;
  }
  EXPECT_GE(lines, 1);
}

TEST(Cli, TraceRefusalIsInconclusive) {
  EXPECT_EQ(run_cmd("trace --from '{1: a.D(0)}' --to '{1: 0}'").status, 2);
}

TEST(Cli, TraceDepthAboveBoundExitsThree) {
  EXPECT_EQ(run_cmd("trace --from '{1: tau.D(0)}' --to '{1: 0}' --depth 9999").status, 3);
}

TEST(Cli, CertificateJsonRoundTrips) {
  // search output is a certificate in the documented schema; feeding it
  // back through --cert must verify
  std::string mu = "'{1/2: a.D(0), 1/2: b.D(0)}'";
  std::string nu = "'{1/3: tau.(D(a.D(0)) +[1/2] D(b.D(0))), 1/3: a.D(0), 1/3: b.D(0)}'";
  auto r = run_cmd("check-branching --left " + mu + " --right " + nu + " --search --json");
  ASSERT_EQ(r.status, 0);
  auto j = nlohmann::json::parse(r.out);
  std::string tmp = std::string(PBB_DATA_DIR) + "/../build/tmp.cert.json";
  {
    std::ofstream out(tmp);
    out << j["certificate"].dump();
  }
  auto v = run_cmd("check-branching --left " + mu + " --right " + nu + " --cert " + tmp);
  EXPECT_EQ(v.status, 0);
  std::remove(tmp.c_str());
}

TEST(Cli, InconclusiveIsExitTwo) {
  // stabilize of a distribution whose support keeps a non-inert tau: the
  // stability verdict stays inconclusive
  auto r = run_cmd("stabilize --dist '{1: tau.D(0) + a.D(0)}'");
  EXPECT_EQ(r.status, 2);
}

TEST(Cli, BudgetEnvironmentOverride) {
  std::string mu = "'{1/2: a.D(0), 1/2: b.D(0)}'";
  std::string nu = "'{1/3: tau.(D(a.D(0)) +[1/2] D(b.D(0))), 1/3: a.D(0), 1/3: b.D(0)}'";
  CmdResult ok;
  {
    std::string cmd = "PBB_BUDGET=256,12,64 " + std::string(PBB_CLI_PATH) + " check-branching --left " + mu +
                      " --right " + nu + " --search 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    char buf[512];
    while (std::fread(buf, 1, sizeof buf, p)) {
    }
    ok.status = WEXITSTATUS(pclose(p));
  }
  EXPECT_EQ(ok.status, 0);
  {
    std::string cmd = "PBB_BUDGET=bogus " + std::string(PBB_CLI_PATH) + " check-branching --left " + mu +
                      " --right " + nu + " --search 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    char buf[512];
    while (std::fread(buf, 1, sizeof buf, p)) {
    }
    EXPECT_EQ(WEXITSTATUS(pclose(p)), 3);
  }
}

TEST(Cli, DotExport) {
  std::string tmp = std::string(PBB_DATA_DIR) + "/../build/tmp.dot";
  auto r = run_cmd("step --state '{1: a.D(0)}' --action a --dot " + tmp);
  EXPECT_EQ(r.status, 0);
  std::ifstream in(tmp);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_NE(all.find("digraph"), std::string::npos);
  std::remove(tmp.c_str());
}

TEST(Cli, ClassesReportsVectors) {
  auto r = run_cmd("classes --seeds " + data_path("intro.terms"));
  EXPECT_EQ(r.status, 0);
  // classes print in canonical term order: a.D(0), b.D(0), tau.(...)
  EXPECT_NE(r.out.find("(1/2, 1/2, 0)"), std::string::npos);
  EXPECT_NE(r.out.find("(1/3, 1/3, 1/3)"), std::string::npos);
}
