#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include "gsh/dataio.hpp"

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// stderr is folded into the captured text so error messages can be checked.
CliRun gsh(const std::string& args, const std::string& stdin_text = "") {
  std::string cmd = std::string(GSH_CLI_PATH) + " " + args + " 2>&1";
  if (!stdin_text.empty()) cmd = "printf '%s' '" + stdin_text + "' | " + cmd;
  CliRun r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

bool has(const std::string& text, const std::string& needle) { return text.find(needle) != std::string::npos; }

class Scratch {
 public:
  Scratch() : dir_(std::filesystem::temp_directory_path() / ("gsh_cli_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(dir_);
  }
  ~Scratch() { std::filesystem::remove_all(dir_); }
  std::string file(const std::string& name, const std::string& contents = "") const {
    const auto p = (dir_ / name).string();
    if (!contents.empty()) std::ofstream(p) << contents;
    return p;
  }

 private:
  std::filesystem::path dir_;
};

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(gsh("--help").code, 0);
  EXPECT_EQ(gsh("capacity --help").code, 0);
  EXPECT_EQ(gsh("").code, 2);
  EXPECT_EQ(gsh("frobnicate").code, 2);
  EXPECT_EQ(gsh("entmax --alpha").code, 2);
  EXPECT_EQ(gsh("entmax --alpha abc --z 1").code, 2);
}

TEST(Cli, EntmaxPrintsDistribution) {
  const CliRun r = gsh("entmax --z 1,0.5,-1 --alpha 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r.out, "p: 0.75,0.25,0\n")) << r.out;
  EXPECT_TRUE(has(r.out, "tau: 0.25\n"));
  EXPECT_TRUE(has(r.out, "support: 0,1\n"));
  EXPECT_TRUE(has(r.out, "conjugate: 1.0625\n"));
}

TEST(Cli, EntmaxReadsStdin) {
  const CliRun r = gsh("entmax --alpha 1", "0 0");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r.out, "p: 0.5,0.5\n")) << r.out;
}

TEST(Cli, MalformedListNamesPosition) {
  const CliRun r = gsh("entmax --z 1,,2");
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(has(r.out, "position 2")) << r.out;
  const CliRun s = gsh("entmax --z 1,2,x3");
  EXPECT_EQ(s.code, 2);
  EXPECT_TRUE(has(s.out, "position 3")) << s.out;
}

TEST(Cli, DomainErrorsExitThree) {
  EXPECT_EQ(gsh("entmax --z 1,2 --alpha 7").code, 3);
  EXPECT_EQ(gsh("entmax --z 1,2 --beta -1").code, 3);
  EXPECT_EQ(gsh("capacity --synthetic 16,1 --M 3 --trials 0").code, 3);
}

TEST(Cli, CapacityOnSparseSyntheticPatternsIsPerfect) {
  const CliRun r = gsh("capacity --synthetic 256,4 --M 10 --alpha 2 --beta 1 --trials 3 --seed 7");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r.out, "# seed=7\n")) << r.out;
  EXPECT_TRUE(has(r.out, "# synthetic=\"256,4\"\n"));
  const auto set = gsh::parse_csv(r.out, false);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.patterns(0, 0), 10.0);
  EXPECT_EQ(set.patterns(0, 3), 1.0);
}

TEST(Cli, ConfigFileIsOverriddenByFlags) {
  Scratch tmp;
  const auto cfg = tmp.file("run.ini", "[capacity]\ntrials=1\nseed=3\nsynthetic=\"16,1\"\nM=\"4\"\n");
  const CliRun a = gsh("--config " + cfg + " capacity");
  ASSERT_EQ(a.code, 0) << a.out;
  EXPECT_TRUE(has(a.out, "# trials=1\n")) << a.out;
  EXPECT_TRUE(has(a.out, "# seed=3\n"));
  const CliRun b = gsh("--config " + cfg + " capacity --trials 2");
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_TRUE(has(b.out, "# trials=2\n"));
  EXPECT_EQ(gsh("--config " + tmp.file("missing.ini") + " capacity").code, 2);
}

TEST(Cli, DumpDefaultsCoversSubcommands) {
  const CliRun r = gsh("--dump-defaults");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(has(r.out, "capacity.trials=10"));
  EXPECT_TRUE(has(r.out, "bounds.refine=0"));
}

TEST(Cli, RetrieveReportsDescent) {
  Scratch tmp;
  const auto out = tmp.file("trace.csv");
  const auto fin = tmp.file("final.csv");
  const CliRun r = gsh("retrieve --synthetic 32,2 --memory-size 8 --count 4 --beta 2 --out " + out +
                    " --retrieved " + fin);
  ASSERT_EQ(r.code, 0) << r.out;
  std::ifstream in(out);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  EXPECT_TRUE(has(text, "# max_energy_increase: "));
  EXPECT_TRUE(has(text, "# success_rate: 1\n")) << text;
  const auto trace = gsh::parse_csv(text, false);
  EXPECT_EQ(trace.dim(), 3u);
  const auto finals = gsh::load_csv(fin, false);
  EXPECT_EQ(finals.size(), 4u);
  EXPECT_EQ(finals.dim(), 32u);
}

TEST(Cli, RetrieveRejectsMismatchedQueries) {
  Scratch tmp;
  const auto q = tmp.file("q.csv", "1,2,3\n");
  EXPECT_EQ(gsh("retrieve --synthetic 8,1 --queries " + q).code, 2);
  EXPECT_EQ(gsh("retrieve --synthetic 8,1 --corrupt nope:1").code, 2);
}

TEST(Cli, BoundsSuiteIsClean) {
  const CliRun r = gsh("bounds --instances 60 --banks 30 --seed 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r.out, "dense_violations=0 sparse_violations=0"));
  EXPECT_TRUE(has(r.out, "landed_dense=30 landed_sparse=30"));
  EXPECT_TRUE(has(r.out, "sparse_ge_dense_from_beta="));
}

TEST(Cli, PseudoLabelAndConvert) {
  Scratch tmp;
  const auto mem = tmp.file("mem.csv", "4,0,0\n0,4,1\n");
  const auto q = tmp.file("q.csv", "3,0,0\n0,3,1\n");
  const CliRun r = gsh("pseudolabel --memory " + mem + " --csv-labels --queries " + q + " --query-csv-labels --beta 2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(has(r.out, "# agreement: 1\n")) << r.out;
  EXPECT_EQ(gsh("pseudolabel --memory " + q + " --queries " + q).code, 3);

  const auto idx = tmp.file("m.idx");
  const auto lab = tmp.file("l.idx");
  const auto back = tmp.file("back.csv");
  ASSERT_EQ(gsh("convert --in " + mem + " --csv-labels --out " + idx + " --labels-out " + lab).code, 0);
  ASSERT_EQ(gsh("convert --in " + idx + " --labels " + lab + " --out " + back).code, 0);
  const auto set = gsh::load_csv(back, true);
  ASSERT_EQ(set.size(), 2u);
  EXPECT_EQ(set.patterns(0, 0), 4.0);
  EXPECT_EQ((*set.classes)[1], 1);
}

TEST(Cli, PlugMemoryRowsAreNormalised) {
  Scratch tmp;
  const auto mem = tmp.file("y.csv", "1,2,3\n-1,0,4\n");
  const CliRun r = gsh("plugmem --memory " + mem);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto z = gsh::parse_csv(r.out, false);
  ASSERT_EQ(z.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) sum += z.patterns(i, c);
    EXPECT_NEAR(sum, 0.0, 1e-9);
  }
}

}  // namespace
