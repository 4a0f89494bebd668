#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(ACTMOD_TEST_DATA) / "parser";

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd =
      "ACTMOD_LOG_LEVEL=off '" + std::string(ACTMOD_CLI) + "' " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string drop_lines(std::string s, int n) {
  for (int i = 0; i < n; ++i) s.erase(0, s.find('\n') + 1);
  return s;
}

// Value column of the first "... <metric>\t<value>" line.
double metric(const std::string& tsv, const std::string& name) {
  std::istringstream is(tsv);
  std::string line;
  while (std::getline(is, line)) {
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) continue;
    const auto prev = line.rfind('\t', tab - 1);
    if (line.substr(prev + 1, tab - prev - 1) == name)
      return std::stod(line.substr(tab + 1));
  }
  return -1.0;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("actmod_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("train --no-such-flag").code, 1);
  EXPECT_EQ(run("gradcheck --modifier cubic").code, 1);
  EXPECT_EQ(run("train --config /nonexistent.json").code, 1);
  EXPECT_EQ(run("--version").code, 0);
}

TEST_F(Cli, DataErrorsExitTwo) {
  EXPECT_EQ(run("train --data " + path("missing") + " --out " + path("m.ckpt")).code, 2);
  ASSERT_EQ(run("generate --out " + path("ds") + " --train-videos 20 --test-videos 4").code,
            0);
  ASSERT_EQ(run("train --data " + path("ds") + " --out " + path("m.ckpt") +
                " --epochs 1 --stage1-epochs 1 --batch-size 8")
                .code,
            0);
  const std::string bytes = slurp(path("m.ckpt"));
  std::ofstream(path("cut.ckpt"), std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_EQ(run("eval --ckpt " + path("cut.ckpt") + " --data " + path("ds")).code, 2);
  EXPECT_EQ(run("eval --ckpt " + path("nope") + " --data " + path("ds")).code, 2);
}

TEST_F(Cli, GradcheckAllVariantsPasses) {
  const Result r = run("gradcheck --all-variants");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.find("\tFAIL"), std::string::npos);
  EXPECT_NE(r.out.find("nonlinear\tclass_specific"), std::string::npos);
}

TEST_F(Cli, ParseMatchesGoldenFile) {
  ASSERT_EQ(run("parse --rules " + (kData / "rules.json").string() + " --in " +
                (kData / "corpus.tok").string() + " --out " + path("a.tsv"))
                .code,
            0);
  const std::string got = slurp(path("a.tsv"));
  EXPECT_EQ(got.rfind("# actmod ", 0), 0u);
  EXPECT_EQ(drop_lines(got, 2), slurp(kData / "corpus.golden.tsv"));
  EXPECT_EQ(run("parse --in " + path("none.tok") + " --out " + path("b.tsv")).code, 2);
}

TEST_F(Cli, IdentityModifiersGiveChanceAntonymP1) {
  ASSERT_EQ(run("generate --out " + path("ds") + " --train-videos 100 --test-videos 300")
                .code,
            0);
  ASSERT_EQ(run("train --data " + path("ds") + " --out " + path("m.ckpt") +
                " --epochs 2 --stage1-epochs 2 --batch-size 32")
                .code,
            0);
  const Result r = run("eval --ckpt " + path("m.ckpt") + " --data " + path("ds") +
                       " --setting antonym");
  ASSERT_EQ(r.code, 0);
  EXPECT_NEAR(metric(r.out, "p_at_1"), 0.5, 0.1);
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  ASSERT_EQ(run("generate --out " + path("ds") + " --train-videos 40 --test-videos 8").code,
            0);
  const std::string common = " --data " + path("ds") + " --stage1-epochs 1 --batch-size 16";
  ASSERT_EQ(run("train" + common + " --epochs 4 --out " + path("full.ckpt")).code, 0);
  ASSERT_EQ(run("train" + common + " --epochs 2 --out " + path("half.ckpt")).code, 0);
  ASSERT_EQ(run("train" + common + " --epochs 4 --resume " + path("half.ckpt") +
                " --out " + path("resumed.ckpt"))
                .code,
            0);
  EXPECT_EQ(slurp(path("resumed.ckpt")), slurp(path("full.ckpt")));
  // The config header names the output path; the epoch rows must agree.
  auto rows = [](std::string s) { return s.substr(s.find("epoch\t")); };
  EXPECT_EQ(rows(slurp(path("resumed.ckpt.log.tsv"))), rows(slurp(path("full.ckpt.log.tsv"))));
}

TEST_F(Cli, ReportListsEveryMetric) {
  ASSERT_EQ(run("generate --out " + path("ds") + " --train-videos 20 --test-videos 10").code,
            0);
  ASSERT_EQ(run("train --data " + path("ds") + " --out " + path("m.ckpt") +
                " --epochs 2 --stage1-epochs 1 --batch-size 8")
                .code,
            0);
  const Result r = run("report --ckpt " + path("m.ckpt") + " --data " + path("ds") +
                       " --format tsv --per-adverb --baselines");
  ASSERT_EQ(r.code, 0);
  for (const char* m : {"v2a_antonym_p1", "v2a_all_map", "a2v_antonym_map", "a2v_all_map",
                        "v2act_map", "mean_span_mass"})
    EXPECT_NE(r.out.find(m), std::string::npos) << m;
  const Result again = run("report --ckpt " + path("m.ckpt") + " --data " + path("ds") +
                           " --format tsv --per-adverb --baselines");
  EXPECT_EQ(again.out, r.out);
}
