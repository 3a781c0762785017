#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "mtlflow/data.hpp"
#include "mtlflow/network.hpp"

namespace mtlflow {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_lines(const fs::path& p) {
  std::size_t n = 0;
  for (char c : slurp(p)) n += c == '\n';
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mtlflow_cli_test_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    // Five days and a short epoch budget keep every subcommand fast.
    std::ofstream(dir_ / "small.cfg") << "days=5\ntrain_count=384\nmax_epochs=5\n";
    unsetenv(cli::kConfigEnvVar);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string small_data() {
    const std::string data = path("small.csv");
    EXPECT_EQ(run({"gen", "--config", path("small.cfg"), "--out", data, "--quiet"}).code, 0);
    return data;
  }

  fs::path dir_;
};

TEST_F(CliTest, GenDefaultIs2400Rows) {
  const auto r = run({"gen", "--out", path("d.csv")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("link_id=Bb length=2400"), std::string::npos);
  EXPECT_EQ(count_lines(path("d.csv")), 2401u);
  EXPECT_EQ(load_csv(path("d.csv"))[0].size(), 2400u);
}

TEST_F(CliTest, GenIsByteIdentical) {
  ASSERT_EQ(run({"gen", "--config", path("small.cfg"), "--out", path("a.csv")}).code, 0);
  ASSERT_EQ(run({"gen", "--config", path("small.cfg"), "--out", path("b.csv")}).code, 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"gen"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"fly"}).code, 2);
  EXPECT_EQ(run({"train", "--data", "x.csv", "--out", "m.txt", "--mode", "both"}).code, 2);
  std::ofstream(dir_ / "bad.cfg") << "colour=blue\n";
  EXPECT_EQ(run({"gen", "--config", path("bad.cfg"), "--out", path("x.csv")}).code, 2);
  EXPECT_EQ(run({"gen", "--config", path("nope.cfg"), "--out", path("x.csv")}).code, 2);
}

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run({"--help"}).code, 0); }

TEST_F(CliTest, ConfigFromEnvironment) {
  setenv(cli::kConfigEnvVar, path("small.cfg").c_str(), 1);
  const auto r = run({"gen", "--out", path("env.csv")});
  unsetenv(cli::kConfigEnvVar);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(load_csv(path("env.csv"))[0].size(), 480u);
}

TEST_F(CliTest, TrainWritesModelAndHistory) {
  const std::string data = small_data();
  for (const auto& [mode, outputs] : {std::pair{"mtl", 3u}, std::pair{"stl", 1u}}) {
    const std::string model = path(std::string(mode) + ".model");
    const auto r = run({"train", "--config", path("small.cfg"), "--data", data, "--mode", mode,
                        "--out", model});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("stop_reason="), std::string::npos);
    EXPECT_EQ(load_model(model).dims().output, outputs);
    const std::string history = slurp(path(std::string(mode) + ".history.csv"));
    EXPECT_EQ(history.rfind("epoch,mse,mu\n0,", 0), 0u);
  }
  const std::string again = path("mtl2.model");
  ASSERT_EQ(run({"train", "--config", path("small.cfg"), "--data", data, "--mode", "mtl",
                 "--out", again})
                .code,
            0);
  EXPECT_EQ(slurp(path("mtl.model")), slurp(again));
}

TEST_F(CliTest, CompareWritesThreeFiles) {
  const std::string data = small_data();
  const auto r = run({"compare", "--config", path("small.cfg"), "--data", data, "--out",
                      path("cmp")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("STL"), std::string::npos);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(path("cmp"))) ++files;
  EXPECT_EQ(files, 3u);
  EXPECT_EQ(count_lines(dir_ / "cmp" / "trace_mtl.csv"), 96u);  // 95 anchors + header
  EXPECT_NE(slurp(dir_ / "cmp" / "report.txt").find("test_count=95\n"), std::string::npos);
}

TEST_F(CliTest, CompareSeedRange) {
  const std::string data = small_data();
  const auto r = run({"compare", "--config", path("small.cfg"), "--data", data, "--out",
                      path("seeds"), "--seeds", "1..10"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int s = 1; s <= 10; ++s)
    EXPECT_TRUE(fs::exists(dir_ / "seeds" / ("report_seed" + std::to_string(s) + ".txt")));
  EXPECT_NE(r.out.find("median_improvement_pct="), std::string::npos);
  EXPECT_EQ(count_lines(dir_ / "seeds" / "seeds.csv"), 11u);
  EXPECT_EQ(run({"compare", "--data", data, "--out", path("x"), "--seeds", "5..2"}).code, 2);
}

TEST_F(CliTest, MissingDataIsRuntimeError) {
  const auto r = run({"compare", "--data", path("absent.csv"), "--out", path("o")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("absent.csv"), std::string::npos);
}

TEST_F(CliTest, TableAndExport) {
  std::ofstream(dir_ / "two.cfg") << "link_ids=Cf,Db\ndays=5\ntrain_count=384\nmax_epochs=5\n";
  const std::string data = path("two.csv");
  ASSERT_EQ(run({"gen", "--config", path("two.cfg"), "--out", data}).code, 0);
  const auto t = run({"table", "--config", path("two.cfg"), "--data", data, "--out",
                      path("table.csv")});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_EQ(count_lines(path("table.csv")), 3u);
  EXPECT_NE(t.out.find("Db"), std::string::npos);

  ASSERT_EQ(run({"train", "--config", path("two.cfg"), "--data", data, "--link", "Db", "--mode",
                 "stl", "--out", path("db.model"), "--quiet"})
                .code,
            0);
  const auto e = run({"export", "--config", path("two.cfg"), "--data", data, "--link", "Db",
                      "--model", path("db.model"), "--out", path("db_trace.csv")});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(count_lines(path("db_trace.csv")), 96u);
  EXPECT_EQ(run({"export", "--config", path("two.cfg"), "--data", data, "--link", "Zz",
                 "--model", path("db.model"), "--out", path("z.csv")})
                .code,
            2);
}

}  // namespace
}  // namespace mtlflow
