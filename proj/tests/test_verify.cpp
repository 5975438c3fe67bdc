#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "malalab/verify.hpp"
#include "support/process.hpp"

using namespace malalab;

TEST(Verify, DefaultSeedPasses) {
  const auto report = run_verify(1);
  EXPECT_TRUE(report.ok());
  for (const auto& name : report.failures()) ADD_FAILURE() << name;
  EXPECT_GT(report.rows.size(), 20u);
}

TEST(Verify, PassesAcrossSeeds) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto report = run_verify(seed * 7919);
    EXPECT_TRUE(report.ok()) << seed;
    for (const auto& name : report.failures()) ADD_FAILURE() << seed << " " << name;
  }
}

TEST(Verify, CorruptedRatioIsCaught) {
  VerifyOptions opts;
  opts.corrupt_accept = true;
  const auto report = run_verify(1, opts);
  EXPECT_FALSE(report.ok());
  const auto failed = report.failures();
  ASSERT_FALSE(failed.empty());
  for (const auto& name : failed) EXPECT_EQ(name.rfind("log_accept_ratio", 0), 0u) << name;
}

TEST(Verify, CsvShape) {
  const auto csv = run_verify(2).to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "check,value,bound,slack,status");
  EXPECT_EQ(csv.find(",fail\n"), std::string::npos);
  EXPECT_EQ(csv, run_verify(2).to_csv());
}

TEST(VerifyCli, ExitCodesAndByteIdenticalOutput) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = (dir / "malalab_verify_a.csv").string(), b = (dir / "malalab_verify_b.csv").string();
  EXPECT_EQ(support::run(support::cli() + " verify --seed 4 --out " + a).exit_code, 0);
  EXPECT_EQ(support::run(support::cli() + " verify --seed 4 --out " + b).exit_code, 0);
  EXPECT_EQ(support::read_file(a), support::read_file(b));
  EXPECT_FALSE(support::read_file(a).empty());

  const auto bad = support::run(support::cli() + " verify --corrupt-accept --out " + a);
  EXPECT_NE(bad.exit_code, 0);
  EXPECT_NE(bad.out.find("log_accept_ratio"), std::string::npos);
}
