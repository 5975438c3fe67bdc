#include <cmath>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "malalab/sweep.hpp"
#include "support/process.hpp"

using namespace malalab;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("malalab_test_sweep_" + name)).string();
}

SweepConfig small_accept() {
  auto c = SweepConfig::from_block(SweepKind::Accept, KeyValueBlock::parse("d_grid=8,16,32; n_states=20; n_mc=10"));
  c.seed = 5;
  return c;
}

}  // namespace

TEST(SweepConfig, DefaultsPerExperiment) {
  const auto a = SweepConfig::defaults(SweepKind::Accept);
  EXPECT_EQ(a.d_grid.size(), 7u);
  EXPECT_EQ(a.d_grid.front(), 64);
  EXPECT_EQ(a.d_grid.back(), 4096);
  EXPECT_DOUBLE_EQ(a.c, 0.5);
  const auto m = SweepConfig::defaults(SweepKind::Mix);
  EXPECT_DOUBLE_EQ(m.c, 0.1);
  EXPECT_EQ(m.h_rule, HRule::Theorem1);
  const auto g = SweepConfig::defaults(SweepKind::Gap);
  EXPECT_EQ(g.h_grid.size(), 6u);
}

TEST(SweepConfig, ParsesOverrides) {
  const auto c = SweepConfig::from_block(
      SweepKind::Collapse, KeyValueBlock::parse("kind=adversarial\neta=0.15\nd_grid=2^8,2^9\nc=2\np=-0.5\nfilter=0"));
  EXPECT_EQ(c.d_grid, (std::vector<std::int64_t>{256, 512}));
  EXPECT_DOUBLE_EQ(c.eta, 0.15);
  EXPECT_FALSE(c.filter);
  EXPECT_NEAR(c.steps_for(c.target(256)).at(0), 2.0 / 16.0, 1e-15);
}

TEST(SweepConfig, RejectsUnknownAndInvalidKeys) {
  EXPECT_THROW(SweepConfig::from_block(SweepKind::Accept, KeyValueBlock::parse("d_gird=4")), InputError);
  EXPECT_THROW(SweepConfig::from_block(SweepKind::Accept, KeyValueBlock::parse("c=0")), InputError);
  EXPECT_THROW(SweepConfig::from_block(SweepKind::Accept, KeyValueBlock::parse("h_rule=linear")), InputError);
  EXPECT_THROW(SweepConfig::from_block(SweepKind::Accept, KeyValueBlock::parse("d_grid=")), InputError);
  EXPECT_THROW(SweepConfig::from_block(SweepKind::Accept, KeyValueBlock::parse("kind=quartic")), InputError);
}

TEST(SweepConfig, StepRules) {
  auto c = SweepConfig::defaults(SweepKind::Accept);
  EXPECT_NEAR(c.steps_for(Potential::gaussian(512)).at(0), 0.5 / 8.0, 1e-15);
  c.h_rule = HRule::Fixed;
  c.h = 0.07;
  EXPECT_EQ(c.steps_for(Potential::gaussian(512)).at(0), 0.07);
  auto m = SweepConfig::defaults(SweepKind::Mix);
  m.m0 = 1.0;
  const auto adv = Potential::adversarial(64, 0.2);
  const double expected =
      0.1 * std::sqrt(0.5) / (std::pow(1.5, 4.0 / 3.0) * 8.0 * std::log(64.0 * 3.0 * 1.0 / 0.1));
  EXPECT_NEAR(m.steps_for(adv).at(0), expected, 1e-15);
}

TEST(Sweep, OneRowPerCellAndEstimator) {
  const auto rows = run_sweep(small_accept());
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(rows[2 * i].estimator, "mean_acceptance");
    EXPECT_EQ(rows[2 * i + 1].estimator, "filtered_fraction");
    EXPECT_EQ(rows[2 * i].d, (std::int64_t{8} << i));
    EXPECT_EQ(rows[2 * i].experiment, "accept");
    EXPECT_GE(rows[2 * i].value, 0.0);
    EXPECT_LE(rows[2 * i].value, 1.0);
  }
}

TEST(Sweep, DeterministicAndThreadIndependent) {
  auto cfg = small_accept();
  const auto a = to_csv(run_sweep(cfg));
  EXPECT_EQ(a, to_csv(run_sweep(cfg)));
  cfg.threads = 3;
  EXPECT_EQ(a, to_csv(run_sweep(cfg)));
  cfg.seed = 6;
  EXPECT_NE(a, to_csv(run_sweep(cfg)));
}

TEST(Sweep, GapRowsIncludeGaussianComparison) {
  auto cfg = SweepConfig::from_block(SweepKind::Gap, KeyValueBlock::parse("d_grid=8; h_grid=0.01,0.1; n=2000"));
  const auto rows = run_sweep(cfg);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_TRUE(rows[0].eta.has_value());
  EXPECT_FALSE(rows[3].eta.has_value());
  for (const auto& r : rows) EXPECT_LE(r.value, 5 * r.h + 3 * r.std_error);
}

TEST(Csv, HeaderAndFormatting) {
  EXPECT_STREQ(kSweepHeader, "experiment,d,h,eta,estimator,value,std_error,n,seed");
  SweepRow r;
  r.experiment = "gap";
  r.d = 64;
  r.h = 0.1;
  r.estimator = "dirichlet_gap_upper";
  r.value = 0.25;
  r.std_error = 0.0;
  r.n = 10;
  r.seed = 3;
  const auto csv = to_csv({r});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSweepHeader);
  EXPECT_EQ(to_csv_line(r), "gap,64,0.10000000000000001,,dirichlet_gap_upper,0.25,0,10,3");
}

TEST(Cli, SweepWritesIdenticalFilesAndHonoursSeedPrecedence) {
  const auto cfg11 = temp_path("cfg11.txt"), cfg99 = temp_path("cfg99.txt");
  write_text_file(cfg11, "d_grid=8,16\nn_states=10\nn_mc=5\nseed=11\n");
  write_text_file(cfg99, "d_grid=8,16\nn_states=10\nn_mc=5\nseed=99\n");
  const auto out1 = temp_path("a.csv"), out2 = temp_path("b.csv"), out3 = temp_path("c.csv"),
             out4 = temp_path("d.csv"), out5 = temp_path("e.csv");
  const auto sweep = support::cli() + " sweep-accept --config ";
  ASSERT_EQ(support::run(sweep + cfg11 + " --out " + out1).exit_code, 0);
  ASSERT_EQ(support::run(sweep + cfg11 + " --out " + out2).exit_code, 0);
  const auto a = support::read_file(out1);
  EXPECT_EQ(a, support::read_file(out2));
  EXPECT_EQ(a.substr(0, a.find('\n')), kSweepHeader);

  // SEED beats the config; --seed beats SEED.
  ASSERT_EQ(support::run(sweep + cfg99 + " --out " + out3).exit_code, 0);
  EXPECT_NE(a, support::read_file(out3));
  ASSERT_EQ(support::run("SEED=11 " + sweep + cfg99 + " --out " + out4).exit_code, 0);
  EXPECT_EQ(a, support::read_file(out4));
  ASSERT_EQ(support::run("SEED=12 " + sweep + cfg99 + " --seed 11 --out " + out5).exit_code, 0);
  EXPECT_EQ(a, support::read_file(out5));
}

TEST(Cli, BadConfigExitsWithInputCode) {
  const auto cfg_path = temp_path("bad.txt");
  write_text_file(cfg_path, "bogus=1\n");
  const auto r = support::run(support::cli() + " sweep-gap --config " + cfg_path);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("bogus"), std::string::npos);
}

TEST(Cli, FiniteSelftestPasses) {
  const auto out = temp_path("finite.csv");
  const auto r = support::run(support::cli() + " finite-selftest --instances 40 --seed 3 --out " + out);
  EXPECT_EQ(r.exit_code, 0) << r.out;
  const auto text = support::read_file(out);
  EXPECT_EQ(text.substr(0, text.find('\n')), "seed,inequality,slack");
}
