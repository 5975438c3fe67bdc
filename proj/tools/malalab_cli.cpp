// Command-line driver: verification suite, sweeps and the finite-chain self-test.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "malalab/malalab.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
};

// --seed wins over $SEED, which wins over the config file.
std::optional<std::uint64_t> resolve_seed(const CommonFlags& f) {
  if (f.seed) return f.seed;
  if (const char* env = std::getenv("SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw malalab::InputError(std::string("SEED must be a non-negative integer, got '") + env + "'");
  }
  return std::nullopt;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") std::cout << text;
  else malalab::write_text_file(path, text);
}

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "key=value configuration file")->check(CLI::ExistingFile);
  sub->add_option("--seed", f.seed, "master seed (overrides $SEED and the config)");
  sub->add_option("--out", f.out, "output CSV path; stdout when omitted");
  sub->add_option("--threads", f.threads, "worker threads for sweep cells")->check(CLI::PositiveNumber);
}

int run_verify(const CommonFlags& f, bool corrupt) {
  std::uint64_t seed = 1;
  if (!f.config.empty()) {
    const auto block = malalab::KeyValueBlock::load(f.config);
    seed = static_cast<std::uint64_t>(block.get_int("seed", 1));
  }
  if (auto s = resolve_seed(f)) seed = *s;
  malalab::VerifyOptions opts;
  opts.corrupt_accept = corrupt;
  const auto report = malalab::run_verify(seed, opts);
  emit(f.out, report.to_csv());
  if (report.ok()) return 0;
  for (const auto& r : report.rows)
    if (!r.pass())
      std::cerr << "FAILED " << r.check << " value=" << malalab::format_real(r.value)
                << " bound=" << malalab::format_real(r.bound) << "\n";
  return 1;
}

int run_sweep(malalab::SweepKind kind, const CommonFlags& f, bool threads_given) {
  malalab::KeyValueBlock block;
  if (!f.config.empty()) block = malalab::KeyValueBlock::load(f.config);
  auto cfg = malalab::SweepConfig::from_block(kind, block);
  if (auto s = resolve_seed(f)) cfg.seed = *s;
  if (!f.out.empty()) cfg.output_path = f.out;
  if (threads_given) cfg.threads = f.threads;
  const auto rows = malalab::run_sweep(cfg);
  emit(cfg.output_path, malalab::to_csv(rows));
  if (kind == malalab::SweepKind::Mix)
    std::cerr << "note: mixing steps come from a sliced-TV proxy and are lower bounds on the mixing time\n";
  return 0;
}

int run_finite_selftest(const CommonFlags& f, std::size_t instances) {
  std::uint64_t seed = 1;
  if (!f.config.empty()) seed = static_cast<std::uint64_t>(malalab::KeyValueBlock::load(f.config).get_int("seed", 1));
  if (auto s = resolve_seed(f)) seed = *s;
  const auto rows = malalab::finite_selftest(seed, instances);
  std::string text = "seed,inequality,slack\n";
  int failed = 0;
  for (const auto& r : rows) {
    text += std::to_string(r.seed) + "," + r.inequality + "," + malalab::format_real(r.slack) + "\n";
    if (r.slack < -1e-12) {
      ++failed;
      std::cerr << "FAILED " << r.inequality << " seed=" << r.seed << " slack=" << malalab::format_real(r.slack) << "\n";
    }
  }
  emit(f.out, text);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metropolis-adjusted Langevin diagnostics"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool corrupt = false;
  std::size_t instances = 500;

  auto* verify = app.add_subcommand("verify", "run the oracle, finite-chain and kernel checks");
  add_common(verify, flags);
  verify->add_flag("--corrupt-accept", corrupt, "test fixture: use a broken acceptance ratio")->group("");

  auto* accept = app.add_subcommand("sweep-accept", "mean acceptance over a dimension grid");
  auto* collapse = app.add_subcommand("sweep-collapse", "acceptance decay on the adversarial target");
  auto* gap = app.add_subcommand("sweep-gap", "spectral-gap upper estimates over a step-size grid");
  auto* mix = app.add_subcommand("mix", "sliced-TV mixing proxy from a warm start");
  for (auto* sub : {accept, collapse, gap, mix}) add_common(sub, flags);

  auto* finite = app.add_subcommand("finite-selftest", "exact inequalities on random finite chains");
  add_common(finite, flags);
  finite->add_option("--instances", instances, "number of random chains")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    auto* threads_opt = app.get_subcommands().front()->get_option("--threads");
    const bool threads_given = threads_opt->count() > 0;
    if (verify->parsed()) return run_verify(flags, corrupt);
    if (accept->parsed()) return run_sweep(malalab::SweepKind::Accept, flags, threads_given);
    if (collapse->parsed()) return run_sweep(malalab::SweepKind::Collapse, flags, threads_given);
    if (gap->parsed()) return run_sweep(malalab::SweepKind::Gap, flags, threads_given);
    if (mix->parsed()) return run_sweep(malalab::SweepKind::Mix, flags, threads_given);
    if (finite->parsed()) return run_finite_selftest(flags, instances);
  } catch (const malalab::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
