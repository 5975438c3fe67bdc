#pragma once

// Parameter sweeps over (d, h, eta) with CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "malalab/config.hpp"
#include "malalab/diagnostics.hpp"
#include "malalab/errors.hpp"
#include "malalab/potential.hpp"
#include "malalab/rng.hpp"

namespace malalab {

inline constexpr const char* kSweepHeader = "experiment,d,h,eta,estimator,value,std_error,n,seed";

struct SweepRow {
  std::string experiment;
  std::int64_t d = 0;
  double h = 0.0;
  std::optional<double> eta;  ///< empty for the Gaussian target
  std::string estimator;
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
  std::uint64_t seed = 0;
};

/// 17 significant digits: round-trips every double and prints identically on every run.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv_line(const SweepRow& r) {
  std::ostringstream out;
  out << r.experiment << ',' << r.d << ',' << format_real(r.h) << ',' << (r.eta ? format_real(*r.eta) : "") << ','
      << r.estimator << ',' << format_real(r.value) << ',' << format_real(r.std_error) << ',' << r.n << ','
      << r.seed;
  return out.str();
}

inline std::string to_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) out += to_csv_line(r) + "\n";
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

enum class HRule { Fixed, Power, Theorem1 };

enum class SweepKind { Accept, Collapse, Gap, Mix };

inline std::string to_string(SweepKind k) {
  switch (k) {
    case SweepKind::Accept: return "accept";
    case SweepKind::Collapse: return "collapse";
    case SweepKind::Gap: return "gap";
    case SweepKind::Mix: return "mix";
  }
  return "unknown";
}

/// Everything a sweep needs, read from a key=value block.
///
/// Keys: kind, eta, delta, d_grid, h_rule (fixed|power|theorem1), h, c, p,
/// M0, eps, h_grid, n_states, n_mc, n_replicas, n, max_steps, check_every, filter,
/// compare_gaussian, seed, output_path, threads.
///
/// theorem1 uses h = c √alpha / (beta^{4/3} √d log(d kappa M0 / eps)).
/// A non-empty h_grid replaces the rule by an explicit list of step sizes.
struct SweepConfig {
  SweepKind experiment = SweepKind::Accept;
  std::string kind = "gaussian";
  double eta = 0.2;
  std::vector<std::int64_t> d_grid;
  HRule h_rule = HRule::Power;
  double h = 0.1;
  double c = 0.5;
  double p = -1.0 / 3.0;
  double m0 = 2.0;
  double eps = 0.1;
  std::vector<double> h_grid;
  std::int64_t n_states = 200;
  std::int64_t n_mc = 200;
  std::int64_t n_replicas = 2000;
  std::int64_t n = 100000;
  std::int64_t max_steps = 2000;
  std::int64_t check_every = 10;
  bool filter = true;
  bool compare_gaussian = false;
  std::uint64_t seed = 1;
  std::string output_path;
  int threads = 1;

  /// Defaults reproducing the reference experiment of each subcommand.
  static SweepConfig defaults(SweepKind k) {
    SweepConfig c;
    c.experiment = k;
    switch (k) {
      case SweepKind::Accept:
        c.d_grid = {64, 128, 256, 512, 1024, 2048, 4096};
        break;
      case SweepKind::Collapse:
        c.kind = "adversarial";
        c.c = 1.0;
        c.p = -0.4;
        c.d_grid = {256, 512, 1024, 2048, 4096, 8192, 16384, 32768, 65536};
        c.n_states = 2000;
        c.n_mc = 4;
        c.compare_gaussian = true;
        break;
      case SweepKind::Gap:
        c.kind = "adversarial";
        c.d_grid = {64};
        c.h_grid = {1e-3, 1e-2, 0.05, 0.1, 0.3, 0.5};
        c.compare_gaussian = true;
        break;
      case SweepKind::Mix:
        c.d_grid = {64};
        c.h_rule = HRule::Theorem1;
        c.c = 0.1;
        c.n_replicas = 2000;
        break;
    }
    return c;
  }

  static SweepConfig from_block(SweepKind k, const KeyValueBlock& b) {
    static const std::set<std::string> known = {
        "kind", "eta", "delta", "d_grid", "h_rule", "h", "c", "p", "M0", "eps", "h_grid", "n_states",
        "n_mc", "n_replicas", "n", "max_steps", "check_every", "filter", "compare_gaussian", "seed", "output_path", "threads"};
    for (const auto& [key, value] : b.entries())
      if (!known.count(key)) throw InputError("sweep config: unknown key '" + key + "'");

    SweepConfig c = defaults(k);
    c.kind = b.get_string("kind", c.kind);
    if (b.has("delta") && !b.has("eta")) c.eta = 0.25 - b.get_double("delta", 0.05);
    c.eta = b.get_double("eta", c.eta);
    c.d_grid = b.get_int_list("d_grid", c.d_grid);
    const auto rule = b.get_string("h_rule", c.h_rule == HRule::Fixed ? "fixed"
                                             : c.h_rule == HRule::Power ? "power"
                                                                        : "theorem1");
    if (rule == "fixed") c.h_rule = HRule::Fixed;
    else if (rule == "power") c.h_rule = HRule::Power;
    else if (rule == "theorem1") c.h_rule = HRule::Theorem1;
    else throw InputError("sweep config: h_rule must be fixed, power or theorem1");
    c.h = b.get_double("h", c.h);
    c.c = b.get_double("c", c.c);
    c.p = b.get_double("p", c.p);
    c.m0 = b.get_double("M0", c.m0);
    c.eps = b.get_double("eps", c.eps);
    c.h_grid = b.get_double_list("h_grid", c.h_grid);
    c.n_states = b.get_int("n_states", c.n_states);
    c.n_mc = b.get_int("n_mc", c.n_mc);
    c.n_replicas = b.get_int("n_replicas", c.n_replicas);
    c.n = b.get_int("n", c.n);
    c.max_steps = b.get_int("max_steps", c.max_steps);
    c.check_every = b.get_int("check_every", c.check_every);
    c.filter = b.get_int("filter", c.filter ? 1 : 0) != 0;
    c.compare_gaussian = b.get_int("compare_gaussian", c.compare_gaussian ? 1 : 0) != 0;
    c.seed = static_cast<std::uint64_t>(b.get_int("seed", static_cast<std::int64_t>(c.seed)));
    c.output_path = b.get_string("output_path", c.output_path);
    c.threads = static_cast<int>(b.get_int("threads", c.threads));
    c.validate();
    return c;
  }

  void validate() const {
    if (d_grid.empty()) throw InputError("sweep config: d_grid is empty");
    for (auto d : d_grid)
      if (d < 1) throw InputError("sweep config: dimensions must be positive");
    if (!(c > 0.0)) throw InputError("sweep config: c must be positive");
    if (kind != "gaussian" && kind != "adversarial") throw InputError("sweep config: kind must be gaussian or adversarial");
    if (h_rule == HRule::Fixed && !(h > 0.0)) throw InputError("sweep config: h must be positive");
    if (h_rule == HRule::Theorem1 && (!(m0 >= 1.0) || !(eps > 0.0 && eps < 1.0)))
      throw InputError("sweep config: theorem1 needs M0 >= 1 and eps in (0, 1)");
    for (double v : h_grid)
      if (!(v > 0.0)) throw InputError("sweep config: h_grid entries must be positive");
    if (n_states < 2 || n_mc < 1 || n_replicas < 1000 || n < 2 || max_steps < 1 || check_every < 1)
      throw InputError("sweep config: sample sizes are too small");
    if (threads < 1) throw InputError("sweep config: threads must be >= 1");
  }

  Potential target(std::size_t d) const {
    return kind == "gaussian" ? Potential::gaussian(d) : Potential::adversarial(d, eta);
  }

  /// Step sizes for dimension d under the configured rule.
  std::vector<double> steps_for(const Potential& pot) const {
    if (!h_grid.empty()) return h_grid;
    const double d = static_cast<double>(pot.dim());
    switch (h_rule) {
      case HRule::Fixed: return {h};
      case HRule::Power: return {c * std::pow(d, p)};
      case HRule::Theorem1: {
        const double lg = std::log(d * pot.kappa() * m0 / eps);
        return {c * std::sqrt(pot.alpha()) / (std::pow(pot.beta(), 4.0 / 3.0) * std::sqrt(d) * lg)};
      }
    }
    return {h};
  }
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace detail {

struct SweepCell {
  bool gaussian = false;
  std::int64_t d = 0;
  double h = 0.0;
};

inline std::vector<SweepRow> run_cell(const SweepConfig& cfg, const SweepCell& cell, std::uint64_t seed) {
  const auto d = static_cast<std::size_t>(cell.d);
  const Potential pot = cell.gaussian ? Potential::gaussian(d) : cfg.target(d);
  SweepRow base;
  base.experiment = to_string(cfg.experiment);
  base.d = cell.d;
  base.h = cell.h;
  if (pot.kind() == PotentialKind::AdversarialCosine) base.eta = pot.eta();
  base.seed = seed;
  std::vector<SweepRow> rows;
  auto emit = [&](const std::string& estimator, double value, double se, std::int64_t n) {
    SweepRow r = base;
    r.estimator = estimator;
    r.value = value;
    r.std_error = se;
    r.n = n;
    rows.push_back(r);
  };

  switch (cfg.experiment) {
    case SweepKind::Accept:
    case SweepKind::Collapse: {
      const auto filter = cfg.filter ? TypicalSetFilter::for_dimension(d) : TypicalSetFilter::disabled();
      const auto m = mean_acceptance(pot, cell.h, static_cast<std::size_t>(cfg.n_states),
                                     static_cast<std::size_t>(cfg.n_mc), filter, seed);
      emit("mean_acceptance", m.estimate.value, m.estimate.std_error, cfg.n_states);
      emit("filtered_fraction", m.filtered_fraction, 0.0, static_cast<std::int64_t>(m.n_drawn));
      break;
    }
    case SweepKind::Gap: {
      const auto g = dirichlet_gap_upper(pot, cell.h, static_cast<std::size_t>(cfg.n), seed);
      emit("dirichlet_gap_upper", g.value, g.std_error, cfg.n);
      break;
    }
    case SweepKind::Mix: {
      MixingOptions opts;
      opts.eps = cfg.eps;
      opts.max_steps = static_cast<std::size_t>(cfg.max_steps);
      opts.n_replicas = static_cast<std::size_t>(cfg.n_replicas);
      opts.check_every = static_cast<std::size_t>(cfg.check_every);
      // Warm start N(0, 0.5 I).
      auto warm = [](Rng& rng, std::span<double> x) {
        for (double& v : x) v = std::sqrt(0.5) * rng.normal();
      };
      const auto res = mixing_time_measure(pot, cell.h, warm, opts, seed);
      emit("mixing_steps_lower_bound", static_cast<double>(res.steps), 0.0, cfg.n_replicas);
      emit("mixed", res.reached ? 1.0 : 0.0, 0.0, cfg.n_replicas);
      emit("final_sliced_tv", res.trace.back(), 0.0, cfg.n_replicas);
      break;
    }
  }
  return rows;
}

}  // namespace detail

/// One row per (target, d, h, estimator). Cells run in parallel; each draws
/// from stream (seed, experiment, cell index), and rows come out in cell order
/// so the CSV does not depend on the thread count.
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<detail::SweepCell> cells;
  auto add_cells = [&](bool gaussian) {
    for (auto d : cfg.d_grid) {
      const auto d_sz = static_cast<std::size_t>(d);
      const Potential pot = gaussian ? Potential::gaussian(d_sz) : cfg.target(d_sz);
      for (double h : cfg.steps_for(pot)) cells.push_back({gaussian, d, h});
    }
  };
  add_cells(cfg.kind == "gaussian");
  if (cfg.compare_gaussian && cfg.kind != "gaussian") add_cells(true);

  std::vector<std::vector<SweepRow>> per_cell(cells.size());
  const auto experiment_id = static_cast<std::uint64_t>(cfg.experiment);
  parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
    per_cell[i] = detail::run_cell(cfg, cells[i], derive_seed(cfg.seed, experiment_id, i));
  });
  std::vector<SweepRow> rows;
  for (auto& block : per_cell) rows.insert(rows.end(), block.begin(), block.end());
  return rows;
}

}  // namespace malalab
