#pragma once

// Monte-Carlo and closed-form estimators for MALA observables. Every
// estimate carries a standard error so inequalities can be asserted with a
// fixed statistical margin.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "malalab/errors.hpp"
#include "malalab/finite_chain.hpp"
#include "malalab/kernels.hpp"
#include "malalab/oracle1d.hpp"
#include "malalab/potential.hpp"
#include "malalab/rng.hpp"
#include "malalab/stats.hpp"

namespace malalab {

/// Fills a point of the requested dimension.
using PointSampler = std::function<void(Rng&, std::span<double>)>;
using LogDensity = std::function<double(std::span<const double>)>;

/// The sup-norm event |x|_∞ < 4√ln(8d), which holds under the Gaussian and the
/// adversarial target with probability at least 1 - 1/(4d).
struct TypicalSetFilter {
  double sup_bound = 0.0;
  bool enabled = false;

  static TypicalSetFilter for_dimension(std::size_t d) {
    return {4.0 * std::sqrt(std::log(8.0 * static_cast<double>(d))), true};
  }
  static TypicalSetFilter disabled() { return {std::numeric_limits<double>::infinity(), false}; }

  bool admits(std::span<const double> x) const {
    if (!enabled) return true;
    for (double t : x)
      if (!(std::abs(t) < sup_bound)) return false;
    return true;
  }
};

namespace detail {

/// Exact-draw source for separable targets; holds the CDF table when one is needed.
class TargetSampler {
 public:
  explicit TargetSampler(const Potential& p, std::size_t n_grid = 8193) {
    if (!p.separable()) throw UnsupportedError("exact sampling needs a separable target");
    if (p.kind() != PotentialKind::Gaussian)
      table_ = std::make_unique<CDFTable>(Profile1D::from_potential(p), n_grid);
  }
  void draw(Rng& rng, std::span<double> out) const { sample_separable_row(table_.get(), rng, out); }

 private:
  std::unique_ptr<CDFTable> table_;
};

/// Scratch buffers for repeated acceptance evaluations at one point x.
struct AcceptanceWorkspace {
  Vector gx, y, gy;
  explicit AcceptanceWorkspace(std::size_t d) : gx(d), y(d), gy(d) {}
};

/// Accumulates min(1, a(x, y)) over n_mc proposals y ~ Q_x.
inline RunningStats acceptance_draws(const Potential& p, double h, std::span<const double> x, std::size_t n_mc,
                                     Rng& rng, AcceptanceWorkspace& ws) {
  const double vx = p.value_and_gradient(x, ws.gx);
  RunningStats acc;
  for (std::size_t k = 0; k < n_mc; ++k) {
    propose_from_gradient(h, x, ws.gx, rng, ws.y);
    const double vy = p.value_and_gradient(ws.y, ws.gy);
    const double lr = log_accept_ratio(h, x, vx, ws.gx, ws.y, vy, ws.gy);
    acc.push(lr >= 0.0 ? 1.0 : std::exp(lr));
  }
  return acc;
}

inline double gaussian_log_density(std::span<const double> y, std::span<const double> mean_dir, double mean_scale,
                                   double var) {
  double r2 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - mean_scale * mean_dir[i];
    r2 += r * r;
  }
  return -0.5 * r2 / var - 0.5 * static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi * var);
}

}  // namespace detail

/// Monte-Carlo acceptance A(x) and rejection 1 - A(x) at one point from a
/// single batch of proposals; the two values sum to 1 exactly.
struct AcceptanceAtPoint {
  EstimateWithSE acceptance;
  EstimateWithSE rejection;
};

inline AcceptanceAtPoint acceptance_at_point(const Potential& p, double h, std::span<const double> x,
                                             std::size_t n_mc, std::uint64_t seed) {
  if (!(h > 0.0)) throw InputError("acceptance: h must be positive");
  if (n_mc < 1) throw InputError("acceptance: n_mc must be >= 1");
  if (x.size() != p.dim()) throw InputError("acceptance: dimension mismatch");
  Rng rng(seed);
  detail::AcceptanceWorkspace ws(p.dim());
  const auto acc = detail::acceptance_draws(p, h, x, n_mc, rng, ws).estimate();
  return {acc, {1.0 - acc.value, acc.std_error, acc.n_samples}};
}

/// ‖T_x - Q_x‖_TV = 1 - E_{y~Q_x} min(1, a(x, y)).
inline EstimateWithSE rejection_probability(const Potential& p, double h, std::span<const double> x,
                                            std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 100) throw InputError("rejection_probability: n_mc must be >= 100");
  return acceptance_at_point(p, h, x, n_mc, seed).rejection;
}

struct MeanAcceptance {
  EstimateWithSE estimate;         ///< SE from the spread of per-state averages
  double filtered_fraction = 0.0;  ///< share of exact draws discarded by the filter
  std::size_t n_drawn = 0;
};

/// E_{x~pi} A(x) with x drawn exactly, optionally conditioned on the typical-set event.
///
/// Candidate k is drawn from stream (seed, 0, k); the proposals at accepted
/// state j come from stream (seed, 1, j).
inline MeanAcceptance mean_acceptance(const Potential& p, double h, std::size_t n_states, std::size_t n_mc,
                                      const TypicalSetFilter& filter, std::uint64_t seed) {
  if (!(h > 0.0)) throw InputError("mean_acceptance: h must be positive");
  if (n_states < 2 || n_mc < 1) throw InputError("mean_acceptance: need n_states >= 2 and n_mc >= 1");
  const detail::TargetSampler sampler(p);
  const std::size_t d = p.dim();
  detail::AcceptanceWorkspace ws(d);
  Vector x(d);
  RunningStats per_state;
  std::size_t drawn = 0;
  const std::size_t max_draws = 20 * n_states + 1000;
  while (per_state.count() < n_states) {
    if (drawn >= max_draws) throw NumericError("mean_acceptance: the filter rejects almost every draw");
    Rng state_rng = make_stream(seed, 0, drawn++);
    sampler.draw(state_rng, x);
    if (!filter.admits(x)) continue;
    Rng prop_rng = make_stream(seed, 1, per_state.count());
    per_state.push(detail::acceptance_draws(p, h, x, n_mc, prop_rng, ws).mean());
  }
  MeanAcceptance out;
  out.estimate = per_state.estimate();
  out.n_drawn = drawn;
  out.filtered_fraction = static_cast<double>(drawn - n_states) / static_cast<double>(drawn);
  return out;
}

/// Closed-form bound on ∫Q(x, y) A(x, y) dy for the standard Gaussian target:
/// exp(h²(1 - h/4) / (4(1 + h²/2)) |x|² - (d/2) ln(1 + h²/2)).
inline double gaussian_conductance_bound(double x_norm2, double h, std::size_t d) {
  if (!(h > 0.0)) throw InputError("gaussian_conductance_bound: h must be positive");
  const double h2 = h * h;
  const double expo = h2 * (1.0 - 0.25 * h) / (4.0 * (1.0 + 0.5 * h2)) * x_norm2 -
                      0.5 * static_cast<double>(d) * std::log1p(0.5 * h2);
  return std::exp(expo);
}

namespace detail {

/// Ratio estimator mean(z) / mean((w - w̄)²) with a delta-method SE.
inline EstimateWithSE dirichlet_ratio(std::span<const double> z, std::span<const double> w) {
  const std::size_t n = z.size();
  if (n < 2) throw InputError("dirichlet estimate: need at least two samples");
  RunningStats wm;
  for (double v : w) wm.push(v);
  const double wbar = wm.mean();
  double zsum = 0.0, gsum = 0.0;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = (w[i] - wbar) * (w[i] - wbar);
    zsum += z[i];
    gsum += g[i];
  }
  if (!(gsum > 0.0)) throw NumericError("dirichlet estimate: test function has zero variance");
  const double ratio = zsum / gsum;
  const double gbar = gsum / static_cast<double>(n);
  RunningStats lin;
  for (std::size_t i = 0; i < n; ++i) lin.push((z[i] - ratio * g[i]) / gbar);
  return {ratio, lin.std_error(), n};
}

}  // namespace detail

/// Upper estimate of the MALA spectral gap from the Rayleigh quotient of
/// f(x) = x₁: ½ E[(x₁ - y₁)²] / Var(x₁) with x ~ pi exact and y ~ T(x, ·).
inline EstimateWithSE dirichlet_gap_upper(const Potential& p, double h, std::size_t n, std::uint64_t seed) {
  if (!p.symmetric()) throw UnsupportedError("dirichlet_gap_upper: needs a symmetric separable target");
  if (!(h > 0.0)) throw InputError("dirichlet_gap_upper: h must be positive");
  const detail::TargetSampler sampler(p);
  const std::size_t d = p.dim();
  const KernelParams params{h, KernelVariant::MALA, 1};
  std::vector<double> z(n), w(n);
  Vector x(d);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, 0, i);
    sampler.draw(rng, x);
    w[i] = x[0];
    ChainState s = ChainState::start(p, x, derive_seed(seed, 1, i));
    const auto rec = mala_step(p, params, s);
    z[i] = 0.5 * rec.sq_displacement_coord1;
  }
  return detail::dirichlet_ratio(z, w);
}

/// The same estimator on a finite chain with test function f.
inline EstimateWithSE dirichlet_gap_upper(const FiniteChain& c, const VectorXd& f, std::size_t n,
                                          std::uint64_t seed) {
  if (f.size() != c.size()) throw InputError("dirichlet_gap_upper: f has the wrong length");
  Rng rng(seed);
  std::discrete_distribution<Index> start(c.pi.data(), c.pi.data() + c.size());
  std::vector<std::discrete_distribution<Index>> rows;
  for (Index i = 0; i < c.size(); ++i) {
    const Eigen::RowVectorXd r = c.T.row(i).cwiseMax(0.0);
    rows.emplace_back(r.data(), r.data() + r.size());
  }
  std::vector<double> z(n), w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Index i = start(rng.engine());
    const Index j = rows[static_cast<std::size_t>(i)](rng.engine());
    w[k] = f(i);
    z[k] = 0.5 * (f(i) - f(j)) * (f(i) - f(j));
  }
  return detail::dirichlet_ratio(z, w);
}

/// TV(P, Q) = E_P[(1 - q/p)₊] from n draws of P.
inline EstimateWithSE tv_mc_estimate(const LogDensity& log_p, const LogDensity& log_q, const PointSampler& sampler_p,
                                     std::size_t dim, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InputError("tv_mc_estimate: need n >= 2");
  Rng rng(seed);
  Vector y(dim);
  RunningStats acc;
  for (std::size_t k = 0; k < n; ++k) {
    sampler_p(rng, y);
    const double diff = log_q(y) - log_p(y);
    if (std::isnan(diff) || diff == std::numeric_limits<double>::infinity())
      throw NumericError("tv_mc_estimate: non-finite log density");
    acc.push(diff >= 0.0 ? 0.0 : -std::expm1(diff));
  }
  return acc.estimate();
}

/// TV between the exact OU transition N(e^{-h}x, (1 - e^{-2h})I) and the
/// Langevin proposal N((1 - h)x, 2hI) for the standard Gaussian target.
inline EstimateWithSE ou_proposal_tv(double h, std::span<const double> x, std::size_t n, std::uint64_t seed) {
  if (!(h > 0.0)) throw InputError("ou_proposal_tv: h must be positive");
  const Vector x0(x.begin(), x.end());
  const double decay = std::exp(-h), var_bar = -std::expm1(-2.0 * h);
  const double shrink = 1.0 - h, var = 2.0 * h;
  auto log_bar = [&](std::span<const double> y) { return detail::gaussian_log_density(y, x0, decay, var_bar); };
  auto log_q = [&](std::span<const double> y) { return detail::gaussian_log_density(y, x0, shrink, var); };
  auto draw = [&](Rng& rng, std::span<double> y) {
    const auto step = ou_exact_step(h, x0, rng);
    std::copy(step.begin(), step.end(), y.begin());
  };
  return tv_mc_estimate(log_bar, log_q, draw, x0.size(), n, seed);
}

/// ½ β h √(d + β^{2/3} |x|²), the bound on TV(Q̄_x, Q_x) for h <= 1/(3β^{4/3}).
inline double discretization_tv_bound(double beta, double h, std::size_t d, double x_norm2) {
  return 0.5 * beta * h * std::sqrt(static_cast<double>(d) + std::cbrt(beta * beta) * x_norm2);
}

/// E‖X_t - x‖² along the diffusion reference path started at x.
inline EstimateWithSE mean_squared_displacement(const Potential& p, double t, std::span<const double> x,
                                                int substeps, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InputError("mean_squared_displacement: need n >= 2");
  if (x.size() != p.dim()) throw InputError("mean_squared_displacement: dimension mismatch");
  RunningStats acc;
  for (std::size_t k = 0; k < n; ++k) {
    Rng rng = make_stream(seed, 0, k);
    const auto y = diffusion_reference_step(p, t, x, substeps, rng);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - x[i]) * (y[i] - x[i]);
    acc.push(s);
  }
  return acc.estimate();
}

/// 3t(d + β^{2/3} |x|²), valid for t <= 1/(3β^{4/3}).
inline double displacement_bound(double beta, double t, std::size_t d, double x_norm2) {
  return 3.0 * t * (static_cast<double>(d) + std::cbrt(beta * beta) * x_norm2);
}

struct ProjectionCheckGaussian {
  EstimateWithSE rejection;  ///< E_x ‖T_x - Q_x‖_TV
  EstimateWithSE tv_bar;     ///< E_x ‖Q̄_x - Q_x‖_TV
  double combined_se = 0.0;  ///< √(se_rejection² + 4 se_bar²)
  bool holds = false;        ///< rejection <= 2 tv_bar + 3 combined_se

  double slack() const { return 2.0 * tv_bar.value + 3.0 * combined_se - rejection.value; }
};

/// Averages both sides of the projection inequality over n_states exact
/// Gaussian draws, with Q̄ the exact OU kernel.
inline ProjectionCheckGaussian projection_check_gaussian(double h, std::size_t d, std::size_t n_states,
                                                         std::size_t n_mc, std::uint64_t seed) {
  if (!(h > 0.0) || h > 1.0 / 3.0) throw InputError("projection_check_gaussian: need 0 < h <= 1/3");
  if (n_states < 2 || n_mc < 2) throw InputError("projection_check_gaussian: need n_states, n_mc >= 2");
  const Potential p = Potential::gaussian(d);
  detail::AcceptanceWorkspace ws(d);
  Vector x(d);
  RunningStats rej, bar;
  for (std::size_t k = 0; k < n_states; ++k) {
    Rng state_rng = make_stream(seed, 0, k);
    state_rng.fill_normal(x);
    Rng prop_rng = make_stream(seed, 1, k);
    rej.push(1.0 - detail::acceptance_draws(p, h, x, n_mc, prop_rng, ws).mean());
    bar.push(ou_proposal_tv(h, x, n_mc, derive_seed(seed, 2, k)).value);
  }
  ProjectionCheckGaussian out;
  out.rejection = rej.estimate();
  out.tv_bar = bar.estimate();
  out.combined_se = std::sqrt(out.rejection.std_error * out.rejection.std_error +
                              4.0 * out.tv_bar.std_error * out.tv_bar.std_error);
  out.holds = out.rejection.value <= 2.0 * out.tv_bar.value + 3.0 * out.combined_se;
  return out;
}

/// Kolmogorov distance of one column of samples to a tabulated CDF.
inline double kolmogorov_distance(std::vector<double> column, const std::function<double(double)>& cdf) {
  std::sort(column.begin(), column.end());
  const double n = static_cast<double>(column.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    const double f = cdf(column[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::clamp(worst, 0.0, 1.0);
}

/// Max over coordinates of the Kolmogorov distance between the empirical
/// marginal and the exact one. A lower bound on the full-dimensional TV.
inline double sliced_tv_to_target(const SampleMatrix& samples, const CDFTable& table) {
  if (samples.rows() < 1000) throw InputError("sliced_tv_to_target: need at least 1000 samples");
  auto cdf = [&](double t) { return table.cdf(t); };
  double worst = 0.0;
  std::vector<double> column(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) column[static_cast<std::size_t>(i)] = samples(i, j);
    worst = std::max(worst, kolmogorov_distance(column, cdf));
  }
  return worst;
}

inline double sliced_tv_to_target(const SampleMatrix& samples, const Profile1D& prof) {
  return sliced_tv_to_target(samples, CDFTable(prof, 8193));
}

struct MixingOptions {
  double eps = 0.1;
  std::size_t max_steps = 1000;
  std::size_t n_replicas = 2000;
  std::size_t check_every = 1;  ///< proxy is evaluated after every check_every steps
  KernelVariant variant = KernelVariant::MALA;
};

/// Sliced-TV mixing proxy. Because the proxy lower-bounds full TV, `steps`
/// lower-bounds the true mixing time for the same eps.
struct MixingResult {
  std::size_t steps = 0;  ///< first n with proxy < eps, or max_steps when not reached
  bool reached = false;
  std::vector<double> trace;  ///< proxy after 0, k, 2k, ... steps with k = check_every

  /// Mean proxy over the last quarter of the trace.
  double plateau() const {
    if (trace.empty()) return 0.0;
    const std::size_t from = trace.size() - std::max<std::size_t>(1, trace.size() / 4);
    double s = 0.0;
    for (std::size_t i = from; i < trace.size(); ++i) s += trace[i];
    return s / static_cast<double>(trace.size() - from);
  }
};

/// Runs n_replicas independent chains from x0_sampler and records the sliced
/// TV of the ensemble after every step. With run_to_end the trace continues to
/// max_steps after eps is reached.
inline MixingResult mixing_time_measure(const Potential& p, double h, const PointSampler& x0_sampler,
                                        const MixingOptions& opts, std::uint64_t seed, bool run_to_end = false) {
  if (!(opts.eps > 0.0 && opts.eps < 1.0)) throw InputError("mixing_time_measure: eps must lie in (0, 1)");
  if (opts.check_every < 1) throw InputError("mixing_time_measure: check_every must be >= 1");
  const CDFTable table(Profile1D::from_potential(p), 8193);
  const std::size_t d = p.dim();
  const KernelParams params{h, opts.variant, 1};
  params.validate();
  std::vector<ChainState> chains;
  chains.reserve(opts.n_replicas);
  for (std::size_t r = 0; r < opts.n_replicas; ++r) {
    Rng init = make_stream(seed, 0, r);
    Vector x0(d);
    x0_sampler(init, x0);
    chains.push_back(ChainState::start(p, std::move(x0), derive_seed(seed, 1, r)));
  }
  SampleMatrix ensemble(static_cast<Eigen::Index>(opts.n_replicas), static_cast<Eigen::Index>(d));
  auto snapshot = [&] {
    for (std::size_t r = 0; r < chains.size(); ++r)
      for (std::size_t i = 0; i < d; ++i)
        ensemble(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = chains[r].x[i];
    return sliced_tv_to_target(ensemble, table);
  };

  MixingResult out;
  out.steps = opts.max_steps;
  for (std::size_t n = 0;;) {
    const double proxy = snapshot();
    out.trace.push_back(proxy);
    if (!out.reached && proxy < opts.eps) {
      out.reached = true;
      out.steps = n;
      if (!run_to_end) break;
    }
    if (n >= opts.max_steps) break;
    const std::size_t advance = std::min(opts.check_every, opts.max_steps - n);
    for (auto& c : chains)
      for (std::size_t k = 0; k < advance; ++k) kernel_step(p, params, c);
    n += advance;
  }
  return out;
}

}  // namespace malalab
