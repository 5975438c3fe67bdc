#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "malalab/errors.hpp"
#include "malalab/oracle1d.hpp"
#include "malalab/potential.hpp"
#include "malalab/rng.hpp"
#include "malalab/stats.hpp"

namespace malalab {

using Vector = std::vector<double>;
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class KernelVariant { MALA, ULA, OUExact, DiffusionRef };

inline std::string to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::MALA: return "mala";
    case KernelVariant::ULA: return "ula";
    case KernelVariant::OUExact: return "ou_exact";
    case KernelVariant::DiffusionRef: return "diffusion_ref";
  }
  return "unknown";
}

struct KernelParams {
  double h = 0.1;
  KernelVariant variant = KernelVariant::MALA;
  int substeps = 1;  ///< DiffusionRef only

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw InputError("kernel: step size h must be positive");
    if (substeps < 1) throw InputError("kernel: substeps must be >= 1");
  }
};

/// Current position of one chain. cached_value and cached_grad always hold V(x) and ∇V(x).
struct ChainState {
  Vector x;
  Vector cached_grad;
  double cached_value = 0.0;
  Rng rng;
  std::uint64_t step_index = 0;

  static ChainState start(const Potential& p, Vector x0, std::uint64_t seed) {
    ChainState s;
    s.x = std::move(x0);
    s.cached_grad.resize(p.dim());
    s.cached_value = p.value_and_gradient(s.x, s.cached_grad);
    s.rng = Rng(seed);
    return s;
  }
};

/// One transition. sq_displacement_coord1 is 0 on rejection.
struct StepRecord {
  Vector proposal;
  double log_ratio = 0.0;
  bool accepted = false;
  double sq_displacement_coord1 = 0.0;
};

/// y = x - h ∇V(x) + √(2h) ξ given the gradient at x.
inline void propose_from_gradient(double h, std::span<const double> x, std::span<const double> grad,
                                  Rng& rng, std::span<double> out) {
  const double scale = std::sqrt(2.0 * h);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - h * grad[i] + scale * rng.normal();
}

/// Langevin proposal y ~ N(x - h∇V(x), 2h I).
inline Vector propose_mala(const Potential& p, double h, std::span<const double> x, Rng& rng) {
  if (!(h > 0.0)) throw InputError("propose_mala: h must be positive");
  Vector grad(p.dim()), y(p.dim());
  p.value_and_gradient(x, grad);
  propose_from_gradient(h, x, grad, rng, y);
  return y;
}

/// log a(x, y) from cached values and gradients at both points.
///
/// Written as (V(x) - V(y)) + (n(x→y) - n(y→x)) / (4h) with
/// n(u→v) = |v - u + h∇V(u)|², so swapping x and y negates every term exactly.
inline double log_accept_ratio(double h, std::span<const double> x, double vx, std::span<const double> gx,
                               std::span<const double> y, double vy, std::span<const double> gy) {
  double forward = 0.0, backward = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = y[i] - x[i] + h * gx[i];
    const double b = x[i] - y[i] + h * gy[i];
    forward += f * f;
    backward += b * b;
  }
  const double out = (vx - vy) + (forward - backward) / (4.0 * h);
  if (!std::isfinite(out)) throw NumericError("log_accept_ratio: non-finite value");
  return out;
}

inline double log_accept_ratio(const Potential& p, double h, std::span<const double> x,
                               std::span<const double> y) {
  if (!(h > 0.0)) throw InputError("log_accept_ratio: h must be positive");
  if (x.size() != y.size()) throw InputError("log_accept_ratio: dimension mismatch");
  Vector gx(p.dim()), gy(p.dim());
  const double vx = p.value_and_gradient(x, gx);
  const double vy = p.value_and_gradient(y, gy);
  if (!std::isfinite(vx) || !std::isfinite(vy)) throw NumericError("log_accept_ratio: non-finite potential");
  return log_accept_ratio(h, x, vx, gx, y, vy, gy);
}

/// Metropolis-adjusted Langevin transition. Advances `s` in place.
///
/// The proposal is accepted iff log u <= log a(x, y) with u ~ Uniform(0, 1];
/// on rejection the state is left bitwise unchanged.
inline StepRecord mala_step(const Potential& p, const KernelParams& params, ChainState& s) {
  const std::size_t d = p.dim();
  StepRecord rec;
  rec.proposal.resize(d);
  propose_from_gradient(params.h, s.x, s.cached_grad, s.rng, rec.proposal);
  Vector gy(d);
  const double vy = p.value_and_gradient(rec.proposal, gy);
  rec.log_ratio = log_accept_ratio(params.h, s.x, s.cached_value, s.cached_grad, rec.proposal, vy, gy);
  rec.accepted = std::log(s.rng.uniform_open_closed()) <= rec.log_ratio;
  if (rec.accepted) {
    const double dx = rec.proposal[0] - s.x[0];
    rec.sq_displacement_coord1 = dx * dx;
    s.x = rec.proposal;
    s.cached_grad = std::move(gy);
    s.cached_value = vy;
  }
  ++s.step_index;
  return rec;
}

/// Unadjusted Langevin transition: the MALA proposal, always accepted.
inline StepRecord ula_step(const Potential& p, const KernelParams& params, ChainState& s) {
  const std::size_t d = p.dim();
  StepRecord rec;
  rec.proposal.resize(d);
  propose_from_gradient(params.h, s.x, s.cached_grad, s.rng, rec.proposal);
  Vector gy(d);
  const double vy = p.value_and_gradient(rec.proposal, gy);
  rec.log_ratio = log_accept_ratio(params.h, s.x, s.cached_value, s.cached_grad, rec.proposal, vy, gy);
  rec.accepted = true;
  const double dx = rec.proposal[0] - s.x[0];
  rec.sq_displacement_coord1 = dx * dx;
  s.x = rec.proposal;
  s.cached_grad = std::move(gy);
  s.cached_value = vy;
  ++s.step_index;
  return rec;
}

/// Exact time-h transition of dX = -X dt + √2 dB: y ~ N(e^{-h} x, (1 - e^{-2h}) I).
inline Vector ou_exact_step(double h, std::span<const double> x, Rng& rng) {
  if (!(h > 0.0)) throw InputError("ou_exact_step: h must be positive");
  const double decay = std::exp(-h);
  const double scale = std::sqrt(-std::expm1(-2.0 * h));
  Vector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = decay * x[i] + scale * rng.normal();
  return y;
}

/// Euler-Maruyama path of dX = -∇V(X) dt + √2 dB over time h with `substeps`
/// inner steps; only the endpoint is returned.
inline Vector diffusion_reference_step(const Potential& p, double h, std::span<const double> x,
                                       int substeps, Rng& rng) {
  if (substeps < 1) throw InputError("diffusion_reference_step: substeps must be >= 1");
  if (!(h > 0.0)) throw InputError("diffusion_reference_step: h must be positive");
  const double dt = h / substeps;
  Vector cur(x.begin(), x.end()), grad(p.dim()), next(p.dim());
  for (int k = 0; k < substeps; ++k) {
    p.value_and_gradient(cur, grad);
    propose_from_gradient(dt, cur, grad, rng, next);
    std::swap(cur, next);
  }
  return cur;
}

/// Dispatches one transition of any variant. OUExact ignores the potential's shape.
inline StepRecord kernel_step(const Potential& p, const KernelParams& params, ChainState& s) {
  switch (params.variant) {
    case KernelVariant::MALA: return mala_step(p, params, s);
    case KernelVariant::ULA: return ula_step(p, params, s);
    case KernelVariant::OUExact:
    case KernelVariant::DiffusionRef: {
      StepRecord rec;
      rec.proposal = params.variant == KernelVariant::OUExact
                         ? ou_exact_step(params.h, s.x, s.rng)
                         : diffusion_reference_step(p, params.h, s.x, params.substeps, s.rng);
      rec.accepted = true;
      const double dx = rec.proposal[0] - s.x[0];
      rec.sq_displacement_coord1 = dx * dx;
      s.x = rec.proposal;
      s.cached_value = p.value_and_gradient(s.x, s.cached_grad);
      ++s.step_index;
      return rec;
    }
  }
  throw InputError("kernel_step: unknown variant");
}

struct ChainSummary {
  Vector final_state;
  std::size_t n_steps = 0;
  EstimateWithSE acceptance;          ///< n_samples == 0 when no steps were taken
  EstimateWithSE sq_displacement_coord1;
  EstimateWithSE coord1_second_moment;  ///< batch-means SE over the visited states x_1..x_n
  std::vector<Vector> thinned;          ///< every `thin`-th state when thin > 0
};

/// Runs n_steps transitions from x0 with one RNG stream seeded by `seed`.
inline ChainSummary run_chain(const Potential& p, const KernelParams& params, Vector x0, std::size_t n_steps,
                              std::uint64_t seed, std::size_t thin = 0) {
  params.validate();
  ChainState s = ChainState::start(p, std::move(x0), seed);
  ChainSummary out;
  out.n_steps = n_steps;
  std::vector<double> accepted, disp, moment;
  accepted.reserve(n_steps);
  disp.reserve(n_steps);
  moment.reserve(n_steps);
  for (std::size_t n = 0; n < n_steps; ++n) {
    const auto rec = kernel_step(p, params, s);
    accepted.push_back(rec.accepted ? 1.0 : 0.0);
    disp.push_back(rec.sq_displacement_coord1);
    moment.push_back(s.x[0] * s.x[0]);
    if (thin > 0 && (n + 1) % thin == 0) out.thinned.push_back(s.x);
  }
  if (n_steps > 0) {
    out.acceptance = batch_means(accepted);
    out.sq_displacement_coord1 = batch_means(disp);
    out.coord1_second_moment = batch_means(moment);
  }
  out.final_state = std::move(s.x);
  return out;
}

/// Exact draws x ~ pi for separable targets, one row per draw.
///
/// Gaussian coordinates come from the normal generator; other profiles use
/// the inverse of a tabulated CDF. Row i uses its own stream, so a prefix of
/// rows does not depend on n.
inline SampleMatrix sample_separable_target(const Potential& p, std::size_t n, std::uint64_t seed,
                                            std::size_t n_grid = 8193) {
  if (!p.separable()) throw UnsupportedError("sample_separable_target: target is not separable");
  const std::size_t d = p.dim();
  SampleMatrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  if (p.kind() == PotentialKind::Gaussian) {
    for (std::size_t r = 0; r < n; ++r) {
      Rng rng = make_stream(seed, r);
      for (std::size_t i = 0; i < d; ++i) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = rng.normal();
    }
    return out;
  }
  const CDFTable table(Profile1D::from_potential(p), n_grid);
  for (std::size_t r = 0; r < n; ++r) {
    Rng rng = make_stream(seed, r);
    for (std::size_t i = 0; i < d; ++i)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = table.inverse(rng.uniform());
  }
  return out;
}

/// Single exact draw into `out`, reusing a prepared table (nullptr for Gaussian targets).
inline void sample_separable_row(const CDFTable* table, Rng& rng, std::span<double> out) {
  if (table == nullptr) {
    rng.fill_normal(out);
    return;
  }
  for (double& v : out) v = table->inverse(rng.uniform());
}

inline std::span<const double> row_span(const SampleMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

}  // namespace malalab
