#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "malalab/config.hpp"
#include "malalab/errors.hpp"
#include "malalab/rng.hpp"

namespace malalab {

enum class PotentialKind { Gaussian, AdversarialCosine, CustomSeparable };

inline std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::Gaussian: return "gaussian";
    case PotentialKind::AdversarialCosine: return "adversarial";
    case PotentialKind::CustomSeparable: return "custom";
  }
  return "unknown";
}

/// One-dimensional profile v for a caller-defined separable potential V(x) = sum_i v(x_i).
///
/// The curvature range is the caller's claim about v''; it is reported by
/// convexity_bounds() and only checked numerically by verify_regularity().
struct SeparableProfile {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double curvature_lo = 1.0;
  double curvature_hi = 1.0;
  bool symmetric = false;
};

struct Evaluation {
  double value = 0.0;
  std::vector<double> gradient;
};

struct ConvexityBounds {
  double alpha = 1.0;
  double beta = 1.0;
  double kappa() const { return beta / alpha; }
};

/// Target density pi ∝ exp(-V) on R^d with certified curvature bounds alpha I ⪯ ∇²V ⪯ beta I.
///
/// Built-in kinds:
///  - Gaussian:          V(x) = |x|²/2, alpha = beta = 1.
///  - AdversarialCosine: V(x) = |x|²/2 - (1/(2 d^{2η})) Σ cos(d^η x_i), alpha = 1/2, beta = 3/2.
///
/// Potentials are not shifted to make min V = 0. The adversarial potential has
/// V(0) = -d^{1-2η}/2. Every consumer works with differences of V, and the
/// Metropolis ratio is invariant to additive constants.
///
/// Immutable after construction; safe to share between threads.
class Potential {
 public:
  static Potential gaussian(std::size_t d) {
    Potential p(PotentialKind::Gaussian, d);
    p.alpha_ = 1.0;
    p.beta_ = 1.0;
    p.symmetric_ = true;
    return p;
  }

  /// Requires eta in the open interval (0, 1/4).
  static Potential adversarial(std::size_t d, double eta) {
    if (!(eta > 0.0 && eta < 0.25))
      throw InputError("adversarial potential: eta must lie in (0, 1/4), got " + std::to_string(eta));
    Potential p(PotentialKind::AdversarialCosine, d);
    p.eta_ = eta;
    p.frequency_ = std::pow(static_cast<double>(d), eta);
    p.ripple_ = 0.5 / (p.frequency_ * p.frequency_);
    p.alpha_ = 0.5;
    p.beta_ = 1.5;
    p.symmetric_ = true;
    return p;
  }

  /// eta = 1/4 - delta, the parametrisation used by the collapse regime.
  static Potential adversarial_from_delta(std::size_t d, double delta) {
    return adversarial(d, 0.25 - delta);
  }

  static constexpr double kPresetDeltas[] = {0.05, 0.055};

  static Potential custom_separable(std::size_t d, SeparableProfile profile) {
    if (!profile.value || !profile.derivative)
      throw InputError("custom potential: value and derivative are required");
    if (!(profile.curvature_lo > 0.0) || profile.curvature_lo > profile.curvature_hi)
      throw InputError("custom potential: need 0 < curvature_lo <= curvature_hi");
    Potential p(PotentialKind::CustomSeparable, d);
    p.alpha_ = profile.curvature_lo;
    p.beta_ = profile.curvature_hi;
    p.symmetric_ = profile.symmetric;
    p.profile_ = std::move(profile);
    return p;
  }

  /// Parses `kind=gaussian|adversarial`, `d=N`, and for the adversarial kind
  /// either `eta=...` or `delta=...`.
  static Potential parse(std::string_view text) { return from_config(KeyValueBlock::parse(text)); }

  static Potential from_config(const KeyValueBlock& cfg) {
    const auto kind = cfg.get_string("kind", "gaussian");
    const auto d = cfg.get_int("d", 1);
    if (d < 1) throw InputError("potential: d must be positive");
    if (kind == "gaussian") return gaussian(static_cast<std::size_t>(d));
    if (kind == "adversarial") {
      if (cfg.has("delta") && !cfg.has("eta"))
        return adversarial_from_delta(static_cast<std::size_t>(d), cfg.get_double("delta", 0.05));
      return adversarial(static_cast<std::size_t>(d), cfg.get_double("eta", 0.2));
    }
    throw InputError("potential: unknown kind '" + kind + "'");
  }

  PotentialKind kind() const { return kind_; }
  std::size_t dim() const { return d_; }
  double eta() const { return eta_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double kappa() const { return beta_ / alpha_; }
  bool separable() const { return true; }
  bool symmetric() const { return symmetric_; }

  /// d^η, the ripple frequency of the adversarial kind (0 otherwise).
  double frequency() const { return frequency_; }
  /// 1/(2 d^{2η}), the ripple amplitude of the adversarial kind (0 otherwise).
  double ripple() const { return ripple_; }

  /// The one-dimensional profile v.
  double coord_value(double t) const {
    switch (kind_) {
      case PotentialKind::Gaussian: return 0.5 * t * t;
      case PotentialKind::AdversarialCosine: return 0.5 * t * t - ripple_ * std::cos(frequency_ * t);
      case PotentialKind::CustomSeparable: return profile_.value(t);
    }
    return 0.0;
  }

  /// v'.
  double coord_derivative(double t) const {
    switch (kind_) {
      case PotentialKind::Gaussian: return t;
      case PotentialKind::AdversarialCosine:
        return t + ripple_ * frequency_ * std::sin(frequency_ * t);
      case PotentialKind::CustomSeparable: return profile_.derivative(t);
    }
    return 0.0;
  }

  double value(std::span<const double> x) const {
    check_point(x);
    double acc = 0.0;
    switch (kind_) {
      case PotentialKind::Gaussian:
        for (double t : x) acc += t * t;
        return 0.5 * acc;
      case PotentialKind::AdversarialCosine: {
        double quad = 0.0, ripple = 0.0;
        for (double t : x) {
          quad += t * t;
          ripple += std::cos(frequency_ * t);
        }
        return 0.5 * quad - ripple_ * ripple;
      }
      case PotentialKind::CustomSeparable:
        for (double t : x) acc += profile_.value(t);
        return acc;
    }
    return acc;
  }

  /// Writes ∇V(x) into `grad` and returns V(x).
  double value_and_gradient(std::span<const double> x, std::span<double> grad) const {
    check_point(x);
    if (grad.size() != d_) throw InputError("potential: gradient buffer has wrong length");
    switch (kind_) {
      case PotentialKind::Gaussian: {
        double quad = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
          quad += x[i] * x[i];
          grad[i] = x[i];
        }
        return 0.5 * quad;
      }
      case PotentialKind::AdversarialCosine: {
        const double slope = ripple_ * frequency_;
        double quad = 0.0, ripple = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
          const double phase = frequency_ * x[i];
          quad += x[i] * x[i];
          ripple += std::cos(phase);
          grad[i] = x[i] + slope * std::sin(phase);
        }
        return 0.5 * quad - ripple_ * ripple;
      }
      case PotentialKind::CustomSeparable: {
        double acc = 0.0;
        for (std::size_t i = 0; i < d_; ++i) {
          acc += profile_.value(x[i]);
          grad[i] = profile_.derivative(x[i]);
        }
        return acc;
      }
    }
    return 0.0;
  }

  Evaluation evaluate(std::span<const double> x) const {
    Evaluation e;
    e.gradient.resize(d_);
    e.value = value_and_gradient(x, e.gradient);
    return e;
  }

 private:
  Potential(PotentialKind kind, std::size_t d) : kind_(kind), d_(d) {
    if (d == 0) throw InputError("potential: dimension must be positive");
  }

  void check_point(std::span<const double> x) const {
    if (x.size() != d_)
      throw InputError("potential: expected a point of dimension " + std::to_string(d_) + ", got " +
                       std::to_string(x.size()));
  }

  PotentialKind kind_;
  std::size_t d_;
  double eta_ = 0.0;
  double frequency_ = 0.0;
  double ripple_ = 0.0;
  double alpha_ = 1.0;
  double beta_ = 1.0;
  bool symmetric_ = false;
  SeparableProfile profile_;
};

inline Evaluation evaluate(const Potential& p, std::span<const double> x) { return p.evaluate(x); }

inline ConvexityBounds convexity_bounds(const Potential& p) { return {p.alpha(), p.beta()}; }

struct CurvatureViolation {
  std::size_t probe = 0;
  double curvature = 0.0;
  bool below = false;  ///< true: under alpha - tol; false: over beta + tol
};

struct RegularityReport {
  std::size_t n_probes = 0;
  double min_curvature = 0.0;
  double max_curvature = 0.0;
  double tolerance = 0.0;
  std::vector<CurvatureViolation> violations;

  bool ok() const { return violations.empty(); }
  bool below_alpha() const {
    for (const auto& v : violations)
      if (v.below) return true;
    return false;
  }
};

/// Numerical check of the claimed curvature bounds.
///
/// Probe 0 sits at the origin; the rest are at x ~ N(0, 4 I) with uniform
/// directions u. The directional second difference
/// (V(x+εu) - 2V(x) + V(x-εu)) / ε² must stay within [alpha - tol, beta + tol].
inline RegularityReport verify_regularity(const Potential& p, std::size_t n_probes, std::uint64_t seed,
                                          double tol = 1e-3, double step = 1e-3) {
  if (n_probes < 1) throw InputError("verify_regularity: n_probes must be >= 1");
  const std::size_t d = p.dim();
  Rng rng(derive_seed(seed, 0x7265677531ULL));
  RegularityReport report;
  report.n_probes = n_probes;
  report.tolerance = tol;
  report.min_curvature = INFINITY;
  report.max_curvature = -INFINITY;

  std::vector<double> x(d), u(d), plus(d), minus(d);
  for (std::size_t probe = 0; probe < n_probes; ++probe) {
    double norm2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] = probe == 0 ? 0.0 : 2.0 * rng.normal();
      u[i] = rng.normal();
      norm2 += u[i] * u[i];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < d; ++i) {
      u[i] *= inv;
      plus[i] = x[i] + step * u[i];
      minus[i] = x[i] - step * u[i];
    }
    const double curvature = (p.value(plus) - 2.0 * p.value(x) + p.value(minus)) / (step * step);
    report.min_curvature = std::min(report.min_curvature, curvature);
    report.max_curvature = std::max(report.max_curvature, curvature);
    if (curvature < p.alpha() - tol) report.violations.push_back({probe, curvature, true});
    if (curvature > p.beta() + tol) report.violations.push_back({probe, curvature, false});
  }
  return report;
}

}  // namespace malalab
