#pragma once

// One-dimensional quadrature oracles for separable targets.
//
// Everything here is deterministic and independent of the Monte-Carlo kernels,
// so statistical tests elsewhere can compare against these values.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "malalab/errors.hpp"
#include "malalab/potential.hpp"
#include "malalab/stats.hpp"

namespace malalab {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod integration of f over [a, b] to an absolute tolerance.
///
/// The interval is cut into panels no wider than `panel`, each panel is refined
/// by recursive bisection, and the summed error estimate must pass `tol_abs`.
/// If it does not, the panels are halved and the integral recomputed; after
/// five failed rounds an AccuracyError is thrown.
template <class F>
QuadResult integrate(F&& f, double a, double b, double tol_abs, double panel = 0.5) {
  using boost::math::quadrature::gauss_kronrod;
  if (!(b > a)) return {};
  for (int round = 0; round < 5; ++round) {
    const auto n_panels = static_cast<std::size_t>(std::ceil((b - a) / panel));
    const double width = (b - a) / static_cast<double>(n_panels);
    QuadResult total;
    for (std::size_t k = 0; k < n_panels; ++k) {
      const double lo = a + width * static_cast<double>(k);
      const double hi = k + 1 == n_panels ? b : lo + width;
      double err = 0.0;
      total.value += gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-13, &err);
      total.error += err;
    }
    if (!std::isfinite(total.value)) throw NumericError("integrate: non-finite integrand");
    if (total.error <= tol_abs) return total;
    panel *= 0.5;
  }
  throw AccuracyError("integrate: could not reach absolute tolerance " + std::to_string(tol_abs));
}

/// A one-dimensional density pi_1 ∝ exp(-v), truncated to [-radius, radius].
///
/// Profiles are assumed convex with their minimum at the origin, so that
/// v(x) >= v(0) + curvature_lo x²/2 bounds the discarded tails.
struct Profile1D {
  std::function<double(double)> v;
  double radius = 10.0;
  double tolerance = 1e-11;
  double curvature_lo = 1.0;

  static double default_radius(double curvature_lo) {
    return std::max(10.0, 10.0 / std::sqrt(curvature_lo));
  }

  static Profile1D gaussian(double tolerance = 1e-11) {
    return {[](double x) { return 0.5 * x * x; }, default_radius(1.0), tolerance, 1.0};
  }

  /// v(x) = x²/2 - (amplitude / (2 d^{2η})) cos(d^η x). amplitude = 0 gives the Gaussian profile.
  static Profile1D adversarial(double eta, std::size_t d, double amplitude = 1.0,
                               double tolerance = 1e-11) {
    const double w = std::pow(static_cast<double>(d), eta);
    const double c = amplitude * 0.5 / (w * w);
    // v'' = 1 + amplitude cos(w x)/2.
    const double lo = std::max(1.0 - 0.5 * std::abs(amplitude), 1e-3);
    return {[w, c](double x) { return 0.5 * x * x - c * std::cos(w * x); }, default_radius(lo),
            tolerance, lo};
  }

  static Profile1D from_potential(const Potential& p, double tolerance = 1e-11) {
    switch (p.kind()) {
      case PotentialKind::Gaussian: return gaussian(tolerance);
      case PotentialKind::AdversarialCosine: return adversarial(p.eta(), p.dim(), 1.0, tolerance);
      case PotentialKind::CustomSeparable: {
        Potential copy = p;
        return {[copy](double x) { return copy.coord_value(x); }, default_radius(p.alpha()),
                tolerance, p.alpha()};
      }
    }
    throw InputError("profile: unknown potential kind");
  }

  double center() const { return v(0.0); }

  /// Upper bound on the probability mass outside [-radius, radius] (relative to the truncated integral).
  double tail_bound(double truncated_integral) const {
    const double a = curvature_lo;
    const double tail = std::sqrt(2.0 * std::numbers::pi / a) * std::erfc(radius * std::sqrt(a / 2.0));
    return tail / truncated_integral;
  }
};

namespace detail {

/// ∫ exp(-(v - v(0))) over the truncated domain, with the tail certified.
inline QuadResult unnormalized_mass(const Profile1D& prof, double tol_abs) {
  const double v0 = prof.center();
  auto density = [&](double x) { return std::exp(v0 - prof.v(x)); };
  auto mass = integrate(density, -prof.radius, prof.radius, tol_abs);
  if (prof.tail_bound(mass.value) > prof.tolerance)
    throw AccuracyError("profile: truncation radius leaves too much tail mass");
  return mass;
}

}  // namespace detail

/// E_{pi_1}[g] to absolute tolerance prof.tolerance.
inline double quad_expectation(const Profile1D& prof, const std::function<double(double)>& g) {
  const double v0 = prof.center();
  const double tol = 0.25 * prof.tolerance;
  const auto den = detail::unnormalized_mass(prof, tol);
  const auto num = integrate([&](double x) { return g(x) * std::exp(v0 - prof.v(x)); }, -prof.radius,
                             prof.radius, tol);
  const double value = num.value / den.value;
  const double err = (num.error + std::abs(value) * den.error) / den.value;
  if (err > prof.tolerance) throw AccuracyError("quad_expectation: tolerance not met");
  return value;
}

/// Z = ∫ exp(-v).
inline double normalizing_constant(const Profile1D& prof) {
  const double v0 = prof.center();
  const auto mass = detail::unnormalized_mass(prof, 0.5 * prof.tolerance);
  return std::exp(-v0) * mass.value;
}

/// E[g(ξ)] for ξ ~ N(0, 1).
inline double gaussian_expectation(const std::function<double(double)>& g, double tolerance = 1e-11) {
  return quad_expectation(Profile1D::gaussian(tolerance), g);
}

/// E_{pi_1}[cos(d^η x)].
inline double expected_cos(const Profile1D& prof, double eta, std::size_t d) {
  const double w = std::pow(static_cast<double>(d), eta);
  return quad_expectation(prof, [w](double x) { return std::cos(w * x); });
}

/// Closed form of E[ξ^ℓ sin(a + t ξ)] for ξ ~ N(0, 1) and t = b d^γ, ℓ <= 4.
///
/// Uses E[ξ^ℓ e^{itξ}] = i^{-ℓ} (d/dt)^ℓ e^{-t²/2} = i^{-ℓ} (-1)^ℓ He_ℓ(t) e^{-t²/2}
/// with He_ℓ the probabilists' Hermite polynomials.
inline double trig_sin_moment(int ell, double a, double b, double gamma, std::size_t d) {
  if (ell < 0 || ell > 4) throw UnsupportedError("trig_sin_moment: only 0 <= ell <= 4 is supported");
  const double t = b * std::pow(static_cast<double>(d), gamma);
  const double he[] = {1.0, t, t * t - 1.0, t * t * t - 3.0 * t, t * t * t * t - 6.0 * t * t + 3.0};
  const std::complex<double> i_pow_minus[] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}, {1, 0}};
  const double sign = (ell % 2 == 0) ? 1.0 : -1.0;
  const std::complex<double> z = std::polar(1.0, a) * i_pow_minus[ell] * (sign * he[ell]);
  return z.imag() * std::exp(-0.5 * t * t);
}

/// KL(N(0, I_d) ‖ pi) for the adversarial product target.
///
/// KL = d ln(Z/√(2π)) - (amplitude d / (2 d^{2η})) E cos(d^η ξ), with
/// ln(Z/√(2π)) = log1p(E[expm1(c cos(d^η ξ))]) by quadrature and
/// E cos(d^η ξ) = exp(-d^{2η}/2) in closed form.
inline double kl_gaussian_vs_adversarial(double eta, std::size_t d, double amplitude = 1.0,
                                         double tolerance = 1e-13) {
  if (!(eta > 0.0 && eta < 0.25)) throw InputError("kl_gaussian_vs_adversarial: eta must lie in (0, 1/4)");
  const double dd = static_cast<double>(d);
  const double w = std::pow(dd, eta);
  const double c = amplitude * 0.5 / (w * w);
  const double excess = gaussian_expectation([&](double x) { return std::expm1(c * std::cos(w * x)); },
                                             tolerance);
  return dd * std::log1p(excess) - c * dd * std::exp(-0.5 * w * w);
}

/// One-coordinate factor of the ripple contribution to the acceptance integral:
///
///   E_{y ~ N(m, s²)} exp[ A cos(w y)/(2w²) + A((1-h)y - x₁) sin(w y)/(4w) - A² h sin²(w y)/(16 w²) ]
///
/// with w = d^η, m = (1-h)x₁/(1+h²), s² = 2h/(1+h²) and ripple amplitude A.
/// Integrated in the standardised variable ξ, y = m + s ξ.
inline double coordinate_factor(double x1, double h, double eta, std::size_t d, double amplitude = 1.0,
                                double tolerance = 1e-12) {
  if (!(h > 0.0 && h < 1.0)) throw InputError("coordinate_factor: h must lie in (0, 1)");
  const double w = std::pow(static_cast<double>(d), eta);
  const double m = (1.0 - h) * x1 / (1.0 + h * h);
  const double s = std::sqrt(2.0 * h / (1.0 + h * h));
  const double a = amplitude;
  auto integrand = [=](double xi) {
    const double y = m + s * xi;
    const double sn = std::sin(w * y);
    const double cs = std::cos(w * y);
    return std::exp(a * cs / (2.0 * w * w) + a * ((1.0 - h) * y - x1) * sn / (4.0 * w) -
                    a * a * h * sn * sn / (16.0 * w * w));
  };
  return gaussian_expectation(integrand, tolerance);
}

/// TV between N(μ₁, σ² I) and N(μ₂, σ² I) with |μ₁ - μ₂| = mean_dist: 2Φ(Δ/(2σ)) - 1.
inline double gaussian_tv_equal_cov(double mean_dist, double sigma2) {
  if (!(sigma2 > 0.0)) throw InputError("gaussian_tv_equal_cov: sigma2 must be positive");
  return std::erf(std::abs(mean_dist) / (2.0 * std::sqrt(2.0 * sigma2)));
}

/// Tabulated CDF of a profile with cubic Hermite interpolation.
///
/// Node derivatives are the exact normalised density, so the interpolant is
/// C¹ and fourth-order accurate. Each cell is checked against the
/// Fritsch-Carlson monotonicity condition at construction.
class CDFTable {
 public:
  CDFTable(const Profile1D& prof, std::size_t n_grid) {
    using boost::math::quadrature::gauss_kronrod;
    if (n_grid < 64) throw InputError("inverse_cdf_table: n_grid must be >= 64");
    const double v0 = prof.center();
    auto density = [&](double x) { return std::exp(v0 - prof.v(x)); };
    lo_ = -prof.radius;
    step_ = 2.0 * prof.radius / static_cast<double>(n_grid - 1);
    grid_.resize(n_grid);
    cdf_.resize(n_grid);
    pdf_.resize(n_grid);
    for (std::size_t k = 0; k < n_grid; ++k) grid_[k] = lo_ + step_ * static_cast<double>(k);
    grid_.back() = prof.radius;

    std::vector<double> cell(n_grid, 0.0);
    cdf_[0] = 0.0;
    for (std::size_t k = 1; k < n_grid; ++k) {
      cell[k] = gauss_kronrod<double, 15>::integrate(density, grid_[k - 1], grid_[k], 0, 0.0);
      cdf_[k] = cdf_[k - 1] + cell[k];
    }
    const double total = cdf_.back();
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("inverse_cdf_table: bad normalisation");
    if (prof.tail_bound(total) > prof.tolerance)
      throw AccuracyError("inverse_cdf_table: truncation radius leaves too much tail mass");
    for (std::size_t k = 0; k < n_grid; ++k) {
      cdf_[k] /= total;
      pdf_[k] = density(grid_[k]) / total;
    }
    cdf_.back() = 1.0;

    // Checked on the cell masses themselves: differences of the cumulative
    // sum lose all relative precision in the upper tail.
    for (std::size_t k = 1; k < n_grid; ++k) {
      if (cell[k] < 0.0) throw NumericError("inverse_cdf_table: CDF is not monotone");
      if (cell[k] == 0.0) continue;
      const double secant = cell[k] / total / step_;
      const double a = pdf_[k - 1] / secant, b = pdf_[k] / secant;
      if (a * a + b * b > 9.0) throw NumericError("inverse_cdf_table: interpolant is not monotone");
    }
  }

  std::span<const double> grid() const { return grid_; }
  std::span<const double> cdf_values() const { return cdf_; }

  double cdf(double x) const {
    if (x <= grid_.front()) return 0.0;
    if (x >= grid_.back()) return 1.0;
    auto k = static_cast<std::size_t>((x - lo_) / step_);
    k = std::min(k, grid_.size() - 2);
    return hermite(k, (x - grid_[k]) / step_);
  }

  double inverse(double u) const {
    if (u <= 0.0) return grid_.front();
    if (u >= 1.0) return grid_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf_.begin());
    k = std::clamp<std::size_t>(k, 1, cdf_.size() - 1) - 1;
    const double f0 = cdf_[k], f1 = cdf_[k + 1];
    if (f1 <= f0) return grid_[k];
    double lo = 0.0, hi = 1.0;
    double t = (u - f0) / (f1 - f0);
    for (int iter = 0; iter < 60; ++iter) {
      const double r = hermite(k, t) - u;
      if (r > 0.0) hi = t; else lo = t;
      if (std::abs(r) < 1e-16 || hi - lo < 1e-15) break;
      const double slope = hermite_slope(k, t);
      double next = slope > 0.0 ? t - r / slope : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      t = next;
    }
    return grid_[k] + t * step_;
  }

 private:
  double hermite(std::size_t k, double t) const {
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * cdf_[k] + h10 * step_ * pdf_[k] + h01 * cdf_[k + 1] + h11 * step_ * pdf_[k + 1];
  }

  double hermite_slope(std::size_t k, double t) const {
    const double t2 = t * t;
    const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
    const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    return d00 * cdf_[k] + d10 * step_ * pdf_[k] + d01 * cdf_[k + 1] + d11 * step_ * pdf_[k + 1];
  }

  double lo_ = 0.0;
  double step_ = 0.0;
  std::vector<double> grid_;
  std::vector<double> cdf_;
  std::vector<double> pdf_;
};

inline CDFTable inverse_cdf_table(const Profile1D& prof, std::size_t n_grid) { return CDFTable(prof, n_grid); }

}  // namespace malalab
