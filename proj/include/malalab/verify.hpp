#pragma once

// Self-verification suite: quadrature oracles, exact finite-chain
// inequalities and acceptance-ratio identities, reported as a CSV table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "malalab/diagnostics.hpp"
#include "malalab/finite_chain.hpp"
#include "malalab/kernels.hpp"
#include "malalab/oracle1d.hpp"
#include "malalab/potential.hpp"
#include "malalab/sweep.hpp"

namespace malalab {

struct VerifyRow {
  std::string check;
  double value = 0.0;
  double bound = 0.0;
  double slack = 0.0;  ///< >= 0 iff the check passes
  bool pass() const { return slack >= 0.0; }
};

struct VerifyOptions {
  /// Test fixture: flips the sign of the proposal-correction term in the
  /// acceptance ratio used by the log_accept_ratio checks.
  bool corrupt_accept = false;
  std::size_t finite_instances = 100;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;

  bool ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass(); });
  }
  std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& r : rows)
      if (!r.pass()) out.push_back(r.check);
    return out;
  }
  std::string to_csv() const {
    std::string out = "check,value,bound,slack,status\n";
    for (const auto& r : rows)
      out += r.check + "," + format_real(r.value) + "," + format_real(r.bound) + "," + format_real(r.slack) + "," +
             (r.pass() ? "pass" : "fail") + "\n";
    return out;
  }
};

namespace detail {

using RatioFn = std::function<double(const Potential&, double, std::span<const double>, std::span<const double>)>;

inline double corrupted_log_accept_ratio(const Potential& p, double h, std::span<const double> x,
                                         std::span<const double> y) {
  Vector gx(p.dim()), gy(p.dim());
  const double vx = p.value_and_gradient(x, gx);
  const double vy = p.value_and_gradient(y, gy);
  double forward = 0.0, backward = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = y[i] - x[i] + h * gx[i];
    const double b = x[i] - y[i] + h * gy[i];
    forward += f * f;
    backward += b * b;
  }
  return (vx - vy) - (forward - backward) / (4.0 * h);
}

class VerifyCollector {
 public:
  /// value <= bound
  void at_most(const std::string& name, double value, double bound) { rows_.push_back({name, value, bound, bound - value}); }
  /// |value - target| <= tol, reported as value = |value - target|
  void close(const std::string& name, double value, double target, double tol) {
    const double gap = std::abs(value - target);
    rows_.push_back({name, gap, tol, std::isfinite(gap) ? tol - gap : -1.0});
  }
  /// lo <= value <= hi
  void within(const std::string& name, double value, double lo, double hi) {
    rows_.push_back({name, value, hi, std::min(value - lo, hi - value)});
  }
  std::vector<VerifyRow> take() { return std::move(rows_); }

 private:
  std::vector<VerifyRow> rows_;
};

inline void verify_oracles(VerifyCollector& out, std::uint64_t seed) {
  out.close("oracle_gaussian_normalizer", normalizing_constant(Profile1D::gaussian()), std::sqrt(2.0 * std::numbers::pi),
            1e-9);

  Rng rng(derive_seed(seed, 10));
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    const int ell = point % 5;
    const double a = 2.0 * std::numbers::pi * rng.uniform();
    const double b = 0.1 + 1.4 * rng.uniform();
    const double gamma = 0.25 * rng.uniform();
    const std::size_t d = std::size_t{1} << (4 + point % 8);
    const double t = b * std::pow(static_cast<double>(d), gamma);
    const double quad = gaussian_expectation([&](double xi) { return std::pow(xi, ell) * std::sin(a + t * xi); }, 1e-12);
    worst = std::max(worst, std::abs(trig_sin_moment(ell, a, b, gamma, d) - quad));
  }
  out.at_most("oracle_trig_closed_form", worst, 1e-8);

  const double eta = 0.2;
  for (int k = 8; k <= 16; ++k) {
    const std::size_t d = std::size_t{1} << k;
    const double dd = static_cast<double>(d);
    const double ratio = normalizing_constant(Profile1D::adversarial(eta, d, 1.0, 1e-13)) / std::sqrt(2.0 * std::numbers::pi);
    out.close("oracle_partition_ratio_d" + std::to_string(d), ratio, 1.0, 2.0 * std::pow(dd, -0.8));
    out.at_most("oracle_kl_d" + std::to_string(d), kl_gaussian_vs_adversarial(eta, d), 2.0 * std::pow(dd, 0.2));
  }
  {
    const std::size_t d = std::size_t{1} << 14;
    const double scale = 0.25 * std::pow(static_cast<double>(d), -2.0 * eta);
    const double ratio = expected_cos(Profile1D::adversarial(eta, d, 1.0, 1e-13), eta, d) / scale;
    out.within("oracle_expected_cos_ratio", ratio, 0.8, 1.2);
  }
  {
    const CDFTable table(Profile1D::adversarial(eta, 4096), 8193);
    double round_trip = 0.0;
    for (int k = 1; k < 200; ++k) {
      const double u = k / 200.0;
      round_trip = std::max(round_trip, std::abs(table.cdf(table.inverse(u)) - u));
    }
    out.at_most("oracle_cdf_round_trip", round_trip, 1e-9);
  }
}

inline void verify_finite(VerifyCollector& out, std::uint64_t seed, std::size_t n_instances) {
  VectorXd pi(2);
  pi << 2.0 / 3.0, 1.0 / 3.0;
  MatrixXd q = MatrixXd::Constant(2, 2, 0.5);
  const auto two = metropolize(q, pi);
  MatrixXd expected(2, 2);
  expected << 0.75, 0.25, 0.5, 0.5;
  out.at_most("finite_two_state_kernel", (two.T - expected).cwiseAbs().maxCoeff(), 1e-12);
  out.close("finite_two_state_offdiag_l1", offdiag_l1(two.T, q, pi), 1.0 / 6.0, 1e-12);
  const auto sq = spectral_quantities(two);
  out.close("finite_two_state_gap", sq.gap, 0.75, 1e-12);
  out.close("finite_two_state_conductance", sq.conductance, 0.5, 1e-12);

  double balance = 0.0, stationarity = 0.0, cheeger_lo = -1.0, cheeger_hi = -1.0;
  std::size_t projection_violations = 0, evolve_violations = 0;
  for (std::size_t k = 0; k < n_instances; ++k) {
    const auto n = static_cast<Index>(2 + k % 9);
    const auto inst = random_instance(n, derive_seed(seed, 20, k));
    const auto c = metropolize(inst.Q, inst.pi);
    balance = std::max(balance, detailed_balance_defect(c.T, c.pi));
    stationarity = std::max(stationarity, stationarity_defect(c.T, c.pi));
    projection_violations += projection_check(inst.Q, inst.Qbar, inst.pi).violations();
    evolve_violations += evolve_and_check(c, inst.mu0, 50).violations.size();
    const auto s = spectral_quantities(c);
    cheeger_lo = std::max(cheeger_lo, s.conductance * s.conductance / 8.0 - s.gap);
    cheeger_hi = std::max(cheeger_hi, s.gap - 2.0 * s.conductance);
  }
  out.at_most("finite_detailed_balance", balance, 1e-12);
  out.at_most("finite_stationarity", stationarity, 1e-12);
  out.at_most("finite_projection_violations", static_cast<double>(projection_violations), 0.0);
  out.at_most("finite_evolve_violations", static_cast<double>(evolve_violations), 0.0);
  out.at_most("finite_cheeger_lower", cheeger_lo, 0.0);
  out.at_most("finite_cheeger_upper", cheeger_hi, 0.0);
}

inline void verify_kernels(VerifyCollector& out, std::uint64_t seed, const RatioFn& ratio) {
  {
    const std::size_t d = 16;
    const double h = 0.3;
    const Potential p = Potential::gaussian(d);
    Rng rng(derive_seed(seed, 30));
    Vector x(d), y(d);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      rng.fill_normal(x);
      rng.fill_normal(y);
      double nx = 0.0, ny = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        y[i] = x[i] + std::sqrt(2.0 * h) * y[i] - h * x[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
      }
      worst = std::max(worst, std::abs(ratio(p, h, x, y) - 0.25 * h * (nx - ny)));
    }
    out.at_most("log_accept_ratio_gaussian_identity", worst, 1e-9);
  }
  {
    const Potential p = Potential::adversarial(64, 0.2);
    Rng rng(derive_seed(seed, 31));
    Vector x(64), y(64);
    double worst = 0.0;
    for (int k = 0; k < 500; ++k) {
      rng.fill_normal(x);
      rng.fill_normal(y);
      worst = std::max(worst, std::abs(ratio(p, 0.1, x, y) + ratio(p, 0.1, y, x)));
    }
    out.at_most("log_accept_ratio_antisymmetry", worst, 1e-9);
  }
  {
    // Rejection probability at x = 1 for the 1-D Gaussian against quadrature.
    const double h = 0.2, x0 = 1.0;
    const double mean = (1.0 - h) * x0, var = 2.0 * h;
    auto integrand = [&](double y) {
      const double dens = std::exp(-0.5 * (y - mean) * (y - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
      return dens * std::min(1.0, std::exp(0.25 * h * (x0 * x0 - y * y)));
    };
    // min(1, ·) has kinks at y = ±x0; integrate piecewise between them.
    const double lo = mean - 12.0 * std::sqrt(var), hi = mean + 12.0 * std::sqrt(var);
    const double exact = 1.0 - integrate(integrand, lo, -x0, 1e-12).value - integrate(integrand, -x0, x0, 1e-12).value -
                         integrate(integrand, x0, hi, 1e-12).value;
    const Potential p = Potential::gaussian(1);
    Rng rng(derive_seed(seed, 32));
    RunningStats rej;
    Vector x{x0}, y(1);
    for (int k = 0; k < 200000; ++k) {
      y[0] = mean + std::sqrt(var) * rng.normal();
      const double lr = ratio(p, h, x, y);
      rej.push(lr >= 0.0 ? 0.0 : -std::expm1(lr));
    }
    out.close("log_accept_ratio_rejection_vs_quadrature", rej.mean(), exact, 3.0 * rej.std_error() + 1e-9);
  }
  {
    // The chain itself: MALA on the 1-D Gaussian keeps unit variance.
    const auto run = run_chain(Potential::gaussian(1), {0.2, KernelVariant::MALA, 1}, {0.0}, 200000,
                               derive_seed(seed, 33));
    out.close("kernel_mala_stationary_variance", run.coord1_second_moment.value, 1.0,
              3.0 * run.coord1_second_moment.std_error);
  }
}

}  // namespace detail

/// Runs every check for one seed. The report passes iff every row does.
inline VerifyReport run_verify(std::uint64_t seed, const VerifyOptions& opts = {}) {
  detail::VerifyCollector out;
  detail::RatioFn ratio = opts.corrupt_accept
                              ? detail::RatioFn(detail::corrupted_log_accept_ratio)
                              : detail::RatioFn([](const Potential& p, double h, std::span<const double> x,
                                                   std::span<const double> y) { return log_accept_ratio(p, h, x, y); });
  detail::verify_oracles(out, seed);
  detail::verify_finite(out, seed, opts.finite_instances);
  detail::verify_kernels(out, seed, ratio);
  return {out.take()};
}

}  // namespace malalab
