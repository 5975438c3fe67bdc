#pragma once

// Brute-force Markov chain testbed on small finite state spaces.
//
// Everything the continuous setting can only estimate (Metropolis projection,
// spectral gap, conductance, warmness propagation) is computed exactly here.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "malalab/errors.hpp"
#include "malalab/rng.hpp"

namespace malalab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Stationary vector, proposal Q and Metropolised kernel T.
struct FiniteChain {
  VectorXd pi;
  MatrixXd Q;
  MatrixXd T;

  Index size() const { return pi.size(); }
};

inline double row_sum_defect(const MatrixXd& m) {
  return (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

/// max_ij |pi_i K_ij - pi_j K_ji|
inline double detailed_balance_defect(const MatrixXd& k, const VectorXd& pi) {
  const MatrixXd flow = pi.asDiagonal() * k;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

inline double stationarity_defect(const MatrixXd& k, const VectorXd& pi) {
  return (pi.transpose() * k - pi.transpose()).cwiseAbs().maxCoeff();
}

namespace detail {

inline void check_distribution(const VectorXd& pi) {
  if (pi.size() < 1) throw InputError("finite chain: empty state space");
  if ((pi.array() <= 0.0).any()) throw InputError("finite chain: pi must be strictly positive");
  if (std::abs(pi.sum() - 1.0) > 1e-10) throw InputError("finite chain: pi must sum to 1");
}

inline void check_kernel(const MatrixXd& k, Index n, const char* name) {
  if (k.rows() != n || k.cols() != n) throw InputError(std::string("finite chain: ") + name + " has the wrong shape");
  if ((k.array() < 0.0).any()) throw InputError(std::string("finite chain: ") + name + " has negative entries");
  if (row_sum_defect(k) > 1e-10) throw InputError(std::string("finite chain: ") + name + " is not row-stochastic");
}

}  // namespace detail

/// Metropolis adjustment of Q towards pi.
///
/// Off the diagonal T_ij = Q_ij min(1, pi_j Q_ji / (pi_i Q_ij)), computed as
/// min(pi_i Q_ij, pi_j Q_ji) / pi_i so that the probability flow is symmetric
/// by construction. A zero reverse proposal gives ratio 0. The diagonal
/// absorbs the rejected mass.
inline FiniteChain metropolize(const MatrixXd& Q, const VectorXd& pi) {
  detail::check_distribution(pi);
  const Index n = pi.size();
  detail::check_kernel(Q, n, "Q");
  FiniteChain c{pi, Q, MatrixXd::Zero(n, n)};
  for (Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == i || Q(i, j) == 0.0) continue;
      c.T(i, j) = std::min(pi(i) * Q(i, j), pi(j) * Q(j, i)) / pi(i);
      off += c.T(i, j);
    }
    c.T(i, i) = 1.0 - off;
  }
  return c;
}

/// Σ_i pi_i Σ_{j≠i} |A_ij - B_ij|
inline double offdiag_l1(const MatrixXd& A, const MatrixXd& B, const VectorXd& pi) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != pi.size())
    throw InputError("offdiag_l1: shape mismatch");
  double total = 0.0;
  for (Index i = 0; i < A.rows(); ++i) {
    double row = 0.0;
    for (Index j = 0; j < A.cols(); ++j)
      if (j != i) row += std::abs(A(i, j) - B(i, j));
    total += pi(i) * row;
  }
  return total;
}

/// Stationary mass and boundary flow ∫_S T(x, S^c) pi(dx) of one subset.
struct SubsetCut {
  double mass = 0.0;
  double flow = 0.0;
};

struct SpectralQuantities {
  double gap = 0.0;
  double conductance = 0.0;
  VectorXd eigenvalues;          ///< ascending
  std::vector<SubsetCut> cuts;  ///< all nonempty subsets with mass <= 1/2

  /// inf over subsets with s < pi(S) <= 1/2 of flow / (pi(S) - s); +inf if none.
  double s_conductance(double s) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cuts)
      if (c.mass > s) best = std::min(best, c.flow / (c.mass - s));
    return best;
  }

  double min_cut_mass() const {
    double m = 1.0;
    for (const auto& c : cuts) m = std::min(m, c.mass);
    return m;
  }
};

inline constexpr Index kMaxEnumeratedStates = 20;

/// Spectral gap 1 - λ₂ of the pi-symmetrised kernel, and conductance by
/// enumerating all 2^n subsets in Gray-code order.
inline SpectralQuantities spectral_quantities(const FiniteChain& c) {
  const Index n = c.size();
  if (n > kMaxEnumeratedStates)
    throw ResourceError("spectral_quantities: subset enumeration is capped at 20 states");
  if (n < 2) throw InputError("spectral_quantities: need at least two states");

  SpectralQuantities out;
  const VectorXd root = c.pi.array().sqrt();
  MatrixXd sym = root.asDiagonal() * c.T * root.cwiseInverse().asDiagonal();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  out.eigenvalues = solver.eigenvalues();
  out.gap = std::clamp(1.0 - out.eigenvalues(n - 2), 0.0, 2.0);

  const MatrixXd flow = c.pi.asDiagonal() * c.T;
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  double mass = 0.0, cut = 0.0;
  const std::uint64_t total = std::uint64_t{1} << n;
  out.cuts.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(total, 1u << 16)));
  out.conductance = std::numeric_limits<double>::infinity();
  for (std::uint64_t g = 1; g < total; ++g) {
    const auto k = static_cast<Index>(std::countr_zero(g));
    const bool adding = !in[static_cast<std::size_t>(k)];
    double to_outside = 0.0, from_inside = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j == k) continue;
      if (in[static_cast<std::size_t>(j)]) from_inside += flow(j, k);
      else to_outside += flow(k, j);
    }
    if (adding) {
      cut += to_outside - from_inside;
      mass += c.pi(k);
    } else {
      cut -= to_outside - from_inside;
      mass -= c.pi(k);
    }
    in[static_cast<std::size_t>(k)] = adding;
    if (mass > 0.0 && mass <= 0.5 + 1e-12) {
      const double f = std::max(cut, 0.0);
      out.cuts.push_back({mass, f});
      out.conductance = std::min(out.conductance, f / mass);
    }
  }
  if (!std::isfinite(out.conductance)) out.conductance = 0.0;
  out.conductance = std::clamp(out.conductance, 0.0, 1.0);
  return out;
}

/// Exact Rayleigh quotient E_pi[f (I - T) f] / Var_pi f, an upper bound on the gap.
inline double rayleigh_quotient(const FiniteChain& c, const VectorXd& f) {
  const double mean = c.pi.dot(f);
  const VectorXd centered = f.array() - mean;
  const double var = c.pi.dot(centered.cwiseProduct(centered));
  if (!(var > 0.0)) throw InputError("rayleigh_quotient: f is constant under pi");
  double dirichlet = 0.0;
  for (Index i = 0; i < c.size(); ++i)
    for (Index j = 0; j < c.size(); ++j) dirichlet += 0.5 * c.pi(i) * c.T(i, j) * (f(i) - f(j)) * (f(i) - f(j));
  return dirichlet / var;
}

struct InequalityCheck {
  std::string id;
  Index state = -1;  ///< -1 for global checks
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return rhs - lhs; }
  bool ok(double tol = 1e-12) const { return lhs <= rhs + tol; }
};

struct ProjectionReport {
  std::vector<InequalityCheck> checks;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.ok(); });
  }
  std::size_t violations() const {
    return static_cast<std::size_t>(std::count_if(checks.begin(), checks.end(), [](const auto& c) { return !c.ok(); }));
  }
};

/// Compares T = metropolize(Q, pi) with any pi-reversible Qbar.
///
///  - "global":    offdiag_l1(T, Q) <= 2 offdiag_l1(Qbar, Q)
///  - "projection": offdiag_l1(T, Q) <= offdiag_l1(Qbar, Q), the exact projection statement
///  - "pointwise": per state i,
///       Σ_{j≠i}|T - Q|_ij <= 2 Σ_{j≠i}|Qbar - Q|_ij + Σ_j pi_j |Qbar_ji - Q_ji| / pi_i
///    The last sum equals Σ_j (pi_j Qbar_ji / pi_i) |Q_ji / Qbar_ji - 1| wherever Qbar_ji > 0.
inline ProjectionReport projection_check(const MatrixXd& Q, const MatrixXd& Qbar, const VectorXd& pi) {
  detail::check_distribution(pi);
  const Index n = pi.size();
  detail::check_kernel(Q, n, "Q");
  detail::check_kernel(Qbar, n, "Qbar");
  if (detailed_balance_defect(Qbar, pi) > 1e-10)
    throw InputError("projection_check: Qbar is not reversible with respect to pi");

  const FiniteChain c = metropolize(Q, pi);
  ProjectionReport report;
  const double lhs = offdiag_l1(c.T, Q, pi);
  const double bar = offdiag_l1(Qbar, Q, pi);
  report.checks.push_back({"global", -1, lhs, 2.0 * bar});
  report.checks.push_back({"projection", -1, lhs, bar});
  for (Index i = 0; i < n; ++i) {
    double left = 0.0, near = 0.0, reverse = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) {
        left += std::abs(c.T(i, j) - Q(i, j));
        near += std::abs(Qbar(i, j) - Q(i, j));
      }
      reverse += pi(j) * std::abs(Qbar(j, i) - Q(j, i)) / pi(i);
    }
    report.checks.push_back({"pointwise", i, left, 2.0 * near + reverse});
  }
  return report;
}

struct EvolveStep {
  std::size_t n = 0;
  double warmness = 0.0;  ///< max_i mu_n(i) / pi(i)
  double tv = 0.0;
  double chi2 = 0.0;
};

struct EvolveReport {
  double initial_warmness = 0.0;
  std::vector<EvolveStep> steps;
  std::vector<InequalityCheck> violations;
  std::map<std::string, double> min_slack;  ///< smallest rhs - lhs seen per inequality id

  bool ok() const { return violations.empty(); }
};

inline const std::vector<double>& default_s_grid() {
  static const std::vector<double> grid = {0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49};
  return grid;
}

/// Propagates mu_n = mu_0 T^n and checks at every step:
///  - "warm_initial":  max(mu_n/pi) <= M0 + 1e-12
///  - "warm_monotone": max(mu_n/pi) <= max(mu_{n-1}/pi) + 1e-12
///  - "chi2_tv":       chi²(mu_n ‖ pi) <= 2 M0 TV(mu_n, pi) + 1e-12
///  - "lovasz":        TV(mu_n, pi) <= M0 s + M0 exp(-C_s² n / 2) for every s in s_grid
inline EvolveReport evolve_and_check(const FiniteChain& c, const VectorXd& mu0, std::size_t n_steps,
                                     const std::vector<double>& s_grid = default_s_grid()) {
  const Index n = c.size();
  if (mu0.size() != n) throw InputError("evolve_and_check: mu0 has the wrong length");
  if ((mu0.array() < 0.0).any() || std::abs(mu0.sum() - 1.0) > 1e-10)
    throw InputError("evolve_and_check: mu0 must be a probability vector");

  const auto spec = spectral_quantities(c);
  std::vector<double> cs;
  for (double s : s_grid) cs.push_back(spec.s_conductance(s));

  EvolveReport report;
  const double m0 = (mu0.array() / c.pi.array()).maxCoeff();
  report.initial_warmness = m0;
  constexpr double tol = 1e-12;

  Eigen::RowVectorXd mu = mu0.transpose();
  double previous = m0;
  for (std::size_t step = 0; step <= n_steps; ++step) {
    if (step > 0) mu = mu * c.T;
    const Eigen::ArrayXd ratio = mu.transpose().array() / c.pi.array();
    EvolveStep row;
    row.n = step;
    row.warmness = ratio.maxCoeff();
    row.tv = 0.5 * (mu.transpose() - c.pi).cwiseAbs().sum();
    row.chi2 = (c.pi.array() * (ratio - 1.0).square()).sum();
    report.steps.push_back(row);

    auto check = [&](const char* id, double lhs, double rhs) {
      auto [it, fresh] = report.min_slack.try_emplace(id, rhs - lhs);
      if (!fresh) it->second = std::min(it->second, rhs - lhs);
      if (lhs > rhs + tol) report.violations.push_back({id, static_cast<Index>(step), lhs, rhs});
    };
    check("warm_initial", row.warmness, m0);
    check("warm_monotone", row.warmness, previous);
    check("chi2_tv", row.chi2, 2.0 * m0 * row.tv);
    for (std::size_t k = 0; k < s_grid.size(); ++k) {
      if (!std::isfinite(cs[k])) continue;
      const double bound = m0 * s_grid[k] + m0 * std::exp(-0.5 * cs[k] * cs[k] * static_cast<double>(step));
      check("lovasz", row.tv, bound);
    }
    previous = row.warmness;
  }
  return report;
}

/// Symmetric Dirichlet(1) draw.
inline VectorXd random_distribution(Index n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::max(expo(rng.engine()), 1e-300);
  return v / v.sum();
}

/// Row-normalised matrix of positive uniform entries.
inline MatrixXd random_proposal(Index n, Rng& rng) {
  MatrixXd q(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) q(i, j) = rng.uniform_open_closed();
  for (Index i = 0; i < n; ++i) q.row(i) /= q.row(i).sum();
  return q;
}

struct RandomInstance {
  VectorXd pi;
  MatrixXd Q;
  MatrixXd Qbar;  ///< Metropolised independent proposal, hence pi-reversible
  VectorXd mu0;
};

/// Seeded random (pi, Q, Qbar, mu0) with n states.
inline RandomInstance random_instance(Index n, std::uint64_t seed) {
  Rng rng(seed);
  RandomInstance inst;
  inst.pi = random_distribution(n, rng);
  inst.Q = random_proposal(n, rng);
  inst.Qbar = metropolize(random_proposal(n, rng), inst.pi).T;
  inst.mu0 = random_distribution(n, rng);
  return inst;
}

/// MALA restricted to a uniform 1-D grid: pi_k ∝ exp(-v(x_k)) and
/// Q_kj ∝ exp(-(x_j - x_k + h v'(x_k))² / (4h)), row-normalised.
inline FiniteChain discretized_langevin_chain(const std::function<double(double)>& v,
                                              const std::function<double(double)>& dv, double h,
                                              const std::vector<double>& grid) {
  const auto n = static_cast<Index>(grid.size());
  VectorXd pi(n);
  for (Index k = 0; k < n; ++k) pi(k) = std::exp(-v(grid[static_cast<std::size_t>(k)]));
  pi /= pi.sum();
  MatrixXd q(n, n);
  for (Index k = 0; k < n; ++k) {
    const double xk = grid[static_cast<std::size_t>(k)];
    const double mean = xk - h * dv(xk);
    for (Index j = 0; j < n; ++j) {
      const double r = grid[static_cast<std::size_t>(j)] - mean;
      q(k, j) = std::exp(-r * r / (4.0 * h));
    }
    q.row(k) /= q.row(k).sum();
  }
  return metropolize(q, pi);
}

struct SelftestRow {
  std::uint64_t seed = 0;
  std::string inequality;
  double slack = 0.0;  ///< worst rhs - lhs over states and steps; negative means violated
};

/// Every exact inequality on n_instances random chains with 2..10 states.
/// Tolerance-based identities report tol - defect as their slack.
inline std::vector<SelftestRow> finite_selftest(std::uint64_t seed, std::size_t n_instances,
                                                std::size_t n_steps = 50) {
  std::vector<SelftestRow> rows;
  for (std::size_t k = 0; k < n_instances; ++k) {
    const std::uint64_t s = derive_seed(seed, 40, k);
    const auto n = static_cast<Index>(2 + k % 9);
    const auto inst = random_instance(n, s);
    const auto c = metropolize(inst.Q, inst.pi);
    rows.push_back({s, "detailed_balance", 1e-12 - detailed_balance_defect(c.T, c.pi)});
    rows.push_back({s, "stationarity", 1e-12 - stationarity_defect(c.T, c.pi)});
    rows.push_back({s, "row_sums", 1e-12 - row_sum_defect(c.T)});
    std::map<std::string, double> worst;
    for (const auto& chk : projection_check(inst.Q, inst.Qbar, inst.pi).checks) {
      auto [it, fresh] = worst.try_emplace("projection_" + chk.id, chk.slack());
      if (!fresh) it->second = std::min(it->second, chk.slack());
    }
    for (const auto& [id, v] : worst) rows.push_back({s, id, v});
    const auto ev = evolve_and_check(c, inst.mu0, n_steps);
    for (const auto& [id, v] : ev.min_slack) rows.push_back({s, id, v});
    const auto sq = spectral_quantities(c);
    rows.push_back({s, "cheeger_lower", sq.gap - sq.conductance * sq.conductance / 8.0});
    rows.push_back({s, "cheeger_upper", 2.0 * sq.conductance - sq.gap});
  }
  return rows;
}

}  // namespace malalab
