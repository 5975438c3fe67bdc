// Acceptance gate: `acceptance --criterion N` runs one criterion and prints a
// single PASS/FAIL line; without arguments all twelve run in order. The exit
// code is nonzero iff a selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "malalab/malalab.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"

using namespace malalab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

Vector normal_vector(Rng& rng, std::size_t d) {
  Vector x(d);
  rng.fill_normal(x);
  return x;
}

constexpr std::uint64_t kSeed = 20240611;

// Gaussian acceptance identity on 10^4 pairs.
Outcome criterion1() {
  const std::size_t d = 16;
  const double h = 0.3;
  const auto p = Potential::gaussian(d);
  Rng rng(kSeed);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const auto x = normal_vector(rng, d);
    const auto y = propose_mala(p, h, x, rng);
    worst = std::max(worst, std::abs(log_accept_ratio(p, h, x, y) - 0.25 * h * (norm2(x) - norm2(y))));
  }
  return {worst <= 1e-9, "max deviation " + fmt(worst) + " (tolerance 1e-9)"};
}

// Gaussian acceptance floor at h = 0.5 d^{-1/3}.
Outcome criterion2() {
  Outcome o{true, ""};
  for (int k = 6; k <= 12; ++k) {
    const std::size_t d = std::size_t{1} << k;
    const double h = 0.5 * std::pow(static_cast<double>(d), -1.0 / 3.0);
    const auto m = mean_acceptance(Potential::gaussian(d), h, 200, 200, TypicalSetFilter::for_dimension(d),
                                   derive_seed(kSeed, 2, static_cast<std::uint64_t>(k)));
    o.pass = o.pass && m.estimate.lower() >= 0.5;
    o.detail += "d=" + std::to_string(d) + ":" + fmt(m.estimate.value) + "±" + fmt(m.estimate.std_error, 2) + " ";
  }
  o.detail += "(need value - 3SE >= 0.5)";
  return o;
}

// Acceptance collapse on the adversarial target at h = d^{-0.4}.
Outcome criterion3() {
  const std::size_t n_states = 3000, n_mc = 8;
  std::vector<EstimateWithSE> adv;
  Outcome o{true, ""};
  std::string ordering;
  for (int k = 8; k <= 16; ++k) {
    const std::size_t d = std::size_t{1} << k;
    const double h = std::pow(static_cast<double>(d), -0.4);
    const auto filter = TypicalSetFilter::for_dimension(d);
    const auto seed = derive_seed(kSeed, 3, static_cast<std::uint64_t>(k));
    const auto a = mean_acceptance(Potential::adversarial(d, 0.2), h, n_states, n_mc, filter, seed).estimate;
    adv.push_back(a);
    o.detail += "d=2^" + std::to_string(k) + ":" + fmt(a.value) + " ";
    if (k >= 10) {
      const auto g = mean_acceptance(Potential::gaussian(d), h, n_states, n_mc, filter, seed).estimate;
      if (a.value > g.value + 3 * std::hypot(a.std_error, g.std_error)) {
        o.pass = false;
        ordering += " adversarial above gaussian at d=2^" + std::to_string(k);
      }
    }
  }
  int non_decreasing = 0;
  for (std::size_t i = 1; i < adv.size(); ++i) {
    const double drop = adv[i - 1].value - adv[i].value;
    if (!(drop > 3 * std::hypot(adv[i - 1].std_error, adv[i].std_error))) {
      o.pass = false;
      ++non_decreasing;
    }
  }
  o.detail += "(SE~" + fmt(adv.front().std_error, 2) + "); " + std::to_string(non_decreasing) +
              " of 8 consecutive drops not resolved beyond 3SE" + ordering;
  return o;
}

// Conductance-integrand bound on the Gaussian target.
Outcome criterion4() {
  const std::size_t d = 256;
  const double h = std::pow(256.0, -0.2);
  const auto p = Potential::gaussian(d);
  Rng rng(kSeed + 4);
  Outcome o{true, ""};
  double worst = -1e9;
  int tested = 0;
  while (tested < 20) {
    const auto x = normal_vector(rng, d);
    const double r2 = norm2(x);
    if (r2 > static_cast<double>(d)) continue;
    const auto a = acceptance_at_point(p, h, x, 10000, derive_seed(kSeed, 4, static_cast<std::uint64_t>(tested)));
    const double excess = a.acceptance.value - gaussian_conductance_bound(r2, h, d) - 3 * a.acceptance.std_error;
    worst = std::max(worst, excess);
    ++tested;
  }
  o.pass = worst <= 0.0;
  o.detail = "20 points, max(estimate - bound - 3SE) = " + fmt(worst);
  return o;
}

// Spectral-gap ceiling 5h.
Outcome criterion5() {
  Outcome o{true, ""};
  double worst_ratio = 0.0;
  for (const auto& p : {Potential::adversarial(64, 0.2), Potential::gaussian(64)}) {
    int idx = 0;
    for (double h : {1e-3, 1e-2, 0.05, 0.1, 0.3, 0.5}) {
      const auto e = dirichlet_gap_upper(p, h, 100000, derive_seed(kSeed, 5, static_cast<std::uint64_t>(idx++)));
      o.pass = o.pass && e.value <= 5 * h + 3 * e.std_error;
      worst_ratio = std::max(worst_ratio, e.value / h);
    }
  }
  o.detail = "12 cells, max estimate/h = " + fmt(worst_ratio) + " (ceiling 5)";
  return o;
}

// Oracle lemma suite.
Outcome criterion6() {
  Outcome o{true, ""};
  Rng rng(kSeed + 6);
  double trig_err = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int ell = k % 5;
    const double a = 6.283185307179586 * rng.uniform(), b = 0.2 + rng.uniform(), gamma = 0.2 * rng.uniform();
    const std::size_t d = std::size_t{1} << (2 + k % 9);
    const double t = b * std::pow(static_cast<double>(d), gamma);
    const double quad =
        oracle::gaussian_mean([&](double x) { return std::pow(x, ell) * std::sin(a + t * x); }, 200000);
    trig_err = std::max(trig_err, std::abs(trig_sin_moment(ell, a, b, gamma, d) - quad));
  }
  o.pass = trig_err <= 1e-8;
  double z_ratio = 0.0, kl_ratio = 0.0;
  for (int k = 8; k <= 16; ++k) {
    const std::size_t d = std::size_t{1} << k;
    const double dd = static_cast<double>(d);
    const double z = normalizing_constant(Profile1D::adversarial(0.2, d, 1.0, 1e-13));
    z_ratio = std::max(z_ratio, std::abs(z / std::sqrt(2 * std::numbers::pi) - 1) / std::pow(dd, -0.8));
    kl_ratio = std::max(kl_ratio, kl_gaussian_vs_adversarial(0.2, d) / std::pow(dd, 0.2));
  }
  o.pass = o.pass && z_ratio <= 2.0 && kl_ratio <= 2.0;
  const std::size_t d14 = std::size_t{1} << 14;
  const double cos_ratio = expected_cos(Profile1D::adversarial(0.2, d14, 1.0, 1e-13), 0.2, d14) /
                           (0.25 * std::pow(static_cast<double>(d14), -0.4));
  o.pass = o.pass && cos_ratio >= 0.8 && cos_ratio <= 1.2;
  o.detail = "trig max error " + fmt(trig_err) + "; max |Z/sqrt(2pi)-1|/d^-0.8 = " + fmt(z_ratio) +
             "; max KL/d^0.2 = " + fmt(kl_ratio) + "; Ecos ratio at 2^14 = " + fmt(cos_ratio);
  return o;
}

// Coordinate factor against exp((1/16 + 5) d^{-4 eta}).
Outcome criterion7() {
  const std::size_t d = 4096;
  const double eta = 0.2, h = std::pow(4096.0, -0.4);
  const double r = 4 * std::sqrt(std::log(8.0 * 4096.0));
  const double small = std::pow(4096.0, -4 * eta);
  const double bound = std::exp((1.0 / 16.0) * small + 5.0 * small);
  double worst = 0.0, at = 0.0;
  for (int k = 0; k <= 80; ++k) {
    const double x1 = -r + 2 * r * k / 80.0;
    const double v = coordinate_factor(x1, h, eta, d);
    if (v > worst) {
      worst = v;
      at = x1;
    }
  }
  return {worst <= bound, "max factor " + fmt(worst, 8) + " at x1=" + fmt(at) + ", bound " + fmt(bound, 8) +
                              "; log-excess / d^-0.8 = " + fmt(std::log(worst) / small)};
}

// Projection property with the exact OU kernel.
Outcome criterion8() {
  const auto r = projection_check_gaussian(0.05, 32, 200, 10000, kSeed + 8);
  return {r.holds, "rejection " + fmt(r.rejection.value) + ", 2*tv_bar " + fmt(2 * r.tv_bar.value) +
                       ", combined SE " + fmt(r.combined_se, 2)};
}

// Discretization TV bound.
Outcome criterion9() {
  const std::size_t d = 32;
  const double h = 0.05;
  Rng rng(kSeed + 9);
  double worst = 0.0;
  bool pass = true;
  for (int k = 0; k < 50; ++k) {
    auto x = normal_vector(rng, d);
    const double scale = 2 * std::sqrt(static_cast<double>(d)) * rng.uniform() / std::sqrt(norm2(x));
    for (auto& v : x) v *= scale;
    const auto e = ou_proposal_tv(h, x, 10000, derive_seed(kSeed, 9, static_cast<std::uint64_t>(k)));
    const double rhs = 1.1 * 0.5 * h * std::sqrt(static_cast<double>(d) + norm2(x));
    pass = pass && e.value <= rhs + 3 * e.std_error;
    worst = std::max(worst, e.value / rhs);
  }
  return {pass, "50 points, max estimate / (1.1 bound) = " + fmt(worst)};
}

// Finite-chain exact suite.
Outcome criterion10() {
  const auto rows = finite_selftest(kSeed + 10, 500);
  std::map<std::string, double> worst;
  std::size_t bad = 0;
  for (const auto& r : rows) {
    auto [it, fresh] = worst.try_emplace(r.inequality, r.slack);
    if (!fresh) it->second = std::min(it->second, r.slack);
    if (r.slack < -1e-12) ++bad;
  }
  std::string detail = std::to_string(bad) + " violations in " + std::to_string(rows.size()) + " rows; min slack";
  for (const auto& [id, v] : worst) detail += " " + id + "=" + fmt(v, 3);
  return {bad == 0, detail};
}

// ULA bias against MALA.
Outcome criterion11() {
  const auto p = Potential::gaussian(1);
  const double h = 0.2;
  Rng rng(kSeed + 11);
  const Vector x0{rng.normal()};
  const auto ula = run_chain(p, {h, KernelVariant::ULA, 1}, x0, 1000000, derive_seed(kSeed, 11, 0));
  const auto mala = run_chain(p, {h, KernelVariant::MALA, 1}, x0, 1000000, derive_seed(kSeed, 11, 1));
  const double ula_target = 1.0 / (1.0 - h / 2.0);
  const auto& u = ula.coord1_second_moment;
  const auto& m = mala.coord1_second_moment;
  const bool pass = std::abs(u.value - ula_target) <= 3 * u.std_error && std::abs(m.value - 1.0) <= 3 * m.std_error;
  return {pass, "ULA " + fmt(u.value, 5) + "±" + fmt(u.std_error, 2) + " (target " + fmt(ula_target, 5) + "), MALA " +
                    fmt(m.value, 5) + "±" + fmt(m.std_error, 2) + " (target 1)"};
}

// Determinism of verify and a full sweep through the command-line tool.
Outcome criterion12() {
  const auto dir = std::filesystem::temp_directory_path();
  auto path = [&](const char* name) { return (dir / (std::string("malalab_acceptance_") + name)).string(); };
  const std::string cli = support::cli();
  const auto v1 = support::run(cli + " verify --seed 7 --out " + path("verify1.csv"));
  const auto v2 = support::run(cli + " verify --seed 7 --out " + path("verify2.csv"));
  const auto s1 = support::run(cli + " sweep-accept --seed 7 --out " + path("sweep1.csv"));
  const auto s2 = support::run(cli + " sweep-accept --seed 7 --threads 2 --out " + path("sweep2.csv"));
  const bool ran = v1.exit_code == 0 && v2.exit_code == 0 && s1.exit_code == 0 && s2.exit_code == 0;
  const auto a = support::read_file(path("verify1.csv")), b = support::read_file(path("verify2.csv"));
  const auto c = support::read_file(path("sweep1.csv")), e = support::read_file(path("sweep2.csv"));
  const bool same = !a.empty() && a == b && !c.empty() && c == e;
  return {ran && same, std::string("exit codes ") + std::to_string(v1.exit_code) + "," + std::to_string(v2.exit_code) +
                           "," + std::to_string(s1.exit_code) + "," + std::to_string(s2.exit_code) + "; verify " +
                           (a == b ? "identical" : "differs") + " (" + std::to_string(a.size()) + " bytes); sweep " +
                           (c == e ? "identical" : "differs") + " (" + std::to_string(c.size()) + " bytes)"};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> list = {
      {"Gaussian acceptance identity", criterion1},
      {"Gaussian acceptance floor", criterion2},
      {"adversarial acceptance collapse", criterion3},
      {"conductance-integrand bound", criterion4},
      {"spectral-gap ceiling", criterion5},
      {"one-dimensional oracle suite", criterion6},
      {"coordinate factor bound", criterion7},
      {"projection property", criterion8},
      {"discretization TV bound", criterion9},
      {"finite-chain exact suite", criterion10},
      {"ULA vs MALA stationary variance", criterion11},
      {"determinism", criterion12},
  };
  return list;
}

bool run_one(int k) {
  const auto& [name, fn] = criteria().at(static_cast<std::size_t>(k - 1));
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("criterion %d %s: %s [%s; %.1fs]\n", k, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]...\n");
      return 2;
    }
  }
  if (selected.empty())
    for (int k = 1; k <= 12; ++k) selected.push_back(k);
  bool all = true;
  for (int k : selected) {
    if (k < 1 || k > 12) {
      std::fprintf(stderr, "criterion must lie in 1..12\n");
      return 2;
    }
    all = run_one(k) && all;
  }
  return all ? 0 : 1;
}
