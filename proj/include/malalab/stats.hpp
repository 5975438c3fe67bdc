#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace malalab {

/// A Monte-Carlo estimate together with its standard error.
struct EstimateWithSE {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;

  double upper(double n_se = 3.0) const { return value + n_se * std_error; }
  double lower(double n_se = 3.0) const { return value - n_se * std_error; }
};

/// Welford accumulator for mean and variance.
class RunningStats {
 public:
  void push(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

  EstimateWithSE estimate() const { return {mean(), std_error(), n_}; }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline EstimateWithSE mean_with_se(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.push(x);
  return s.estimate();
}

/// Mean of a correlated series with a batch-means standard error.
inline EstimateWithSE batch_means(std::span<const double> xs, std::size_t n_batches = 50) {
  if (xs.size() < 2 * n_batches) return mean_with_se(xs);
  const std::size_t batch = xs.size() / n_batches;
  RunningStats over_batches;
  double total = 0.0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) s += xs[i];
    over_batches.push(s / static_cast<double>(batch));
  }
  for (double x : xs) total += x;
  return {total / static_cast<double>(xs.size()), over_batches.std_error(), xs.size()};
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace malalab
