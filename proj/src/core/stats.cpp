#include "amdyn/core/stats.hpp"

#include "amdyn/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace amdyn {

namespace {

double median_in_place(std::vector<double>& values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  if (values.size() % 2 == 1) return values[mid];
  const double upper = values[mid];
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::vector<BucketMoments> bucket_moments(std::span<const double> samples, std::size_t n_buckets) {
  const std::size_t n = samples.size();
  require(n > 0, "robust_mean: empty sample");
  require(n_buckets >= 1 && n_buckets <= n, "robust_mean: need 1 <= n_buckets <= sample count");
  std::vector<BucketMoments> out(n_buckets);
  for (std::size_t b = 0; b < n_buckets; ++b) {
    const std::size_t hi = bucket_begin(b + 1, n, n_buckets);
    for (std::size_t i = bucket_begin(b, n, n_buckets); i < hi; ++i) out[b].add(samples[i]);
  }
  return out;
}

}  // namespace

double robust_mean(std::span<const double> samples, std::size_t n_buckets) {
  return estimate_from_buckets(bucket_moments(samples, n_buckets)).value;
}

Estimate estimate(std::span<const double> samples, std::size_t n_buckets) {
  return estimate_from_buckets(bucket_moments(samples, n_buckets));
}

Estimate estimate_from_buckets(std::span<const BucketMoments> buckets) {
  require(!buckets.empty(), "estimate_from_buckets: no buckets");
  std::vector<double> means;
  means.reserve(buckets.size());
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& b : buckets) {
    require(b.count > 0, "estimate_from_buckets: empty bucket");
    means.push_back(b.mean());
    total += b.mean() * static_cast<double>(b.count);
    n += b.count;
  }
  const double grand = total / static_cast<double>(n);
  double m2 = 0.0;
  for (const auto& b : buckets) {
    const double c = static_cast<double>(b.count);
    const double dm = b.mean() - grand;
    m2 += std::max(b.sum_sq - b.sum * b.sum / c, 0.0) + c * dm * dm;
  }
  Estimate out;
  out.value = median_in_place(means);
  out.mean = grand;
  if (n >= 2) out.se = std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

double trapezoid(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), "trapezoid: xs and ys differ in length");
  require(xs.size() >= 2, "trapezoid: need at least two points");
  double acc = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    require(xs[i] > xs[i - 1], "trapezoid: grid must be strictly increasing");
    acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
  }
  return acc;
}

}  // namespace amdyn
