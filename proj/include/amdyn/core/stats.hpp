#pragma once

#include <cstddef>
#include <span>

namespace amdyn {

inline constexpr std::size_t kDefaultBuckets = 32;

/// Median of the bucket means after splitting `samples` in order into
/// `n_buckets` contiguous near-equal buckets.
double robust_mean(std::span<const double> samples, std::size_t n_buckets = kDefaultBuckets);

struct Estimate {
  double value = 0.0;  // robust mean
  double se = 0.0;     // sample standard deviation / sqrt(n)
  double mean = 0.0;   // plain sample mean
};

/// robust_mean together with the plain standard error of the mean.
Estimate estimate(std::span<const double> samples, std::size_t n_buckets = kDefaultBuckets);

/// First sample index of bucket b when n samples are split into k buckets.
inline std::size_t bucket_begin(std::size_t b, std::size_t n, std::size_t k) { return b * n / k; }

/// Running moments of one bucket, accumulated relative to its first sample.
struct BucketMoments {
  std::size_t count = 0;
  double shift = 0.0;
  double sum = 0.0;     // sum of (x - shift)
  double sum_sq = 0.0;  // sum of (x - shift)^2

  void add(double x) {
    if (count == 0) shift = x;
    const double d = x - shift;
    sum += d;
    sum_sq += d * d;
    ++count;
  }
  double mean() const { return shift + sum / static_cast<double>(count); }
};

/// Same result as estimate() from the moments of its buckets, in bucket order.
Estimate estimate_from_buckets(std::span<const BucketMoments> buckets);

double trapezoid(std::span<const double> xs, std::span<const double> ys);

}  // namespace amdyn
