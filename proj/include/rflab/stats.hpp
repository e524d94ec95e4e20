#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rflab {

// Neumaier compensated accumulator.  Deterministic for a fixed order of
// add() calls; immune to catastrophic cancellation at these scales.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);
double compensated_mean(std::span<const double> xs);

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;    // unbiased (n-1 divisor); 0 when n < 2
  double se_mean = 0.0;     // sqrt(variance / n)
  double se_variance = 0.0; // sqrt((m4 - s^4 (n-3)/(n-1)) / n)
};

// Single pass, compensated central sums.
Moments moments(std::span<const double> xs);

// Streaming mean / second central moment with exact pairwise merge; the
// building block for thread-count-independent reductions over fixed blocks.
struct Welford {
  long long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const Welford& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    double d = o.mean - mean;
    long long t = n + o.n;
    mean += d * static_cast<double>(o.n) / static_cast<double>(t);
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) /
                     static_cast<double>(t);
    n = t;
  }
  double variance() const {  // unbiased; 0 when n < 2
    return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  }
};

// Standard normal CDF.
double normal_cdf(double z);

// Kolmogorov-Smirnov distance between the sample and the standard normal
// distribution.  Sorts a copy of the sample.
double ks_normal(std::span<const double> sample);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of y on x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// SE of an empirical proportion p_hat out of n trials.
double proportion_se(double p_hat, std::size_t n);

}  // namespace rflab
