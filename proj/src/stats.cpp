#include "rflab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rflab {

double compensated_sum(std::span<const double> xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

double compensated_mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  m.mean = compensated_mean(xs);
  if (m.n < 2) return m;
  KahanSum s2, s4;
  for (double x : xs) {
    double d = x - m.mean;
    double d2 = d * d;
    s2.add(d2);
    s4.add(d2 * d2);
  }
  double n = static_cast<double>(m.n);
  m.variance = s2.value() / (n - 1.0);
  m.se_mean = std::sqrt(m.variance / n);
  double m4 = s4.value() / n;
  double inner = m4 - m.variance * m.variance * (n - 3.0) / (n - 1.0);
  m.se_variance = inner > 0.0 ? std::sqrt(inner / n) : 0.0;
  return m;
}

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

double ks_normal(std::span<const double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_normal: empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    double f = normal_cdf(s[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 paired points");
  double mx = compensated_mean(x);
  double my = compensated_mean(y);
  KahanSum sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
  }
  if (sxx.value() == 0.0) throw std::invalid_argument("fit_line: degenerate x");
  LineFit f;
  f.slope = sxy.value() / sxx.value();
  f.intercept = my - f.slope * mx;
  return f;
}

double proportion_se(double p_hat, std::size_t n) {
  if (n == 0) return 0.0;
  double v = p_hat * (1.0 - p_hat) / static_cast<double>(n);
  return v > 0.0 ? std::sqrt(v) : 0.0;
}

}  // namespace rflab
