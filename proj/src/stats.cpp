#include "perpetua/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perpetua/error.hpp"

namespace perpetua {

Sample::Sample(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) {
    fail(ErrorCode::TooSmall, "sample is empty");
  }
  for (double v : values_) {
    if (std::isnan(v)) {
      fail(ErrorCode::InvalidParameter, "sample contains NaN");
    }
  }
  std::sort(values_.begin(), values_.end());
}

double Sample::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorCode::InvalidParameter, "quantile level outside [0, 1]");
  }
  const double pos = p * static_cast<double>(values_.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values_.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

double Sample::ecdf(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) /
         static_cast<double>(values_.size());
}

double Sample::mean() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s / static_cast<double>(values_.size());
}

double Sample::variance() const {
  if (values_.size() < 2) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (double v : values_) s += (v - m) * (v - m);
  return s / static_cast<double>(values_.size() - 1);
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsReport ks_two_sample(const Sample &x, const Sample &y, double significance) {
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  if (n < 50 || m < 50) {
    fail(ErrorCode::TooSmall, "two-sample KS needs at least 50 values per side");
  }
  const auto &a = x.values();
  const auto &b = y.values();
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < n && j < m) {
    const double v = std::min(a[i], b[j]);
    while (i < n && a[i] == v) ++i;
    while (j < m && b[j] == v) ++j;
    const double diff = std::abs(static_cast<double>(i) / n -
                                 static_cast<double>(j) / m);
    d = std::max(d, diff);
  }
  const double en = std::sqrt(static_cast<double>(n) * m / (n + m));
  const double p = kolmogorov_survival(en * d);
  return {d, p, n, m, significance, p < significance};
}

KsReport ks_one_sample(const Sample &x, const std::function<double(double)> &cdf,
                       double significance) {
  const std::size_t n = x.size();
  if (n < 50) {
    fail(ErrorCode::TooSmall, "one-sample KS needs at least 50 values");
  }
  const auto &a = x.values();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(a[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  const double p = kolmogorov_survival(std::sqrt(static_cast<double>(n)) * d);
  return {d, p, n, 0, significance, p < significance};
}

HillEstimate hill_index(const Sample &x, int k) {
  const auto &v = x.values();
  const auto n = static_cast<int>(v.size());
  if (v.front() <= 0.0) {
    fail(ErrorCode::NonPositive, "Hill estimator needs positive values");
  }
  if (k < 50 || k > n / 10) {
    fail(ErrorCode::TooSmall, "Hill estimator needs 50 <= k <= n/10, got k = " +
                                  std::to_string(k) + ", n = " +
                                  std::to_string(n));
  }
  const double threshold = std::log(v[n - k - 1]);
  double s = 0.0;
  for (int i = 0; i < k; ++i) {
    s += std::log(v[n - 1 - i]) - threshold;
  }
  if (s <= 0.0) {
    fail(ErrorCode::DegenerateSample, "top order statistics are all equal");
  }
  const double alpha = k / s;
  return {alpha, alpha / std::sqrt(static_cast<double>(k)), k};
}

HillPlateau hill_plateau(const Sample &x) {
  const int n = static_cast<int>(x.size());
  HillPlateau out{};
  out.ks = {n / 200, n / 100, n / 50};
  for (int i = 0; i < 3; ++i) {
    out.estimates[i] = hill_index(x, out.ks[i]).alpha;
  }
  const auto [lo, hi] =
      std::minmax_element(out.estimates.begin(), out.estimates.end());
  out.mean = (out.estimates[0] + out.estimates[1] + out.estimates[2]) / 3.0;
  out.spread = *hi - *lo;
  out.heavy = out.spread <= 0.2 * out.mean;
  return out;
}

Sample standardize(const Sample &x) {
  const double med = x.median();
  const double iqr = x.iqr();
  if (!(iqr > 0.0)) {
    fail(ErrorCode::DegenerateSample, "interquartile range is zero");
  }
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x.values()) out.push_back((v - med) / iqr);
  return Sample(std::move(out));
}

std::vector<double> positive_part(const std::vector<double> &x) {
  std::vector<double> out;
  for (double v : x) {
    if (v > 0.0) out.push_back(v);
  }
  return out;
}

} // namespace perpetua
