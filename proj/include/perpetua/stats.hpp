#ifndef PERPETUA_STATS_HPP
#define PERPETUA_STATS_HPP

#include <array>
#include <functional>
#include <vector>

namespace perpetua {

/// Values sorted ascending; never empty.
class Sample {
public:
  explicit Sample(std::vector<double> values);

  const std::vector<double> &values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  /// Linear interpolation between order statistics.
  double quantile(double p) const;
  double median() const { return quantile(0.5); }
  double iqr() const { return quantile(0.75) - quantile(0.25); }
  /// Fraction of values <= x.
  double ecdf(double x) const;
  double mean() const;
  double variance() const;

private:
  std::vector<double> values_;
};

struct KsReport {
  double statistic;
  double p_value;
  std::size_t n;
  std::size_t m;
  double significance;
  bool reject;
};

/// P[K > lambda] for the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

KsReport ks_two_sample(const Sample &x, const Sample &y,
                       double significance = 0.01);
KsReport ks_one_sample(const Sample &x, const std::function<double(double)> &cdf,
                       double significance = 0.01);

struct HillEstimate {
  double alpha;
  double std_error;
  int k;
};

/// Hill estimator from the k largest values; all values must be positive.
HillEstimate hill_index(const Sample &x, int k);

struct HillPlateau {
  std::array<int, 3> ks;
  std::array<double, 3> estimates;
  double mean;
  double spread;
  bool heavy;
};

/// Hill estimates at k = n/200, n/100, n/50; heavy when their spread is at
/// most 20% of their mean.
HillPlateau hill_plateau(const Sample &x);

/// (x - median) / IQR.
Sample standardize(const Sample &x);

/// Values strictly above zero.
std::vector<double> positive_part(const std::vector<double> &x);

} // namespace perpetua

#endif // PERPETUA_STATS_HPP
