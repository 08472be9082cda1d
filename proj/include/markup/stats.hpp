#pragma once

#include <span>
#include <utility>
#include <vector>

namespace markup::stats {

// Standard normal CDF.
double normal_cdf(double z);

// Standard normal quantile (Wichura's AS 241, double precision).
double normal_quantile(double p);

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);
double sample_sd(std::span<const double> xs);

struct ShapiroWilkResult {
    double w = 0.0;
    double p_value = 0.0;
};

// Shapiro-Wilk W and p-value, Royston's AS R94 approximation, valid for
// 3 <= n <= 5000. Throws SizeOutOfRange / ConstantSeries.
ShapiroWilkResult shapiro_wilk(std::span<const double> sample);

// Normal QQ pairs (theoretical quantile, order statistic) with Blom
// plotting positions (i - 0.375) / (n + 0.25). Throws InsufficientData
// for n < 3.
std::vector<std::pair<double, double>> qq_points(std::span<const double> sample);

struct BoxplotStats {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double whisker_lo = 0.0;
    double whisker_hi = 0.0;
    std::vector<double> outliers;
};

// Quartiles as Tukey hinges (medians of the lower/upper halves, the median
// included in both halves when n is odd); whiskers at the most extreme data
// points within 1.5 IQR of the hinges. Throws InsufficientData for n < 5.
BoxplotStats boxplot_stats(std::span<const double> sample);

}  // namespace markup::stats
