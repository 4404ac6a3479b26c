#pragma once

#include <functional>
#include <vector>

namespace slelab {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

/// Sample mean with its standard error (fixed left-to-right summation order).
MeanStderr mean_stderr(const std::vector<double>& xs);

/// Mean and standard error of a Bernoulli frequency from a success count.
MeanStderr binomial_estimate(std::size_t successes, std::size_t n);

/// Two-sample Kolmogorov-Smirnov statistic (inputs need not be sorted).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// One-sample KS statistic against a CDF.
double ks_one_sample(std::vector<double> xs, const std::function<double(double)>& cdf);

/// 5% two-sample KS threshold, 1.36 sqrt((n+m)/(n m)).
double ks_threshold_5pct(std::size_t n, std::size_t m);

}  // namespace slelab
