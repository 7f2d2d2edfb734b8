#pragma once

#include <span>
#include <vector>

namespace mesh {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> x);
/// Population standard deviation (n denominator).
double spread(std::span<const double> x);

/// Linear-interpolation quantile (type 7). Input need not be sorted.
double quantile(std::vector<double> x, double p);
double quantile_sorted(std::span<const double> sorted, double p);

/// Kolmogorov-Smirnov distance between the empirical CDF of `u` and U(0,1).
double ks_statistic_uniform(std::vector<double> u);
/// Same against an arbitrary CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf);
/// Asymptotic p-value for the one-sample statistic (Stephens' small-n correction).
double ks_pvalue(double d, std::size_t n);

double autocorrelation(std::span<const double> x, std::size_t lag);
/// Effective sample size with Geyer's initial monotone sequence.
double effective_sample_size(std::span<const double> x);

}  // namespace mesh

#include <algorithm>
#include <cmath>

template <class Cdf>
double mesh::ks_statistic(std::vector<double> x, Cdf cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}
