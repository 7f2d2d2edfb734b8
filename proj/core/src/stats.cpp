#include "mesh/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mesh/error.hpp"

namespace mesh {

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double spread(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double m = mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size()));
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw UsageError("quantile of an empty sample");
    if (sorted.size() == 1) return sorted[0];
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    return quantile_sorted(x, p);
}

double ks_statistic_uniform(std::vector<double> u) {
    return ks_statistic(std::move(u), [](double v) { return std::clamp(v, 0.0, 1.0); });
}

double ks_pvalue(double d, std::size_t n) {
    if (n == 0) return 1.0;
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double autocorrelation(std::span<const double> x, std::size_t lag) {
    const std::size_t n = x.size();
    if (n < 2 || lag >= n) return 0.0;
    const double m = mean(x);
    double c0 = 0.0, ck = 0.0;
    for (std::size_t i = 0; i < n; ++i) c0 += (x[i] - m) * (x[i] - m);
    if (c0 <= 0.0) return 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) ck += (x[i] - m) * (x[i + lag] - m);
    return ck / c0;
}

double effective_sample_size(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 4) return static_cast<double>(n);
    const double m = mean(x);
    double c0 = 0.0;
    for (double v : x) c0 += (v - m) * (v - m);
    if (c0 <= 0.0) return static_cast<double>(n);
    auto rho = [&](std::size_t k) {
        double ck = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) ck += (x[i] - m) * (x[i + k] - m);
        return ck / c0;
    };
    double tau = -1.0;  // -1 + 2 * sum of positive pair sums
    double prev_pair = INFINITY;
    for (std::size_t k = 0; k + 1 < n; k += 2) {
        double pair = rho(k) + rho(k + 1);
        if (pair <= 0.0) break;
        pair = std::min(pair, prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
    return static_cast<double>(n) / tau;
}

}  // namespace mesh
