#include "mesh/shrinkage.hpp"

#include <cmath>
#include <numbers>

#include "mesh/error.hpp"

namespace mesh {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

// Continued fraction for the Mills ratio, valid for large x (modified Lentz).
double mills_ratio_cf(double x) {
    const double tiny = 1e-300;
    double f = x, c = x, d = 0.0;
    for (int k = 1; k < 500; ++k) {
        d = x + k * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = x + k / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return 1.0 / f;
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

// Standard normal conditioned on z >= a.
double truncated_normal_tail(double a, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    if (a < 0.5) {
        for (;;) {
            const double z = normal(rng);
            if (z >= a) return z;
        }
    }
    const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
    std::exponential_distribution<double> expo(alpha);
    for (;;) {
        const double z = a + expo(rng);
        const double u = uniform01(rng);
        if (std::log(u) <= -0.5 * (z - alpha) * (z - alpha)) return z;
    }
}

}  // namespace

PenaltyFamily PenaltyFamily::l1(double lambda) {
    PenaltyFamily f{Kind::L1, lambda, 0.0};
    f.validate();
    return f;
}

PenaltyFamily PenaltyFamily::l2(double sigma2) {
    PenaltyFamily f{Kind::L2, 0.0, sigma2};
    f.validate();
    return f;
}

PenaltyFamily PenaltyFamily::l1l2(double lambda, double sigma2) {
    PenaltyFamily f{Kind::L1L2, lambda, sigma2};
    f.validate();
    return f;
}

void PenaltyFamily::validate() const {
    if (has_laplace() && !positive_finite(lambda)) throw UsageError("penalty lambda must be positive and finite");
    if (has_gaussian() && !positive_finite(sigma2)) throw UsageError("penalty sigma2 must be positive and finite");
}

std::string to_string(PenaltyFamily::Kind k) {
    switch (k) {
        case PenaltyFamily::Kind::L1: return "L1";
        case PenaltyFamily::Kind::L2: return "L2";
        case PenaltyFamily::Kind::L1L2: return "L1L2";
    }
    return "?";
}

PenaltyFamily::Kind penalty_kind_from_string(const std::string& s) {
    if (s == "L1" || s == "l1") return PenaltyFamily::Kind::L1;
    if (s == "L2" || s == "l2") return PenaltyFamily::Kind::L2;
    if (s == "L1L2" || s == "l1l2" || s == "L1+L2") return PenaltyFamily::Kind::L1L2;
    throw UsageError("unknown penalty family '" + s + "'");
}

std::string describe(const PenaltyFamily& f) {
    switch (f.kind) {
        case PenaltyFamily::Kind::L1: return "L1(lambda=" + std::to_string(f.lambda) + ")";
        case PenaltyFamily::Kind::L2: return "L2(sigma2=" + std::to_string(f.sigma2) + ")";
        case PenaltyFamily::Kind::L1L2:
            return "L1L2(lambda=" + std::to_string(f.lambda) + ", sigma2=" + std::to_string(f.sigma2) + ")";
    }
    return "?";
}

std::string to_string(Side s) { return s == Side::Offense ? "offense" : "defense"; }

void GroupShrinkage::set(PoolGroup g, Side s, PenaltyFamily f) {
    if (g == PoolGroup::Goaltender && s == Side::Offense)
        throw UsageError("goaltenders carry no offensive coefficient");
    f.validate();
    map_[{g, s}] = f;
}

void GroupShrinkage::set_group(PoolGroup g, PenaltyFamily f) {
    if (g != PoolGroup::Goaltender) set(g, Side::Offense, f);
    set(g, Side::Defense, f);
}

const PenaltyFamily& GroupShrinkage::at(PoolGroup g, Side s) const {
    const auto it = map_.find({g, s});
    if (it == map_.end())
        throw UsageError("no shrinkage family for group " + to_string(g) + " (" + to_string(s) + ")");
    return it->second;
}

GroupShrinkage GroupShrinkage::uniform(const std::vector<PoolGroup>& groups, PenaltyFamily f) {
    GroupShrinkage gs;
    for (const auto g : groups) gs.set_group(g, f);
    return gs;
}

void GroupShrinkage::require_cover(const Design& design, const std::vector<bool>& skip) const {
    for (std::size_t p = 0; p < design.n_predictors(); ++p) {
        if (!skip.empty() && skip[p]) continue;
        const auto& pr = design.predictor(p);
        if (!pr.defense_only) at(pr.group, Side::Offense);
        at(pr.group, Side::Defense);
    }
}

void HyperPriors::validate() const {
    if (!positive_finite(gamma_shape) || !positive_finite(gamma_rate) || !positive_finite(invgamma_shape) ||
        !positive_finite(invgamma_scale))
        throw UsageError("hyperprior parameters must be positive and finite");
}

double log_normal_tail(double x) {
    if (x < 5.0) return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
    return -0.5 * x * x - kHalfLog2Pi + std::log(mills_ratio_cf(x));
}

double log_mills_ratio(double x) {
    if (x < 5.0) return log_normal_tail(x) + 0.5 * x * x + kHalfLog2Pi;
    return std::log(mills_ratio_cf(x));
}

double log_density(const PenaltyFamily& f, double x) {
    if (!std::isfinite(x)) throw UsageError("log_density requires a finite argument");
    const double ax = std::fabs(x);
    switch (f.kind) {
        case PenaltyFamily::Kind::L1: return std::log(0.5 * f.lambda) - f.lambda * ax;
        case PenaltyFamily::Kind::L2: return -0.5 * x * x / f.sigma2 - 0.5 * std::log(f.sigma2) - kHalfLog2Pi;
        case PenaltyFamily::Kind::L1L2: {
            const double sigma = std::sqrt(f.sigma2);
            return -f.lambda * ax - 0.5 * x * x / f.sigma2 - std::log(2.0 * sigma) -
                   log_mills_ratio(sigma * f.lambda);
        }
    }
    return 0.0;
}

double penalty(const PenaltyFamily& f, double x) {
    double v = 0.0;
    if (f.has_laplace()) v += f.lambda * std::fabs(x);
    if (f.has_gaussian()) v += 0.5 * x * x / f.sigma2;
    return v;
}

double prox(const PenaltyFamily& f, double x, double step) {
    switch (f.kind) {
        case PenaltyFamily::Kind::L1: return soft_threshold(x, step * f.lambda);
        case PenaltyFamily::Kind::L2: return x / (1.0 + step / f.sigma2);
        case PenaltyFamily::Kind::L1L2: return soft_threshold(x, step * f.lambda) / (1.0 + step / f.sigma2);
    }
    return x;
}

TotalShrinkage reparam_to_total(double lambda, double sigma) {
    if (!positive_finite(lambda) || !positive_finite(sigma))
        throw UsageError("reparameterization needs positive lambda and sigma");
    const double laplace = lambda / std::numbers::sqrt2;
    const double s = 1.0 / sigma + laplace;
    return {s, laplace / s};
}

std::pair<double, double> reparam_from_total(double s, double f) {
    if (!positive_finite(s) || !(f > 0.0 && f < 1.0))
        throw UsageError("reparameterization needs s > 0 and f in (0, 1)");
    return {std::numbers::sqrt2 * f * s, 1.0 / ((1.0 - f) * s)};
}

double gamma_log_pdf(double shape, double rate, double x) {
    if (x <= 0.0) return -INFINITY;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double inv_gamma_log_pdf(double shape, double scale, double x) {
    if (x <= 0.0) return -INFINITY;
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double hyper_log_prior_lambda(const HyperPriors& h, double lambda) {
    return gamma_log_pdf(h.gamma_shape, h.gamma_rate, lambda);
}

double hyper_log_prior_sigma2(const HyperPriors& h, double sigma2) {
    return inv_gamma_log_pdf(h.invgamma_shape, h.invgamma_scale, sigma2);
}

double sample(const PenaltyFamily& f, Rng& rng) {
    const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    switch (f.kind) {
        case PenaltyFamily::Kind::L1: return sign * std::exponential_distribution<double>(f.lambda)(rng);
        case PenaltyFamily::Kind::L2: return std::normal_distribution<double>(0.0, std::sqrt(f.sigma2))(rng);
        case PenaltyFamily::Kind::L1L2: {
            // |x|/sigma + sigma*lambda is a standard normal truncated at sigma*lambda.
            const double sigma = std::sqrt(f.sigma2);
            const double a = sigma * f.lambda;
            return sign * sigma * (truncated_normal_tail(a, rng) - a);
        }
    }
    return 0.0;
}

}  // namespace mesh
