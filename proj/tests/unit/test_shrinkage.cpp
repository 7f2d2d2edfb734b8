#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "helpers.hpp"
#include "mesh/error.hpp"
#include "mesh/shrinkage.hpp"
#include "mesh/stats.hpp"

namespace mesh {
namespace {

double integrate_density(const PenaltyFamily& f) {
    boost::math::quadrature::exp_sinh<double> q;
    const double half = q.integrate([&](double x) { return std::exp(log_density(f, x)); }, 0.0,
                                    std::numeric_limits<double>::infinity());
    return 2.0 * half;
}

/// argmin over z by a coarse grid followed by Brent refinement.
double prox_by_search(const PenaltyFamily& f, double x, double step) {
    auto obj = [&](double z) { return (z - x) * (z - x) / (2 * step) + penalty(f, z); };
    const double lo = -std::fabs(x) - 1, hi = std::fabs(x) + 1;
    double best = lo, best_v = obj(lo);
    const int n = 20000;
    for (int i = 1; i <= n; ++i) {
        const double z = lo + (hi - lo) * i / n;
        if (obj(z) < best_v) best_v = obj(z), best = z;
    }
    const double h = (hi - lo) / n;
    const auto r = boost::math::tools::brent_find_minima(obj, best - h, best + h, 52);
    // Brent cannot land exactly on a kink; snap to zero when it wins.
    return obj(0.0) <= r.second ? 0.0 : r.first;
}

TEST(Density, ModeValues) {
    EXPECT_NEAR(log_density(PenaltyFamily::l1(2.0), 0.0), 0.0, 1e-15);
    EXPECT_NEAR(log_density(PenaltyFamily::l2(1.0), 0.0), -0.9189385, 1e-7);
}

TEST(Density, IntegratesToOneOnRandomSettings) {
    Rng rng = make_stream(21, 0);
    for (int t = 0; t < 20; ++t) {
        const double lambda = std::exp(std::uniform_real_distribution<double>(-3, 3.5)(rng));
        const double sigma2 = std::exp(std::uniform_real_distribution<double>(-4, 3)(rng));
        for (const auto& f : {PenaltyFamily::l1(lambda), PenaltyFamily::l2(sigma2), PenaltyFamily::l1l2(lambda, sigma2)})
            EXPECT_NEAR(integrate_density(f), 1.0, 1e-6) << describe(f);
    }
    // Far tail of the Mills ratio: sigma * lambda well above 8.
    for (double sl : {8.5, 20.0, 60.0, 300.0}) {
        const auto f = PenaltyFamily::l1l2(sl, 1.0);
        EXPECT_NEAR(integrate_density(f), 1.0, 1e-6) << sl;
    }
}

TEST(Density, SymmetricProperty) {
    Rng rng = make_stream(22, 0);
    for (int t = 0; t < 500; ++t) {
        const double x = std::normal_distribution<double>(0, 3)(rng);
        const auto f = PenaltyFamily::l1l2(0.1 + 10 * uniform01(rng), 0.01 + 5 * uniform01(rng));
        EXPECT_DOUBLE_EQ(log_density(f, x), log_density(f, -x));
    }
}

TEST(Density, LimitsOfLaplaceGaussian) {
    for (double x : {-2.0, -0.3, 0.0, 0.7, 3.0}) {
        EXPECT_NEAR(log_density(PenaltyFamily::l1l2(1e-8, 0.5), x), log_density(PenaltyFamily::l2(0.5), x), 1e-6);
        // Huge sigma^2: same shape as L1, so differences between points agree.
        const auto wide = PenaltyFamily::l1l2(2.0, 1e12);
        EXPECT_NEAR(log_density(wide, x) - log_density(wide, 0.0),
                    log_density(PenaltyFamily::l1(2.0), x) - log_density(PenaltyFamily::l1(2.0), 0.0), 1e-6);
    }
}

TEST(MillsRatio, MatchesErfcAndAsymptote) {
    for (double x : {0.0, 0.5, 2.0, 4.9, 5.1, 7.0}) {
        const double direct = std::log(0.5 * std::erfc(x / std::numbers::sqrt2)) -
                              (-0.5 * x * x - 0.5 * std::log(2 * std::numbers::pi));
        EXPECT_NEAR(log_mills_ratio(x), direct, 1e-9 * std::max(1.0, std::fabs(direct))) << x;
    }
    // Mills ratio ~ 1/x for large x.
    EXPECT_NEAR(log_mills_ratio(1e6), -std::log(1e6), 1e-9);
    EXPECT_TRUE(std::isfinite(log_normal_tail(40.0)));
}

TEST(Prox, SpecExamples) {
    EXPECT_DOUBLE_EQ(prox(PenaltyFamily::l1(1.0), 2.0, 0.5), 1.5);
    EXPECT_EQ(prox(PenaltyFamily::l1(1.0), 0.3, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(prox(PenaltyFamily::l2(1.0), 1.0, 1.0), 0.5);
}

TEST(Prox, MatchesGridSearchProperty) {
    Rng rng = make_stream(23, 0);
    for (int t = 0; t < 60; ++t) {
        const double x = std::normal_distribution<double>(0, 2)(rng);
        const double step = 0.05 + 2 * uniform01(rng);
        const double lambda = 0.1 + 5 * uniform01(rng), sigma2 = 0.05 + 3 * uniform01(rng);
        for (const auto& f : {PenaltyFamily::l1(lambda), PenaltyFamily::l2(sigma2), PenaltyFamily::l1l2(lambda, sigma2)})
            EXPECT_NEAR(prox(f, x, step), prox_by_search(f, x, step), 1e-6) << describe(f) << " x=" << x;
    }
}

TEST(Reparam, ExampleAndRoundTrip) {
    const auto t = reparam_to_total(std::numbers::sqrt2, 1.0);
    EXPECT_NEAR(t.s, 2.0, 1e-15);
    EXPECT_NEAR(t.f, 0.5, 1e-15);
    // f -> 0 approaches the pure Gaussian.
    const auto [l0, s0] = reparam_from_total(3.0, 1e-12);
    EXPECT_LT(l0, 1e-11);
    EXPECT_NEAR(s0, 1.0 / 3.0, 1e-11);
    EXPECT_THROW(reparam_from_total(3.0, 0.0), UsageError);
    Rng rng = make_stream(24, 0);
    for (int i = 0; i < 1000; ++i) {
        const double lambda = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
        const double sigma = std::exp(std::uniform_real_distribution<double>(-5, 5)(rng));
        const auto ts = reparam_to_total(lambda, sigma);
        const auto [l, s] = reparam_from_total(ts.s, ts.f);
        EXPECT_NEAR(l / lambda, 1.0, 1e-12);
        EXPECT_NEAR(s / sigma, 1.0, 1e-12);
    }
}

TEST(HyperPrior, ClosedForms) {
    for (double b : {0.1, 1.0, 3.0})
        for (double l : {0.5, 2.0}) EXPECT_NEAR(gamma_log_pdf(1.0, b, l), std::log(b) - b * l, 1e-14);
    EXPECT_NEAR(inv_gamma_log_pdf(2.0, 1.0, 1.0), -1.0, 1e-14);
    boost::math::quadrature::exp_sinh<double> q;
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_NEAR(q.integrate([](double x) { return std::exp(gamma_log_pdf(2.5, 0.7, x)); }, 0.0, inf), 1.0, 1e-6);
    EXPECT_NEAR(q.integrate([](double x) { return std::exp(inv_gamma_log_pdf(2.0, 0.5, x)); }, 0.0, inf), 1.0, 1e-6);
}

double tabulated_cdf(const PenaltyFamily& f, double x) {
    if (x < 0) return 1.0 - tabulated_cdf(f, -x);
    boost::math::quadrature::gauss_kronrod<double, 31> gk;
    return 0.5 + gk.integrate([&](double z) { return std::exp(log_density(f, z)); }, 0.0, x, 10, 1e-12);
}

TEST(Sample, ExactDrawsPassKs) {
    for (const auto& f : {PenaltyFamily::l1(3.0), PenaltyFamily::l2(0.4), PenaltyFamily::l1l2(4.0, 0.1),
                          PenaltyFamily::l1l2(0.2, 2.0), PenaltyFamily::l1l2(30.0, 1.0)}) {
        Rng rng = make_stream(25, static_cast<int>(f.kind));
        std::vector<double> x(4000);
        for (auto& v : x) v = sample(f, rng);
        const double d = ks_statistic(x, [&](double z) { return tabulated_cdf(f, z); });
        EXPECT_GT(ks_pvalue(d, x.size()), 1e-3) << describe(f) << " D=" << d;
    }
}

TEST(GroupShrinkage, RejectsGoalieOffenseAndChecksCover) {
    GroupShrinkage g;
    EXPECT_THROW(g.set(PoolGroup::Goaltender, Side::Offense, PenaltyFamily::l1(1)), UsageError);
    g.set_group(PoolGroup::Goaltender, PenaltyFamily::l1(1));
    EXPECT_TRUE(g.has(PoolGroup::Goaltender, Side::Defense));
    EXPECT_FALSE(g.has(PoolGroup::Goaltender, Side::Offense));
    Rng rng = make_stream(26, 0);
    const auto d = test::random_design(rng, 8, 10, 0.2, 4);
    EXPECT_THROW(g.require_cover(d), UsageError);
    const auto all = GroupShrinkage::uniform({PoolGroup::Center, PoolGroup::LeftWing, PoolGroup::RightWing,
                                              PoolGroup::Defense, PoolGroup::Goaltender},
                                             PenaltyFamily::l2(1));
    EXPECT_NO_THROW(all.require_cover(d));
    EXPECT_THROW(PenaltyFamily::l1(-1).validate(), UsageError);
}

}  // namespace
}  // namespace mesh
