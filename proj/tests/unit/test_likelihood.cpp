#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "mesh/error.hpp"
#include "mesh/likelihood.hpp"

namespace mesh {
namespace {

// One row: home {0 skater, 1 goalie}, away {2 skater, 3 goalie}.
Design tiny(Outcome y, double t) {
    Design::Builder b;
    for (int p = 0; p < 4; ++p) {
        Predictor pr;
        pr.label = "p" + std::to_string(p);
        pr.group = p % 2 ? PoolGroup::Goaltender : PoolGroup::Center;
        pr.defense_only = p % 2 == 1;
        b.add_predictor(pr);
    }
    b.add_row({0, 1}, {2, 3}, ScoreState::Tied, t, y);
    return std::move(b).build();
}

double max_rel_fd_error(const Design& d, const Coefficients& c) {
    const ParameterLayout layout(d);
    const auto g = gradient(d, c);
    double worst = 0.0;
    for (std::size_t j = 0; j < layout.size(); ++j) {
        auto cp = c, cm = c;
        get(cp, layout[j]) += 1e-5;
        get(cm, layout[j]) -= 1e-5;
        const double fd = (total_loglik(d, cp) - total_loglik(d, cm)) / 2e-5;
        worst = std::max(worst, std::fabs(fd - g[j]) / std::max(1.0, std::fabs(g[j])));
    }
    return worst;
}

TEST(Rates, BaseRateIsRoughlyTwoPointFourPerHour) {
    const auto d = tiny(Outcome::NoGoal, 40);
    const auto c = Coefficients::zeros(d, -7.3);
    const auto r = rates(d.row(0), c);
    EXPECT_NEAR(r.home, 6.7554e-4, 1e-8);
    EXPECT_DOUBLE_EQ(r.home, r.away);
    EXPECT_NEAR(r.home * 3600.0, 2.43, 0.005);
}

TEST(Rates, OffenseAndDefenseEnterTheRightSide) {
    const auto d = tiny(Outcome::NoGoal, 40);
    auto c = Coefficients::zeros(d, -7.3);
    const auto r0 = rates(d.row(0), c);
    c.omega[0] = 0.1;
    const auto r1 = rates(d.row(0), c);
    EXPECT_NEAR(r1.home / r0.home, std::exp(0.1), 1e-14);
    EXPECT_DOUBLE_EQ(r1.away, r0.away);
    c.omega[0] = 0.0;
    c.delta[3] = -0.2;  // away goalie
    const auto r2 = rates(d.row(0), c);
    EXPECT_NEAR(r2.home / r0.home, std::exp(-0.2), 1e-14);
    EXPECT_DOUBLE_EQ(r2.away, r0.away);
}

TEST(Rates, NonfiniteRateRaises) {
    const auto d = tiny(Outcome::NoGoal, 40);
    auto c = Coefficients::zeros(d, 800.0);
    EXPECT_THROW(rates(d.row(0), c), NumericalError);
}

TEST(EventLoglik, DirectEvaluations) {
    const double lam = std::exp(-7.3);
    {
        const auto d = tiny(Outcome::NoGoal, 40);
        EXPECT_NEAR(event_loglik(d.row(0), Coefficients::zeros(d, -7.3)), -2 * lam * 40, 1e-12);
        EXPECT_NEAR(-2 * lam * 40, -0.0540432, 5e-7);
    }
    {
        const auto d = tiny(Outcome::HomeGoal, 40);
        EXPECT_NEAR(event_loglik(d.row(0), Coefficients::zeros(d, -7.3)), -7.3 - 2 * lam * 40, 1e-12);
    }
    {
        const auto d = tiny(Outcome::AwayGoal, 1e-12);
        auto c = Coefficients::zeros(d, -7.3);
        c.away_intercept[1] = -6.0;
        EXPECT_NEAR(event_loglik(d.row(0), c), -6.0, 1e-9);
    }
}

TEST(Gradient, SingleNoGoalEvent) {
    const auto d = tiny(Outcome::NoGoal, 40);
    const auto c = Coefficients::zeros(d, -7.3);
    const auto e = evaluate(d, c);
    EXPECT_NEAR(e.gradient.home_intercept[1], -std::exp(-7.3) * 40, 1e-12);
    EXPECT_NEAR(e.gradient.home_intercept[1], -0.0270216, 5e-7);
    EXPECT_DOUBLE_EQ(e.gradient.home_intercept[0], 0.0);
    EXPECT_DOUBLE_EQ(e.loglik, total_loglik(d, c));
}

TEST(Gradient, GoalieOmegaNotFree) {
    const auto d = tiny(Outcome::NoGoal, 40);
    const ParameterLayout layout(d);
    EXPECT_EQ(layout.size(), 6u + 2 + 1 + 2 + 1);
    for (const auto& r : layout.refs())
        if (r.kind == ParamKind::Omega) EXPECT_FALSE(d.predictor(r.index).defense_only);
    EXPECT_EQ(gradient(d, Coefficients::zeros(d)).size(), layout.size());
}

TEST(Gradient, RandomSmallInstanceMatchesFiniteDifferences) {
    Rng rng = make_stream(13, 0);
    const auto d = test::random_design(rng, 10, 100, 0.25, 5);
    const auto c = test::random_coefficients(d, rng);
    EXPECT_LE(max_rel_fd_error(d, c), 1e-6);
}

TEST(Gradient, FiniteDifferencePropertyAcrossSizes) {
    for (std::uint64_t s = 0; s < 8; ++s) {
        Rng rng = make_stream(100 + s, 0);
        const auto d = test::random_design(rng, 5 + 5 * s, 50 + 100 * s, 0.2, 4);
        const auto c = test::random_coefficients(d, rng, 0.2, -2.0);
        EXPECT_LE(max_rel_fd_error(d, c), 1e-6) << "instance " << s;
    }
}

TEST(Gradient, ChunkedMatchesRowSum) {
    Rng rng = make_stream(14, 0);
    const auto d = test::random_design(rng, 12, 10000, 0.2);
    const auto c = test::random_coefficients(d, rng);
    double direct = 0.0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) direct += event_loglik(d.row(i), c);
    EXPECT_NEAR(total_loglik(d, c), direct, 1e-9 * std::fabs(direct));
}

TEST(Layout, FlattenRoundTrips) {
    Rng rng = make_stream(15, 0);
    const auto d = test::random_design(rng, 9, 20, 0.3, 3);
    const auto c = test::random_coefficients(d, rng);
    const ParameterLayout layout(d);
    auto back = Coefficients::zeros(d);
    layout.unflatten(layout.flatten(c), back);
    EXPECT_EQ(back, c);
}

TEST(Loglik, ShiftScaleIdentity) {
    // Predictors 0..3 only ever appear on the home side.
    Rng rng = make_stream(16, 0);
    Design::Builder b;
    for (int p = 0; p < 6; ++p) {
        Predictor pr;
        pr.label = "q" + std::to_string(p);
        pr.group = PoolGroup::Center;
        b.add_predictor(pr);
    }
    for (int i = 0; i < 300; ++i) {
        std::vector<std::uint32_t> home{static_cast<std::uint32_t>(i % 4)}, away{static_cast<std::uint32_t>(4 + i % 2)};
        const double u = uniform01(rng);
        b.add_row(home, away, ScoreState::HomeTrailing, 5 + 30 * uniform01(rng),
                  u < 0.2 ? Outcome::HomeGoal : u < 0.35 ? Outcome::AwayGoal : Outcome::NoGoal);
    }
    const auto d = std::move(b).build();
    auto c = test::random_coefficients(d, rng, 0.3, -3.0);
    const double before = total_loglik(d, c);
    const double shift = 0.37;
    c.home_intercept[2] += shift;
    for (int p = 0; p < 4; ++p) c.omega[p] -= shift;
    EXPECT_NEAR(total_loglik(d, c), before, 1e-9 * std::fabs(before));
}

TEST(Loglik, ConcaveAtMidpointsProperty) {
    Rng rng = make_stream(17, 0);
    const auto d = test::random_design(rng, 15, 400, 0.2, 5);
    for (int t = 0; t < 50; ++t) {
        const auto a = test::random_coefficients(d, rng, 0.5);
        const auto b = test::random_coefficients(d, rng, 0.5);
        auto m = a;
        const ParameterLayout layout(d);
        for (const auto& r : layout.refs()) get(m, r) = 0.5 * (get(a, r) + get(b, r));
        EXPECT_GE(total_loglik(d, m), 0.5 * (total_loglik(d, a) + total_loglik(d, b)) - 1e-9);
    }
}

TEST(Coefficients, ValidateRejectsGoalieOffense) {
    const auto d = tiny(Outcome::NoGoal, 1);
    auto c = Coefficients::zeros(d);
    c.omega[1] = 0.1;
    EXPECT_THROW(c.validate(d), DataError);
    c.omega[1] = 0.0;
    c.delta[0] = std::nan("");
    EXPECT_THROW(c.validate(d), DataError);
}

}  // namespace
}  // namespace mesh
