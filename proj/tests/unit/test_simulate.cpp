#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "mesh/error.hpp"
#include "mesh/fit_mcmc.hpp"
#include "mesh/fit_mle.hpp"
#include "mesh/parallel.hpp"
#include "mesh/simulate.hpp"

namespace mesh {
namespace {

struct Law {
    double p_home, p_away, mean_t;
};

Law closed_form(double lh, double la, double t) {
    const double L = lh + la, surv = -std::expm1(-L * t);
    return {lh / L * surv, la / L * surv, surv / L};
}

TEST(SampleEvent, MatchesClosedFormLaw) {
    const std::vector<std::array<double, 3>> settings{
        {2e-3, 1e-3, 40}, {6.7554e-4, 6.7554e-4, 40}, {1e-2, 1e-2, 1e6}, {0.05, 0.01, 10}, {1e-4, 5e-3, 300}};
    Rng rng = make_stream(81, 0);
    const int n = 100000;
    for (const auto& [lh, la, t] : settings) {
        const auto law = closed_form(lh, la, t);
        double nh = 0, na = 0, st = 0, st2 = 0;
        for (int i = 0; i < n; ++i) {
            const auto e = sample_event({lh, la}, t, rng);
            nh += e.outcome == Outcome::HomeGoal;
            na += e.outcome == Outcome::AwayGoal;
            st += e.time_s;
            st2 += e.time_s * e.time_s;
        }
        EXPECT_NEAR(nh / n, law.p_home, 3 * std::sqrt(law.p_home * (1 - law.p_home) / n));
        EXPECT_NEAR(na / n, law.p_away, 3 * std::sqrt(law.p_away * (1 - law.p_away) / n));
        const double m = st / n, sd = std::sqrt(st2 / n - m * m);
        EXPECT_NEAR(m, law.mean_t, 3 * sd / std::sqrt(n));
    }
    EXPECT_NEAR(closed_form(2e-3, 1e-3, 40).p_home, 0.075387, 1e-6);
}

TEST(SampleEvent, SymmetricAndBoundary) {
    Rng rng = make_stream(82, 0);
    const int n = 100000;
    double nh = 0;
    for (int i = 0; i < n; ++i) nh += sample_event({1e-3, 1e-3}, 1e12, rng).outcome == Outcome::HomeGoal;
    EXPECT_NEAR(nh / n, 0.5, 3 * std::sqrt(0.25 / n));
    for (int i = 0; i < 1000; ++i) {
        const auto e = sample_event({1e-3, 1e-3}, 1e-12, rng);
        EXPECT_EQ(e.outcome, Outcome::NoGoal);
    }
}

TEST(League, SameSeedIdenticalAndThreadFree) {
    LeagueRecipe r;
    r.n_teams = 6;
    r.games_per_team = 6;
    r.seed = 83;
    r.truth.set_group(PoolGroup::Center, PenaltyFamily::l2(0.01));
    const auto a = synthetic_league(r);
    set_thread_count(4);
    const auto b = synthetic_league(r);
    set_thread_count(1);
    EXPECT_EQ(a.events, b.events);
    r.seed = 84;
    EXPECT_NE(synthetic_league(r).events, a.events);
}

TEST(League, NoGoalFractionNearPublishedScale) {
    LeagueRecipe r;
    r.seed = 85;
    r.games_per_team = 20;
    const auto lg = synthetic_league(r);
    const auto c = summarize(lg.events);
    EXPECT_NEAR(c.percentages[1], 98.0, 1.0);
}

TEST(League, ZeroCoefficientGoalTotalsMatchPoissonExpectation) {
    LeagueRecipe r;
    r.seed = 86;
    r.games_per_team = 10;
    const auto lg = synthetic_league(r);
    EffectTable zero;
    zero.home_intercept = {-7.3, -7.3, -7.3};
    zero.away_intercept = {-7.3, -7.3, -7.3};
    const auto sched = ShiftSchedule::from_events(lg.events);
    const auto sim = simulate_schedule(sched, zero, 1);
    double expected = 0.0;
    const double lam = std::exp(-7.3);
    for (const auto& e : sched.templates) expected += -std::expm1(-2 * lam * e.duration_s);
    double goals = 0.0;
    for (const auto& e : sim) goals += e.outcome != Outcome::NoGoal;
    EXPECT_NEAR(goals, expected, 4 * std::sqrt(expected));
    EXPECT_TRUE(simulate_schedule(ShiftSchedule{}, zero, 1).empty());
}

TEST(EffectTable, CsvRoundTripAndDesignMapping) {
    LeagueRecipe r;
    r.n_teams = 4;
    r.games_per_team = 4;
    r.truth.set_group(PoolGroup::Center, PenaltyFamily::l2(0.04));
    r.planted_pairs = {{synthetic_player_id(0, Position::Center, 1), synthetic_player_id(0, Position::LeftWing, 1), 0.2, -0.1}};
    const auto lg = synthetic_league(r);
    std::stringstream ss;
    lg.truth.write_csv(ss);
    const auto back = EffectTable::read_csv(ss);
    EXPECT_EQ(back.players, lg.truth.players);
    EXPECT_EQ(back.pairs, lg.truth.pairs);
    EXPECT_EQ(back.home_intercept, lg.truth.home_intercept);
    const auto d = build_design(lg.events, lg.roster, ModelSpec::players_plus_pairs(10));
    const auto c = lg.truth.to_coefficients(d);
    for (std::size_t i = 0; i < d.n_rows(); i += 97) {
        const auto a = rates(d.row(i), c), b = lg.truth.rates(lg.events[i]);
        EXPECT_NEAR(a.home, b.home, 1e-15);
        EXPECT_NEAR(a.away, b.away, 1e-15);
    }
}

TEST(RoundTrip, RefitRecoversIntercepts) {
    LeagueRecipe r;
    r.seed = 87;
    r.n_teams = 10;
    r.games_per_team = 40;
    const auto lg = synthetic_league(r);
    const auto d = build_design(lg.events, lg.roster, ModelSpec::score_only());
    const auto fit = fit_penalized(d, GroupShrinkage{}, FitOptions{}, poisson_start(d));
    const auto table = EffectTable::from(d.registry(), fit.coefficients);
    const auto sim = simulate_schedule(ShiftSchedule::from_events(lg.events), table, 2);
    const auto d2 = build_design(sim, lg.roster, ModelSpec::score_only());
    const auto refit = fit_penalized(d2, GroupShrinkage{}, FitOptions{}, poisson_start(d2));
    // Each log-rate estimate has standard error about 1/sqrt(goals).
    auto goals = [](const Design& x, std::size_t state, Outcome y) {
        double n = 0.0;
        for (std::size_t i = 0; i < x.n_rows(); ++i)
            n += x.row(i).outcome == y && static_cast<std::size_t>(x.row(i).score_state) == state;
        return n;
    };
    for (std::size_t s = 0; s < 3; ++s) {
        const double se_h = std::sqrt(1.0 / goals(d, s, Outcome::HomeGoal) + 1.0 / goals(d2, s, Outcome::HomeGoal));
        const double se_a = std::sqrt(1.0 / goals(d, s, Outcome::AwayGoal) + 1.0 / goals(d2, s, Outcome::AwayGoal));
        EXPECT_NEAR(refit.coefficients.home_intercept[s], fit.coefficients.home_intercept[s], 4.0 * se_h);
        EXPECT_NEAR(refit.coefficients.away_intercept[s], fit.coefficients.away_intercept[s], 4.0 * se_a);
    }
}

TEST(RoundTrip, MoreEventsShrinkError) {
    const std::vector<PoolGroup> groups{PoolGroup::Center, PoolGroup::LeftWing, PoolGroup::RightWing,
                                        PoolGroup::Defense, PoolGroup::Goaltender};
    auto error_at = [&](std::size_t games) {
        LeagueRecipe r;
        r.seed = 88;
        r.n_teams = 4;
        r.games_per_team = games;
        for (auto g : groups) r.truth.set_group(g, PenaltyFamily::l2(0.04));
        const auto lg = synthetic_league(r);
        const auto d = build_design(lg.events, lg.roster, ModelSpec::players());
        const auto fit = fit_penalized(d, GroupShrinkage::uniform(groups, PenaltyFamily::l2(0.04)), FitOptions{},
                                       poisson_start(d));
        const auto truth = lg.truth.to_coefficients(d);
        double se = 0.0;
        for (std::size_t p = 0; p < d.n_predictors(); ++p)
            se += std::pow(fit.coefficients.delta[p] - truth.delta[p], 2) +
                  std::pow(fit.coefficients.omega[p] - truth.omega[p], 2);
        return std::make_pair(se, lg.events.size());
    };
    const auto [small_err, small_n] = error_at(25);
    const auto [big_err, big_n] = error_at(200);
    EXPECT_GT(big_n, 7 * small_n);
    EXPECT_LT(big_err, small_err);
}

TEST(Predictive, SelfConsistentCoverage) {
    LeagueRecipe r;
    r.seed = 89;
    r.n_teams = 6;
    r.games_per_team = 4;
    const auto lg = synthetic_league(r);
    int home = 0, away = 0, both = 0;
    for (std::uint64_t k = 0; k < 100; ++k) {
        const auto obs = simulate_schedule(ShiftSchedule::from_events(lg.events), lg.truth, 5000 + k);
        const auto rep = predictive_check(lg.truth, obs, 200, k);
        home += rep.home.covered;
        away += rep.away.covered;
        both += rep.verdict;
    }
    // 95% per side, about 90% jointly; bounds sit near 2.5 binomial sd below.
    EXPECT_GE(home, 89);
    EXPECT_GE(away, 89);
    EXPECT_GE(both, 82);
}

TEST(Predictive, IntervalsWidenWithScheduleLength) {
    LeagueRecipe r;
    r.seed = 90;
    r.n_teams = 6;
    r.games_per_team = 24;
    const auto lg = synthetic_league(r);
    std::vector<double> widths;
    for (std::size_t n : {lg.events.size() / 8, lg.events.size() / 2, lg.events.size()}) {
        const auto rep = predictive_check(lg.truth, std::span(lg.events).first(n), 300, 1);
        widths.push_back(rep.home.hi - rep.home.lo);
    }
    EXPECT_LT(widths[0], widths[1]);
    EXPECT_LT(widths[1], widths[2]);
}

TEST(Predictive, SingleDrawEqualsFixedTableCheck) {
    LeagueRecipe r;
    r.seed = 91;
    r.n_teams = 4;
    r.games_per_team = 4;
    const auto lg = synthetic_league(r);
    const auto d = build_design(lg.events, lg.roster, ModelSpec::players());
    const auto truth = lg.truth.to_coefficients(d);
    PosteriorSamples s;
    s.registry = d.registry();
    s.n_draws = 1;
    for (std::size_t k = 0; k < 3; ++k) s.values.push_back(truth.home_intercept[k]);
    for (std::size_t k = 0; k < 3; ++k) s.values.push_back(truth.away_intercept[k]);
    for (std::size_t p = 0; p < d.n_predictors(); ++p) {
        s.values.push_back(truth.omega[p]);
        s.values.push_back(truth.delta[p]);
    }
    s.columns.resize(s.values.size());
    const auto a = posterior_predictive_check(s, lg.events, 150, 7);
    const auto b = predictive_check(EffectTable::from(d.registry(), truth), lg.events, 150, 7);
    EXPECT_EQ(a.home.lo, b.home.lo);
    EXPECT_EQ(a.home.hi, b.home.hi);
    EXPECT_EQ(a.away.lo, b.away.lo);
    EXPECT_GT(a.home.hi, a.home.lo);
}

TEST(Recipe, InfeasibleRejected) {
    LeagueRecipe r;
    r.per_position = {1, 1, 1, 1, 1};
    EXPECT_THROW(synthetic_league(r), UsageError);
    r = LeagueRecipe{};
    r.planted = {{"nobody", 0.1, 0.0}};
    EXPECT_THROW(synthetic_league(r), UsageError);
}

}  // namespace
}  // namespace mesh
