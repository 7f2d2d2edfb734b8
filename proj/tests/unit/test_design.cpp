#include <gtest/gtest.h>

#include <algorithm>

#include "helpers.hpp"
#include "mesh/design.hpp"
#include "mesh/error.hpp"
#include "mesh/simulate.hpp"

namespace mesh {
namespace {

SyntheticLeague small_league(std::size_t teams = 6, std::size_t games = 6, std::uint64_t seed = 2) {
    LeagueRecipe r;
    r.n_teams = teams;
    r.games_per_team = games;
    r.seed = seed;
    return synthetic_league(r);
}

bool contains(std::span<const std::uint32_t> s, std::uint32_t v) { return std::find(s.begin(), s.end(), v) != s.end(); }

TEST(Design, ScoreOnlyRowsAreEmpty) {
    const auto lg = small_league();
    const auto d = build_design(lg.events, lg.roster, ModelSpec::score_only());
    EXPECT_EQ(d.n_predictors(), 0u);
    EXPECT_EQ(d.n_rows(), lg.events.size());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        EXPECT_TRUE(d.row(i).home.empty());
        EXPECT_TRUE(d.row(i).away.empty());
    }
}

TEST(Design, PlayersRowHasSixPerSide) {
    const auto lg = small_league();
    const auto d = build_design(std::span(lg.events).first(1), lg.roster, ModelSpec::players());
    ASSERT_EQ(d.n_rows(), 1u);
    EXPECT_EQ(d.row(0).home.size(), 6u);
    EXPECT_EQ(d.row(0).away.size(), 6u);
    EXPECT_EQ(d.row(0).score_state, lg.events[0].score_state);
    EXPECT_DOUBLE_EQ(d.row(0).duration_s, lg.events[0].duration_s);
}

TEST(Design, TeamsRegistryCoversLeague) {
    const auto lg = small_league(30, 4);
    const auto d = build_design(lg.events, lg.roster, ModelSpec::teams());
    EXPECT_EQ(d.n_predictors(), 30u);
    for (const auto& p : d.registry()) EXPECT_EQ(p.group, PoolGroup::Team);
}

TEST(Design, GoaliesOnTheirOwnSideProperty) {
    const auto lg = small_league();
    const auto d = build_design(lg.events, lg.roster, ModelSpec::players());
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const auto& e = lg.events[i];
        const auto r = d.row(i);
        EXPECT_TRUE(contains(r.home, *d.find_player(e.home_goalie)));
        EXPECT_TRUE(contains(r.away, *d.find_player(e.away_goalie)));
        EXPECT_FALSE(contains(r.away, *d.find_player(e.home_goalie)));
    }
    for (const auto& p : d.registry())
        EXPECT_EQ(p.defense_only, p.group == PoolGroup::Goaltender) << p.label;
}

TEST(Design, RegistryOrderStableAndSorted) {
    const auto lg = small_league();
    const auto spec = ModelSpec::players(true);
    const auto a = build_design(lg.events, lg.roster, spec);
    const auto b = build_design(lg.events, lg.roster, spec);
    ASSERT_EQ(a.n_predictors(), b.n_predictors());
    for (std::size_t p = 0; p < a.n_predictors(); ++p) EXPECT_EQ(a.predictor(p).label, b.predictor(p).label);
    std::size_t teams = 0;
    while (teams < a.n_predictors() && a.predictor(teams).kind == PredictorKind::Team) ++teams;
    EXPECT_EQ(teams, 6u);
    for (std::size_t p = teams + 1; p < a.n_predictors(); ++p) {
        EXPECT_EQ(a.predictor(p).kind, PredictorKind::Player);
        EXPECT_LT(a.predictor(p - 1).label, a.predictor(p).label);
    }
}

TEST(Design, WingersPoolSeparately) {
    const auto lg = small_league();
    const auto d = build_design(lg.events, lg.roster, ModelSpec::players());
    EXPECT_EQ(d.predictor(*d.find_player(synthetic_player_id(0, Position::LeftWing, 1))).group, PoolGroup::LeftWing);
    EXPECT_EQ(d.predictor(*d.find_player(synthetic_player_id(0, Position::RightWing, 1))).group,
              PoolGroup::RightWing);
}

TEST(Design, GoalieInSkaterSlotRejected) {
    auto lg = small_league();
    std::swap(lg.events[0].home_skaters[0], lg.events[0].home_goalie);
    EXPECT_THROW(build_design(lg.events, lg.roster, ModelSpec::players()), DataError);
}

TEST(Design, SubsetGamesKeepsRegistry) {
    const auto lg = small_league();
    const auto d = build_design(lg.events, lg.roster, ModelSpec::players());
    const auto split = split_by_game(lg.events, 0.5, 3);
    const auto tr = d.subset_games(split.train_games), te = d.subset_games(split.test_games);
    EXPECT_EQ(tr.n_predictors(), d.n_predictors());
    EXPECT_EQ(tr.n_rows() + te.n_rows(), d.n_rows());
}

// Pair construction on hand-made events.
struct PairFixture {
    Roster roster;
    std::vector<ShiftEvent> events;
    PairFixture() {
        const char* ids[] = {"C1", "L1", "R1", "D1", "D2", "G1", "C2", "L2", "R2", "D3", "D4", "G2", "C9"};
        const Position pos[] = {Position::Center,  Position::LeftWing,   Position::RightWing, Position::Defense,
                                Position::Defense, Position::Goaltender, Position::Center,    Position::LeftWing,
                                Position::RightWing, Position::Defense,  Position::Defense,   Position::Goaltender,
                                Position::Center};
        for (std::size_t i = 0; i < 13; ++i) roster.add(ids[i], {ids[i], pos[i]});
        ShiftEvent e;
        e.season = "S";
        e.game_id = "G";
        e.duration_s = 10;
        e.home_team = "H";
        e.away_team = "A";
        e.home_skaters = {"C1", "L1", "R1", "D1", "D2"};
        e.away_skaters = {"C2", "L2", "R2", "D3", "D4"};
        e.home_goalie = "G1";
        e.away_goalie = "G2";
        events = {e, e};
        e.home_skaters[0] = "C9";
        e.away_skaters = {"C1", "L2", "R2", "D3", "D4"};  // C1 switches sides
        events.push_back(e);
    }
};

TEST(Pairs, ForwardsEligibleForwardDefenseNot) {
    PairFixture f;
    const auto pairs = enumerate_pairs(f.events, f.roster, 27);
    auto find = [&](const std::string& a, const std::string& b) {
        return std::find_if(pairs.begin(), pairs.end(), [&](const PlayerPair& p) {
            return p.first == std::min(a, b) && p.second == std::max(a, b);
        });
    };
    ASSERT_NE(find("C1", "L1"), pairs.end());
    EXPECT_EQ(find("C1", "L1")->shared_events, 2u);
    EXPECT_DOUBLE_EQ(find("C1", "L1")->shared_seconds, 20.0);
    EXPECT_NE(find("D1", "D2"), pairs.end());
    EXPECT_EQ(find("C1", "D1"), pairs.end());
    EXPECT_EQ(find("G1", "D1"), pairs.end());
    // Never together: ranked after every co-occurring pair.
    const auto never = find("C9", "C2");
    ASSERT_NE(never, pairs.end());
    EXPECT_EQ(never->shared_events, 0u);
    for (auto it = never; it != pairs.end(); ++it) EXPECT_EQ(it->shared_events, 0u);
}

TEST(Pairs, AttachIsAppendOnlyAndSideAware) {
    PairFixture f;
    const auto base = build_design(f.events, f.roster, ModelSpec::players());
    const auto pairs = enumerate_pairs(f.events, f.roster, 20);
    const auto d = attach_pairs(base, pairs);
    ASSERT_EQ(d.n_predictors(), base.n_predictors() + 20);
    for (std::size_t p = 0; p < base.n_predictors(); ++p) EXPECT_EQ(d.predictor(p).label, base.predictor(p).label);
    const auto c1l1 = *d.find("pair:C1+L1");
    EXPECT_TRUE(contains(d.row(0).home, c1l1));
    EXPECT_FALSE(contains(d.row(0).away, c1l1));
    // Row 2 has C1 away and L1 home: no pair index anywhere.
    EXPECT_FALSE(contains(d.row(2).home, c1l1));
    EXPECT_FALSE(contains(d.row(2).away, c1l1));
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const auto r0 = base.row(i), r1 = d.row(i);
        for (auto p : r0.home) EXPECT_TRUE(contains(r1.home, p));
        for (auto p : r0.away) EXPECT_TRUE(contains(r1.away, p));
    }
}

TEST(Pairs, ThousandPairsGrowRegistryByThousand) {
    const auto lg = small_league(4, 4);
    const auto base = build_design(lg.events, lg.roster, ModelSpec::players());
    const auto d = build_design(lg.events, lg.roster, ModelSpec::players_plus_pairs(1000));
    EXPECT_EQ(d.n_predictors(), base.n_predictors() + 1000);
    for (std::size_t p = base.n_predictors(); p < d.n_predictors(); ++p)
        EXPECT_EQ(d.predictor(p).group, PoolGroup::Pair);
}

TEST(Pairs, TooManyRequestedIsUsageError) {
    PairFixture f;
    EXPECT_THROW(enumerate_pairs(f.events, f.roster, 10000), UsageError);
}

}  // namespace
}  // namespace mesh
