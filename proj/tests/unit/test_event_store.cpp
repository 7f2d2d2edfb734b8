#include <gtest/gtest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "mesh/error.hpp"
#include "mesh/event_store.hpp"
#include "mesh/simulate.hpp"

namespace mesh {
namespace {

Roster fixture_roster() { return load_roster(test::fixture("roster.csv")); }

std::string header() {
    return "season,game_id,duration_s,outcome,home_team,away_team,score_state,home_skaters,away_skaters,"
           "home_goalie,away_goalie\n";
}

std::string expect_data_error(const std::string& body) {
    std::istringstream in(header() + body);
    try {
        parse_events(in, fixture_roster());
    } catch (const DataError& e) {
        return e.what();
    }
    ADD_FAILURE() << "no DataError for: " << body;
    return {};
}

TEST(EventStore, LoadsThreeRowFixture) {
    const auto events = load_events(test::fixture("three_events.csv"), fixture_roster());
    ASSERT_EQ(events.size(), 3u);
    EXPECT_EQ(events[1].outcome, Outcome::HomeGoal);
    EXPECT_EQ(events[2].outcome, Outcome::AwayGoal);
    EXPECT_EQ(events[2].score_state, ScoreState::HomeLeading);
    EXPECT_DOUBLE_EQ(events[1].duration_s, 12.25);
    EXPECT_EQ(events[1].home_skaters[0], "H6");
    EXPECT_EQ(events[0].away_goalie, "AG");
}

TEST(EventStore, FourHomeSkatersNamesRowAndRule) {
    const auto msg = expect_data_error("2010,G1,10,0,HOM,AWY,TIED,H1;H2;H3;H4,A1;A2;A3;A4;A5,HG,AG\n");
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("skater-count"), std::string::npos) << msg;
}

TEST(EventStore, ZeroDurationRejected) {
    const auto msg = expect_data_error("2010,G1,0,0,HOM,AWY,TIED,H1;H2;H3;H4;H5,A1;A2;A3;A4;A5,HG,AG\n");
    EXPECT_NE(msg.find("nonpositive duration"), std::string::npos) << msg;
}

TEST(EventStore, OtherMalformedRows) {
    expect_data_error("2010,G1,5,2,HOM,AWY,TIED,H1;H2;H3;H4;H5,A1;A2;A3;A4;A5,HG,AG\n");
    expect_data_error("2010,G1,5,0,HOM,AWY,UP,H1;H2;H3;H4;H5,A1;A2;A3;A4;A5,HG,AG\n");
    expect_data_error("2010,G1,5,0,HOM,AWY,TIED,H1;H2;H3;H4;ZZ,A1;A2;A3;A4;A5,HG,AG\n");
    expect_data_error("2010,G1,5,0,HOM,HOM,TIED,H1;H2;H3;H4;H5,A1;A2;A3;A4;A5,HG,AG\n");
    expect_data_error("2010,G1,5,0,HOM,AWY,TIED,H1;H1;H3;H4;H5,A1;A2;A3;A4;A5,HG,AG\n");
    expect_data_error("2010,G1,5,0,HOM,AWY,TIED,H1;H2;H3;H4;H5,A1;A2;A3;A4;A5,H1,AG\n");
    expect_data_error("2010,G1,abc,0,HOM,AWY,TIED,H1;H2;H3;H4;H5,A1;A2;A3;A4;A5,HG,AG\n");
    expect_data_error("2010,G1,5,0,HOM,AWY,TIED,H1;H2;H3;H4;H5\n");
    std::istringstream bad_header("season,game\n");
    EXPECT_THROW(parse_events(bad_header, fixture_roster()), DataError);
}

TEST(EventStore, RoundTripIsIdentity) {
    LeagueRecipe r;
    r.n_teams = 4;
    r.games_per_team = 3;
    r.seed = 11;
    const auto league = synthetic_league(r);
    std::stringstream ev, ro;
    write_events(ev, league.events);
    write_roster(ro, league.roster);
    const auto roster = parse_roster(ro);
    EXPECT_EQ(roster.size(), league.roster.size());
    EXPECT_EQ(parse_events(ev, roster), league.events);
}

TEST(EventCounts, PublishedTotals) {
    const auto c = counts_from_totals(10935, 1301799, 11981);
    EXPECT_DOUBLE_EQ(c.percentages[0], 0.83);
    EXPECT_DOUBLE_EQ(c.percentages[1], 98.27);
    EXPECT_DOUBLE_EQ(c.percentages[2], 0.90);
}

TEST(EventCounts, OneOfEachAndSkewed) {
    const auto events = load_events(test::fixture("three_events.csv"), fixture_roster());
    const auto c = summarize(events);
    for (double p : c.percentages) EXPECT_DOUBLE_EQ(p, 33.33);
    const auto s = counts_from_totals(0, 99, 1);
    EXPECT_DOUBLE_EQ(s.percentages[0], 0.0);
    EXPECT_DOUBLE_EQ(s.percentages[1], 99.0);
    EXPECT_DOUBLE_EQ(s.percentages[2], 1.0);
    EXPECT_THROW(counts_from_totals(0, 0, 0), DataError);
}

TEST(EventCounts, PercentagesSumTo100Property) {
    Rng rng = make_stream(3, 0);
    std::uniform_int_distribution<std::uint64_t> big(0, 2'000'000), small(0, 50);
    for (int t = 0; t < 2000; ++t) {
        const auto a = t % 2 ? big(rng) : small(rng);
        const auto n = big(rng) + 1;
        const auto h = t % 3 ? small(rng) : big(rng);
        const auto c = counts_from_totals(a, n, h);
        const double sum = c.percentages[0] + c.percentages[1] + c.percentages[2];
        EXPECT_NEAR(sum, 100.0, 0.02 + 1e-9);
    }
}

std::vector<ShiftEvent> ten_games() {
    const auto base = load_events(test::fixture("three_events.csv"), fixture_roster());
    std::vector<ShiftEvent> out;
    for (int g = 0; g < 10; ++g)
        for (auto e : base) {
            e.game_id = "G" + std::to_string(g);
            out.push_back(e);
        }
    return out;
}

TEST(Split, TenGamesEightTwoDeterministic) {
    const auto events = ten_games();
    const auto a = split_by_game(events, 0.8, 7);
    const auto b = split_by_game(events, 0.8, 7);
    EXPECT_EQ(a.train_games.size(), 8u);
    EXPECT_EQ(a.test_games.size(), 2u);
    EXPECT_EQ(a.train_games, b.train_games);
    EXPECT_EQ(a.test_games, b.test_games);
}

TEST(Split, FullFractionLeavesTestEmpty) {
    const auto s = split_by_game(ten_games(), 1.0, 7);
    EXPECT_EQ(s.train_games.size(), 10u);
    EXPECT_TRUE(s.test_games.empty());
    EXPECT_THROW(split_by_game(ten_games(), 0.0, 7), UsageError);
}

TEST(Split, SeedsGiveDifferentPartitionsOfEqualSize) {
    const auto events = ten_games();
    const auto a = split_by_game(events, 0.8, 7);
    std::size_t differing = 0;
    for (std::uint64_t seed = 8; seed < 28; ++seed) {
        const auto b = split_by_game(events, 0.8, seed);
        EXPECT_EQ(b.train_games.size(), 8u);
        differing += b.test_games != a.test_games;
    }
    EXPECT_GE(differing, 15u);
}

TEST(Split, NoGameStraddlesProperty) {
    LeagueRecipe r;
    r.n_teams = 6;
    r.games_per_team = 10;
    const auto league = synthetic_league(r);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = split_by_game(league.events, 0.7, seed);
        for (const auto& e : league.events)
            EXPECT_NE(s.train_games.count(e.game_id), s.test_games.count(e.game_id));
    }
}

}  // namespace
}  // namespace mesh
