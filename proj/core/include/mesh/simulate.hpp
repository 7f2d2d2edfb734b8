#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mesh/event_store.hpp"
#include "mesh/likelihood.hpp"
#include "mesh/rng.hpp"
#include "mesh/shrinkage.hpp"

namespace mesh {

struct PosteriorSamples;

struct SampledEvent {
    Outcome outcome = Outcome::NoGoal;
    double time_s = 0.0;
};

/// Race of two exponential clocks against the censoring time.
SampledEvent sample_event(const RatePair& rates, double censor_t, Rng& rng);

/// Coefficients keyed by player id, team id and pair, independent of any
/// design's index order.
struct EffectTable {
    using Effect = std::pair<double, double>;  // (omega, delta)

    std::array<double, kScoreStates> home_intercept{};
    std::array<double, kScoreStates> away_intercept{};
    std::unordered_map<std::string, Effect> players;
    std::unordered_map<std::string, Effect> teams;
    std::map<std::pair<std::string, std::string>, Effect> pairs;  // ids in ascending order
    bool has_players = false;  // on-ice players must be known
    bool has_teams = false;

    static EffectTable from(const std::vector<Predictor>& registry, const Coefficients& c);
    /// Labels absent from the table map to zero.
    Coefficients to_coefficients(const Design& design) const;

    LinearPredictor linear_predictor(const ShiftEvent& e) const;
    RatePair rates(const ShiftEvent& e) const;

    void write_csv(std::ostream& out) const;
    static EffectTable read_csv(std::istream& in);
};

/// Event templates; duration_s is the censoring time and outcome is ignored.
struct ShiftSchedule {
    std::vector<ShiftEvent> templates;

    static ShiftSchedule from_events(std::span<const ShiftEvent> events);
};

/// One sampled event per template. Games use independent streams derived
/// from `seed`, so output does not depend on the thread count.
std::vector<ShiftEvent> simulate_schedule(const ShiftSchedule& schedule, const EffectTable& effects,
                                          std::uint64_t seed);

struct PlantedEffect {
    std::string player;
    double omega = 0.0;
    double delta = 0.0;
};

struct PlantedPair {
    std::string first;
    std::string second;
    double omega = 0.0;
    double delta = 0.0;
};

struct LeagueRecipe {
    std::size_t n_teams = 30;
    std::array<std::size_t, 5> per_position{4, 4, 4, 6, 2};  // C L R D G per team
    GroupShrinkage truth;  // generator per (group, side); absent slots are zero
    std::vector<PlantedEffect> planted;
    std::vector<PlantedPair> planted_pairs;
    double duration_median_s = 12.0;
    double duration_log_sd = 0.7;
    std::size_t games_per_team = 82;
    double game_seconds = 2400.0;
    std::array<double, kScoreStates> home_intercept{-7.3, -7.3, -7.3};
    std::array<double, kScoreStates> away_intercept{-7.3, -7.3, -7.3};
    double starter_share = 0.75;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticLeague {
    std::vector<ShiftEvent> events;
    EffectTable truth;
    Roster roster;
    std::vector<std::string> teams;
    std::unordered_map<std::string, std::string> player_team;
};

std::string synthetic_team_id(std::size_t team);
std::string synthetic_player_id(std::size_t team, Position pos, std::size_t k);  // k from 1

SyntheticLeague synthetic_league(const LeagueRecipe& recipe);

struct GoalInterval {
    std::string label;
    double observed = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool covered = false;
};

struct PpcReport {
    GoalInterval home;
    GoalInterval away;
    std::vector<GoalInterval> teams;  // goals scored by each team
    bool verdict = false;             // home and away totals covered
    std::size_t draws_used = 0;
};

/// Simulates the withheld schedule `simulations` times, spreading the runs
/// evenly over the retained draws, and checks the observed goal totals
/// against the 95% intervals.
PpcReport posterior_predictive_check(const PosteriorSamples& samples, std::span<const ShiftEvent> withheld,
                                     std::size_t simulations, std::uint64_t seed);

/// Same check under a fixed coefficient table, `replicates` simulations.
PpcReport predictive_check(const EffectTable& effects, std::span<const ShiftEvent> withheld,
                           std::size_t replicates, std::uint64_t seed);

}  // namespace mesh
