#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace mesh {

enum class Outcome : std::int8_t { AwayGoal = -1, NoGoal = 0, HomeGoal = 1 };

/// Score situation from the home team's perspective.
enum class ScoreState : std::uint8_t { HomeLeading = 0, Tied = 1, HomeTrailing = 2 };
inline constexpr std::size_t kScoreStates = 3;

enum class Position : std::uint8_t { Center, LeftWing, RightWing, Defense, Goaltender };

inline constexpr std::size_t kSkatersPerSide = 5;

/// One full-strength interval of play, censored by a substitution or ended by
/// a goal.
struct ShiftEvent {
    std::string season;
    std::string game_id;
    double duration_s = 0.0;
    Outcome outcome = Outcome::NoGoal;
    std::string home_team;
    std::string away_team;
    ScoreState score_state = ScoreState::Tied;
    std::array<std::string, kSkatersPerSide> home_skaters;
    std::array<std::string, kSkatersPerSide> away_skaters;
    std::string home_goalie;
    std::string away_goalie;

    bool operator==(const ShiftEvent&) const = default;
};

struct RosterEntry {
    std::string name;
    Position position = Position::Center;
};

class Roster {
public:
    void add(const std::string& player_id, RosterEntry entry);
    bool contains(const std::string& player_id) const { return entries_.count(player_id) != 0; }
    const RosterEntry& at(const std::string& player_id) const;
    std::size_t size() const { return entries_.size(); }
    const std::map<std::string, RosterEntry>& entries() const { return entries_; }

private:
    std::map<std::string, RosterEntry> entries_;
};

struct EventCounts {
    std::uint64_t away_goals = 0;
    std::uint64_t no_goals = 0;
    std::uint64_t home_goals = 0;
    /// (away, none, home), each rounded to two decimals.
    std::array<double, 3> percentages{};

    std::uint64_t total() const { return away_goals + no_goals + home_goals; }
};

struct DataSplit {
    std::set<std::string> train_games;
    std::set<std::string> test_games;
    std::uint64_t seed = 0;
};

// Text codes used by the CSV formats.
std::string to_code(ScoreState s);   // LEAD / TIED / TRAIL
ScoreState score_state_from_code(const std::string& code);
std::string to_code(Position p);     // C / L / R / D / G
Position position_from_code(const std::string& code);
std::string position_name(Position p);
bool is_forward(Position p);

Roster load_roster(const std::filesystem::path& path);
Roster parse_roster(std::istream& in);
void write_roster(std::ostream& out, const Roster& roster);

/// Loads and validates an events CSV; every failure names the offending line.
std::vector<ShiftEvent> load_events(const std::filesystem::path& path, const Roster& roster);
std::vector<ShiftEvent> parse_events(std::istream& in, const Roster& roster);
void write_events(std::ostream& out, std::span<const ShiftEvent> events);
void save_events(const std::filesystem::path& path, std::span<const ShiftEvent> events);

/// Checks the full-strength invariants; throws DataError describing the rule.
void validate_event(const ShiftEvent& e, const Roster& roster);

EventCounts summarize(std::span<const ShiftEvent> events);
EventCounts counts_from_totals(std::uint64_t away, std::uint64_t none, std::uint64_t home);

/// Assigns whole games to train/test uniformly at random from `seed`.
DataSplit split_by_game(std::span<const ShiftEvent> events, double train_fraction, std::uint64_t seed);

/// Distinct game identifiers in first-appearance order.
std::vector<std::string> distinct_games(std::span<const ShiftEvent> events);

}  // namespace mesh
