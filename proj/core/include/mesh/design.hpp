#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mesh/event_store.hpp"

namespace mesh {

enum class PredictorKind : std::uint8_t { Team, Player, PlayerPair };

/// Prior/penalty pooling group. Each predictor belongs to exactly one.
enum class PoolGroup : std::uint8_t { Center, LeftWing, RightWing, Defense, Goaltender, Team, Pair };
inline constexpr std::size_t kPoolGroups = 7;

std::string to_string(PoolGroup g);
PoolGroup pool_group_from_string(const std::string& s);
PoolGroup pool_group_for(Position p);

struct Predictor {
    PredictorKind kind = PredictorKind::Player;
    std::string label;
    PoolGroup group = PoolGroup::Team;
    /// Goaltenders carry no offensive coefficient (omega fixed at 0).
    bool defense_only = false;
    /// Team predictors in combined team+player designs; fitters may hold them fixed.
    bool frozen_capable = false;
    /// Player ids: one for players, two for pairs, none for teams.
    std::vector<std::string> members;
};

struct ModelSpec {
    enum class Variant : std::uint8_t { ScoreOnly, Teams, Players, PlayersPlusPairs };
    Variant variant = Variant::Players;
    bool include_teams = false;  // Players variant only
    std::size_t pair_count = 0;  // PlayersPlusPairs only

    static ModelSpec score_only() { return {Variant::ScoreOnly, false, 0}; }
    static ModelSpec teams() { return {Variant::Teams, false, 0}; }
    static ModelSpec players(bool with_teams = false) { return {Variant::Players, with_teams, 0}; }
    static ModelSpec players_plus_pairs(std::size_t k) { return {Variant::PlayersPlusPairs, false, k}; }
};

std::string to_string(ModelSpec::Variant v);
ModelSpec::Variant variant_from_string(const std::string& s);

struct PlayerPair;

/// Read-only view of one design row.
struct SparseRow {
    std::span<const std::uint32_t> home;  // sorted predictor indices on the home side
    std::span<const std::uint32_t> away;
    ScoreState score_state = ScoreState::Tied;
    double duration_s = 0.0;
    Outcome outcome = Outcome::NoGoal;
    std::uint32_t game = 0;
};

/// Sparse predictor rows (CSR storage) plus the predictor registry.
class Design {
public:
    Design() = default;

    std::size_t n_rows() const { return durations_.size(); }
    std::size_t n_predictors() const { return registry_.size(); }

    SparseRow row(std::size_t i) const {
        const std::uint32_t b = offsets_[i], m = home_end_[i], e = offsets_[i + 1];
        return {std::span<const std::uint32_t>(indices_.data() + b, m - b),
                std::span<const std::uint32_t>(indices_.data() + m, e - m),
                states_[i], durations_[i], outcomes_[i], games_idx_[i]};
    }

    const std::vector<Predictor>& registry() const { return registry_; }
    const Predictor& predictor(std::size_t p) const { return registry_.at(p); }
    std::optional<std::uint32_t> find(const std::string& label) const;
    /// Index of the predictor for a player id (Players designs).
    std::optional<std::uint32_t> find_player(const std::string& player_id) const;
    std::optional<std::uint32_t> find_team(const std::string& team_id) const;

    const ModelSpec& spec() const { return spec_; }
    const std::vector<std::string>& games() const { return games_; }

    /// Group of every predictor (total map).
    std::vector<PoolGroup> pooling_groups() const;

    // Raw column access used by the evaluation kernels.
    std::span<const double> durations() const { return durations_; }
    std::span<const Outcome> outcomes() const { return outcomes_; }
    std::span<const ScoreState> states() const { return states_; }

    /// Rows whose game lies in `games`, sharing this design's registry.
    Design subset_games(const std::set<std::string>& games) const;
    /// Same design with every duration multiplied by `factor`.
    Design scaled_durations(double factor) const;

    class Builder;

private:
    friend class Builder;
    friend Design attach_pairs(const Design&, const std::vector<PlayerPair>&);

    ModelSpec spec_;
    std::vector<Predictor> registry_;
    std::unordered_map<std::string, std::uint32_t> by_label_;
    std::unordered_map<std::string, std::uint32_t> by_player_;
    std::unordered_map<std::string, std::uint32_t> by_team_;
    std::vector<std::string> games_;

    std::vector<std::uint32_t> offsets_{0};
    std::vector<std::uint32_t> home_end_;
    std::vector<std::uint32_t> indices_;
    std::vector<double> durations_;
    std::vector<Outcome> outcomes_;
    std::vector<ScoreState> states_;
    std::vector<std::uint32_t> games_idx_;
};

/// Incremental construction of a Design; used by build_design and by tests
/// that need hand-made fixtures.
class Design::Builder {
public:
    explicit Builder(ModelSpec spec = ModelSpec::players());
    std::uint32_t add_predictor(Predictor p);
    std::uint32_t game_index(const std::string& game_id);
    /// Indices need not be sorted; duplicates within a side are rejected.
    void add_row(std::vector<std::uint32_t> home, std::vector<std::uint32_t> away, ScoreState s,
                 double duration_s, Outcome y, std::uint32_t game = 0);
    Design build() &&;

private:
    Design d_;
    std::unordered_map<std::string, std::uint32_t> game_lookup_;
};

/// Translates events into design rows. Registry order: teams, then players by
/// identifier, then pairs by rank.
Design build_design(std::span<const ShiftEvent> events, const Roster& roster, const ModelSpec& spec);

struct PlayerPair {
    std::string first;   // lexicographically smaller id
    std::string second;
    std::uint64_t shared_events = 0;
    double shared_seconds = 0.0;

    std::string label() const { return "pair:" + first + "+" + second; }
};

/// Same-side co-occurring forward-forward or defense-defense pairs, ranked by
/// shared event count (ties by label). Goaltenders are never eligible.
std::vector<PlayerPair> enumerate_pairs(std::span<const ShiftEvent> events, const Roster& roster, std::size_t k);

/// Appends one predictor per pair; rows gain the pair index on each side where
/// both members are on the ice. Existing indices are unchanged.
Design attach_pairs(const Design& design, const std::vector<PlayerPair>& pairs);

/// Diagnostic dump (registry, groups, row counts). Not a stable format.
std::string design_to_json(const Design& design);

std::string team_label(const std::string& team_id);

}  // namespace mesh
