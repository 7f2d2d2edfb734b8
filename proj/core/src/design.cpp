#include "mesh/design.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "mesh/error.hpp"

namespace mesh {

std::string to_string(PoolGroup g) {
    switch (g) {
        case PoolGroup::Center: return "Center";
        case PoolGroup::LeftWing: return "LeftWing";
        case PoolGroup::RightWing: return "RightWing";
        case PoolGroup::Defense: return "Defense";
        case PoolGroup::Goaltender: return "Goaltender";
        case PoolGroup::Team: return "Team";
        case PoolGroup::Pair: return "Pair";
    }
    return "Team";
}

PoolGroup pool_group_from_string(const std::string& s) {
    for (std::size_t g = 0; g < kPoolGroups; ++g)
        if (to_string(static_cast<PoolGroup>(g)) == s) return static_cast<PoolGroup>(g);
    if (s == "C") return PoolGroup::Center;
    if (s == "L") return PoolGroup::LeftWing;
    if (s == "R") return PoolGroup::RightWing;
    if (s == "D") return PoolGroup::Defense;
    if (s == "G") return PoolGroup::Goaltender;
    throw UsageError("unknown pooling group '" + s + "'");
}

PoolGroup pool_group_for(Position p) {
    switch (p) {
        case Position::Center: return PoolGroup::Center;
        case Position::LeftWing: return PoolGroup::LeftWing;
        case Position::RightWing: return PoolGroup::RightWing;
        case Position::Defense: return PoolGroup::Defense;
        case Position::Goaltender: return PoolGroup::Goaltender;
    }
    return PoolGroup::Center;
}

std::string to_string(ModelSpec::Variant v) {
    switch (v) {
        case ModelSpec::Variant::ScoreOnly: return "score";
        case ModelSpec::Variant::Teams: return "teams";
        case ModelSpec::Variant::Players: return "players";
        case ModelSpec::Variant::PlayersPlusPairs: return "players+pairs";
    }
    return "players";
}

ModelSpec::Variant variant_from_string(const std::string& s) {
    if (s == "score" || s == "score-only" || s == "ScoreOnly") return ModelSpec::Variant::ScoreOnly;
    if (s == "teams" || s == "Teams") return ModelSpec::Variant::Teams;
    if (s == "players" || s == "Players") return ModelSpec::Variant::Players;
    if (s == "players+pairs" || s == "pairs" || s == "PlayersPlusPairs") return ModelSpec::Variant::PlayersPlusPairs;
    throw UsageError("unknown model variant '" + s + "'");
}

std::string team_label(const std::string& team_id) { return "team:" + team_id; }

std::optional<std::uint32_t> Design::find(const std::string& label) const {
    const auto it = by_label_.find(label);
    if (it == by_label_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> Design::find_player(const std::string& player_id) const {
    const auto it = by_player_.find(player_id);
    if (it == by_player_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::uint32_t> Design::find_team(const std::string& team_id) const {
    const auto it = by_team_.find(team_id);
    if (it == by_team_.end()) return std::nullopt;
    return it->second;
}

std::vector<PoolGroup> Design::pooling_groups() const {
    std::vector<PoolGroup> out;
    out.reserve(registry_.size());
    for (const auto& p : registry_) out.push_back(p.group);
    return out;
}

Design Design::subset_games(const std::set<std::string>& games) const {
    Design out;
    out.spec_ = spec_;
    out.registry_ = registry_;
    out.by_label_ = by_label_;
    out.by_player_ = by_player_;
    out.by_team_ = by_team_;
    out.games_ = games_;
    std::vector<bool> keep(games_.size(), false);
    for (std::size_t g = 0; g < games_.size(); ++g) keep[g] = games.count(games_[g]) != 0;
    for (std::size_t i = 0; i < n_rows(); ++i) {
        if (!keep[games_idx_[i]]) continue;
        const std::uint32_t b = offsets_[i], m = home_end_[i], e = offsets_[i + 1];
        out.indices_.insert(out.indices_.end(), indices_.begin() + b, indices_.begin() + e);
        out.home_end_.push_back(out.offsets_.back() + (m - b));
        out.offsets_.push_back(static_cast<std::uint32_t>(out.indices_.size()));
        out.durations_.push_back(durations_[i]);
        out.outcomes_.push_back(outcomes_[i]);
        out.states_.push_back(states_[i]);
        out.games_idx_.push_back(games_idx_[i]);
    }
    return out;
}

Design Design::scaled_durations(double factor) const {
    Design out = *this;
    for (auto& t : out.durations_) t *= factor;
    return out;
}

Design::Builder::Builder(ModelSpec spec) { d_.spec_ = spec; }

std::uint32_t Design::Builder::add_predictor(Predictor p) {
    const auto idx = static_cast<std::uint32_t>(d_.registry_.size());
    if (!d_.by_label_.emplace(p.label, idx).second)
        throw DataError("duplicate predictor label '" + p.label + "'");
    if (p.kind == PredictorKind::Player && !p.members.empty()) d_.by_player_.emplace(p.members.front(), idx);
    if (p.kind == PredictorKind::Team && p.label.rfind("team:", 0) == 0) d_.by_team_.emplace(p.label.substr(5), idx);
    d_.registry_.push_back(std::move(p));
    return idx;
}

std::uint32_t Design::Builder::game_index(const std::string& game_id) {
    const auto [it, inserted] = game_lookup_.emplace(game_id, static_cast<std::uint32_t>(d_.games_.size()));
    if (inserted) d_.games_.push_back(game_id);
    return it->second;
}

void Design::Builder::add_row(std::vector<std::uint32_t> home, std::vector<std::uint32_t> away, ScoreState s,
                              double duration_s, Outcome y, std::uint32_t game) {
    for (auto* side : {&home, &away}) {
        std::sort(side->begin(), side->end());
        if (std::adjacent_find(side->begin(), side->end()) != side->end())
            throw DataError("duplicate predictor index within one side of a row");
        if (!side->empty() && side->back() >= d_.registry_.size())
            throw DataError("row references an unregistered predictor");
    }
    if (!(duration_s > 0.0)) throw DataError("nonpositive duration");
    d_.indices_.insert(d_.indices_.end(), home.begin(), home.end());
    d_.home_end_.push_back(static_cast<std::uint32_t>(d_.indices_.size()));
    d_.indices_.insert(d_.indices_.end(), away.begin(), away.end());
    d_.offsets_.push_back(static_cast<std::uint32_t>(d_.indices_.size()));
    d_.durations_.push_back(duration_s);
    d_.outcomes_.push_back(y);
    d_.states_.push_back(s);
    if (d_.games_.empty()) game_index("game0");
    if (game >= d_.games_.size()) throw DataError("row references an unregistered game index");
    d_.games_idx_.push_back(game);
}

Design Design::Builder::build() && { return std::move(d_); }

Design build_design(std::span<const ShiftEvent> events, const Roster& roster, const ModelSpec& spec) {
    using V = ModelSpec::Variant;
    Design::Builder b(spec);

    const bool want_teams = spec.variant == V::Teams || (spec.variant == V::Players && spec.include_teams);
    const bool want_players = spec.variant == V::Players || spec.variant == V::PlayersPlusPairs;
    if (spec.include_teams && spec.variant != V::Players)
        throw UsageError("include_teams applies to the Players variant only");

    std::map<std::string, std::uint32_t> team_idx;
    std::map<std::string, std::uint32_t> player_idx;
    if (want_teams) {
        std::set<std::string> teams;
        for (const auto& e : events) {
            teams.insert(e.home_team);
            teams.insert(e.away_team);
        }
        for (const auto& t : teams) {
            Predictor p;
            p.kind = PredictorKind::Team;
            p.label = team_label(t);
            p.group = PoolGroup::Team;
            p.frozen_capable = spec.variant == V::Players;
            team_idx[t] = b.add_predictor(std::move(p));
        }
    }
    if (want_players) {
        std::set<std::string> players;
        for (const auto& e : events) {
            for (const auto& s : e.home_skaters) players.insert(s);
            for (const auto& s : e.away_skaters) players.insert(s);
            players.insert(e.home_goalie);
            players.insert(e.away_goalie);
        }
        for (const auto& id : players) {
            const auto& entry = roster.at(id);
            Predictor p;
            p.kind = PredictorKind::Player;
            p.label = id;
            p.group = pool_group_for(entry.position);
            p.defense_only = entry.position == Position::Goaltender;
            p.members = {id};
            player_idx[id] = b.add_predictor(std::move(p));
        }
    }

    for (const auto& e : events) {
        std::vector<std::uint32_t> home, away;
        if (want_teams) {
            home.push_back(team_idx.at(e.home_team));
            away.push_back(team_idx.at(e.away_team));
        }
        if (want_players) {
            auto side = [&](const std::array<std::string, kSkatersPerSide>& skaters, const std::string& goalie,
                            std::vector<std::uint32_t>& out) {
                for (const auto& s : skaters) {
                    if (roster.at(s).position == Position::Goaltender)
                        throw DataError("spec/roster mismatch: goaltender '" + s + "' listed as a skater");
                    out.push_back(player_idx.at(s));
                }
                if (roster.at(goalie).position != Position::Goaltender)
                    throw DataError("spec/roster mismatch: '" + goalie + "' in a goalie slot is not a goaltender");
                out.push_back(player_idx.at(goalie));
            };
            side(e.home_skaters, e.home_goalie, home);
            side(e.away_skaters, e.away_goalie, away);
        }
        b.add_row(std::move(home), std::move(away), e.score_state, e.duration_s, e.outcome, b.game_index(e.game_id));
    }
    Design d = std::move(b).build();
    if (spec.variant == V::PlayersPlusPairs) d = attach_pairs(d, enumerate_pairs(events, roster, spec.pair_count));
    return d;
}

std::vector<PlayerPair> enumerate_pairs(std::span<const ShiftEvent> events, const Roster& roster, std::size_t k) {
    if (k == 0) throw UsageError("pair count must be positive");
    auto eligible = [&](const std::string& a, const std::string& b) {
        const Position pa = roster.at(a).position, pb = roster.at(b).position;
        return (is_forward(pa) && is_forward(pb)) || (pa == Position::Defense && pb == Position::Defense);
    };
    std::map<std::pair<std::string, std::string>, PlayerPair> shared;
    std::set<std::string> forwards, defense;
    for (const auto& e : events) {
        for (const auto* side : {&e.home_skaters, &e.away_skaters}) {
            for (std::size_t i = 0; i < kSkatersPerSide; ++i) {
                const Position pos = roster.at((*side)[i]).position;
                if (is_forward(pos)) forwards.insert((*side)[i]);
                if (pos == Position::Defense) defense.insert((*side)[i]);
                for (std::size_t j = i + 1; j < kSkatersPerSide; ++j) {
                    auto a = (*side)[i], b = (*side)[j];
                    if (!eligible(a, b)) continue;
                    if (b < a) std::swap(a, b);
                    auto& pp = shared[{a, b}];
                    pp.first = a;
                    pp.second = b;
                    ++pp.shared_events;
                    pp.shared_seconds += e.duration_s;
                }
            }
        }
    }
    auto n_choose_2 = [](std::size_t n) { return n * (n ? n - 1 : 0) / 2; };
    const std::size_t n_eligible = n_choose_2(forwards.size()) + n_choose_2(defense.size());
    if (k > n_eligible)
        throw UsageError("requested " + std::to_string(k) + " pairs but only " + std::to_string(n_eligible) +
                         " eligible pairs exist");

    std::vector<PlayerPair> ranked;
    ranked.reserve(shared.size());
    for (auto& [key, pp] : shared) ranked.push_back(pp);
    auto by_rank = [](const PlayerPair& x, const PlayerPair& y) {
        if (x.shared_events != y.shared_events) return x.shared_events > y.shared_events;
        return x.label() < y.label();
    };
    std::sort(ranked.begin(), ranked.end(), by_rank);
    if (ranked.size() >= k) {
        ranked.resize(k);
        return ranked;
    }
    // Fill with never-co-occurring eligible pairs, in label order.
    std::vector<PlayerPair> zeros;
    for (const auto* pool : {&forwards, &defense}) {
        for (auto i = pool->begin(); i != pool->end(); ++i)
            for (auto j = std::next(i); j != pool->end(); ++j)
                if (!shared.count({*i, *j})) zeros.push_back({*i, *j, 0, 0.0});
    }
    std::sort(zeros.begin(), zeros.end(), by_rank);
    for (auto& z : zeros) {
        if (ranked.size() == k) break;
        ranked.push_back(std::move(z));
    }
    return ranked;
}

Design attach_pairs(const Design& design, const std::vector<PlayerPair>& pairs) {
    Design out = design;
    if (design.spec().variant != ModelSpec::Variant::Players &&
        design.spec().variant != ModelSpec::Variant::PlayersPlusPairs)
        throw UsageError("pairs can only be attached to a Players design");
    out.spec_.variant = ModelSpec::Variant::PlayersPlusPairs;
    out.spec_.pair_count = design.spec().pair_count + pairs.size();

    // For each player predictor, the pairs it belongs to: (partner, pair index).
    std::unordered_map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::uint32_t>>> partners;
    for (const auto& pp : pairs) {
        const auto a = design.find_player(pp.first);
        const auto b2 = design.find_player(pp.second);
        if (!a || !b2)
            throw DataError("pair '" + pp.label() + "' references a player unknown to the design");
        Predictor p;
        p.kind = PredictorKind::PlayerPair;
        p.label = pp.label();
        p.group = PoolGroup::Pair;
        p.members = {pp.first, pp.second};
        const auto idx = static_cast<std::uint32_t>(out.registry_.size());
        if (!out.by_label_.emplace(p.label, idx).second)
            throw DataError("duplicate predictor label '" + p.label + "'");
        out.registry_.push_back(std::move(p));
        partners[*a].push_back({*b2, idx});
    }

    out.indices_.clear();
    out.home_end_.clear();
    out.offsets_.assign(1, 0);
    std::vector<std::uint32_t> extra;
    auto emit_side = [&](std::span<const std::uint32_t> side) {
        out.indices_.insert(out.indices_.end(), side.begin(), side.end());
        extra.clear();
        for (const auto p : side) {
            const auto it = partners.find(p);
            if (it == partners.end()) continue;
            for (const auto& [partner, pair_idx] : it->second)
                if (std::binary_search(side.begin(), side.end(), partner)) extra.push_back(pair_idx);
        }
        std::sort(extra.begin(), extra.end());
        out.indices_.insert(out.indices_.end(), extra.begin(), extra.end());
    };
    for (std::size_t i = 0; i < design.n_rows(); ++i) {
        const auto r = design.row(i);
        emit_side(r.home);
        out.home_end_.push_back(static_cast<std::uint32_t>(out.indices_.size()));
        emit_side(r.away);
        out.offsets_.push_back(static_cast<std::uint32_t>(out.indices_.size()));
    }
    return out;
}

std::string design_to_json(const Design& design) {
    nlohmann::json j;
    j["variant"] = to_string(design.spec().variant);
    j["include_teams"] = design.spec().include_teams;
    j["n_rows"] = design.n_rows();
    j["n_predictors"] = design.n_predictors();
    std::map<std::string, std::size_t> group_sizes;
    std::vector<std::size_t> touching(design.n_predictors(), 0);
    for (std::size_t i = 0; i < design.n_rows(); ++i) {
        const auto r = design.row(i);
        for (auto p : r.home) ++touching[p];
        for (auto p : r.away) ++touching[p];
    }
    auto& reg = j["registry"] = nlohmann::json::array();
    for (std::size_t p = 0; p < design.n_predictors(); ++p) {
        const auto& pr = design.predictor(p);
        ++group_sizes[to_string(pr.group)];
        reg.push_back({{"index", p},
                       {"label", pr.label},
                       {"group", to_string(pr.group)},
                       {"defense_only", pr.defense_only},
                       {"rows", touching[p]}});
    }
    j["groups"] = group_sizes;
    return j.dump(2);
}

}  // namespace mesh
