#include "mesh/event_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "csv.hpp"
#include "mesh/error.hpp"
#include "mesh/rng.hpp"

namespace mesh {
namespace {

constexpr const char* kEventsHeader =
    "season,game_id,duration_s,outcome,home_team,away_team,score_state,"
    "home_skaters,away_skaters,home_goalie,away_goalie";

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::vector<std::string> split_players(const std::string& field) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : field) {
        if (c == ';') {
            out.push_back(std::string(detail::trim(cur)));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(std::string(detail::trim(cur)));
    return out;
}

double parse_double(const std::string& s, std::size_t line, const char* field) {
    const auto t = detail::trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw DataError(line_prefix(line) + "field '" + field + "' is not a number: '" + s + "'");
    return v;
}

}  // namespace

std::string to_code(ScoreState s) {
    switch (s) {
        case ScoreState::HomeLeading: return "LEAD";
        case ScoreState::Tied: return "TIED";
        case ScoreState::HomeTrailing: return "TRAIL";
    }
    return "TIED";
}

ScoreState score_state_from_code(const std::string& code) {
    if (code == "LEAD") return ScoreState::HomeLeading;
    if (code == "TIED") return ScoreState::Tied;
    if (code == "TRAIL") return ScoreState::HomeTrailing;
    throw DataError("unknown score state '" + code + "' (expected LEAD, TIED or TRAIL)");
}

std::string to_code(Position p) {
    switch (p) {
        case Position::Center: return "C";
        case Position::LeftWing: return "L";
        case Position::RightWing: return "R";
        case Position::Defense: return "D";
        case Position::Goaltender: return "G";
    }
    return "C";
}

Position position_from_code(const std::string& code) {
    if (code == "C") return Position::Center;
    if (code == "L") return Position::LeftWing;
    if (code == "R") return Position::RightWing;
    if (code == "D") return Position::Defense;
    if (code == "G") return Position::Goaltender;
    throw DataError("unknown position '" + code + "' (expected C, L, R, D or G)");
}

std::string position_name(Position p) {
    switch (p) {
        case Position::Center: return "Center";
        case Position::LeftWing: return "LeftWing";
        case Position::RightWing: return "RightWing";
        case Position::Defense: return "Defense";
        case Position::Goaltender: return "Goaltender";
    }
    return "Center";
}

bool is_forward(Position p) {
    return p == Position::Center || p == Position::LeftWing || p == Position::RightWing;
}

void Roster::add(const std::string& player_id, RosterEntry entry) {
    if (player_id.empty()) throw DataError("roster entry with empty player id");
    if (!entries_.emplace(player_id, std::move(entry)).second)
        throw DataError("duplicate roster entry for player '" + player_id + "'");
}

const RosterEntry& Roster::at(const std::string& player_id) const {
    const auto it = entries_.find(player_id);
    if (it == entries_.end()) throw DataError("unknown player identifier '" + player_id + "'");
    return it->second;
}

Roster parse_roster(std::istream& in) {
    Roster roster;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw DataError("roster file is empty (header required)");
    ++line_no;
    if (detail::trim(line) != "player_id,name,position")
        throw DataError("line 1: roster header must be 'player_id,name,position'");
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv(detail::trim(line));
        if (f.size() != 3)
            throw DataError(line_prefix(line_no) + "expected 3 fields, found " + std::to_string(f.size()));
        try {
            roster.add(std::string(detail::trim(f[0])),
                       {std::string(detail::trim(f[1])), position_from_code(std::string(detail::trim(f[2])))});
        } catch (const DataError& e) {
            throw DataError(line_prefix(line_no) + e.what());
        }
    }
    return roster;
}

Roster load_roster(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open roster file '" + path.string() + "'");
    return parse_roster(in);
}

void write_roster(std::ostream& out, const Roster& roster) {
    out << "player_id,name,position\n";
    for (const auto& [id, e] : roster.entries())
        out << id << ',' << detail::csv_quote(e.name) << ',' << to_code(e.position) << '\n';
}

void validate_event(const ShiftEvent& e, const Roster& roster) {
    if (!(e.duration_s > 0.0) || !std::isfinite(e.duration_s)) throw DataError("nonpositive duration");
    if (e.home_team == e.away_team) throw DataError("home_team equals away_team ('" + e.home_team + "')");
    auto check_side = [&](const std::array<std::string, kSkatersPerSide>& skaters, const std::string& goalie,
                          const char* side) {
        std::set<std::string> distinct(skaters.begin(), skaters.end());
        if (distinct.size() != kSkatersPerSide || distinct.count(""))
            throw DataError(std::string("skater-count rule: ") + side + " side must list exactly 5 distinct skaters");
        if (distinct.count(goalie))
            throw DataError(std::string(side) + " goalie '" + goalie + "' also listed as a skater");
        for (const auto& p : skaters) roster.at(p);
        roster.at(goalie);
    };
    check_side(e.home_skaters, e.home_goalie, "home");
    check_side(e.away_skaters, e.away_goalie, "away");
}

std::vector<ShiftEvent> parse_events(std::istream& in, const Roster& roster) {
    std::vector<ShiftEvent> events;
    std::string line;
    if (!std::getline(in, line)) throw DataError("events file is empty (header required)");
    if (detail::trim(line) != kEventsHeader)
        throw DataError(std::string("line 1: events header must be '") + kEventsHeader + "'");
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv(detail::trim(line));
        if (f.size() != 11)
            throw DataError(line_prefix(line_no) + "expected 11 fields, found " + std::to_string(f.size()));
        ShiftEvent e;
        e.season = std::string(detail::trim(f[0]));
        e.game_id = std::string(detail::trim(f[1]));
        e.duration_s = parse_double(f[2], line_no, "duration_s");
        const auto oc = detail::trim(f[3]);
        if (oc == "-1") e.outcome = Outcome::AwayGoal;
        else if (oc == "0") e.outcome = Outcome::NoGoal;
        else if (oc == "1") e.outcome = Outcome::HomeGoal;
        else throw DataError(line_prefix(line_no) + "field 'outcome' must be -1, 0 or 1, got '" + f[3] + "'");
        e.home_team = std::string(detail::trim(f[4]));
        e.away_team = std::string(detail::trim(f[5]));
        try {
            e.score_state = score_state_from_code(std::string(detail::trim(f[6])));
        } catch (const DataError& err) {
            throw DataError(line_prefix(line_no) + "field 'score_state': " + err.what());
        }
        const auto hs = split_players(f[7]);
        const auto as = split_players(f[8]);
        if (hs.size() != kSkatersPerSide)
            throw DataError(line_prefix(line_no) + "field 'home_skaters': skater-count rule requires exactly 5 skaters, found " +
                            std::to_string(hs.size()));
        if (as.size() != kSkatersPerSide)
            throw DataError(line_prefix(line_no) + "field 'away_skaters': skater-count rule requires exactly 5 skaters, found " +
                            std::to_string(as.size()));
        std::copy(hs.begin(), hs.end(), e.home_skaters.begin());
        std::copy(as.begin(), as.end(), e.away_skaters.begin());
        e.home_goalie = std::string(detail::trim(f[9]));
        e.away_goalie = std::string(detail::trim(f[10]));
        try {
            validate_event(e, roster);
        } catch (const DataError& err) {
            throw DataError(line_prefix(line_no) + err.what());
        }
        events.push_back(std::move(e));
    }
    return events;
}

std::vector<ShiftEvent> load_events(const std::filesystem::path& path, const Roster& roster) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open events file '" + path.string() + "'");
    return parse_events(in, roster);
}

void write_events(std::ostream& out, std::span<const ShiftEvent> events) {
    out << kEventsHeader << '\n';
    char buf[64];
    for (const auto& e : events) {
        // Shortest round-trip representation keeps load(write(x)) == x.
        const auto res = std::to_chars(buf, buf + sizeof buf, e.duration_s);
        out << e.season << ',' << e.game_id << ',' << std::string_view(buf, res.ptr - buf) << ','
            << static_cast<int>(e.outcome) << ',' << e.home_team << ',' << e.away_team << ','
            << to_code(e.score_state) << ',';
        for (std::size_t i = 0; i < kSkatersPerSide; ++i) out << (i ? ";" : "") << e.home_skaters[i];
        out << ',';
        for (std::size_t i = 0; i < kSkatersPerSide; ++i) out << (i ? ";" : "") << e.away_skaters[i];
        out << ',' << e.home_goalie << ',' << e.away_goalie << '\n';
    }
}

void save_events(const std::filesystem::path& path, std::span<const ShiftEvent> events) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write events file '" + path.string() + "'");
    write_events(out, events);
}

EventCounts counts_from_totals(std::uint64_t away, std::uint64_t none, std::uint64_t home) {
    EventCounts c{away, none, home, {}};
    const double total = static_cast<double>(c.total());
    if (total == 0) throw DataError("cannot summarize an empty event collection");
    const std::array<std::uint64_t, 3> k{away, none, home};
    for (std::size_t i = 0; i < 3; ++i)
        c.percentages[i] = std::round(static_cast<double>(k[i]) / total * 100.0 * 100.0) / 100.0;
    return c;
}

EventCounts summarize(std::span<const ShiftEvent> events) {
    if (events.empty()) throw DataError("cannot summarize an empty event collection");
    std::uint64_t a = 0, n = 0, h = 0;
    for (const auto& e : events) {
        switch (e.outcome) {
            case Outcome::AwayGoal: ++a; break;
            case Outcome::NoGoal: ++n; break;
            case Outcome::HomeGoal: ++h; break;
        }
    }
    return counts_from_totals(a, n, h);
}

std::vector<std::string> distinct_games(std::span<const ShiftEvent> events) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& e : events)
        if (seen.insert(e.game_id).second) out.push_back(e.game_id);
    return out;
}

DataSplit split_by_game(std::span<const ShiftEvent> events, double train_fraction, std::uint64_t seed) {
    if (events.empty()) throw DataError("cannot split an empty event collection");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
        throw UsageError("train_fraction must lie in (0, 1]");
    std::vector<std::string> games = distinct_games(events);
    std::sort(games.begin(), games.end());
    if (train_fraction < 1.0 && games.size() < 2)
        throw DataError("a train/test split needs at least 2 distinct games");
    Rng rng = make_stream(seed, 0x5350'4c49'54ULL);
    std::shuffle(games.begin(), games.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(games.size())));
    DataSplit split;
    split.seed = seed;
    for (std::size_t i = 0; i < games.size(); ++i)
        (i < n_train ? split.train_games : split.test_games).insert(games[i]);
    return split;
}

}  // namespace mesh
