#include "mesh/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "mesh/error.hpp"
#include "mesh/fit_mcmc.hpp"
#include "mesh/parallel.hpp"
#include "mesh/stats.hpp"

namespace mesh {
namespace {

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw DataError("line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

void check_personnel(const ShiftEvent& e) {
    std::set<std::string> seen;
    auto add = [&](const std::string& id) {
        if (id.empty()) throw DataError("template in game " + e.game_id + " violates full-strength personnel");
        if (!seen.insert(id).second)
            throw DataError("template in game " + e.game_id + " lists player " + id + " twice");
    };
    for (const auto& s : e.home_skaters) add(s);
    for (const auto& s : e.away_skaters) add(s);
    add(e.home_goalie);
    add(e.away_goalie);
    if (!(e.duration_s > 0.0) || !std::isfinite(e.duration_s))
        throw DataError("template in game " + e.game_id + " has a nonpositive censor time");
}

void add_side_pairs(const EffectTable& t, const std::array<std::string, kSkatersPerSide>& sk, const std::string& g,
                    double& own, double& opp) {
    std::array<const std::string*, kSkatersPerSide + 1> ids;
    for (std::size_t i = 0; i < kSkatersPerSide; ++i) ids[i] = &sk[i];
    ids[kSkatersPerSide] = &g;
    for (std::size_t i = 0; i < ids.size(); ++i)
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const auto key = *ids[i] < *ids[j] ? std::make_pair(*ids[i], *ids[j]) : std::make_pair(*ids[j], *ids[i]);
            const auto it = t.pairs.find(key);
            if (it != t.pairs.end()) {
                own += it->second.first;
                opp += it->second.second;
            }
        }
}

}  // namespace

SampledEvent sample_event(const RatePair& rates, double censor_t, Rng& rng) {
    std::exponential_distribution<double> eh(rates.home), ea(rates.away);
    const double th = eh(rng), ta = ea(rng);
    if (th < ta && th < censor_t) return {Outcome::HomeGoal, th};
    if (ta <= th && ta < censor_t) return {Outcome::AwayGoal, ta};
    return {Outcome::NoGoal, censor_t};
}

EffectTable EffectTable::from(const std::vector<Predictor>& registry, const Coefficients& c) {
    if (c.n_predictors() != registry.size()) throw UsageError("coefficients do not match the registry");
    EffectTable t;
    t.home_intercept = c.home_intercept;
    t.away_intercept = c.away_intercept;
    for (std::size_t p = 0; p < registry.size(); ++p) {
        const auto& pr = registry[p];
        const Effect e{c.omega[p], c.delta[p]};
        switch (pr.kind) {
            case PredictorKind::Player:
                t.players[pr.members.empty() ? pr.label : pr.members[0]] = e;
                t.has_players = true;
                break;
            case PredictorKind::Team:
                t.teams[pr.label.rfind("team:", 0) == 0 ? pr.label.substr(5) : pr.label] = e;
                t.has_teams = true;
                break;
            case PredictorKind::PlayerPair: {
                auto a = pr.members.at(0), b = pr.members.at(1);
                if (b < a) std::swap(a, b);
                t.pairs[{a, b}] = e;
                break;
            }
        }
    }
    return t;
}

Coefficients EffectTable::to_coefficients(const Design& design) const {
    auto c = Coefficients::zeros(design);
    c.home_intercept = home_intercept;
    c.away_intercept = away_intercept;
    for (std::size_t p = 0; p < design.n_predictors(); ++p) {
        const auto& pr = design.predictor(p);
        const Effect* e = nullptr;
        if (pr.kind == PredictorKind::Player) {
            const auto it = players.find(pr.members.empty() ? pr.label : pr.members[0]);
            if (it != players.end()) e = &it->second;
        } else if (pr.kind == PredictorKind::Team) {
            const auto it = teams.find(pr.label.substr(5));
            if (it != teams.end()) e = &it->second;
        } else {
            auto a = pr.members.at(0), b = pr.members.at(1);
            if (b < a) std::swap(a, b);
            const auto it = pairs.find({a, b});
            if (it != pairs.end()) e = &it->second;
        }
        if (e) {
            c.omega[p] = pr.defense_only ? 0.0 : e->first;
            c.delta[p] = e->second;
        }
    }
    return c;
}

LinearPredictor EffectTable::linear_predictor(const ShiftEvent& e) const {
    const auto s = static_cast<std::size_t>(e.score_state);
    LinearPredictor eta{home_intercept[s], away_intercept[s]};
    auto player = [&](const std::string& id, double& own, double& opp, bool goalie) {
        const auto it = players.find(id);
        if (it == players.end()) {
            if (has_players) throw DataError("player " + id + " is absent from the coefficient table");
            return;
        }
        if (!goalie) own += it->second.first;
        opp += it->second.second;
    };
    auto team = [&](const std::string& id, double& own, double& opp) {
        const auto it = teams.find(id);
        if (it == teams.end()) {
            if (has_teams) throw DataError("team " + id + " is absent from the coefficient table");
            return;
        }
        own += it->second.first;
        opp += it->second.second;
    };
    if (has_players || !players.empty()) {
        for (const auto& id : e.home_skaters) player(id, eta.home, eta.away, false);
        for (const auto& id : e.away_skaters) player(id, eta.away, eta.home, false);
        player(e.home_goalie, eta.home, eta.away, true);
        player(e.away_goalie, eta.away, eta.home, true);
    }
    if (has_teams || !teams.empty()) {
        team(e.home_team, eta.home, eta.away);
        team(e.away_team, eta.away, eta.home);
    }
    if (!pairs.empty()) {
        add_side_pairs(*this, e.home_skaters, e.home_goalie, eta.home, eta.away);
        add_side_pairs(*this, e.away_skaters, e.away_goalie, eta.away, eta.home);
    }
    return eta;
}

RatePair EffectTable::rates(const ShiftEvent& e) const {
    const auto eta = linear_predictor(e);
    return {std::exp(eta.home), std::exp(eta.away)};
}

void EffectTable::write_csv(std::ostream& out) const {
    out << "label,omega,delta\n";
    for (std::size_t s = 0; s < kScoreStates; ++s)
        out << "intercept:" << to_code(static_cast<ScoreState>(s)) << ',' << fmt(home_intercept[s]) << ','
            << fmt(away_intercept[s]) << '\n';
    const std::map<std::string, Effect> teams_sorted(teams.begin(), teams.end());
    for (const auto& [id, e] : teams_sorted)
        out << detail::csv_quote("team:" + id) << ',' << fmt(e.first) << ',' << fmt(e.second) << '\n';
    const std::map<std::string, Effect> players_sorted(players.begin(), players.end());
    for (const auto& [id, e] : players_sorted)
        out << detail::csv_quote(id) << ',' << fmt(e.first) << ',' << fmt(e.second) << '\n';
    for (const auto& [k, e] : pairs)
        out << detail::csv_quote("pair:" + k.first + "+" + k.second) << ',' << fmt(e.first) << ',' << fmt(e.second)
            << '\n';
}

EffectTable EffectTable::read_csv(std::istream& in) {
    EffectTable t;
    std::string line;
    std::size_t n = 0;
    if (!std::getline(in, line)) throw DataError("empty coefficient file");
    ++n;
    while (std::getline(in, line)) {
        ++n;
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 3) throw DataError("line " + std::to_string(n) + ": expected label,omega,delta");
        const std::string& label = f[0];
        const Effect e{parse_double(f[1], n), parse_double(f[2], n)};
        if (label.rfind("intercept:", 0) == 0) {
            const auto s = static_cast<std::size_t>(score_state_from_code(label.substr(10)));
            t.home_intercept[s] = e.first;
            t.away_intercept[s] = e.second;
        } else if (label.rfind("team:", 0) == 0) {
            t.teams[label.substr(5)] = e;
            t.has_teams = true;
        } else if (label.rfind("pair:", 0) == 0) {
            const auto body = label.substr(5);
            const auto plus = body.find('+');
            if (plus == std::string::npos) throw DataError("line " + std::to_string(n) + ": malformed pair label");
            auto a = body.substr(0, plus), b = body.substr(plus + 1);
            if (b < a) std::swap(a, b);
            t.pairs[{a, b}] = e;
        } else {
            t.players[label] = e;
            t.has_players = true;
        }
    }
    return t;
}

ShiftSchedule ShiftSchedule::from_events(std::span<const ShiftEvent> events) {
    ShiftSchedule s;
    s.templates.assign(events.begin(), events.end());
    return s;
}

std::vector<ShiftEvent> simulate_schedule(const ShiftSchedule& schedule, const EffectTable& effects,
                                          std::uint64_t seed) {
    for (const auto& e : schedule.templates) check_personnel(e);
    std::vector<std::vector<std::size_t>> games;
    std::unordered_map<std::string, std::size_t> game_of;
    for (std::size_t i = 0; i < schedule.templates.size(); ++i) {
        const auto& id = schedule.templates[i].game_id;
        auto [it, fresh] = game_of.try_emplace(id, games.size());
        if (fresh) games.emplace_back();
        games[it->second].push_back(i);
    }
    std::vector<ShiftEvent> out = schedule.templates;
    parallel_for(games.size(), [&](std::size_t g) {
        Rng rng = make_stream(seed, g);
        for (const auto i : games[g]) {
            auto& e = out[i];
            const auto ev = sample_event(effects.rates(e), schedule.templates[i].duration_s, rng);
            e.outcome = ev.outcome;
            e.duration_s = ev.time_s;
        }
    });
    return out;
}

void LeagueRecipe::validate() const {
    if (n_teams < 2) throw UsageError("a league needs at least two teams");
    auto need = [&](std::size_t have, std::size_t min, const char* what) {
        if (have < min) throw UsageError(std::string("infeasible recipe: too few ") + what + " per team");
    };
    need(per_position[0], 1, "centers");
    need(per_position[1], 1, "left wings");
    need(per_position[2], 1, "right wings");
    need(per_position[3], 2, "defensemen");
    need(per_position[4], 1, "goaltenders");
    if (!(duration_median_s > 0.0) || !(duration_log_sd >= 0.0)) throw UsageError("invalid shift-length distribution");
    if (games_per_team == 0 || !(game_seconds > 0.0)) throw UsageError("invalid season length");
    if (!(starter_share >= 0.0 && starter_share <= 1.0)) throw UsageError("starter_share must lie in [0, 1]");
}

std::string synthetic_team_id(std::size_t team) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%02zu", team);
    return buf;
}

std::string synthetic_player_id(std::size_t team, Position pos, std::size_t k) {
    return synthetic_team_id(team) + to_code(pos) + std::to_string(k);
}

SyntheticLeague synthetic_league(const LeagueRecipe& r) {
    r.validate();
    SyntheticLeague L;
    constexpr std::array<Position, 5> kPos{Position::Center, Position::LeftWing, Position::RightWing,
                                           Position::Defense, Position::Goaltender};
    // roster[t][pos] = ids
    std::vector<std::array<std::vector<std::string>, 5>> roster(r.n_teams);
    Rng truth_rng = make_stream(r.seed, 0);
    L.truth.home_intercept = r.home_intercept;
    L.truth.away_intercept = r.away_intercept;
    L.truth.has_players = true;
    for (std::size_t t = 0; t < r.n_teams; ++t) {
        const auto tid = synthetic_team_id(t);
        L.teams.push_back(tid);
        for (std::size_t q = 0; q < kPos.size(); ++q) {
            for (std::size_t k = 1; k <= r.per_position[q]; ++k) {
                const auto id = synthetic_player_id(t, kPos[q], k);
                L.roster.add(id, {tid + " " + to_code(kPos[q]) + std::to_string(k), kPos[q]});
                L.player_team[id] = tid;
                roster[t][q].push_back(id);
                const auto g = pool_group_for(kPos[q]);
                double w = 0.0, d = 0.0;
                if (kPos[q] != Position::Goaltender && r.truth.has(g, Side::Offense))
                    w = sample(r.truth.at(g, Side::Offense), truth_rng);
                if (r.truth.has(g, Side::Defense)) d = sample(r.truth.at(g, Side::Defense), truth_rng);
                L.truth.players[id] = {w, d};
            }
        }
        if (r.truth.has(PoolGroup::Team, Side::Offense) || r.truth.has(PoolGroup::Team, Side::Defense)) {
            double w = 0.0, d = 0.0;
            if (r.truth.has(PoolGroup::Team, Side::Offense)) w = sample(r.truth.at(PoolGroup::Team, Side::Offense), truth_rng);
            if (r.truth.has(PoolGroup::Team, Side::Defense)) d = sample(r.truth.at(PoolGroup::Team, Side::Defense), truth_rng);
            L.truth.teams[tid] = {w, d};
        }
    }
    for (const auto& p : r.planted) {
        const auto it = L.truth.players.find(p.player);
        if (it == L.truth.players.end()) throw UsageError("planted effect names unknown player " + p.player);
        const bool goalie = L.roster.at(p.player).position == Position::Goaltender;
        it->second = {goalie ? 0.0 : p.omega, p.delta};
    }
    for (const auto& p : r.planted_pairs) {
        if (!L.roster.contains(p.first) || !L.roster.contains(p.second))
            throw UsageError("planted pair names an unknown player");
        auto a = p.first, b = p.second;
        if (b < a) std::swap(a, b);
        L.truth.pairs[{a, b}] = {p.omega, p.delta};
    }

    const std::size_t n_games = r.n_teams * r.games_per_team / 2;
    struct Fixture {
        std::size_t home, away;
    };
    std::vector<Fixture> fixtures(n_games);
    Rng sched = make_stream(r.seed, 1);
    for (std::size_t g = 0; g < n_games; ++g) {
        const std::size_t h = g % r.n_teams;
        std::size_t a = std::uniform_int_distribution<std::size_t>(0, r.n_teams - 2)(sched);
        if (a >= h) ++a;
        fixtures[g] = {h, a};
    }

    std::vector<std::vector<ShiftEvent>> per_game(n_games);
    parallel_for(n_games, [&](std::size_t g) {
        Rng rng = make_stream(r.seed, 1000 + g);
        const auto [h, a] = fixtures[g];
        char gid[16];
        std::snprintf(gid, sizeof gid, "G%05zu", g + 1);
        auto goalie = [&](std::size_t t) {
            const auto& gs = roster[t][4];
            if (gs.size() == 1 || uniform01(rng) < r.starter_share) return gs[0];
            return gs[1 + std::uniform_int_distribution<std::size_t>(0, gs.size() - 2)(rng)];
        };
        const std::string hg = goalie(h), ag = goalie(a);
        std::lognormal_distribution<double> dur(std::log(r.duration_median_s), r.duration_log_sd);
        auto pick = [&](const std::vector<std::string>& v) {
            return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
        };
        auto line = [&](std::size_t t) {
            std::array<std::string, kSkatersPerSide> s;
            s[0] = pick(roster[t][0]);
            s[1] = pick(roster[t][1]);
            s[2] = pick(roster[t][2]);
            const auto& ds = roster[t][3];
            const std::size_t i = std::uniform_int_distribution<std::size_t>(0, ds.size() - 1)(rng);
            std::size_t j = std::uniform_int_distribution<std::size_t>(0, ds.size() - 2)(rng);
            if (j >= i) ++j;
            s[3] = ds[i];
            s[4] = ds[j];
            return s;
        };
        int hs = 0, as = 0;
        double clock = 0.0;
        auto& evs = per_game[g];
        while (clock < r.game_seconds) {
            double censor = std::min(dur(rng), r.game_seconds - clock);
            if (censor <= 1e-9) break;
            ShiftEvent e;
            e.season = "S1";
            e.game_id = gid;
            e.home_team = L.teams[h];
            e.away_team = L.teams[a];
            e.score_state = hs > as ? ScoreState::HomeLeading : hs == as ? ScoreState::Tied : ScoreState::HomeTrailing;
            e.home_skaters = line(h);
            e.away_skaters = line(a);
            e.home_goalie = hg;
            e.away_goalie = ag;
            const auto ev = sample_event(L.truth.rates(e), censor, rng);
            e.outcome = ev.outcome;
            e.duration_s = ev.time_s;
            if (ev.outcome == Outcome::HomeGoal) ++hs;
            if (ev.outcome == Outcome::AwayGoal) ++as;
            clock += ev.time_s;
            evs.push_back(std::move(e));
        }
    });
    for (auto& v : per_game)
        for (auto& e : v) L.events.push_back(std::move(e));
    return L;
}

namespace {

struct Totals {
    double home = 0.0, away = 0.0;
    std::map<std::string, double> team;
};

Totals totals_of(std::span<const ShiftEvent> events) {
    Totals t;
    for (const auto& e : events) {
        t.team.try_emplace(e.home_team, 0.0);
        t.team.try_emplace(e.away_team, 0.0);
        if (e.outcome == Outcome::HomeGoal) {
            t.home += 1.0;
            t.team[e.home_team] += 1.0;
        } else if (e.outcome == Outcome::AwayGoal) {
            t.away += 1.0;
            t.team[e.away_team] += 1.0;
        }
    }
    return t;
}

GoalInterval interval(const std::string& label, double observed, std::vector<double> sims) {
    std::sort(sims.begin(), sims.end());
    GoalInterval gi;
    gi.label = label;
    gi.observed = observed;
    gi.lo = quantile_sorted(sims, 0.025);
    gi.hi = quantile_sorted(sims, 0.975);
    gi.covered = observed >= gi.lo && observed <= gi.hi;
    return gi;
}

PpcReport assemble(std::span<const ShiftEvent> withheld, const std::vector<Totals>& sims) {
    const auto obs = totals_of(withheld);
    PpcReport rep;
    rep.draws_used = sims.size();
    std::vector<double> h, a;
    for (const auto& s : sims) {
        h.push_back(s.home);
        a.push_back(s.away);
    }
    rep.home = interval("home", obs.home, h);
    rep.away = interval("away", obs.away, a);
    for (const auto& [team, goals] : obs.team) {
        std::vector<double> v;
        for (const auto& s : sims) v.push_back(s.team.at(team));
        rep.teams.push_back(interval(team, goals, v));
    }
    rep.verdict = rep.home.covered && rep.away.covered;
    return rep;
}

}  // namespace

PpcReport predictive_check(const EffectTable& effects, std::span<const ShiftEvent> withheld, std::size_t replicates,
                           std::uint64_t seed) {
    if (replicates == 0) throw UsageError("predictive check needs at least one replicate");
    const auto schedule = ShiftSchedule::from_events(withheld);
    std::vector<Totals> sims(replicates);
    for (std::size_t k = 0; k < replicates; ++k)
        sims[k] = totals_of(simulate_schedule(schedule, effects, mix_seed(seed + k)));
    return assemble(withheld, sims);
}

PpcReport posterior_predictive_check(const PosteriorSamples& samples, std::span<const ShiftEvent> withheld,
                                     std::size_t simulations, std::uint64_t seed) {
    if (samples.n_draws == 0) throw UsageError("posterior predictive check needs retained draws");
    if (simulations == 0) throw UsageError("posterior predictive check needs at least one simulation");
    const std::size_t used = simulations;
    const auto schedule = ShiftSchedule::from_events(withheld);
    std::vector<Totals> sims(used);
    for (std::size_t k = 0; k < used; ++k) {
        const std::size_t d = k * samples.n_draws / used;
        const auto table = EffectTable::from(samples.registry, samples.coefficients(d));
        sims[k] = totals_of(simulate_schedule(schedule, table, mix_seed(seed + k)));
    }
    return assemble(withheld, sims);
}

}  // namespace mesh
