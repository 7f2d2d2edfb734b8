#include "mesh/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "mesh/design.hpp"
#include "mesh/error.hpp"
#include "mesh/event_store.hpp"
#include "mesh/fit_mcmc.hpp"
#include "mesh/fit_mle.hpp"
#include "mesh/likelihood.hpp"
#include "mesh/metrics.hpp"
#include "mesh/shrinkage.hpp"
#include "mesh/simulate.hpp"
#include "mesh/stats.hpp"

namespace mesh::cli {
namespace {

using nlohmann::json;

struct Dataset {
    Roster roster;
    std::vector<ShiftEvent> events;
};

Dataset load_dataset(CommandContext& ctx) {
    const std::filesystem::path roster_path = ctx.cfg.required("data.roster");
    const std::filesystem::path events_path = ctx.cfg.required("data.events");
    ctx.inputs.push_back(roster_path);
    ctx.inputs.push_back(events_path);
    Dataset d;
    d.roster = load_roster(roster_path);
    d.events = load_events(events_path, d.roster);
    if (d.events.empty()) throw DataError("event file holds no events");
    return d;
}

ModelSpec model_spec(const RunConfig& cfg, const std::string& fallback = "players") {
    ModelSpec spec;
    spec.variant = variant_from_string(cfg.str("model.spec", fallback));
    spec.include_teams = cfg.flag("model.include_teams", false);
    if (spec.variant == ModelSpec::Variant::PlayersPlusPairs) spec.pair_count = cfg.u64("model.pair_count", 1000);
    return spec;
}

std::vector<PoolGroup> groups_in(const Design& d) {
    std::vector<PoolGroup> out;
    for (const auto& p : d.registry())
        if (std::find(out.begin(), out.end(), p.group) == out.end()) out.push_back(p.group);
    std::sort(out.begin(), out.end());
    return out;
}

PenaltyFamily family_from(const RunConfig& cfg, const std::string& prefix, const std::string& family,
                          double lambda, double sigma2) {
    const auto kind = penalty_kind_from_string(cfg.str(prefix + ".family", family));
    const double l = cfg.real(prefix + ".lambda", lambda);
    const double s = cfg.real(prefix + ".sigma2", sigma2);
    switch (kind) {
        case PenaltyFamily::Kind::L1: return PenaltyFamily::l1(l);
        case PenaltyFamily::Kind::L2: return PenaltyFamily::l2(s);
        case PenaltyFamily::Kind::L1L2: return PenaltyFamily::l1l2(l, s);
    }
    return {};
}

/// One family per group present; "<prefix>.<Group>.family" etc. override.
GroupShrinkage shrinkage_from(const RunConfig& cfg, const Design& d, const std::string& prefix,
                              const std::string& family, double lambda, double sigma2) {
    const auto base = family_from(cfg, prefix, family, lambda, sigma2);
    GroupShrinkage gs;
    for (const auto g : groups_in(d)) {
        const std::string gp = prefix + "." + to_string(g);
        const bool custom = cfg.has(gp + ".family") || cfg.has(gp + ".lambda") || cfg.has(gp + ".sigma2");
        gs.set_group(g, custom ? family_from(cfg, gp, to_string(base.kind), base.has_laplace() ? base.lambda : lambda,
                                             base.has_gaussian() ? base.sigma2 : sigma2)
                               : base);
    }
    return gs;
}

FitOptions fit_options(const RunConfig& cfg) {
    FitOptions o;
    o.max_iterations = cfg.u64("fit.max_iterations", o.max_iterations);
    o.tolerance = cfg.real("fit.tolerance", o.tolerance);
    o.kkt_tolerance = cfg.real("fit.kkt_tolerance", o.kkt_tolerance);
    o.accelerate = cfg.flag("fit.accelerate", o.accelerate);
    return o;
}

ChainConfig chain_config(const RunConfig& cfg, std::uint64_t seed) {
    ChainConfig c;
    c.n_chains = cfg.u64("mcmc.n_chains", c.n_chains);
    c.burn_in = cfg.u64("mcmc.burn_in", c.burn_in);
    c.thin = cfg.u64("mcmc.thin", c.thin);
    c.draws_per_chain = cfg.u64("mcmc.draws_per_chain", c.draws_per_chain);
    c.min_kept = cfg.u64("mcmc.min_kept", c.min_kept);
    c.adapt_interval = cfg.u64("mcmc.adapt_interval", c.adapt_interval);
    c.grid.points = cfg.u64("mcmc.grid_points", c.grid.points);
    c.grid.s_min = cfg.real("mcmc.s_min", c.grid.s_min);
    c.grid.s_max = cfg.real("mcmc.s_max", c.grid.s_max);
    c.grid.f_min = cfg.real("mcmc.f_min", c.grid.f_min);
    c.grid.f_max = cfg.real("mcmc.f_max", c.grid.f_max);
    c.hyper_priors.gamma_shape = cfg.real("mcmc.gamma_shape", c.hyper_priors.gamma_shape);
    c.hyper_priors.gamma_rate = cfg.real("mcmc.gamma_rate", c.hyper_priors.gamma_rate);
    c.hyper_priors.invgamma_shape = cfg.real("mcmc.invgamma_shape", c.hyper_priors.invgamma_shape);
    c.hyper_priors.invgamma_scale = cfg.real("mcmc.invgamma_scale", c.hyper_priors.invgamma_scale);
    c.sample_hyper = cfg.flag("mcmc.sample_hyper", c.sample_hyper);
    c.intercept_prior_mean = cfg.real("mcmc.intercept_prior_mean", c.intercept_prior_mean);
    c.intercept_prior_sd = cfg.real("mcmc.intercept_prior_sd", c.intercept_prior_sd);
    c.init_jitter = cfg.real("mcmc.init_jitter", c.init_jitter);
    c.seed = mix_seed(seed ^ 0x2545f4914f6cdd1dULL);
    return c;
}

struct Split {
    Design train, test;
    std::vector<ShiftEvent> train_events, test_events;
};

Split split_design(const RunConfig& cfg, std::uint64_t seed, const Dataset& data, const Design& all) {
    const double frac = cfg.real("data.train_fraction", 0.8);
    const auto split = split_by_game(data.events, frac, cfg.u64("data.split_seed", seed));
    Split s{all.subset_games(split.train_games), all.subset_games(split.test_games), {}, {}};
    for (const auto& e : data.events)
        (split.train_games.count(e.game_id) ? s.train_events : s.test_events).push_back(e);
    return s;
}

std::string coefficients_csv(const Design& d, const Coefficients& c) {
    std::ostringstream os;
    EffectTable::from(d.registry(), c).write_csv(os);
    return os.str();
}

std::string fmt(double v) { return format_real(v); }

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

json dic_json(const DicReport& r) {
    return {{"scope", r.scope}, {"mean_deviance", r.mean_deviance}, {"deviance_at_mean", r.deviance_at_mean},
            {"p_d", r.p_d}, {"dic", r.dic}};
}

json shrinkage_json(const GroupShrinkage& gs) {
    json a = json::array();
    for (const auto& [k, f] : gs.entries()) {
        json e{{"group", to_string(k.first)}, {"side", to_string(k.second)}, {"family", to_string(f.kind)}};
        if (f.has_laplace()) e["lambda"] = f.lambda;
        if (f.has_gaussian()) e["sigma2"] = f.sigma2;
        a.push_back(e);
    }
    return a;
}

struct ModelFit {
    Coefficients coefficients;
    json report;
    double train_deviance = 0.0;
    double test_deviance = 0.0;
    std::optional<DicReport> dic_in, dic_out;
    std::optional<PosteriorSamples> samples;
    GroupShrinkage shrinkage;
};

std::string fit_mode(const RunConfig& cfg) {
    auto mode = cfg.str("fit.mode", "mle");
    if (mode != "mle" && mode != "mcmc") throw UsageError("fit.mode must be mle or mcmc, got '" + mode + "'");
    return mode;
}

/// Fits one model on the training design per the [fit] settings.
ModelFit fit_model(CommandContext& ctx, const Design& train, const Design& test, const std::string& tag) {
    auto& cfg = ctx.cfg;
    const std::string mode = fit_mode(cfg);
    ModelFit mf;
    if (mode == "mle") {
        auto shrink = shrinkage_from(cfg, train, "penalty", "L1", 8.0, 1.0);
        const auto opts = fit_options(cfg);
        const auto lambdas = cfg.reals("penalty.cv_lambdas", {});
        std::optional<double> chosen;
        json path = json::array();
        if (!lambdas.empty() && test.n_rows() > 0) {
            const auto targets = groups_in(train);
            const auto sel = cv_select(train, test, shrink, targets, lambdas, opts, poisson_start(train));
            chosen = sel.lambda;
            shrink = with_lambda(shrink, targets, sel.lambda);
            for (const auto& pt : sel.path.points)
                path.push_back({{"lambda", pt.lambda}, {"nonzero", pt.nonzero}, {"test_deviance", *pt.test_deviance}});
        }
        const auto fit = fit_penalized(train, shrink, opts, poisson_start(train));
        mf.coefficients = fit.coefficients;
        mf.report = json::parse(fit_report_json(train, shrink, fit));
        mf.report.erase("wall_seconds");  // keeps reruns byte-identical
        if (chosen) {
            mf.report["cv_selected_lambda"] = *chosen;
            mf.report["cv_path"] = path;
        }
        mf.shrinkage = shrink;
    } else if (mode == "mcmc") {
        const auto init = shrinkage_from(cfg, train, "mcmc.init", "L1L2", 1.0, 1.0);
        auto cc = chain_config(cfg, ctx.seed);
        auto samples = run_chain(train, init, cc);
        mf.coefficients = samples.posterior_mean();
        mf.dic_in = dic(samples, train, "in-sample");
        if (test.n_rows() > 0) mf.dic_out = dic(samples, test, "out-of-sample");
        mf.report = {{"draws", samples.n_draws}, {"warnings", samples.warnings}, {"config_seed", cc.seed}};
        mf.shrinkage = samples.mean_shrinkage();
        mf.samples = std::move(samples);
    }
    mf.train_deviance = -2.0 * total_loglik(train, mf.coefficients);
    mf.test_deviance = oos_deviance(mf.coefficients, test);
    mf.report["model"] = tag;
    return mf;
}

std::vector<PlantedEffect> parse_planted(const std::string& spec) {
    std::vector<PlantedEffect> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        std::stringstream is(item);
        std::string id, w, d;
        if (!std::getline(is, id, ':') || !std::getline(is, w, ':') || !std::getline(is, d, ':'))
            throw UsageError("planted effects use player:omega:delta, got '" + item + "'");
        out.push_back({id, std::stod(w), std::stod(d)});
    }
    return out;
}

std::vector<PlantedPair> parse_planted_pairs(const std::string& spec) {
    std::vector<PlantedPair> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ';')) {
        if (item.empty()) continue;
        std::stringstream is(item);
        std::string a, b, w, d;
        if (!std::getline(is, a, ':') || !std::getline(is, b, ':') || !std::getline(is, w, ':') ||
            !std::getline(is, d, ':'))
            throw UsageError("planted pairs use first:second:omega:delta, got '" + item + "'");
        out.push_back({a, b, std::stod(w), std::stod(d)});
    }
    return out;
}

}  // namespace

std::filesystem::path CommandContext::output_path(const std::string& name) {
    std::filesystem::create_directories(out_dir);
    const auto p = out_dir / name;
    const auto canon = std::filesystem::weakly_canonical(p);
    for (const auto& in : inputs)
        if (std::filesystem::weakly_canonical(in) == canon)
            throw UsageError("output " + p.string() + " would overwrite an input");
    outputs.push_back(p);
    return p;
}

void CommandContext::write(const std::string& name, const std::string& content) {
    const auto p = output_path(name);
    std::ofstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot write " + p.string());
    f << content;
}

int cmd_summarize(CommandContext& ctx) {
    EventCounts counts;
    if (ctx.cfg.has("summarize.counts")) {
        const auto v = ctx.cfg.reals("summarize.counts", {});
        if (v.size() != 3) throw UsageError("--counts expects away,none,home");
        for (double x : v)
            if (x < 0 || x != std::floor(x)) throw UsageError("counts must be nonnegative integers");
        counts = counts_from_totals(static_cast<std::uint64_t>(v[0]), static_cast<std::uint64_t>(v[1]),
                                    static_cast<std::uint64_t>(v[2]));
    } else {
        counts = summarize(load_dataset(ctx).events);
    }
    std::ostringstream table;
    table << "outcome,count,percent\n";
    const std::array<std::pair<const char*, std::uint64_t>, 3> rows{
        {{"away_goal", counts.away_goals}, {"no_goal", counts.no_goals}, {"home_goal", counts.home_goals}}};
    for (std::size_t i = 0; i < 3; ++i)
        table << rows[i].first << ',' << rows[i].second << ',' << fixed(counts.percentages[i], 2) << '\n';
    ctx.out << table.str();
    ctx.write("summary.csv", table.str());
    return 0;
}

int cmd_fit(CommandContext& ctx) {
    fit_mode(ctx.cfg);
    const auto data = load_dataset(ctx);
    const auto spec = model_spec(ctx.cfg);
    const auto all = build_design(data.events, data.roster, spec);
    const auto split = split_design(ctx.cfg, ctx.seed, data, all);
    auto mf = fit_model(ctx, split.train, split.test, to_string(spec.variant));

    ctx.write("coefficients.csv", coefficients_csv(all, mf.coefficients));
    json metrics{{"model", to_string(spec.variant)},
                 {"n_predictors", all.n_predictors()},
                 {"train_rows", split.train.n_rows()},
                 {"test_rows", split.test.n_rows()},
                 {"train_deviance", mf.train_deviance},
                 {"oos_deviance", mf.test_deviance},
                 {"penalties", shrinkage_json(mf.shrinkage)}};
    if (mf.dic_in) metrics["dic_in_sample"] = dic_json(*mf.dic_in);
    if (mf.dic_out) metrics["dic_out_of_sample"] = dic_json(*mf.dic_out);
    ctx.write("metrics.json", metrics.dump(2) + "\n");
    ctx.write("fit_report.json", mf.report.dump(2) + "\n");
    if (mf.samples) {
        save_samples(ctx.output_path("samples.bin"), *mf.samples);
        ctx.outputs.push_back(ctx.out_dir / "samples.bin.json");
        std::ostringstream os;
        write_summary_csv(os, summarize_posterior(*mf.samples));
        ctx.write("posterior_summary.csv", os.str());
        std::ostringstream vs;
        vs << "group,side,spread_median,spread_q025,spread_q975,f_median,f_q025,f_q975\n";
        for (const auto& s : variance_decomposition(*mf.samples))
            vs << to_string(s.group) << ',' << to_string(s.side) << ',' << fmt(s.spread[0]) << ',' << fmt(s.spread[1])
               << ',' << fmt(s.spread[4]) << ',' << fmt(s.laplace_fraction[0]) << ','
               << fmt(s.laplace_fraction[1]) << ',' << fmt(s.laplace_fraction[4]) << '\n';
        ctx.write("variance_decomposition.csv", vs.str());
    }
    ctx.out << "model " << to_string(spec.variant) << ": train deviance " << fixed(mf.train_deviance, 2)
            << ", held-out deviance " << fixed(mf.test_deviance, 2) << '\n';
    return 0;
}

int cmd_compare(CommandContext& ctx) {
    fit_mode(ctx.cfg);
    const auto data = load_dataset(ctx);
    std::ostringstream table;
    table << "model,n_predictors,train_deviance,oos_deviance,dic_in_sample,dic_out_of_sample\n";
    json all_reports = json::array();
    std::optional<Split> base;
    for (const char* name : {"score", "teams", "players"}) {
        ModelSpec spec;
        spec.variant = variant_from_string(name);
        const auto design = build_design(data.events, data.roster, spec);
        const auto split = split_design(ctx.cfg, ctx.seed, data, design);
        auto mf = fit_model(ctx, split.train, split.test, name);
        table << name << ',' << design.n_predictors() << ',' << fmt(mf.train_deviance) << ','
              << fmt(mf.test_deviance) << ',' << (mf.dic_in ? fmt(mf.dic_in->dic) : "") << ','
              << (mf.dic_out ? fmt(mf.dic_out->dic) : "") << '\n';
        all_reports.push_back(mf.report);
    }
    ctx.out << table.str();
    ctx.write("comparison.csv", table.str());
    ctx.write("compare_reports.json", all_reports.dump(2) + "\n");
    return 0;
}

int cmd_mvp(CommandContext& ctx) {
    const auto data = load_dataset(ctx);
    auto& cfg = ctx.cfg;
    // Team ability and grand means come from a teams-only fit and stay fixed.
    const auto team_design = build_design(data.events, data.roster, ModelSpec::teams());
    const auto team_shrink = shrinkage_from(cfg, team_design, "mvp.team_penalty", "L2", 1.0, 1.0);
    const auto opts = fit_options(cfg);
    const auto team_fit = fit_penalized(team_design, team_shrink, opts, poisson_start(team_design));

    const auto design = build_design(data.events, data.roster, ModelSpec::players(true));
    const auto fixed_c = EffectTable::from(team_design.registry(), team_fit.coefficients).to_coefficients(design);

    MvpOptions mo;
    mo.lambda_start = cfg.real("mvp.lambda_start", mo.lambda_start);
    mo.step = cfg.real("mvp.step", mo.step);
    mo.weak_threshold = cfg.real("mvp.weak_threshold", mo.weak_threshold);
    mo.fit = opts;
    const auto res = mvp_cascade(design, fixed_c, mo);

    std::ostringstream table;
    table << "team,cell,player,value,lambda,weak\n";
    for (const auto& row : res.teams)
        for (std::size_t c = 0; c < kMvpCells; ++c) {
            const auto& e = row.cells[c];
            table << row.team << ',' << to_string(static_cast<MvpCell>(c)) << ',' << e.player << ','
                  << (e.filled ? fmt(e.value) : "") << ',' << (e.filled ? fmt(e.lambda) : "") << ','
                  << (e.weak ? "true" : "false") << '\n';
        }
    std::ostringstream trace;
    trace << "lambda,nonzero_players,emerged\n";
    for (const auto& t : res.trace) {
        trace << fmt(t.lambda) << ',' << t.nonzero_players << ',';
        for (std::size_t i = 0; i < t.emerged.size(); ++i) trace << (i ? ";" : "") << t.emerged[i];
        trace << '\n';
    }
    ctx.write("mvp_table.csv", table.str());
    ctx.write("mvp_trace.csv", trace.str());
    ctx.out << table.str();
    if (!res.complete) {
        std::string cells;
        for (const auto& u : res.unfilled) cells += (cells.empty() ? "" : ", ") + u;
        throw NumericalError("cascade reached zero penalty with unfilled cells: " + cells);
    }
    return 0;
}

int cmd_pairs(CommandContext& ctx) {
    const auto data = load_dataset(ctx);
    auto& cfg = ctx.cfg;
    const auto spec = ModelSpec::players_plus_pairs(cfg.u64("pairs.count", 2000));
    const auto all = build_design(data.events, data.roster, spec);
    const auto split = split_design(cfg, ctx.seed, data, all);

    GroupShrinkage individual;
    if (cfg.has("pairs.samples")) {
        const std::filesystem::path sp = cfg.required("pairs.samples");
        ctx.inputs.push_back(sp);
        ctx.inputs.push_back(sp.string() + ".json");
        individual = load_samples(sp).mean_shrinkage();
    } else {
        individual = shrinkage_from(cfg, all, "penalty", "L1L2", 8.0, 0.05);
    }
    individual.erase(PoolGroup::Pair);
    const auto lambdas = cfg.reals("pairs.lambdas", {20, 15, 12, 10, 8.5, 7, 5, 3});
    const auto res = pair_selection(split.train, split.test, individual, lambdas, fit_options(cfg),
                                    poisson_start(split.train));

    std::ostringstream table;
    table << "rank,first,second,omega,delta,combined,shared_seconds,emergence_lambda\n";
    for (std::size_t i = 0; i < res.pairs.size(); ++i) {
        const auto& p = res.pairs[i];
        table << i + 1 << ',' << p.first << ',' << p.second << ',' << fmt(p.omega) << ',' << fmt(p.delta) << ','
              << fmt(p.combined) << ',' << fixed(p.shared_seconds, 0) << ',' << fmt(p.emergence_lambda) << '\n';
    }
    std::ostringstream path;
    path << "lambda,nonzero,test_deviance\n";
    for (const auto& pt : res.path.points)
        path << fmt(pt.lambda) << ',' << pt.nonzero << ',' << fmt(*pt.test_deviance) << '\n';
    json summary{{"selected_lambda", res.selected_lambda},
                 {"nonzero_parameters", res.nonzero_parameters},
                 {"unique_pairs", res.unique_pairs},
                 {"candidates", res.candidates},
                 {"individual_penalties", shrinkage_json(individual)}};
    ctx.write("pairs.csv", table.str());
    ctx.write("pair_path.csv", path.str());
    ctx.write("pairs_summary.json", summary.dump(2) + "\n");
    ctx.out << "selected lambda_pair " << fmt(res.selected_lambda) << ": " << res.nonzero_parameters
            << " nonzero parameters over " << res.unique_pairs << " pairs of " << res.candidates << '\n';
    return 0;
}

int cmd_gnet(CommandContext& ctx) {
    auto& cfg = ctx.cfg;
    const std::filesystem::path input = cfg.required("gnet.coefficients");
    ctx.inputs.push_back(input);
    std::ifstream in(input);
    if (!in) throw DataError("cannot open " + input.string());
    const auto rows_in = read_contribution_input(in);
    const std::string conv = cfg.str("gnet.convention", "table");
    GNetConvention c;
    if (conv == "table")
        c = GNetConvention::TableConsistent;
    else if (conv == "printed")
        c = GNetConvention::AsPrinted;
    else
        throw UsageError("gnet.convention must be table or printed");
    const auto rows = contribution_report(rows_in, cfg.real("gnet.r_base", kBaseLogRate), c);
    std::ostringstream os;
    write_contribution_csv(os, rows);
    ctx.out << os.str();
    ctx.write("gnet.csv", os.str());
    return 0;
}

int cmd_simulate(CommandContext& ctx) {
    auto& cfg = ctx.cfg;
    LeagueRecipe r;
    r.n_teams = cfg.u64("simulate.n_teams", r.n_teams);
    r.per_position[0] = cfg.u64("simulate.centers", r.per_position[0]);
    r.per_position[1] = cfg.u64("simulate.left_wings", r.per_position[1]);
    r.per_position[2] = cfg.u64("simulate.right_wings", r.per_position[2]);
    r.per_position[3] = cfg.u64("simulate.defense", r.per_position[3]);
    r.per_position[4] = cfg.u64("simulate.goalies", r.per_position[4]);
    r.games_per_team = cfg.u64("simulate.games_per_team", r.games_per_team);
    r.game_seconds = cfg.real("simulate.game_seconds", r.game_seconds);
    r.duration_median_s = cfg.real("simulate.duration_median_s", r.duration_median_s);
    r.duration_log_sd = cfg.real("simulate.duration_log_sd", r.duration_log_sd);
    r.starter_share = cfg.real("simulate.starter_share", r.starter_share);
    const double ih = cfg.real("simulate.home_intercept", -7.25), ia = cfg.real("simulate.away_intercept", -7.35);
    r.home_intercept.fill(ih);
    r.away_intercept.fill(ia);
    const std::string truth = cfg.str("simulate.truth", "L1L2");
    if (truth != "none") {
        const auto fam = family_from(cfg, "simulate.truth_prior", truth, 12.0, 0.01);
        for (const auto g : {PoolGroup::Center, PoolGroup::LeftWing, PoolGroup::RightWing, PoolGroup::Defense,
                             PoolGroup::Goaltender})
            r.truth.set_group(g, fam);
    }
    r.planted = parse_planted(cfg.str("simulate.planted", ""));
    r.planted_pairs = parse_planted_pairs(cfg.str("simulate.planted_pairs", ""));
    r.seed = ctx.seed;
    const auto league = synthetic_league(r);

    std::ostringstream ev, ro, tr;
    write_events(ev, league.events);
    write_roster(ro, league.roster);
    league.truth.write_csv(tr);
    ctx.write("events.csv", ev.str());
    ctx.write("roster.csv", ro.str());
    ctx.write("truth.csv", tr.str());
    const auto counts = summarize(league.events);
    ctx.out << "simulated " << league.events.size() << " events over " << distinct_games(league.events).size()
            << " games; no-goal share " << fixed(counts.percentages[1], 2) << "%\n";
    return 0;
}

int cmd_validate(CommandContext& ctx) {
    auto& cfg = ctx.cfg;
    QuantileValidationConfig q;
    q.n_replications = cfg.u64("validate.replications", q.n_replications);
    q.n_events = cfg.u64("validate.events", q.n_events);
    q.n_predictors = cfg.u64("validate.predictors", q.n_predictors);
    q.chain.burn_in = cfg.u64("validate.burn_in", q.chain.burn_in);
    q.chain.draws_per_chain = cfg.u64("validate.draws_per_chain", q.chain.draws_per_chain);
    q.chain.n_chains = cfg.u64("validate.n_chains", q.chain.n_chains);
    q.chain.debug_likelihood_power = cfg.real("validate.debug_likelihood_power", 1.0);
    q.seed = ctx.seed;
    const auto rep = validate_posterior_quantiles(q);

    // Quick invariant suite on a random instance.
    Rng rng = make_stream(ctx.seed, 77);
    Design::Builder b;
    for (int p = 0; p < 8; ++p) {
        Predictor pr;
        pr.label = "v" + std::to_string(p);
        pr.group = PoolGroup::Center;
        pr.members = {pr.label};
        b.add_predictor(pr);
    }
    for (int i = 0; i < 200; ++i) {
        std::vector<std::uint32_t> h, a;
        for (std::uint32_t p = 0; p < 8; ++p) {
            const double u = uniform01(rng);
            if (u < 0.3) h.push_back(p);
            else if (u < 0.6) a.push_back(p);
        }
        const double u = uniform01(rng);
        b.add_row(h, a, static_cast<ScoreState>(i % 3), 5.0 + 60.0 * uniform01(rng),
                  u < 0.1 ? Outcome::HomeGoal : u < 0.2 ? Outcome::AwayGoal : Outcome::NoGoal);
    }
    const auto d = std::move(b).build();
    auto c = Coefficients::zeros(d, -4.0);
    std::normal_distribution<double> nd(0.0, 0.3);
    for (auto& v : c.omega) v = nd(rng);
    for (auto& v : c.delta) v = nd(rng);
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
    const bool gradient_ok = worst <= 1e-6;

    json j{{"replications", q.n_replications},
           {"parameters", rep.names},
           {"ks", rep.ks},
           {"p_values", rep.p_values},
           {"adjusted_p_values", rep.adjusted},
           {"min_adjusted_p", rep.min_adjusted},
           {"quantiles_uniform", rep.passed},
           {"gradient_max_rel_error", worst},
           {"gradient_ok", gradient_ok}};
    ctx.write("validation.json", j.dump(2) + "\n");
    ctx.out << "posterior quantiles: min adjusted p " << fixed(rep.min_adjusted, 4)
            << (rep.passed ? " (pass)" : " (FAIL)") << "\ngradient check: max rel error " << worst
            << (gradient_ok ? " (pass)" : " (FAIL)") << '\n';
    if (!rep.passed)
        throw NumericalError("posterior quantiles are not uniform (min adjusted p " + fixed(rep.min_adjusted, 4) + ")");
    if (!gradient_ok) throw NumericalError("analytic gradient disagrees with finite differences");
    return 0;
}

}  // namespace mesh::cli
