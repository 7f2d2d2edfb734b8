#include "mesh/fit_mle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include <json.hpp>

#include "mesh/error.hpp"

namespace mesh {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Slot {
    ParamRef ref;
    const PenaltyFamily* family;  // null for intercepts
};

std::vector<Slot> free_slots(const Design& design, const GroupShrinkage& shrinkage, const FitOptions& opts) {
    std::vector<Slot> slots;
    if (!opts.freeze_intercepts) {
        for (std::uint32_t s = 0; s < kScoreStates; ++s) slots.push_back({{ParamKind::HomeIntercept, s}, nullptr});
        for (std::uint32_t s = 0; s < kScoreStates; ++s) slots.push_back({{ParamKind::AwayIntercept, s}, nullptr});
    }
    for (std::uint32_t p = 0; p < design.n_predictors(); ++p) {
        if (!opts.frozen.empty() && opts.frozen[p]) continue;
        const auto& pr = design.predictor(p);
        if (!pr.defense_only) slots.push_back({{ParamKind::Omega, p}, &shrinkage.at(pr.group, Side::Offense)});
        slots.push_back({{ParamKind::Delta, p}, &shrinkage.at(pr.group, Side::Defense)});
    }
    return slots;
}

double penalty_sum(const std::vector<Slot>& slots, const Coefficients& c) {
    double v = 0.0;
    for (const auto& s : slots)
        if (s.family) v += penalty(*s.family, get(c, s.ref));
    return v;
}

double slot_residual(const Slot& s, double x, double g) {
    if (!s.family) return std::fabs(g);
    const auto& f = *s.family;
    if (f.has_gaussian()) g -= x / f.sigma2;
    if (!f.has_laplace()) return std::fabs(g);
    if (x > 0.0) return std::fabs(g - f.lambda);
    if (x < 0.0) return std::fabs(g + f.lambda);
    return std::max(0.0, std::fabs(g) - f.lambda);
}

double residual(const std::vector<Slot>& slots, const Coefficients& c, const Evaluation& ev) {
    double r = 0.0;
    for (const auto& s : slots) r = std::max(r, slot_residual(s, get(c, s.ref), get(ev.gradient, s.ref)));
    return r;
}

void check_init(const Design& design, const Coefficients& init) {
    init.validate(design);
}

}  // namespace

void FitOptions::validate(const Design& design) const {
    if (max_iterations == 0) throw UsageError("max_iterations must be positive");
    if (!(tolerance > 0.0)) throw UsageError("tolerance must be positive");
    if (!(kkt_tolerance > 0.0)) throw UsageError("kkt tolerance must be positive");
    if (!frozen.empty() && frozen.size() != design.n_predictors())
        throw UsageError("frozen mask size does not match the design registry");
}

Coefficients poisson_start(const Design& design) {
    std::array<double, kScoreStates> gh{}, ga{}, exposure{};
    for (std::size_t i = 0; i < design.n_rows(); ++i) {
        const auto s = static_cast<std::size_t>(design.states()[i]);
        exposure[s] += Baseline::cumulative(design.durations()[i]);
        if (design.outcomes()[i] == Outcome::HomeGoal) gh[s] += 1.0;
        if (design.outcomes()[i] == Outcome::AwayGoal) ga[s] += 1.0;
    }
    double tg = 0.0, te = 0.0;
    for (std::size_t s = 0; s < kScoreStates; ++s) {
        tg += gh[s] + ga[s];
        te += exposure[s];
    }
    // Pooled fallback for states without goals or exposure.
    const double pooled = (tg > 0.0 && te > 0.0) ? std::log(tg / (2.0 * te)) : -7.3;
    auto c = Coefficients::zeros(design, pooled);
    for (std::size_t s = 0; s < kScoreStates; ++s) {
        if (exposure[s] <= 0.0) continue;
        if (gh[s] > 0.0) c.home_intercept[s] = std::log(gh[s] / exposure[s]);
        if (ga[s] > 0.0) c.away_intercept[s] = std::log(ga[s] / exposure[s]);
    }
    return c;
}

double penalized_objective(const Design& design, const GroupShrinkage& shrinkage, const Coefficients& c,
                           const FitOptions& opts) {
    return total_loglik(design, c) - penalty_sum(free_slots(design, shrinkage, opts), c);
}

double kkt_residual(const Design& design, const GroupShrinkage& shrinkage, const Coefficients& c,
                    const FitOptions& opts) {
    return residual(free_slots(design, shrinkage, opts), c, evaluate(design, c));
}

FitResult fit_penalized(const Design& design, const GroupShrinkage& shrinkage, const FitOptions& opts,
                        const Coefficients& init) {
    const auto t0 = std::chrono::steady_clock::now();
    opts.validate(design);
    check_init(design, init);
    const auto slots = free_slots(design, shrinkage, opts);
    const std::size_t n = slots.size();

    FitResult res;
    Coefficients x = init;
    double ll_x = total_loglik(design, x);
    double f_x = ll_x - penalty_sum(slots, x);
    if (!std::isfinite(f_x)) throw NumericalError("nonfinite objective at the initial point");

    Coefficients y = x, z = x, x_prev = x;
    double theta = 1.0;
    double t = 1.0;
    std::vector<double> dvec(n), gvec(n), yvec(n), zvec(n);

    // Evaluation at x, reused when y coincides with x.
    std::optional<Evaluation> ev_x;
    bool y_is_x = true;
    int stalled = 0;

    for (std::size_t it = 0; it < opts.max_iterations; ++it) {
        Evaluation ev = (y_is_x && ev_x) ? *ev_x : evaluate(design, y);
        if (y_is_x) ev_x = ev;
        for (std::size_t j = 0; j < n; ++j) {
            gvec[j] = get(ev.gradient, slots[j].ref);
            dvec[j] = get(ev.curvature, slots[j].ref) + 1e-10;
            yvec[j] = get(y, slots[j].ref);
        }

        double ll_z = 0.0;
        bool found = false;
        for (;;) {
            z = y;
            double lin = 0.0, quad = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double step = t / dvec[j];
                const double v = yvec[j] + step * gvec[j];
                const double zj = slots[j].family ? prox(*slots[j].family, v, step) : v;
                zvec[j] = zj;
                get(z, slots[j].ref) = zj;
                const double d = zj - yvec[j];
                lin += gvec[j] * d;
                quad += dvec[j] * d * d;
            }
            bool finite = true;
            try {
                ll_z = total_loglik(design, z);
            } catch (const NumericalError&) {
                finite = false;
            }
            if (finite && ll_z >= ev.loglik + lin - quad / (2.0 * t) - 8.0 * kEps * std::fabs(ev.loglik)) {
                found = true;
                break;
            }
            t *= 0.5;
            if (t < 1e-14) break;
        }
        if (!found) {
            res.warning = "line search failed to find an ascent step";
            break;
        }
        t = std::min(1.0, 2.0 * t);

        const double f_z = ll_z - penalty_sum(slots, z);
        double f_new = f_x;
        bool moved = false;
        // Near the optimum improvements fall below the summation noise of the
        // objective. A plain step passed the majorization test, so it is kept
        // when flat to within that noise; it still reduces the KKT residual.
        const double noise = (y_is_x ? 32.0 : 4.0) * kEps * std::fabs(f_x);
        if (f_z >= f_x - noise) {
            x_prev = x;
            x = z;
            ll_x = ll_z;
            f_new = f_z;
            moved = true;
            ev_x.reset();
        }
        const double rel = std::fabs(f_new - f_x) / std::max(1.0, std::fabs(f_x));
        f_x = f_new;
        res.objective_trace.push_back(f_x);
        res.iterations = it + 1;

        if (opts.accelerate && moved) {
            const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
            const double beta = (theta - 1.0) / theta_next;
            y = x;
            if (beta > 0.0) {
                for (const auto& s : slots) get(y, s.ref) += beta * (get(x, s.ref) - get(x_prev, s.ref));
            }
            theta = theta_next;
            y_is_x = beta <= 0.0;
        } else {
            // Plain step, or restart after a non-improving extrapolation.
            y = x;
            theta = 1.0;
            y_is_x = true;
        }

        stalled = moved ? 0 : stalled + 1;
        if (rel < opts.tolerance) {
            if (!ev_x) ev_x = evaluate(design, x);
            res.kkt_residual = residual(slots, x, *ev_x);
            if (res.kkt_residual <= opts.kkt_tolerance) {
                res.converged = true;
                break;
            }
            if (stalled >= 3) {
                res.warning = "stalled: no representable ascent step";
                break;
            }
        }
    }

    res.coefficients = x;
    res.loglik = ll_x;
    res.objective = f_x;
    if (!res.converged) {
        res.kkt_residual = residual(slots, x, evaluate(design, x));
        if (res.warning.empty()) res.warning = "did not converge within max_iterations";
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

GroupShrinkage with_lambda(const GroupShrinkage& base, const std::vector<PoolGroup>& targets, double lambda) {
    GroupShrinkage out = base;
    for (const auto g : targets) {
        for (const auto side : {Side::Offense, Side::Defense}) {
            if (g == PoolGroup::Goaltender && side == Side::Offense) continue;
            if (base.has(g, side)) {
                const auto& f = base.at(g, side);
                if (f.has_gaussian())
                    out.set(g, side, PenaltyFamily::l1l2(lambda, f.sigma2));
                else
                    out.set(g, side, PenaltyFamily::l1(lambda));
            } else {
                out.set(g, side, PenaltyFamily::l1(lambda));
            }
        }
    }
    return out;
}

PenaltyPath penalty_path(const Design& train, const GroupShrinkage& base, const std::vector<PoolGroup>& targets,
                         const std::vector<double>& lambdas, const FitOptions& opts, const Coefficients& init,
                         const Design* test) {
    if (lambdas.empty()) throw UsageError("penalty path needs at least one lambda");
    for (std::size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] < lambdas[i - 1])) throw UsageError("penalty values must be strictly decreasing");
    std::vector<bool> in_target(kPoolGroups, false);
    for (const auto g : targets) in_target[static_cast<std::size_t>(g)] = true;

    PenaltyPath path;
    path.targets = targets;
    Coefficients warm = init;
    for (const double lambda : lambdas) {
        const auto shrink = with_lambda(base, targets, lambda);
        auto fit = fit_penalized(train, shrink, opts, warm);
        PathPoint pt;
        pt.lambda = lambda;
        pt.objective = fit.objective;
        pt.train_loglik = fit.loglik;
        pt.converged = fit.converged;
        pt.iterations = fit.iterations;
        for (std::size_t p = 0; p < train.n_predictors(); ++p) {
            if (!in_target[static_cast<std::size_t>(train.predictor(p).group)]) continue;
            pt.nonzero += (fit.coefficients.omega[p] != 0.0) + (fit.coefficients.delta[p] != 0.0);
        }
        if (test) pt.test_deviance = -2.0 * total_loglik(*test, fit.coefficients);
        warm = fit.coefficients;
        pt.coefficients = std::move(fit.coefficients);
        path.points.push_back(std::move(pt));
    }
    return path;
}

CvSelection cv_select(const Design& train, const Design& test, const GroupShrinkage& base,
                      const std::vector<PoolGroup>& targets, std::vector<double> candidates,
                      const FitOptions& opts, const Coefficients& init) {
    if (candidates.empty()) throw UsageError("cv_select needs at least one candidate");
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    CvSelection sel;
    sel.path = penalty_path(train, base, targets, candidates, opts, init, &test);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sel.path.points.size(); ++i) {
        const double dev = *sel.path.points[i].test_deviance;
        // Strict improvement beyond rounding noise, so ties keep the larger lambda.
        if (dev < best - 1e-9 * std::max(1.0, std::fabs(best == INFINITY ? dev : best))) {
            best = dev;
            sel.index = i;
        }
    }
    sel.lambda = sel.path.points[sel.index].lambda;
    return sel;
}

std::string to_string(MvpCell c) {
    switch (c) {
        case MvpCell::OffenseMvp: return "offense_mvp";
        case MvpCell::OffenseLvp: return "offense_lvp";
        case MvpCell::DefenseMvp: return "defense_mvp";
        case MvpCell::DefenseLvp: return "defense_lvp";
        case MvpCell::TotalMvp: return "total_mvp";
        case MvpCell::TotalLvp: return "total_lvp";
    }
    return "?";
}

std::vector<std::optional<std::uint32_t>> team_of_record(const Design& design) {
    std::vector<std::map<std::uint32_t, std::uint64_t>> counts(design.n_predictors());
    std::vector<bool> is_team(design.n_predictors());
    for (std::size_t p = 0; p < design.n_predictors(); ++p)
        is_team[p] = design.predictor(p).kind == PredictorKind::Team;
    for (std::size_t i = 0; i < design.n_rows(); ++i) {
        const auto row = design.row(i);
        for (const auto side : {row.home, row.away}) {
            std::optional<std::uint32_t> team;
            for (const auto p : side)
                if (is_team[p]) team = p;
            if (!team) continue;
            for (const auto p : side)
                if (design.predictor(p).kind == PredictorKind::Player) ++counts[p][*team];
        }
    }
    std::vector<std::optional<std::uint32_t>> out(design.n_predictors());
    for (std::size_t p = 0; p < design.n_predictors(); ++p) {
        std::uint64_t best = 0;
        for (const auto& [team, n] : counts[p]) {
            if (n > best) {
                best = n;
                out[p] = team;
            }
        }
    }
    return out;
}

MvpResult mvp_cascade(const Design& design, const Coefficients& fixed, const MvpOptions& opts) {
    if (!(opts.step > 0.0)) throw UsageError("cascade step must be positive");
    if (!(opts.lambda_start > 0.0)) throw UsageError("cascade must start at a positive penalty");
    fixed.validate(design);
    const auto record = team_of_record(design);

    std::vector<std::uint32_t> teams;
    std::vector<PoolGroup> player_groups;
    std::vector<bool> frozen(design.n_predictors(), false);
    for (std::uint32_t p = 0; p < design.n_predictors(); ++p) {
        const auto& pr = design.predictor(p);
        if (pr.kind == PredictorKind::Team) {
            teams.push_back(p);
            frozen[p] = true;
        } else if (pr.kind == PredictorKind::Player) {
            if (std::find(player_groups.begin(), player_groups.end(), pr.group) == player_groups.end())
                player_groups.push_back(pr.group);
        } else {
            frozen[p] = true;
        }
    }
    if (teams.empty()) throw UsageError("mvp cascade needs a design with team predictors");

    FitOptions fo = opts.fit;
    fo.frozen = frozen;
    fo.freeze_intercepts = true;

    MvpResult res;
    std::map<std::uint32_t, std::size_t> team_row;
    for (const auto t : teams) {
        team_row[t] = res.teams.size();
        MvpTeamRow r;
        r.team = design.predictor(t).label.substr(5);
        res.teams.push_back(r);
    }

    Coefficients warm = fixed;
    for (std::uint32_t p = 0; p < design.n_predictors(); ++p) {
        if (design.predictor(p).kind == PredictorKind::Player) {
            warm.omega[p] = 0.0;
            warm.delta[p] = 0.0;
        }
    }
    std::vector<bool> seen(design.n_predictors(), false);
    const std::size_t total_cells = teams.size() * kMvpCells;
    std::size_t filled = 0;

    for (std::size_t k = 0;; ++k) {
        const double lambda = opts.lambda_start - static_cast<double>(k) * opts.step;
        if (lambda <= 1e-12) break;
        const auto shrink = GroupShrinkage::uniform(player_groups, PenaltyFamily::l1(lambda));
        auto fit = fit_penalized(design, shrink, fo, warm);
        warm = fit.coefficients;
        const auto& c = fit.coefficients;

        MvpTracePoint tp;
        tp.lambda = lambda;
        for (std::uint32_t p = 0; p < design.n_predictors(); ++p) {
            if (design.predictor(p).kind != PredictorKind::Player) continue;
            if (c.omega[p] != 0.0 || c.delta[p] != 0.0) {
                ++tp.nonzero_players;
                if (!seen[p]) {
                    seen[p] = true;
                    tp.emerged.push_back(design.predictor(p).label);
                }
            }
        }
        res.trace.push_back(tp);

        for (auto& row : res.teams) {
            const std::uint32_t team_idx = *design.find_team(row.team);
            for (std::size_t cell = 0; cell < kMvpCells; ++cell) {
                if (row.cells[cell].filled) continue;
                std::optional<std::uint32_t> best;
                double best_mag = 0.0, best_val = 0.0;
                for (std::uint32_t p = 0; p < design.n_predictors(); ++p) {
                    if (design.predictor(p).kind != PredictorKind::Player) continue;
                    if (record[p] != team_idx) continue;
                    double v = 0.0;
                    bool ok = false;
                    switch (static_cast<MvpCell>(cell)) {
                        case MvpCell::OffenseMvp: v = c.omega[p]; ok = v > 0.0; break;
                        case MvpCell::OffenseLvp: v = c.omega[p]; ok = v < 0.0; break;
                        case MvpCell::DefenseMvp: v = c.delta[p]; ok = v < 0.0; break;
                        case MvpCell::DefenseLvp: v = c.delta[p]; ok = v > 0.0; break;
                        case MvpCell::TotalMvp: v = c.net(p); ok = v > 0.0; break;
                        case MvpCell::TotalLvp: v = c.net(p); ok = v < 0.0; break;
                    }
                    if (ok && std::fabs(v) > best_mag) {
                        best_mag = std::fabs(v);
                        best_val = v;
                        best = p;
                    }
                }
                if (best) {
                    auto& e = row.cells[cell];
                    e.filled = true;
                    e.player = design.predictor(*best).label;
                    e.value = best_val;
                    e.lambda = lambda;
                    e.weak = lambda < opts.weak_threshold;
                    ++filled;
                }
            }
        }
        if (filled == total_cells) break;
    }
    res.complete = filled == total_cells;
    for (const auto& row : res.teams)
        for (std::size_t cell = 0; cell < kMvpCells; ++cell)
            if (!row.cells[cell].filled) res.unfilled.push_back(row.team + ":" + to_string(static_cast<MvpCell>(cell)));
    res.final_coefficients = warm;
    return res;
}

PairSelectionResult pair_selection(const Design& train, const Design& test, const GroupShrinkage& individual,
                                   const std::vector<double>& lambdas, const FitOptions& opts,
                                   const Coefficients& init) {
    std::vector<std::uint32_t> pair_idx;
    for (std::uint32_t p = 0; p < train.n_predictors(); ++p)
        if (train.predictor(p).kind == PredictorKind::PlayerPair) pair_idx.push_back(p);
    if (pair_idx.empty()) throw UsageError("pair selection needs pair predictors in the design");

    GroupShrinkage base = individual;
    base.erase(PoolGroup::Pair);
    auto sel = cv_select(train, test, base, {PoolGroup::Pair}, lambdas, opts, init);

    PairSelectionResult res;
    res.selected_lambda = sel.lambda;
    res.candidates = pair_idx.size();
    res.emergence.assign(train.n_predictors(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& pt : sel.path.points)
        for (const auto p : pair_idx)
            if (std::isnan(res.emergence[p]) && (pt.coefficients.omega[p] != 0.0 || pt.coefficients.delta[p] != 0.0))
                res.emergence[p] = pt.lambda;

    std::vector<double> shared(train.n_predictors(), 0.0);
    for (const Design* d : {&train, &test}) {
        for (std::size_t i = 0; i < d->n_rows(); ++i) {
            const auto row = d->row(i);
            for (const auto side : {row.home, row.away})
                for (const auto p : side)
                    if (d->predictor(p).kind == PredictorKind::PlayerPair) shared[p] += row.duration_s;
        }
    }

    const auto& c = sel.path.points[sel.index].coefficients;
    for (const auto p : pair_idx) {
        const bool wo = c.omega[p] != 0.0, wd = c.delta[p] != 0.0;
        res.nonzero_parameters += wo + wd;
        if (!wo && !wd) continue;
        ++res.unique_pairs;
        const auto& pr = train.predictor(p);
        SelectedPair sp;
        sp.label = pr.label;
        sp.first = pr.members.at(0);
        sp.second = pr.members.at(1);
        sp.omega = c.omega[p];
        sp.delta = c.delta[p];
        sp.combined = c.net(p);
        sp.shared_seconds = shared[p];
        sp.emergence_lambda = res.emergence[p];
        res.pairs.push_back(sp);
    }
    std::sort(res.pairs.begin(), res.pairs.end(),
              [](const SelectedPair& a, const SelectedPair& b) { return a.combined > b.combined; });
    res.coefficients = c;
    res.path = std::move(sel.path);
    return res;
}

std::string fit_report_json(const Design& design, const GroupShrinkage& shrinkage, const FitResult& result) {
    nlohmann::json j;
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    j["objective"] = result.objective;
    j["loglik"] = result.loglik;
    j["kkt_residual"] = result.kkt_residual;
    j["wall_seconds"] = result.seconds;
    if (!result.warning.empty()) j["warning"] = result.warning;
    j["objective_trace"] = result.objective_trace;
    std::size_t nonzero = 0;
    for (std::size_t p = 0; p < design.n_predictors(); ++p)
        nonzero += (result.coefficients.omega[p] != 0.0) + (result.coefficients.delta[p] != 0.0);
    j["nonzero_parameters"] = nonzero;
    j["n_predictors"] = design.n_predictors();
    auto& pen = j["penalties"];
    pen = nlohmann::json::array();
    for (const auto& [key, fam] : shrinkage.entries()) {
        nlohmann::json e;
        e["group"] = to_string(key.first);
        e["side"] = to_string(key.second);
        e["family"] = to_string(fam.kind);
        if (fam.has_laplace()) e["lambda"] = fam.lambda;
        if (fam.has_gaussian()) e["sigma2"] = fam.sigma2;
        pen.push_back(e);
    }
    return j.dump(2);
}

}  // namespace mesh
