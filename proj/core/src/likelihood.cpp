#include "mesh/likelihood.hpp"

#include <cmath>
#include <string>

#include "mesh/error.hpp"
#include "mesh/parallel.hpp"

namespace mesh {
namespace {

double goal_term(Outcome y, const LinearPredictor& eta, double t) {
    switch (y) {
        case Outcome::HomeGoal: return eta.home + Baseline::log_hazard(t);
        case Outcome::AwayGoal: return eta.away + Baseline::log_hazard(t);
        case Outcome::NoGoal: return 0.0;
    }
    return 0.0;
}

}  // namespace

Coefficients Coefficients::zeros(std::size_t n_predictors, double intercept) {
    Coefficients c;
    c.home_intercept.fill(intercept);
    c.away_intercept.fill(intercept);
    c.omega.assign(n_predictors, 0.0);
    c.delta.assign(n_predictors, 0.0);
    return c;
}

Coefficients Coefficients::zeros(const Design& design, double intercept) {
    return zeros(design.n_predictors(), intercept);
}

void Coefficients::validate(const Design& design) const {
    if (omega.size() != design.n_predictors() || delta.size() != design.n_predictors())
        throw DataError("coefficient vector size does not match the design registry");
    for (std::size_t s = 0; s < kScoreStates; ++s)
        if (!std::isfinite(home_intercept[s]) || !std::isfinite(away_intercept[s]))
            throw DataError("nonfinite intercept");
    for (std::size_t p = 0; p < omega.size(); ++p) {
        if (!std::isfinite(omega[p]) || !std::isfinite(delta[p]))
            throw DataError("nonfinite coefficient for predictor '" + design.predictor(p).label + "'");
        if (design.predictor(p).defense_only && omega[p] != 0.0)
            throw DataError("defense-only predictor '" + design.predictor(p).label + "' has nonzero omega");
    }
}

LinearPredictor linear_predictor(const SparseRow& row, const Coefficients& c) {
    const auto s = static_cast<std::size_t>(row.score_state);
    LinearPredictor eta{c.home_intercept[s], c.away_intercept[s]};
    for (const auto p : row.home) {
        eta.home += c.omega[p];
        eta.away += c.delta[p];
    }
    for (const auto p : row.away) {
        eta.away += c.omega[p];
        eta.home += c.delta[p];
    }
    return eta;
}

RatePair rates(const SparseRow& row, const Coefficients& c) {
    const auto eta = linear_predictor(row, c);
    RatePair r{std::exp(eta.home), std::exp(eta.away)};
    if (!std::isfinite(r.home) || !std::isfinite(r.away) || r.home <= 0.0 || r.away <= 0.0)
        throw NumericalError("nonfinite-rate error: scoring rate overflowed or underflowed");
    return r;
}

double event_loglik(const SparseRow& row, const Coefficients& c) {
    const auto eta = linear_predictor(row, c);
    const double exposure = Baseline::cumulative(row.duration_s);
    return goal_term(row.outcome, eta, row.duration_s) - (std::exp(eta.home) + std::exp(eta.away)) * exposure;
}

double total_loglik(const Design& design, const Coefficients& c) {
    const std::size_t n = design.n_rows();
    const std::size_t n_chunks = chunk_count(n);
    std::vector<double> partial(n_chunks, 0.0);
    parallel_for(n_chunks, [&](std::size_t k) {
        const std::size_t end = std::min(n, (k + 1) * kRowChunk);
        double acc = 0.0;
        for (std::size_t i = k * kRowChunk; i < end; ++i) acc += event_loglik(design.row(i), c);
        partial[k] = acc;
    });
    double total = 0.0;
    for (double v : partial) total += v;
    if (!std::isfinite(total)) throw NumericalError("nonfinite log-likelihood");
    return total;
}

Evaluation evaluate(const Design& design, const Coefficients& c) {
    const std::size_t n = design.n_rows();
    const std::size_t P = design.n_predictors();
    const std::size_t n_chunks = chunk_count(n);
    // Per-chunk slab: [ll | gi_h(3) gi_a(3) go(P) gd(P) | ci_h(3) ci_a(3) co(P) cd(P)]
    const std::size_t half = 2 * kScoreStates + 2 * P;
    const std::size_t stride = 1 + 2 * half;
    std::vector<double> slab(n_chunks * stride, 0.0);

    parallel_for(n_chunks, [&](std::size_t k) {
        double* out = slab.data() + k * stride;
        double* g_ih = out + 1;
        double* g_ia = g_ih + kScoreStates;
        double* g_o = g_ia + kScoreStates;
        double* g_d = g_o + P;
        double* c_ih = out + 1 + half;
        double* c_ia = c_ih + kScoreStates;
        double* c_o = c_ia + kScoreStates;
        double* c_d = c_o + P;
        const std::size_t end = std::min(n, (k + 1) * kRowChunk);
        double ll = 0.0;
        for (std::size_t i = k * kRowChunk; i < end; ++i) {
            const SparseRow row = design.row(i);
            const auto eta = linear_predictor(row, c);
            const double exposure = Baseline::cumulative(row.duration_s);
            const double eh = std::exp(eta.home) * exposure;
            const double ea = std::exp(eta.away) * exposure;
            ll += goal_term(row.outcome, eta, row.duration_s) - eh - ea;
            const double yh = row.outcome == Outcome::HomeGoal ? 1.0 : 0.0;
            const double ya = row.outcome == Outcome::AwayGoal ? 1.0 : 0.0;
            const double rh = yh - eh;  // d ll / d eta_home
            const double ra = ya - ea;
            const auto s = static_cast<std::size_t>(row.score_state);
            g_ih[s] += rh;
            g_ia[s] += ra;
            c_ih[s] += eh;
            c_ia[s] += ea;
            for (const auto p : row.home) {
                g_o[p] += rh;
                g_d[p] += ra;
                c_o[p] += eh;
                c_d[p] += ea;
            }
            for (const auto p : row.away) {
                g_o[p] += ra;
                g_d[p] += rh;
                c_o[p] += ea;
                c_d[p] += eh;
            }
        }
        out[0] = ll;
    });

    Evaluation ev;
    ev.gradient = Coefficients::zeros(P);
    ev.curvature = Coefficients::zeros(P);
    std::vector<double> sum(stride, 0.0);
    for (std::size_t k = 0; k < n_chunks; ++k) {
        const double* in = slab.data() + k * stride;
        for (std::size_t j = 0; j < stride; ++j) sum[j] += in[j];
    }
    ev.loglik = sum[0];
    if (!std::isfinite(ev.loglik)) throw NumericalError("nonfinite log-likelihood");
    auto unpack = [&](const double* base, Coefficients& dst) {
        for (std::size_t s = 0; s < kScoreStates; ++s) {
            dst.home_intercept[s] = base[s];
            dst.away_intercept[s] = base[kScoreStates + s];
        }
        for (std::size_t p = 0; p < P; ++p) {
            dst.omega[p] = base[2 * kScoreStates + p];
            dst.delta[p] = base[2 * kScoreStates + P + p];
        }
    };
    unpack(sum.data() + 1, ev.gradient);
    unpack(sum.data() + 1 + half, ev.curvature);
    for (std::size_t p = 0; p < P; ++p) {
        if (design.predictor(p).defense_only) {
            ev.gradient.omega[p] = 0.0;
            ev.curvature.omega[p] = 0.0;
        }
    }
    return ev;
}

ParameterLayout::ParameterLayout(const Design& design) {
    for (std::uint32_t s = 0; s < kScoreStates; ++s) refs_.push_back({ParamKind::HomeIntercept, s});
    for (std::uint32_t s = 0; s < kScoreStates; ++s) refs_.push_back({ParamKind::AwayIntercept, s});
    for (std::uint32_t p = 0; p < design.n_predictors(); ++p) {
        if (!design.predictor(p).defense_only) refs_.push_back({ParamKind::Omega, p});
        refs_.push_back({ParamKind::Delta, p});
    }
}

double get(const Coefficients& c, const ParamRef& r) {
    switch (r.kind) {
        case ParamKind::HomeIntercept: return c.home_intercept[r.index];
        case ParamKind::AwayIntercept: return c.away_intercept[r.index];
        case ParamKind::Omega: return c.omega[r.index];
        case ParamKind::Delta: return c.delta[r.index];
    }
    return 0.0;
}

double& get(Coefficients& c, const ParamRef& r) {
    switch (r.kind) {
        case ParamKind::HomeIntercept: return c.home_intercept[r.index];
        case ParamKind::AwayIntercept: return c.away_intercept[r.index];
        case ParamKind::Omega: return c.omega[r.index];
        case ParamKind::Delta: break;
    }
    return c.delta[r.index];
}

std::vector<double> ParameterLayout::flatten(const Coefficients& c) const {
    std::vector<double> x;
    x.reserve(refs_.size());
    for (const auto& r : refs_) x.push_back(get(c, r));
    return x;
}

void ParameterLayout::unflatten(const std::vector<double>& x, Coefficients& c) const {
    if (x.size() != refs_.size()) throw UsageError("parameter vector size does not match layout");
    for (std::size_t i = 0; i < refs_.size(); ++i) get(c, refs_[i]) = x[i];
}

std::vector<double> gradient(const Design& design, const Coefficients& c) {
    const auto ev = evaluate(design, c);
    return ParameterLayout(design).flatten(ev.gradient);
}

}  // namespace mesh
