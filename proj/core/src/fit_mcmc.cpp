#include "mesh/fit_mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "mesh/error.hpp"
#include "mesh/parallel.hpp"
#include "mesh/simulate.hpp"
#include "mesh/stats.hpp"

namespace mesh {
namespace {

double prior_precision(const PenaltyFamily& f) {
    double v = 0.0;
    if (f.has_gaussian()) v += 1.0 / f.sigma2;
    if (f.has_laplace()) v += 0.5 * f.lambda * f.lambda;
    return v;
}

double normal_log_pdf(double x, double m, double sd) {
    const double z = (x - m) / sd;
    return -0.5 * z * z - std::log(sd) - 0.91893853320467274178;
}

// Laplace-Gaussian (or pure) log-likelihood of n coefficients with
// sum |x| = s1 and sum x^2 = s2.
double group_loglik(PenaltyFamily::Kind kind, double lambda, double sigma2, double n, double s1, double s2) {
    switch (kind) {
        case PenaltyFamily::Kind::L1: return n * std::log(0.5 * lambda) - lambda * s1;
        case PenaltyFamily::Kind::L2:
            return -0.5 * n * std::log(sigma2) - 0.5 * s2 / sigma2 - n * 0.91893853320467274178;
        case PenaltyFamily::Kind::L1L2: {
            const double sigma = std::sqrt(sigma2);
            return -n * (std::log(2.0 * sigma) + log_mills_ratio(sigma * lambda)) - lambda * s1 - 0.5 * s2 / sigma2;
        }
    }
    return 0.0;
}

std::vector<double> cell_widths(const std::vector<double>& g) {
    std::vector<double> w(g.size(), 1.0);
    if (g.size() < 2) return w;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double lo = k == 0 ? g[0] : 0.5 * (g[k - 1] + g[k]);
        const double hi = k + 1 == g.size() ? g[k] : 0.5 * (g[k] + g[k + 1]);
        w[k] = hi - lo;
    }
    return w;
}

std::vector<double> normalize_log_weights(std::vector<double> lw, const std::string& what) {
    double mx = -INFINITY;
    for (double v : lw)
        if (v > mx) mx = v;
    if (!std::isfinite(mx)) throw NumericalError("grid mass underflow for " + what);
    double sum = 0.0;
    for (double& v : lw) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : lw) v /= sum;
    return lw;
}

std::size_t draw_index(const std::vector<double>& p, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        acc += p[k];
        if (u < acc) return k;
    }
    return p.size() - 1;
}

std::string slot_name(const HyperSlot& s) { return to_string(s.group) + "/" + to_string(s.side); }

struct SlotStats {
    double n = 0.0, s1 = 0.0, s2 = 0.0;
};

}  // namespace

std::vector<double> GridSpec::s_grid() const {
    std::vector<double> g(points);
    const double a = std::log(s_min), b = std::log(s_max);
    for (std::size_t k = 0; k < points; ++k)
        g[k] = std::exp(points == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1));
    return g;
}

std::vector<double> GridSpec::f_grid() const {
    std::vector<double> g(points);
    for (std::size_t k = 0; k < points; ++k)
        g[k] = points == 1 ? f_min
                           : f_min + (f_max - f_min) * static_cast<double>(k) / static_cast<double>(points - 1);
    return g;
}

void ChainConfig::validate() const {
    if (n_chains == 0) throw UsageError("n_chains must be positive");
    if (thin == 0) throw UsageError("thin must be at least 1");
    if (min_kept < 500) throw UsageError("min_kept must be at least 500");
    if (n_chains * draws_per_chain < min_kept)
        throw UsageError("planned retained draws (" + std::to_string(n_chains * draws_per_chain) +
                         ") fall below min_kept (" + std::to_string(min_kept) + ")");
    if (adapt_interval == 0) throw UsageError("adapt_interval must be positive");
    if (!(accept_low > 0.0 && accept_low < accept_high && accept_high < 1.0))
        throw UsageError("acceptance target band must satisfy 0 < low < high < 1");
    if (grid.points < 2) throw UsageError("grid needs at least two points");
    if (!(grid.s_min > 0.0 && grid.s_min < grid.s_max)) throw UsageError("invalid total-shrinkage grid bounds");
    if (!(grid.f_min > 0.0 && grid.f_min < grid.f_max && grid.f_max < 1.0))
        throw UsageError("invalid fraction grid bounds");
    if (!(intercept_prior_sd > 0.0)) throw UsageError("intercept prior sd must be positive");
    if (refresh_interval == 0) throw UsageError("refresh_interval must be positive");
    hyper_priors.validate();
}

RowIndex::RowIndex(const Design& design) {
    const std::size_t P = design.n_predictors();
    home_rows.resize(P);
    away_rows.resize(P);
    goals_for.assign(P, 0.0);
    goals_against.assign(P, 0.0);
    for (std::uint32_t i = 0; i < design.n_rows(); ++i) {
        const auto row = design.row(i);
        const auto s = static_cast<std::size_t>(row.score_state);
        state_rows[s].push_back(i);
        const double yh = row.outcome == Outcome::HomeGoal, ya = row.outcome == Outcome::AwayGoal;
        home_goals[s] += yh;
        away_goals[s] += ya;
        for (const auto p : row.home) {
            home_rows[p].push_back(i);
            goals_for[p] += yh;
            goals_against[p] += ya;
        }
        for (const auto p : row.away) {
            away_rows[p].push_back(i);
            goals_for[p] += ya;
            goals_against[p] += yh;
        }
    }
}

SamplerState::SamplerState(const Design& design, Coefficients init, GroupShrinkage shrinkage,
                           const ChainConfig& config)
    : SamplerState(design, std::make_shared<RowIndex>(design), std::move(init), std::move(shrinkage), config) {}

SamplerState::SamplerState(const Design& design, std::shared_ptr<const RowIndex> index, Coefficients init,
                           GroupShrinkage shrinkage, const ChainConfig& config)
    : design_(&design), index_(std::move(index)), coeffs_(std::move(init)), shrink_(std::move(shrinkage)),
      config_(config) {
    coeffs_.validate(design);
    shrink_.require_cover(design);
    for (const auto& [key, fam] : shrink_.entries()) {
        std::vector<std::uint32_t> members;
        for (std::uint32_t p = 0; p < design.n_predictors(); ++p) {
            const auto& pr = design.predictor(p);
            if (pr.group != key.first) continue;
            if (key.second == Side::Offense && pr.defense_only) continue;
            members.push_back(p);
        }
        if (members.empty()) continue;
        slots_.push_back({key.first, key.second, fam.kind});
        slot_members_.push_back(std::move(members));
    }
    refresh();
    init_scales();
}

void SamplerState::refresh() {
    const std::size_t n = design_->n_rows();
    eh_.resize(n);
    ea_.resize(n);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = design_->row(i);
        const auto eta = linear_predictor(row, coeffs_);
        const double expo = Baseline::cumulative(row.duration_s);
        eh_[i] = std::exp(eta.home) * expo;
        ea_[i] = std::exp(eta.away) * expo;
        if (row.outcome == Outcome::HomeGoal) ll += eta.home + Baseline::log_hazard(row.duration_s);
        if (row.outcome == Outcome::AwayGoal) ll += eta.away + Baseline::log_hazard(row.duration_s);
        ll -= eh_[i] + ea_[i];
    }
    if (!std::isfinite(ll)) throw NumericalError("nonfinite log-likelihood in sampler state");
    loglik_ = ll;
}

double SamplerState::recompute_log_lik() const {
    double ll = 0.0;
    for (std::size_t i = 0; i < design_->n_rows(); ++i) ll += event_loglik(design_->row(i), coeffs_);
    return ll;
}

double SamplerState::log_prior() const {
    double lp = 0.0;
    for (std::size_t s = 0; s < kScoreStates; ++s) {
        lp += normal_log_pdf(coeffs_.home_intercept[s], config_.intercept_prior_mean, config_.intercept_prior_sd);
        lp += normal_log_pdf(coeffs_.away_intercept[s], config_.intercept_prior_mean, config_.intercept_prior_sd);
    }
    for (std::size_t p = 0; p < coeffs_.n_predictors(); ++p) {
        const auto& pr = design_->predictor(p);
        if (!pr.defense_only) lp += log_density(shrink_.at(pr.group, Side::Offense), coeffs_.omega[p]);
        lp += log_density(shrink_.at(pr.group, Side::Defense), coeffs_.delta[p]);
    }
    for (const auto& slot : slots_) {
        const auto& f = shrink_.at(slot.group, slot.side);
        if (f.has_laplace()) lp += hyper_log_prior_lambda(config_.hyper_priors, f.lambda);
        if (f.has_gaussian()) lp += hyper_log_prior_sigma2(config_.hyper_priors, f.sigma2);
    }
    return lp;
}

void SamplerState::init_scales() {
    scale_.assign(n_blocks(), 0.1);
    const double ip = 1.0 / (config_.intercept_prior_sd * config_.intercept_prior_sd);
    for (std::size_t s = 0; s < kScoreStates; ++s) {
        double a = 0.0, b = 0.0;
        for (const auto i : index_->state_rows[s]) {
            a += eh_[i];
            b += ea_[i];
        }
        scale_[s] = 1.7 / std::sqrt(0.5 * (a + b) + ip);
    }
    for (std::uint32_t p = 0; p < coeffs_.n_predictors(); ++p) {
        double a = 0.0, b = 0.0;
        for (const auto i : index_->home_rows[p]) {
            a += eh_[i];
            b += ea_[i];
        }
        for (const auto i : index_->away_rows[p]) {
            a += ea_[i];
            b += eh_[i];
        }
        const auto& pr = design_->predictor(p);
        const double pd = b + prior_precision(shrink_.at(pr.group, Side::Defense));
        const double prec = pr.defense_only ? pd : 0.5 * (pd + a + prior_precision(shrink_.at(pr.group, Side::Offense)));
        scale_[predictor_block(p)] = 1.7 / std::sqrt(prec);
    }
}

double SamplerState::pair_loglik_delta(std::uint32_t p, double d_omega, double d_delta) const {
    double a = 0.0, b = 0.0;
    for (const auto i : index_->home_rows[p]) {
        a += eh_[i];
        b += ea_[i];
    }
    for (const auto i : index_->away_rows[p]) {
        a += ea_[i];
        b += eh_[i];
    }
    return d_omega * index_->goals_for[p] + d_delta * index_->goals_against[p] - std::expm1(d_omega) * a -
           std::expm1(d_delta) * b;
}

double SamplerState::intercept_loglik_delta(std::size_t state, double d_home, double d_away) const {
    double a = 0.0, b = 0.0;
    for (const auto i : index_->state_rows[state]) {
        a += eh_[i];
        b += ea_[i];
    }
    return d_home * index_->home_goals[state] + d_away * index_->away_goals[state] - std::expm1(d_home) * a -
           std::expm1(d_away) * b;
}

void SamplerState::apply_pair(std::uint32_t p, double d_omega, double d_delta, double d_ll) {
    const double fo = std::exp(d_omega), fd = std::exp(d_delta);
    for (const auto i : index_->home_rows[p]) {
        eh_[i] *= fo;
        ea_[i] *= fd;
    }
    for (const auto i : index_->away_rows[p]) {
        ea_[i] *= fo;
        eh_[i] *= fd;
    }
    coeffs_.omega[p] += d_omega;
    coeffs_.delta[p] += d_delta;
    loglik_ += d_ll;
}

bool metropolis_pair_update(SamplerState& st, std::uint32_t p, Rng& rng) {
    const auto& pr = st.design_->predictor(p);
    const double scale = st.scale_[SamplerState::predictor_block(p)];
    std::normal_distribution<double> normal(0.0, 1.0);
    const double z1 = normal(rng), z2 = normal(rng);
    const double d_omega = pr.defense_only ? 0.0 : scale * z1;
    const double d_delta = scale * z2;
    const double w0 = st.coeffs_.omega[p], d0 = st.coeffs_.delta[p];
    const double d_ll = st.pair_loglik_delta(p, d_omega, d_delta);
    double d_prior = log_density(st.shrink_.at(pr.group, Side::Defense), d0 + d_delta) -
                     log_density(st.shrink_.at(pr.group, Side::Defense), d0);
    if (!pr.defense_only) {
        const auto& fo = st.shrink_.at(pr.group, Side::Offense);
        d_prior += log_density(fo, w0 + d_omega) - log_density(fo, w0);
    }
    const double log_alpha = st.config_.debug_likelihood_power * d_ll + d_prior;
    const double u = uniform01(rng);
    if (!(std::log(u) < log_alpha)) return false;
    if (!std::isfinite(d_ll)) return false;
    st.apply_pair(p, d_omega, d_delta, d_ll);
    if (pr.defense_only) st.coeffs_.omega[p] = 0.0;
    return true;
}

bool metropolis_intercept_update(SamplerState& st, std::size_t s, Rng& rng) {
    const double scale = st.scale_[s];
    std::normal_distribution<double> normal(0.0, 1.0);
    const double dh = scale * normal(rng), da = scale * normal(rng);
    const double h0 = st.coeffs_.home_intercept[s], a0 = st.coeffs_.away_intercept[s];
    const double m = st.config_.intercept_prior_mean, sd = st.config_.intercept_prior_sd;
    const double d_ll = st.intercept_loglik_delta(s, dh, da);
    const double d_prior = normal_log_pdf(h0 + dh, m, sd) - normal_log_pdf(h0, m, sd) +
                           normal_log_pdf(a0 + da, m, sd) - normal_log_pdf(a0, m, sd);
    const double log_alpha = st.config_.debug_likelihood_power * d_ll + d_prior;
    const double u = uniform01(rng);
    if (!(std::log(u) < log_alpha) || !std::isfinite(d_ll)) return false;
    const double fh = std::exp(dh), fa = std::exp(da);
    for (const auto i : st.index_->state_rows[s]) {
        st.eh_[i] *= fh;
        st.ea_[i] *= fa;
    }
    st.coeffs_.home_intercept[s] += dh;
    st.coeffs_.away_intercept[s] += da;
    st.loglik_ += d_ll;
    return true;
}

namespace {

SlotStats slot_stats(const SamplerState& st, std::size_t slot, const std::vector<std::uint32_t>& members) {
    SlotStats ss;
    const auto& c = st.coefficients();
    const bool offense = st.hyper_slots()[slot].side == Side::Offense;
    for (const auto p : members) {
        const double x = offense ? c.omega[p] : c.delta[p];
        ss.n += 1.0;
        ss.s1 += std::fabs(x);
        ss.s2 += x * x;
    }
    return ss;
}

// Log full-conditional density of (s, f) with respect to ds df.
double total_log_target(PenaltyFamily::Kind kind, const HyperPriors& h, const SlotStats& ss, double s, double f) {
    switch (kind) {
        case PenaltyFamily::Kind::L1L2: {
            const auto [lambda, sigma] = reparam_from_total(s, f);
            const double sigma2 = sigma * sigma;
            return group_loglik(kind, lambda, sigma2, ss.n, ss.s1, ss.s2) + hyper_log_prior_lambda(h, lambda) +
                   hyper_log_prior_sigma2(h, sigma2) + std::log(2.0 * std::numbers::sqrt2) -
                   3.0 * std::log1p(-f) - 2.0 * std::log(s);
        }
        case PenaltyFamily::Kind::L2: {
            const double sigma2 = 1.0 / (s * s);
            return group_loglik(kind, 0.0, sigma2, ss.n, ss.s1, ss.s2) + hyper_log_prior_sigma2(h, sigma2) +
                   std::log(2.0) - 3.0 * std::log(s);
        }
        case PenaltyFamily::Kind::L1: {
            const double lambda = std::numbers::sqrt2 * s;
            return group_loglik(kind, lambda, 0.0, ss.n, ss.s1, ss.s2) + hyper_log_prior_lambda(h, lambda) +
                   0.5 * std::log(2.0);
        }
    }
    return 0.0;
}

TotalShrinkage current_total(const PenaltyFamily& fam) {
    switch (fam.kind) {
        case PenaltyFamily::Kind::L1L2: return reparam_to_total(fam.lambda, std::sqrt(fam.sigma2));
        case PenaltyFamily::Kind::L2: return {1.0 / std::sqrt(fam.sigma2), 0.0};
        case PenaltyFamily::Kind::L1: return {fam.lambda / std::numbers::sqrt2, 1.0};
    }
    return {};
}

PenaltyFamily family_from_total(PenaltyFamily::Kind kind, double s, double f) {
    switch (kind) {
        case PenaltyFamily::Kind::L1L2: {
            const auto [lambda, sigma] = reparam_from_total(s, f);
            return PenaltyFamily::l1l2(lambda, sigma * sigma);
        }
        case PenaltyFamily::Kind::L2: return PenaltyFamily::l2(1.0 / (s * s));
        case PenaltyFamily::Kind::L1: return PenaltyFamily::l1(std::numbers::sqrt2 * s);
    }
    return {};
}

}  // namespace

GridConditional total_shrinkage_conditional(const SamplerState& st, std::size_t slot) {
    const auto& hs = st.hyper_slots().at(slot);
    const auto& fam = st.shrinkage().at(hs.group, hs.side);
    std::vector<std::uint32_t> members;
    for (std::uint32_t p = 0; p < st.design().n_predictors(); ++p) {
        const auto& pr = st.design().predictor(p);
        if (pr.group == hs.group && !(hs.side == Side::Offense && pr.defense_only)) members.push_back(p);
    }
    const auto ss = slot_stats(st, slot, members);
    const double f = current_total(fam).f;
    GridConditional gc;
    gc.points = st.config().grid.s_grid();
    const auto w = cell_widths(gc.points);
    std::vector<double> lw(gc.points.size());
    for (std::size_t k = 0; k < lw.size(); ++k)
        lw[k] = total_log_target(hs.kind, st.config().hyper_priors, ss, gc.points[k], f) + std::log(w[k]);
    gc.probabilities = normalize_log_weights(std::move(lw), "group " + slot_name(hs));
    return gc;
}

GridConditional fraction_conditional(const SamplerState& st, std::size_t slot) {
    const auto& hs = st.hyper_slots().at(slot);
    if (hs.kind != PenaltyFamily::Kind::L1L2) throw UsageError("fraction step applies to Laplace-Gaussian groups only");
    const auto& fam = st.shrinkage().at(hs.group, hs.side);
    std::vector<std::uint32_t> members;
    for (std::uint32_t p = 0; p < st.design().n_predictors(); ++p) {
        const auto& pr = st.design().predictor(p);
        if (pr.group == hs.group && !(hs.side == Side::Offense && pr.defense_only)) members.push_back(p);
    }
    const auto ss = slot_stats(st, slot, members);
    const double s = current_total(fam).s;
    GridConditional gc;
    gc.points = st.config().grid.f_grid();
    const auto w = cell_widths(gc.points);
    std::vector<double> lw(gc.points.size());
    for (std::size_t k = 0; k < lw.size(); ++k)
        lw[k] = total_log_target(hs.kind, st.config().hyper_priors, ss, s, gc.points[k]) + std::log(w[k]);
    gc.probabilities = normalize_log_weights(std::move(lw), "group " + slot_name(hs));
    return gc;
}

void hyper_grid_update(SamplerState& st, std::size_t slot, Rng& rng) {
    const auto hs = st.slots_.at(slot);
    const auto& members = st.slot_members_.at(slot);
    const auto ss = slot_stats(st, slot, members);
    const auto& grid = st.config_.grid;
    auto cur = current_total(st.shrink_.at(hs.group, hs.side));

    const auto sg = grid.s_grid();
    const auto sw = cell_widths(sg);
    std::vector<double> lw(sg.size());
    for (std::size_t k = 0; k < sg.size(); ++k)
        lw[k] = total_log_target(hs.kind, st.config_.hyper_priors, ss, sg[k], cur.f) + std::log(sw[k]);
    cur.s = sg[draw_index(normalize_log_weights(std::move(lw), "group " + slot_name(hs)), rng)];

    if (hs.kind == PenaltyFamily::Kind::L1L2) {
        const auto fg = grid.f_grid();
        const auto fw = cell_widths(fg);
        std::vector<double> lf(fg.size());
        for (std::size_t k = 0; k < fg.size(); ++k)
            lf[k] = total_log_target(hs.kind, st.config_.hyper_priors, ss, cur.s, fg[k]) + std::log(fw[k]);
        cur.f = fg[draw_index(normalize_log_weights(std::move(lf), "group " + slot_name(hs)), rng)];
    }
    st.shrink_.set(hs.group, hs.side, family_from_total(hs.kind, cur.s, cur.f));
}

std::vector<double> PosteriorSamples::column(std::size_t col) const {
    std::vector<double> v(n_draws);
    for (std::size_t d = 0; d < n_draws; ++d) v[d] = at(d, col);
    return v;
}

Coefficients PosteriorSamples::coefficients(std::size_t draw) const {
    auto c = Coefficients::zeros(registry.size());
    for (std::size_t s = 0; s < kScoreStates; ++s) {
        c.home_intercept[s] = at(draw, s);
        c.away_intercept[s] = at(draw, kScoreStates + s);
    }
    for (std::size_t p = 0; p < registry.size(); ++p) {
        c.omega[p] = at(draw, omega_col(p));
        c.delta[p] = at(draw, delta_col(p));
    }
    return c;
}

GroupShrinkage PosteriorSamples::shrinkage(std::size_t draw) const {
    GroupShrinkage g;
    for (const auto& s : hyper_slots) {
        const double lambda = s.lambda_col == SIZE_MAX ? 0.0 : at(draw, s.lambda_col);
        const double sigma2 = s.sigma2_col == SIZE_MAX ? 0.0 : at(draw, s.sigma2_col);
        g.set(s.group, s.side, PenaltyFamily{s.kind, lambda, sigma2});
    }
    return g;
}

Coefficients PosteriorSamples::posterior_mean() const {
    if (n_draws == 0) throw UsageError("posterior mean of empty samples");
    auto c = Coefficients::zeros(registry.size());
    std::vector<double> m(n_cols(), 0.0);
    for (std::size_t d = 0; d < n_draws; ++d)
        for (std::size_t j = 0; j < n_cols(); ++j) m[j] += at(d, j);
    for (double& v : m) v /= static_cast<double>(n_draws);
    for (std::size_t s = 0; s < kScoreStates; ++s) {
        c.home_intercept[s] = m[s];
        c.away_intercept[s] = m[kScoreStates + s];
    }
    for (std::size_t p = 0; p < registry.size(); ++p) {
        c.omega[p] = registry[p].defense_only ? 0.0 : m[omega_col(p)];
        c.delta[p] = m[delta_col(p)];
    }
    return c;
}

GroupShrinkage PosteriorSamples::mean_shrinkage() const {
    if (n_draws == 0) throw UsageError("posterior mean of empty samples");
    GroupShrinkage g;
    for (const auto& s : hyper_slots) {
        double lambda = 0.0, sigma2 = 0.0;
        if (s.lambda_col != SIZE_MAX) lambda = mean(column(s.lambda_col));
        if (s.sigma2_col != SIZE_MAX) sigma2 = mean(column(s.sigma2_col));
        g.set(s.group, s.side, PenaltyFamily{s.kind, lambda, sigma2});
    }
    return g;
}

namespace {

struct ChainOutput {
    std::vector<double> values;
    std::vector<std::uint32_t> iteration;
    std::vector<double> log_lik, log_post;
    std::vector<double> acceptance;
};

void record_draw(const SamplerState& st, std::vector<double>& out) {
    const auto& c = st.coefficients();
    for (std::size_t s = 0; s < kScoreStates; ++s) out.push_back(c.home_intercept[s]);
    for (std::size_t s = 0; s < kScoreStates; ++s) out.push_back(c.away_intercept[s]);
    for (std::size_t p = 0; p < c.n_predictors(); ++p) {
        out.push_back(c.omega[p]);
        out.push_back(c.delta[p]);
    }
    for (const auto& slot : st.hyper_slots()) {
        const auto& f = st.shrinkage().at(slot.group, slot.side);
        if (f.has_laplace()) out.push_back(f.lambda);
        if (f.has_gaussian()) out.push_back(f.sigma2);
    }
}

ChainOutput run_one_chain(const Design& design, std::shared_ptr<const RowIndex> index, const Coefficients& start,
                          const GroupShrinkage& shrink, const ChainConfig& cfg, std::size_t chain) {
    Rng rng = make_stream(cfg.seed, chain);
    Coefficients init = start;
    std::normal_distribution<double> jitter(0.0, cfg.init_jitter);
    if (cfg.init_jitter > 0.0) {
        if (cfg.sample_intercepts)
            for (std::size_t s = 0; s < kScoreStates; ++s) {
                init.home_intercept[s] += jitter(rng);
                init.away_intercept[s] += jitter(rng);
            }
        for (std::size_t p = 0; p < init.n_predictors(); ++p) {
            if (!design.predictor(p).defense_only) init.omega[p] += jitter(rng);
            init.delta[p] += jitter(rng);
        }
    }
    SamplerState st(design, std::move(index), std::move(init), shrink, cfg);
    const std::size_t nb = st.n_blocks();
    const std::size_t P = design.n_predictors();
    std::vector<std::uint32_t> win_acc(nb, 0), win_try(nb, 0), post_acc(nb, 0), post_try(nb, 0);

    ChainOutput out;
    const std::size_t total = cfg.burn_in + cfg.thin * cfg.draws_per_chain;
    for (std::size_t it = 0; it < total; ++it) {
        const bool burning = it < cfg.burn_in;
        auto count = [&](std::size_t b, bool acc) {
            auto& a = burning ? win_acc : post_acc;
            auto& t = burning ? win_try : post_try;
            a[b] += acc;
            t[b] += 1;
        };
        if (cfg.sample_intercepts)
            for (std::size_t s = 0; s < kScoreStates; ++s) count(s, metropolis_intercept_update(st, s, rng));
        for (std::uint32_t p = 0; p < P; ++p)
            count(SamplerState::predictor_block(p), metropolis_pair_update(st, p, rng));
        if (cfg.sample_hyper)
            for (std::size_t k = 0; k < st.hyper_slots().size(); ++k) hyper_grid_update(st, k, rng);

        if (burning && (it + 1) % cfg.adapt_interval == 0) {
            for (std::size_t b = 0; b < nb; ++b) {
                if (win_try[b] == 0) continue;
                const double rate = static_cast<double>(win_acc[b]) / win_try[b];
                if (rate < cfg.accept_low) st.set_proposal_scale(b, st.proposal_scale(b) * 0.7);
                if (rate > cfg.accept_high) st.set_proposal_scale(b, st.proposal_scale(b) * 1.35);
                win_acc[b] = win_try[b] = 0;
            }
        }
        if ((it + 1) % cfg.refresh_interval == 0) st.refresh();
        if (!burning && (it + 1 - cfg.burn_in) % cfg.thin == 0) {
            record_draw(st, out.values);
            out.iteration.push_back(static_cast<std::uint32_t>(it + 1));
            out.log_lik.push_back(st.log_lik());
            out.log_post.push_back(st.log_posterior());
        }
    }
    out.acceptance.resize(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b)
        out.acceptance[b] = post_try[b] ? static_cast<double>(post_acc[b]) / post_try[b] : 0.0;
    return out;
}

}  // namespace

PosteriorSamples run_chain(const Design& design, const GroupShrinkage& shrinkage_init, const ChainConfig& config,
                           const Coefficients* init) {
    config.validate();
    shrinkage_init.require_cover(design);
    const auto index = std::make_shared<const RowIndex>(design);

    Coefficients start;
    if (init) {
        start = *init;
    } else if (config.init_from_mle) {
        FitOptions fo = config.init_fit;
        fo.frozen.clear();
        fo.freeze_intercepts = false;
        start = fit_penalized(design, shrinkage_init, fo, poisson_start(design)).coefficients;
    } else {
        start = poisson_start(design);
    }
    start.validate(design);

    std::vector<ChainOutput> outs(config.n_chains);
    parallel_for(config.n_chains, [&](std::size_t c) {
        outs[c] = run_one_chain(design, index, start, shrinkage_init, config, c);
    });

    PosteriorSamples ps;
    ps.registry = design.registry();
    ps.config = config;
    for (std::size_t s = 0; s < kScoreStates; ++s)
        ps.columns.push_back("r_home[" + to_code(static_cast<ScoreState>(s)) + "]");
    for (std::size_t s = 0; s < kScoreStates; ++s)
        ps.columns.push_back("r_away[" + to_code(static_cast<ScoreState>(s)) + "]");
    for (const auto& pr : design.registry()) {
        ps.columns.push_back("omega[" + pr.label + "]");
        ps.columns.push_back("delta[" + pr.label + "]");
    }
    {
        SamplerState probe(design, index, start, shrinkage_init, config);
        for (auto slot : probe.hyper_slots()) {
            const auto& f = shrinkage_init.at(slot.group, slot.side);
            if (f.has_laplace()) {
                slot.lambda_col = ps.columns.size();
                ps.columns.push_back("lambda[" + slot_name(slot) + "]");
            }
            if (f.has_gaussian()) {
                slot.sigma2_col = ps.columns.size();
                ps.columns.push_back("sigma2[" + slot_name(slot) + "]");
            }
            ps.hyper_slots.push_back(slot);
        }
    }
    const std::size_t nc = ps.columns.size();
    for (std::size_t c = 0; c < outs.size(); ++c) {
        auto& o = outs[c];
        ps.values.insert(ps.values.end(), o.values.begin(), o.values.end());
        for (std::size_t k = 0; k < o.iteration.size(); ++k) ps.chain.push_back(static_cast<std::uint32_t>(c));
        ps.iteration.insert(ps.iteration.end(), o.iteration.begin(), o.iteration.end());
        ps.log_lik.insert(ps.log_lik.end(), o.log_lik.begin(), o.log_lik.end());
        ps.log_post.insert(ps.log_post.end(), o.log_post.begin(), o.log_post.end());
        ps.acceptance.push_back(std::move(o.acceptance));
    }
    ps.n_draws = ps.values.size() / nc;
    if (ps.n_draws < config.min_kept) throw NumericalError("retained draws fall below min_kept");

    ps.ess.assign(nc, 0.0);
    ps.lag1.assign(nc, 0.0);
    const std::size_t per = config.draws_per_chain;
    std::size_t free_params = 0, sticky = 0;
    for (std::size_t j = 0; j < nc; ++j) {
        bool constant = true;
        for (std::size_t c = 0; c < config.n_chains; ++c) {
            std::vector<double> x(per);
            for (std::size_t k = 0; k < per; ++k) x[k] = ps.values[(c * per + k) * nc + j];
            const bool cst = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
            constant = constant && cst;
            ps.ess[j] += effective_sample_size(x);
            ps.lag1[j] += autocorrelation(x, 1) / static_cast<double>(config.n_chains);
        }
        if (!constant) {
            ++free_params;
            if (ps.lag1[j] > 0.1) ++sticky;
        }
    }
    if (free_params > 0 && static_cast<double>(sticky) > 0.05 * static_cast<double>(free_params))
        ps.warnings.push_back("lag-1 autocorrelation above 0.1 for " + std::to_string(sticky) + " of " +
                              std::to_string(free_params) + " parameters; consider more thinning");
    return ps;
}

std::vector<PredictorSummary> summarize_posterior(const PosteriorSamples& samples) {
    if (samples.n_draws == 0) throw UsageError("cannot summarize empty samples");
    auto stats6 = [](std::vector<double> x) {
        std::array<double, 6> r{};
        r[0] = mean(x);
        r[1] = stddev(x);
        std::sort(x.begin(), x.end());
        r[2] = quantile_sorted(x, 0.025);
        r[3] = quantile_sorted(x, 0.25);
        r[4] = quantile_sorted(x, 0.75);
        r[5] = quantile_sorted(x, 0.975);
        return r;
    };
    std::vector<PredictorSummary> out;
    for (std::size_t p = 0; p < samples.n_predictors(); ++p) {
        const auto& pr = samples.registry[p];
        PredictorSummary s;
        s.label = pr.label;
        s.group = pr.group;
        s.defense_only = pr.defense_only;
        auto w = samples.column(PosteriorSamples::omega_col(p));
        auto d = samples.column(PosteriorSamples::delta_col(p));
        std::vector<double> net(w.size());
        for (std::size_t k = 0; k < w.size(); ++k) net[k] = w[k] - d[k];
        s.omega = stats6(std::move(w));
        s.delta = stats6(std::move(d));
        s.net = stats6(std::move(net));
        out.push_back(s);
    }
    return out;
}

void write_summary_csv(std::ostream& out, const std::vector<PredictorSummary>& rows) {
    out << "label,group";
    for (const char* k : {"omega", "delta", "net"})
        for (const char* q : {"mean", "sd", "q025", "q25", "q75", "q975"}) out << ',' << k << '_' << q;
    out << '\n';
    out.precision(10);
    for (const auto& r : rows) {
        out << r.label << ',' << to_string(r.group);
        for (const auto* a : {&r.omega, &r.delta, &r.net})
            for (double v : *a) out << ',' << v;
        out << '\n';
    }
}

QuantileValidationConfig::QuantileValidationConfig() {
    chain.n_chains = 2;
    chain.burn_in = 300;
    chain.thin = 2;
    chain.draws_per_chain = 250;
    chain.min_kept = 500;
    chain.sample_hyper = false;
    chain.intercept_prior_mean = intercept_mean;
    chain.intercept_prior_sd = intercept_sd;
    chain.init_jitter = 0.05;
}

QuantileValidationReport validate_posterior_quantiles(const QuantileValidationConfig& cfg) {
    if (cfg.n_replications < 20) throw UsageError("posterior-quantile validation needs at least 20 replications");
    if (cfg.n_predictors == 0 || cfg.n_events == 0) throw UsageError("validation model needs predictors and events");
    cfg.coefficient_prior.validate();
    const std::size_t P = cfg.n_predictors;

    QuantileValidationReport rep;
    for (std::size_t s = 0; s < kScoreStates; ++s)
        rep.names.push_back("r_home[" + to_code(static_cast<ScoreState>(s)) + "]");
    for (std::size_t s = 0; s < kScoreStates; ++s)
        rep.names.push_back("r_away[" + to_code(static_cast<ScoreState>(s)) + "]");
    for (std::size_t p = 0; p < P; ++p) {
        rep.names.push_back("omega[x" + std::to_string(p) + "]");
        rep.names.push_back("delta[x" + std::to_string(p) + "]");
    }
    const std::size_t n_par = rep.names.size();
    rep.quantiles.assign(n_par, std::vector<double>(cfg.n_replications, 0.0));

    ChainConfig chain = cfg.chain;
    chain.intercept_prior_mean = cfg.intercept_mean;
    chain.intercept_prior_sd = cfg.intercept_sd;
    const auto shrink = GroupShrinkage::uniform({PoolGroup::Center}, cfg.coefficient_prior);

    parallel_for(cfg.n_replications, [&](std::size_t r) {
        Rng rng = make_stream(cfg.seed, r);
        std::normal_distribution<double> inorm(cfg.intercept_mean, cfg.intercept_sd);
        auto truth = Coefficients::zeros(P);
        for (std::size_t s = 0; s < kScoreStates; ++s) {
            truth.home_intercept[s] = inorm(rng);
            truth.away_intercept[s] = inorm(rng);
        }
        for (std::size_t p = 0; p < P; ++p) {
            truth.omega[p] = sample(cfg.coefficient_prior, rng);
            truth.delta[p] = sample(cfg.coefficient_prior, rng);
        }
        Design::Builder b(ModelSpec::players());
        for (std::size_t p = 0; p < P; ++p) {
            Predictor pr;
            pr.kind = PredictorKind::Player;
            pr.label = "x" + std::to_string(p);
            pr.group = PoolGroup::Center;
            pr.members = {pr.label};
            b.add_predictor(pr);
        }
        std::lognormal_distribution<double> dur(std::log(cfg.duration_median_s), cfg.duration_log_sd);
        for (std::size_t i = 0; i < cfg.n_events; ++i) {
            std::vector<std::uint32_t> home, away;
            for (std::uint32_t p = 0; p < P; ++p) {
                const double u = uniform01(rng);
                if (u < cfg.home_probability)
                    home.push_back(p);
                else if (u < cfg.home_probability + cfg.away_probability)
                    away.push_back(p);
            }
            const double t = dur(rng);
            // Score state cycles so every intercept pair sees data.
            const auto state = static_cast<ScoreState>(i % kScoreStates);
            double eh = truth.home_intercept[static_cast<std::size_t>(state)];
            double ea = truth.away_intercept[static_cast<std::size_t>(state)];
            for (const auto p : home) {
                eh += truth.omega[p];
                ea += truth.delta[p];
            }
            for (const auto p : away) {
                ea += truth.omega[p];
                eh += truth.delta[p];
            }
            const auto ev = sample_event({std::exp(eh), std::exp(ea)}, t, rng);
            b.add_row(home, away, state, ev.time_s, ev.outcome);
        }
        const Design design = std::move(b).build();
        ChainConfig cc = chain;
        cc.seed = mix_seed(cfg.seed ^ (0x9e37ULL + r));
        const auto samples = run_chain(design, shrink, cc);
        for (std::size_t j = 0; j < n_par; ++j) {
            double tv = 0.0;
            if (j < kScoreStates)
                tv = truth.home_intercept[j];
            else if (j < 2 * kScoreStates)
                tv = truth.away_intercept[j - kScoreStates];
            else {
                const std::size_t k = j - 2 * kScoreStates;
                tv = (k % 2 == 0) ? truth.omega[k / 2] : truth.delta[k / 2];
            }
            double below = 0.0;
            for (std::size_t d = 0; d < samples.n_draws; ++d) {
                const double v = samples.at(d, j);
                below += v < tv ? 1.0 : (v == tv ? 0.5 : 0.0);
            }
            rep.quantiles[j][r] = below / static_cast<double>(samples.n_draws);
        }
    });

    rep.min_adjusted = 1.0;
    for (std::size_t j = 0; j < n_par; ++j) {
        const double d = ks_statistic_uniform(rep.quantiles[j]);
        const double p = ks_pvalue(d, cfg.n_replications);
        rep.ks.push_back(d);
        rep.p_values.push_back(p);
        rep.adjusted.push_back(std::min(1.0, p * static_cast<double>(n_par)));
        rep.min_adjusted = std::min(rep.min_adjusted, rep.adjusted.back());
    }
    rep.passed = rep.min_adjusted > 0.01;
    return rep;
}

}  // namespace mesh
