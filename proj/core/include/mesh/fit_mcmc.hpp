#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mesh/design.hpp"
#include "mesh/fit_mle.hpp"
#include "mesh/likelihood.hpp"
#include "mesh/rng.hpp"
#include "mesh/shrinkage.hpp"

namespace mesh {

struct GridSpec {
    std::size_t points = 101;
    double s_min = 0.05;  // log-spaced
    double s_max = 50.0;
    double f_min = 0.005;  // linear
    double f_max = 0.995;

    std::vector<double> s_grid() const;
    std::vector<double> f_grid() const;
};

struct ChainConfig {
    std::size_t n_chains = 4;
    std::size_t burn_in = 1000;
    std::size_t thin = 5;
    std::size_t draws_per_chain = 250;
    std::size_t min_kept = 500;  // aggregate over chains
    std::size_t adapt_interval = 50;
    double accept_low = 0.2;
    double accept_high = 0.4;
    std::size_t refresh_interval = 25;  // sweeps between exact cache rebuilds
    GridSpec grid;
    HyperPriors hyper_priors;
    bool sample_hyper = true;
    bool sample_intercepts = true;
    double intercept_prior_mean = 0.0;
    double intercept_prior_sd = 10.0;
    bool init_from_mle = true;
    FitOptions init_fit = [] {
        FitOptions f;
        f.max_iterations = 1000;
        f.tolerance = 1e-7;
        f.kkt_tolerance = 1e-3;
        return f;
    }();
    double init_jitter = 0.01;
    std::uint64_t seed = 1;
    /// Exponent on the likelihood ratio; anything but 1 breaks the sampler on
    /// purpose (negative control for calibration checks).
    double debug_likelihood_power = 1.0;

    void validate() const;
};

struct HyperSlot {
    PoolGroup group;
    Side side;
    PenaltyFamily::Kind kind;
    std::size_t lambda_col = SIZE_MAX;  // column in PosteriorSamples, if sampled
    std::size_t sigma2_col = SIZE_MAX;
};

/// Per-predictor row lists and goal counts; built once, shared by chains.
struct RowIndex {
    std::vector<std::vector<std::uint32_t>> home_rows;  // per predictor
    std::vector<std::vector<std::uint32_t>> away_rows;
    std::vector<double> goals_for;  // goals by the predictor's side
    std::vector<double> goals_against;
    std::array<std::vector<std::uint32_t>, kScoreStates> state_rows;
    std::array<double, kScoreStates> home_goals{};
    std::array<double, kScoreStates> away_goals{};

    explicit RowIndex(const Design& design);
};

/// Mutable state of one chain: coefficients, hyperparameters, per-row
/// expected-goal caches and the running log-likelihood.
class SamplerState {
public:
    SamplerState(const Design& design, std::shared_ptr<const RowIndex> index, Coefficients init,
                 GroupShrinkage shrinkage, const ChainConfig& config);
    SamplerState(const Design& design, Coefficients init, GroupShrinkage shrinkage, const ChainConfig& config);

    const Design& design() const { return *design_; }
    const Coefficients& coefficients() const { return coeffs_; }
    const GroupShrinkage& shrinkage() const { return shrink_; }
    const ChainConfig& config() const { return config_; }
    const std::vector<HyperSlot>& hyper_slots() const { return slots_; }

    double log_lik() const { return loglik_; }
    double recompute_log_lik() const;
    double log_prior() const;
    double log_posterior() const { return loglik_ + log_prior(); }

    /// Blocks: one per score state (intercept pair), then one per predictor.
    std::size_t n_blocks() const { return kScoreStates + coeffs_.n_predictors(); }
    static std::size_t predictor_block(std::uint32_t p) { return kScoreStates + p; }
    double proposal_scale(std::size_t block) const { return scale_[block]; }
    void set_proposal_scale(std::size_t block, double v) { scale_[block] = v; }

    /// Change in log-likelihood if predictor p moved by (d_omega, d_delta).
    double pair_loglik_delta(std::uint32_t p, double d_omega, double d_delta) const;
    double intercept_loglik_delta(std::size_t state, double d_home, double d_away) const;

    /// Rebuilds the row caches and the log-likelihood from scratch.
    void refresh();

private:
    friend bool metropolis_pair_update(SamplerState&, std::uint32_t, Rng&);
    friend bool metropolis_intercept_update(SamplerState&, std::size_t, Rng&);
    friend void hyper_grid_update(SamplerState&, std::size_t, Rng&);
    friend void set_pair(SamplerState&, std::uint32_t, double, double);

    void init_scales();
    void apply_pair(std::uint32_t p, double d_omega, double d_delta, double d_ll);

    const Design* design_;
    std::shared_ptr<const RowIndex> index_;
    Coefficients coeffs_;
    GroupShrinkage shrink_;
    ChainConfig config_;
    std::vector<HyperSlot> slots_;
    std::vector<std::vector<std::uint32_t>> slot_members_;
    std::vector<double> eh_, ea_;  // expected home/away goals per row
    double loglik_ = 0.0;
    std::vector<double> scale_;
};

/// Bivariate random-walk Metropolis step on (omega_p, delta_p); defense-only
/// predictors move delta alone. Returns the accept flag.
bool metropolis_pair_update(SamplerState& state, std::uint32_t p, Rng& rng);
/// Same for the intercept pair of one score state.
bool metropolis_intercept_update(SamplerState& state, std::size_t score_state, Rng& rng);
/// Grid Gibbs step for hyper slot `slot`: total shrinkage s, then fraction f.
void hyper_grid_update(SamplerState& state, std::size_t slot, Rng& rng);

struct GridConditional {
    std::vector<double> points;
    std::vector<double> probabilities;
};
/// Normalized grid weights for the s-step (fraction held at its current value).
GridConditional total_shrinkage_conditional(const SamplerState& state, std::size_t slot);
/// Normalized grid weights for the f-step (total held at its current value).
GridConditional fraction_conditional(const SamplerState& state, std::size_t slot);

struct PosteriorSamples {
    std::vector<Predictor> registry;
    std::vector<HyperSlot> hyper_slots;
    std::vector<std::string> columns;
    std::size_t n_draws = 0;
    std::vector<double> values;  // n_draws x columns, row-major
    std::vector<std::uint32_t> chain;
    std::vector<std::uint32_t> iteration;
    std::vector<double> log_lik;
    std::vector<double> log_post;

    std::vector<double> ess;   // per column
    std::vector<double> lag1;  // per column, averaged over chains
    std::vector<std::vector<double>> acceptance;  // per chain, per block (post burn-in)
    std::vector<std::string> warnings;
    ChainConfig config;

    std::size_t n_cols() const { return columns.size(); }
    std::size_t n_predictors() const { return registry.size(); }
    double at(std::size_t draw, std::size_t col) const { return values[draw * columns.size() + col]; }
    static std::size_t omega_col(std::size_t p) { return 2 * kScoreStates + 2 * p; }
    static std::size_t delta_col(std::size_t p) { return 2 * kScoreStates + 2 * p + 1; }
    std::vector<double> column(std::size_t col) const;

    Coefficients coefficients(std::size_t draw) const;
    GroupShrinkage shrinkage(std::size_t draw) const;
    Coefficients posterior_mean() const;
    /// Posterior-mean (lambda, sigma2) per slot.
    GroupShrinkage mean_shrinkage() const;
};

/// Independent chains from the (jittered) penalized-MLE start. `init`, when
/// given, replaces the MLE start.
PosteriorSamples run_chain(const Design& design, const GroupShrinkage& shrinkage_init, const ChainConfig& config,
                           const Coefficients* init = nullptr);

void save_samples(const std::filesystem::path& path, const PosteriorSamples& samples);
PosteriorSamples load_samples(const std::filesystem::path& path);

struct PredictorSummary {
    std::string label;
    PoolGroup group = PoolGroup::Team;
    bool defense_only = false;
    // mean, sd, q2.5, q25, q75, q97.5
    std::array<double, 6> omega{};
    std::array<double, 6> delta{};
    std::array<double, 6> net{};
};

std::vector<PredictorSummary> summarize_posterior(const PosteriorSamples& samples);
void write_summary_csv(std::ostream& out, const std::vector<PredictorSummary>& rows);

struct QuantileValidationConfig {
    std::size_t n_replications = 100;
    std::size_t n_predictors = 10;
    std::size_t n_events = 5000;
    double home_probability = 0.25;
    double away_probability = 0.25;
    double duration_median_s = 20.0;
    double duration_log_sd = 0.5;
    PenaltyFamily coefficient_prior = PenaltyFamily::l1l2(4.0, 0.1);
    double intercept_mean = -4.0;
    double intercept_sd = 0.25;
    ChainConfig chain;
    std::uint64_t seed = 1;

    QuantileValidationConfig();
};

struct QuantileValidationReport {
    std::vector<std::string> names;
    std::vector<std::vector<double>> quantiles;  // per parameter, per replication
    std::vector<double> ks;
    std::vector<double> p_values;
    std::vector<double> adjusted;  // Bonferroni
    double min_adjusted = 1.0;
    bool passed = false;  // every adjusted p-value above 0.01
};

/// Simulation-based check: truth from the prior, data from the model, rank of
/// truth within the posterior draws, KS against uniform per parameter.
QuantileValidationReport validate_posterior_quantiles(const QuantileValidationConfig& config);

}  // namespace mesh
