#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mesh/design.hpp"
#include "mesh/likelihood.hpp"
#include "mesh/shrinkage.hpp"

namespace mesh {

struct FitOptions {
    std::size_t max_iterations = 5000;
    double tolerance = 1e-8;       // relative objective change
    double kkt_tolerance = 1e-6;   // max-norm stationarity residual
    bool accelerate = true;        // monotone accelerated steps with restart
    std::vector<bool> frozen;      // per predictor; empty means none frozen
    bool freeze_intercepts = false;

    void validate(const Design& design) const;
};

struct FitResult {
    Coefficients coefficients;
    double objective = 0.0;  // loglik - penalty
    double loglik = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double kkt_residual = 0.0;
    double seconds = 0.0;
    std::string warning;
    std::vector<double> objective_trace;  // after each iteration
};

/// Intercepts at log(goals / exposure) per score state, all else zero.
Coefficients poisson_start(const Design& design);

/// Penalized objective: total_loglik - sum of penalties on free coefficients.
double penalized_objective(const Design& design, const GroupShrinkage& shrinkage, const Coefficients& c,
                           const FitOptions& opts = {});

/// Largest violation of the first-order optimality conditions.
double kkt_residual(const Design& design, const GroupShrinkage& shrinkage, const Coefficients& c,
                    const FitOptions& opts = {});

FitResult fit_penalized(const Design& design, const GroupShrinkage& shrinkage, const FitOptions& opts,
                        const Coefficients& init);

/// Copy of `base` where every target group carries Laplace rate `lambda`.
/// Gaussian parts of existing families are kept.
GroupShrinkage with_lambda(const GroupShrinkage& base, const std::vector<PoolGroup>& targets, double lambda);

struct PathPoint {
    double lambda = 0.0;
    Coefficients coefficients;
    std::size_t nonzero = 0;  // nonzero omega/delta parameters in target groups
    double objective = 0.0;
    double train_loglik = 0.0;
    std::optional<double> test_deviance;
    bool converged = false;
    std::size_t iterations = 0;
};

struct PenaltyPath {
    std::vector<PoolGroup> targets;
    std::vector<PathPoint> points;  // strict to loose
};

PenaltyPath penalty_path(const Design& train, const GroupShrinkage& base, const std::vector<PoolGroup>& targets,
                         const std::vector<double>& lambdas, const FitOptions& opts, const Coefficients& init,
                         const Design* test = nullptr);

struct CvSelection {
    double lambda = 0.0;
    std::size_t index = 0;
    PenaltyPath path;
};

/// Held-out log-likelihood maximizer over candidates; ties go to the larger
/// lambda.
CvSelection cv_select(const Design& train, const Design& test, const GroupShrinkage& base,
                      const std::vector<PoolGroup>& targets, std::vector<double> candidates,
                      const FitOptions& opts, const Coefficients& init);

enum class MvpCell : std::uint8_t { OffenseMvp, OffenseLvp, DefenseMvp, DefenseLvp, TotalMvp, TotalLvp };
inline constexpr std::size_t kMvpCells = 6;
std::string to_string(MvpCell c);

struct MvpEntry {
    bool filled = false;
    std::string player;
    double value = 0.0;   // omega, delta, or omega - delta
    double lambda = 0.0;  // emergence penalty
    bool weak = false;
};

struct MvpTeamRow {
    std::string team;
    std::array<MvpEntry, kMvpCells> cells;
};

struct MvpTracePoint {
    double lambda = 0.0;
    std::size_t nonzero_players = 0;
    std::vector<std::string> emerged;  // players nonzero for the first time
};

struct MvpOptions {
    double lambda_start = 8.0;
    double step = 0.25;
    double weak_threshold = 1.0;  // cells filled below this penalty are weak
    FitOptions fit;
};

struct MvpResult {
    std::vector<MvpTeamRow> teams;
    std::vector<MvpTracePoint> trace;
    bool complete = false;
    std::vector<std::string> unfilled;  // "team:cell"
    Coefficients final_coefficients;
};

/// Player -> team predictor the player shared the most rows with.
std::vector<std::optional<std::uint32_t>> team_of_record(const Design& design);

/// Decreasing-penalty L1 cascade on a players+teams design. Team and
/// intercept values are taken from `fixed` and held.
MvpResult mvp_cascade(const Design& design, const Coefficients& fixed, const MvpOptions& opts);

struct SelectedPair {
    std::string label;
    std::string first;
    std::string second;
    double omega = 0.0;
    double delta = 0.0;
    double combined = 0.0;  // omega - delta
    double shared_seconds = 0.0;
    double emergence_lambda = 0.0;
};

struct PairSelectionResult {
    double selected_lambda = 0.0;
    PenaltyPath path;
    std::vector<SelectedPair> pairs;  // nonzero at the selected penalty, by combined rating
    std::size_t nonzero_parameters = 0;
    std::size_t unique_pairs = 0;
    std::size_t candidates = 0;
    Coefficients coefficients;
    std::vector<double> emergence;  // per predictor; NaN for never-nonzero or non-pair
};

/// Fits the pair penalty path (individual penalties fixed) and reports the
/// pairs active at the held-out optimum.
PairSelectionResult pair_selection(const Design& train, const Design& test, const GroupShrinkage& individual,
                                   const std::vector<double>& lambdas, const FitOptions& opts,
                                   const Coefficients& init);

std::string fit_report_json(const Design& design, const GroupShrinkage& shrinkage, const FitResult& result);

}  // namespace mesh
