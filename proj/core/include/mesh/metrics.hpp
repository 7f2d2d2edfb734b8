#pragma once

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mesh/design.hpp"
#include "mesh/fit_mcmc.hpp"
#include "mesh/likelihood.hpp"

namespace mesh {

struct DicReport {
    double mean_deviance = 0.0;     // D-bar
    double deviance_at_mean = 0.0;  // D(theta-bar)
    double p_d = 0.0;
    double dic = 0.0;
    std::string scope;
};

DicReport dic_from_deviances(std::span<const double> deviances, double deviance_at_mean, std::string scope);
/// Deviances of every retained draw on `dataset` (which must share the
/// samples' registry order).
DicReport dic(const PosteriorSamples& samples, const Design& dataset, std::string scope);

/// -2 * total_loglik on the withheld rows; 0 for an empty set.
double oos_deviance(const Coefficients& c, const Design& test);

inline constexpr double kBaseLogRate = -7.3;

enum class GNetConvention : std::uint8_t {
    TableConsistent,  // net = scored + stopped
    AsPrinted,        // net = scored - stopped
};

struct GNet {
    double scored = 0.0;
    double stopped = 0.0;
    double net = 0.0;
};

/// Goals created and prevented relative to an average player over `seconds`.
GNet g_net(double omega, double delta, double seconds, double r_base = kBaseLogRate,
           GNetConvention convention = GNetConvention::TableConsistent);

struct ContributionInput {
    std::string player;
    std::string position;
    double seconds = 0.0;
    double omega = 0.0;
    double delta = 0.0;
};

struct ContributionRow {
    std::size_t rank = 0;
    ContributionInput input;
    GNet g;
    double prob_best = std::numeric_limits<double>::quiet_NaN();
};

/// CSV with header player,position,time_s,omega,delta.
std::vector<ContributionInput> read_contribution_input(std::istream& in);
/// Rows ranked by G_net, best first.
std::vector<ContributionRow> contribution_report(const std::vector<ContributionInput>& input,
                                                 double r_base = kBaseLogRate,
                                                 GNetConvention convention = GNetConvention::TableConsistent);
void write_contribution_csv(std::ostream& out, const std::vector<ContributionRow>& rows);

/// Per-column probability of holding the strict row maximum; ties split
/// equally. `scores` is draws x players, row-major.
std::vector<double> prob_best(std::span<const double> scores, std::size_t n_players);

enum class RankBy : std::uint8_t { NetRating, GNet };

/// Probability that each listed predictor has the highest score in a draw.
/// RankBy::GNet needs per-predictor seconds.
std::vector<double> prob_best(const PosteriorSamples& samples, const std::vector<std::uint32_t>& predictors,
                              RankBy by = RankBy::NetRating, const std::vector<double>& seconds = {},
                              double r_base = kBaseLogRate);

struct SpreadSummary {
    PoolGroup group;
    Side side;
    // median, q2.5, q25, q75, q97.5 over draws
    std::array<double, 5> spread{};
    std::array<double, 5> laplace_fraction{};
};

/// Laplace fraction implied by a family: (lambda/sqrt2) / (lambda/sqrt2 + 1/sigma).
double laplace_fraction(const PenaltyFamily& f);

std::vector<SpreadSummary> variance_decomposition(const PosteriorSamples& samples);

}  // namespace mesh
