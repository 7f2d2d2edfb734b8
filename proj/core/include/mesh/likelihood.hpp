#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mesh/design.hpp"

namespace mesh {

/// Baseline hazard h0(t) = 1. Every kernel goes through these two functions,
/// so a time-varying baseline only has to change them.
struct Baseline {
    static double cumulative(double t) { return t; }
    static double log_hazard(double /*t*/) { return 0.0; }
};

/// Intercepts per score state (log goals per second) plus one (omega, delta)
/// pair per registered predictor.
struct Coefficients {
    std::array<double, kScoreStates> home_intercept{};
    std::array<double, kScoreStates> away_intercept{};
    std::vector<double> omega;
    std::vector<double> delta;

    static Coefficients zeros(const Design& design, double intercept = 0.0);
    static Coefficients zeros(std::size_t n_predictors, double intercept = 0.0);

    std::size_t n_predictors() const { return omega.size(); }
    double net(std::size_t p) const { return omega[p] - delta[p]; }

    /// Throws DataError on size mismatch, nonfinite values, or a nonzero
    /// omega on a defense-only predictor.
    void validate(const Design& design) const;

    bool operator==(const Coefficients&) const = default;
};

struct RatePair {
    double home = 0.0;  // goals per second
    double away = 0.0;
};

struct LinearPredictor {
    double home = 0.0;
    double away = 0.0;
};

LinearPredictor linear_predictor(const SparseRow& row, const Coefficients& c);

/// Home and away scoring rates; NumericalError when a rate is not finite.
RatePair rates(const SparseRow& row, const Coefficients& c);

/// Censored competing-exponentials log-density of one row.
double event_loglik(const SparseRow& row, const Coefficients& c);

double total_loglik(const Design& design, const Coefficients& c);

enum class ParamKind : std::uint8_t { HomeIntercept, AwayIntercept, Omega, Delta };

struct ParamRef {
    ParamKind kind;
    std::uint32_t index;  // score state for intercepts, predictor otherwise
};

/// Ordered list of free parameters: six intercepts, then omega/delta per
/// predictor with structurally fixed slots (goaltender omega) omitted.
class ParameterLayout {
public:
    explicit ParameterLayout(const Design& design);

    std::size_t size() const { return refs_.size(); }
    const ParamRef& operator[](std::size_t i) const { return refs_[i]; }
    const std::vector<ParamRef>& refs() const { return refs_; }

    std::vector<double> flatten(const Coefficients& c) const;
    void unflatten(const std::vector<double>& x, Coefficients& c) const;

private:
    std::vector<ParamRef> refs_;
};

double get(const Coefficients& c, const ParamRef& r);
double& get(Coefficients& c, const ParamRef& r);

/// Log-likelihood with gradient and the diagonal of the negative Hessian, laid
/// out like Coefficients. Defense-only omega slots carry zeros.
struct Evaluation {
    double loglik = 0.0;
    Coefficients gradient;
    Coefficients curvature;
};

Evaluation evaluate(const Design& design, const Coefficients& c);

/// Exact gradient of total_loglik over the free parameters (layout order).
std::vector<double> gradient(const Design& design, const Coefficients& c);

}  // namespace mesh
