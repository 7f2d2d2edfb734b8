#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "mesh/design.hpp"
#include "mesh/rng.hpp"

namespace mesh {

/// Prior density / penalty family for one block of coefficients.
struct PenaltyFamily {
    enum class Kind : std::uint8_t { L1, L2, L1L2 };
    Kind kind = Kind::L2;
    double lambda = 0.0;  // L1, L1L2
    double sigma2 = 0.0;  // L2, L1L2

    static PenaltyFamily l1(double lambda);
    static PenaltyFamily l2(double sigma2);
    static PenaltyFamily l1l2(double lambda, double sigma2);

    bool has_laplace() const { return kind != Kind::L2; }
    bool has_gaussian() const { return kind != Kind::L1; }
    /// Throws UsageError unless the active parameters are positive and finite.
    void validate() const;

    bool operator==(const PenaltyFamily&) const = default;
};

std::string to_string(PenaltyFamily::Kind k);
PenaltyFamily::Kind penalty_kind_from_string(const std::string& s);
std::string describe(const PenaltyFamily& f);

enum class Side : std::uint8_t { Offense, Defense };
std::string to_string(Side s);

/// (group, side) -> family. Goaltender offense is never present.
class GroupShrinkage {
public:
    using Key = std::pair<PoolGroup, Side>;

    void set(PoolGroup g, Side s, PenaltyFamily f);
    /// Sets both sides (defense only for goaltenders).
    void set_group(PoolGroup g, PenaltyFamily f);
    bool has(PoolGroup g, Side s) const { return map_.count({g, s}) != 0; }
    const PenaltyFamily& at(PoolGroup g, Side s) const;
    void erase(PoolGroup g) {
        map_.erase({g, Side::Offense});
        map_.erase({g, Side::Defense});
    }
    const std::map<Key, PenaltyFamily>& entries() const { return map_; }

    /// Same family on every listed group.
    static GroupShrinkage uniform(const std::vector<PoolGroup>& groups, PenaltyFamily f);

    /// Throws UsageError if a free slot of a predictor in `design` has no
    /// family. Predictors flagged in `skip` are exempt.
    void require_cover(const Design& design, const std::vector<bool>& skip = {}) const;

    bool operator==(const GroupShrinkage&) const = default;

private:
    std::map<Key, PenaltyFamily> map_;
};

struct HyperPriors {
    double gamma_shape = 1.0;
    double gamma_rate = 0.1;
    double invgamma_shape = 2.0;
    double invgamma_scale = 0.5;

    void validate() const;
};

/// log Phi(-x), accurate far into the upper tail.
double log_normal_tail(double x);
/// log of the Mills ratio Phi(-x) / phi(x) for x >= 0.
double log_mills_ratio(double x);

double log_density(const PenaltyFamily& f, double x);
/// Negative log-density without normalizing constants.
double penalty(const PenaltyFamily& f, double x);
/// argmin_z (z - x)^2 / (2 step) + penalty(f, z).
double prox(const PenaltyFamily& f, double x, double step);

struct TotalShrinkage {
    double s = 0.0;  // 1/sigma + lambda/sqrt(2)
    double f = 0.0;  // Laplace fraction
};
TotalShrinkage reparam_to_total(double lambda, double sigma);
/// Returns (lambda, sigma).
std::pair<double, double> reparam_from_total(double s, double f);

double gamma_log_pdf(double shape, double rate, double x);
double inv_gamma_log_pdf(double shape, double scale, double x);
double hyper_log_prior_lambda(const HyperPriors& h, double lambda);
double hyper_log_prior_sigma2(const HyperPriors& h, double sigma2);

/// One exact draw from the family's density.
double sample(const PenaltyFamily& f, Rng& rng);

}  // namespace mesh
