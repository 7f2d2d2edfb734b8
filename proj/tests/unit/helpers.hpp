#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mesh/design.hpp"
#include "mesh/likelihood.hpp"
#include "mesh/rng.hpp"

namespace mesh::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(MESH_FIXTURE_DIR) / name; }

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("mesh_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Random sparse design. Every `goalie_every`-th predictor is a defense-only
/// goaltender that, like a real goalie, sits on exactly one side per row.
inline Design random_design(Rng& rng, std::size_t n_predictors, std::size_t n_rows, double on_prob = 0.25,
                            std::size_t goalie_every = 0) {
    Design::Builder b;
    for (std::size_t p = 0; p < n_predictors; ++p) {
        Predictor pr;
        pr.label = "x" + std::to_string(p);
        pr.members = {pr.label};
        const bool goalie = goalie_every && p % goalie_every == goalie_every - 1;
        pr.group = goalie ? PoolGroup::Goaltender : static_cast<PoolGroup>(p % 4);
        pr.defense_only = goalie;
        b.add_predictor(pr);
    }
    for (std::size_t g = 0; g * 20 < n_rows; ++g) b.game_index("g" + std::to_string(g));
    for (std::size_t i = 0; i < n_rows; ++i) {
        std::vector<std::uint32_t> h, a;
        for (std::uint32_t p = 0; p < n_predictors; ++p) {
            const double u = uniform01(rng);
            if (u < on_prob) h.push_back(p);
            else if (u < 2 * on_prob) a.push_back(p);
        }
        const double u = uniform01(rng);
        const Outcome y = u < 0.15 ? Outcome::HomeGoal : u < 0.3 ? Outcome::AwayGoal : Outcome::NoGoal;
        b.add_row(h, a, static_cast<ScoreState>(i % kScoreStates), 1.0 + 60.0 * uniform01(rng), y,
                  static_cast<std::uint32_t>(i / 20));
    }
    return std::move(b).build();
}

inline Coefficients random_coefficients(const Design& d, Rng& rng, double sd = 0.3, double intercept = -3.0) {
    auto c = Coefficients::zeros(d, intercept);
    std::normal_distribution<double> nd(0.0, sd);
    for (auto& v : c.home_intercept) v += nd(rng);
    for (auto& v : c.away_intercept) v += nd(rng);
    for (std::size_t p = 0; p < d.n_predictors(); ++p) {
        if (!d.predictor(p).defense_only) c.omega[p] = nd(rng);
        c.delta[p] = nd(rng);
    }
    return c;
}

}  // namespace mesh::test
