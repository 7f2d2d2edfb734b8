#include <benchmark/benchmark.h>

#include "mesh/fit_mcmc.hpp"
#include "mesh/simulate.hpp"

namespace {

struct Setup {
    mesh::Design design;
    mesh::GroupShrinkage shrink;
};

const Setup& setup() {
    static const Setup s = [] {
        mesh::LeagueRecipe r;
        r.n_teams = 6;
        r.games_per_team = 20;
        r.seed = 12;
        const auto lg = mesh::synthetic_league(r);
        Setup out{mesh::build_design(lg.events, lg.roster, mesh::ModelSpec::players()), {}};
        out.shrink = mesh::GroupShrinkage::uniform({mesh::PoolGroup::Center, mesh::PoolGroup::LeftWing,
                                                    mesh::PoolGroup::RightWing, mesh::PoolGroup::Defense,
                                                    mesh::PoolGroup::Goaltender},
                                                   mesh::PenaltyFamily::l1l2(4, 0.1));
        return out;
    }();
    return s;
}

void BM_PairUpdateSweep(benchmark::State& state) {
    const auto& s = setup();
    mesh::ChainConfig cfg;
    mesh::SamplerState st(s.design, mesh::Coefficients::zeros(s.design, -7.3), s.shrink, cfg);
    mesh::Rng rng = mesh::make_stream(1, 0);
    for (auto _ : state)
        for (std::uint32_t p = 0; p < s.design.n_predictors(); ++p) mesh::metropolis_pair_update(st, p, rng);
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * s.design.n_predictors()));
}
BENCHMARK(BM_PairUpdateSweep);

void BM_HyperGrid(benchmark::State& state) {
    const auto& s = setup();
    mesh::ChainConfig cfg;
    mesh::SamplerState st(s.design, mesh::Coefficients::zeros(s.design, -7.3), s.shrink, cfg);
    mesh::Rng rng = mesh::make_stream(2, 0);
    for (auto _ : state)
        for (std::size_t k = 0; k < st.hyper_slots().size(); ++k) mesh::hyper_grid_update(st, k, rng);
}
BENCHMARK(BM_HyperGrid);

void BM_ShortChain(benchmark::State& state) {
    const auto& s = setup();
    mesh::ChainConfig cfg;
    cfg.n_chains = 1;
    cfg.burn_in = 50;
    cfg.thin = 1;
    cfg.draws_per_chain = 100;
    cfg.min_kept = 100;
    for (auto _ : state) benchmark::DoNotOptimize(mesh::run_chain(s.design, s.shrink, cfg));
}
BENCHMARK(BM_ShortChain)->Unit(benchmark::kMillisecond);

}  // namespace
