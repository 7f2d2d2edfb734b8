#include <benchmark/benchmark.h>

#include <map>

#include "mesh/fit_mle.hpp"
#include "mesh/likelihood.hpp"
#include "mesh/simulate.hpp"

namespace {

const mesh::SyntheticLeague& league(std::size_t teams) {
    static std::map<std::size_t, mesh::SyntheticLeague> cache;
    auto it = cache.find(teams);
    if (it == cache.end()) {
        mesh::LeagueRecipe r;
        r.n_teams = teams;
        r.games_per_team = 20;
        r.seed = 11;
        it = cache.emplace(teams, mesh::synthetic_league(r)).first;
    }
    return it->second;
}

void BM_Evaluate(benchmark::State& state) {
    const auto& lg = league(static_cast<std::size_t>(state.range(0)));
    const auto d = mesh::build_design(lg.events, lg.roster, mesh::ModelSpec::players());
    const auto c = mesh::Coefficients::zeros(d, -7.3);
    for (auto _ : state) benchmark::DoNotOptimize(mesh::evaluate(d, c));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * d.n_rows()));
}
BENCHMARK(BM_Evaluate)->Arg(6)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_BuildDesign(benchmark::State& state) {
    const auto& lg = league(30);
    for (auto _ : state)
        benchmark::DoNotOptimize(mesh::build_design(lg.events, lg.roster, mesh::ModelSpec::players()));
}
BENCHMARK(BM_BuildDesign)->Unit(benchmark::kMillisecond);

void BM_FitL1(benchmark::State& state) {
    const auto& lg = league(6);
    const auto d = mesh::build_design(lg.events, lg.roster, mesh::ModelSpec::players());
    const std::vector<mesh::PoolGroup> groups{mesh::PoolGroup::Center, mesh::PoolGroup::LeftWing,
                                              mesh::PoolGroup::RightWing, mesh::PoolGroup::Defense,
                                              mesh::PoolGroup::Goaltender};
    const auto gs = mesh::GroupShrinkage::uniform(groups, mesh::PenaltyFamily::l1(8));
    for (auto _ : state) benchmark::DoNotOptimize(mesh::fit_penalized(d, gs, {}, mesh::poisson_start(d)));
}
BENCHMARK(BM_FitL1)->Unit(benchmark::kMillisecond);

}  // namespace
