#include <benchmark/benchmark.h>

#include "spinlets/em.hpp"
#include "spinlets/model.hpp"
#include "spinlets/priors.hpp"
#include "spinlets/simulate.hpp"

namespace {

spinlets::SimData study_data(int n) {
    spinlets::SimConfig cfg;
    cfg.scenario = spinlets::Scenario::d;
    cfg.n = n;
    cfg.seed = 3;
    return spinlets::generate(cfg);
}

void BM_SurrogateGradient(benchmark::State& state) {
    const auto data = study_data(static_cast<int>(state.range(0)));
    const auto prior = spinlets::named_prior("fgdp2");
    spinlets::EmConfig config;
    const auto init = spinlets::initial_state(data.inputs, config);
    const auto p = data.inputs.num_coefficients();
    const auto lambda = spinlets::assemble_precision(spinlets::estep_weights(init.gamma, prior), prior, p);
    const spinlets::SurrogateObjective objective(data.inputs, lambda, init.omega);
    const Eigen::VectorXd x = init.pack();
    Eigen::VectorXd g;
    for (auto _ : state) benchmark::DoNotOptimize(objective(x, g));
}
BENCHMARK(BM_SurrogateGradient)->Arg(200)->Arg(1000);

void BM_EmIteration(benchmark::State& state) {
    const auto data = study_data(static_cast<int>(state.range(0)));
    const auto prior = spinlets::named_prior("fgdp2");
    spinlets::EmConfig config;
    config.max_em_iters = 1;
    for (auto _ : state) benchmark::DoNotOptimize(spinlets::fit(data.inputs, prior, config));
}
BENCHMARK(BM_EmIteration)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_FullFit(benchmark::State& state) {
    const auto data = study_data(200);
    const auto prior = spinlets::named_prior(state.range(0) ? "fgdp2" : "gdp");
    auto inputs = data.inputs;
    if (!prior.uses_tree()) inputs.tree.reset();
    spinlets::EmConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(spinlets::fit(inputs, prior, config));
}
BENCHMARK(BM_FullFit)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace
