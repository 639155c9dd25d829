#include <cmath>

#include <gtest/gtest.h>

#include "spinlets/em.hpp"
#include "spinlets/error.hpp"
#include "spinlets/simulate.hpp"

using namespace spinlets;

namespace {

SimData small_data(Scenario s, int n, std::uint64_t seed) {
    SimConfig cfg;
    cfg.scenario = s;
    cfg.n = n;
    cfg.seed = seed;
    return generate(cfg);
}

ModelInputs without_tree(ModelInputs in) {
    in.tree.reset();
    return in;
}

}  // namespace

TEST(Em, OmegaFixedPointExamples) {
    FitState s = FitState::zeros(3, 4, 7);
    s.k_a = std::log(0.3);
    s.k_b.setConstant(std::log(0.3));
    s.k_c.setConstant(std::log(0.3));
    EXPECT_LE((omega_fixed_point(s) - Eigen::Vector3d::Constant(0.3)).norm(), 1e-15);
    s.zeta_a = 1.0;
    s.k_a = -200.0;
    EXPECT_NEAR(omega_fixed_point(s)[0], 1.0, 1e-15);
    s.zeta_a = 0.0;
    EXPECT_DOUBLE_EQ(omega_fixed_point(s)[0], 1e-8);
}

TEST(Em, OmegaIsStationaryForTheBound) {
    const SimData d = small_data(Scenario::b, 6, 3);
    FitState s = initial_state(d.inputs, EmConfig{.seed = 5});
    for (Eigen::Index i = 0; i < s.zeta_b.size(); ++i) s.zeta_b[i] = 0.1 * std::sin(i + 1.0);
    for (Eigen::Index j = 0; j < s.zeta_c.size(); ++j) s.zeta_c[j] = 0.2 * std::cos(j + 1.0);
    s.zeta_a = 0.4;
    s.omega = omega_fixed_point(s);
    for (int c = 0; c < 3; ++c) {
        const double step = 1e-5 * s.omega[c];
        FitState up = s, down = s;
        up.omega[c] += step;
        down.omega[c] -= step;
        const double slope = (gva_lower_bound(d.inputs, up) - gva_lower_bound(d.inputs, down)) / (2 * step);
        EXPECT_NEAR(slope * s.omega[c], 0.0, 1e-6) << c;
    }
}

TEST(Em, InitialStateFollowsConfig) {
    const SimData d = small_data(Scenario::a, 10, 1);
    const EmConfig cfg{.seed = 9, .init_scale = 0.0};
    const FitState s = initial_state(d.inputs, cfg);
    EXPECT_EQ(s.gamma.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(s.k_a, std::log(0.01));
    EXPECT_EQ(s.omega, Eigen::Vector3d(1, 1, 1));
    const FitState r1 = initial_state(d.inputs, EmConfig{.seed = 9});
    const FitState r2 = initial_state(d.inputs, EmConfig{.seed = 9});
    const FitState r3 = initial_state(d.inputs, EmConfig{.seed = 10});
    EXPECT_EQ(r1, r2);
    EXPECT_NE(r1.gamma, r3.gamma);
}

TEST(Em, DeterministicAndMonotone) {
    const SimData d = small_data(Scenario::c, 60, 2);
    const EmConfig cfg{.max_em_iters = 15, .seed = 4};
    const FitResult a = fit(d.inputs, named_prior("fgdp2"), cfg);
    const FitResult b = fit(d.inputs, named_prior("fgdp2"), cfg);
    EXPECT_EQ(a.state, b.state);
    EXPECT_EQ(a.beta_hat, b.beta_hat);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    double previous = a.initial_objective;
    for (const auto& entry : a.trace) {
        EXPECT_GE(entry.objective, previous - 1e-8);
        previous = entry.objective;
    }
    EXPECT_EQ(a.beta_hat, d.inputs.leaf_effects(a.state.gamma));
    EXPECT_EQ(a.iterations, static_cast<int>(a.trace.size()));
}

TEST(Em, RefitFromOptimumStopsQuickly) {
    const SimData d = small_data(Scenario::d, 80, 5);
    const FitResult first = fit(d.inputs, named_prior("fgdp2"), EmConfig{.seed = 1});
    ASSERT_TRUE(first.converged);
    const FitResult again = fit(d.inputs, named_prior("fgdp2"), EmConfig{.seed = 1}, &first.state);
    EXPECT_TRUE(again.converged);
    EXPECT_LE(again.iterations, 2);
}

TEST(Em, LeafAndTreeSpacesAgreeWithoutPenalty) {
    const SimData d = small_data(Scenario::c, 60, 7);
    const EmConfig cfg{.max_em_iters = 200, .max_inner_iters = 20000, .seed = 3};
    const FitResult leaf = fit(without_tree(d.inputs), named_prior("gdp0"), cfg);
    const FitResult tree = fit(d.inputs, parse_prior_params("fgdp_gamma,-1,1,-1,1"), cfg);
    ASSERT_FALSE(leaf.trace.empty());
    ASSERT_FALSE(tree.trace.empty());
    EXPECT_NEAR(leaf.trace.back().objective, tree.trace.back().objective, 1e-4);
}

TEST(Em, NoSignalLeavesSupervisionIrrelevant) {
    SimData d = small_data(Scenario::a, 30, 8);
    d.inputs.y.setZero();
    const FitResult r = fit(without_tree(d.inputs), named_prior("gdp0"), EmConfig{.seed = 2});
    // With y = 0 the coefficients receive no gradient at all.
    const FitState init = initial_state(without_tree(d.inputs), EmConfig{.seed = 2});
    EXPECT_LE((r.state.gamma - init.gamma).norm(), 1e-12);
    const Eigen::VectorXd fitted_rows = expected_counts(without_tree(d.inputs), r.state).value.rowwise().sum();
    const Eigen::VectorXd observed_rows = d.inputs.X.rowwise().sum();
    EXPECT_LE((fitted_rows - observed_rows).cwiseAbs().maxCoeff(), 0.05 * observed_rows.maxCoeff() + 0.5);
}

TEST(Em, RecoversScenarioC) {
    std::vector<double> errors;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const SimData d = small_data(Scenario::c, 200, seed);
        const FitResult r = fit(d.inputs, named_prior("fgdp2"), EmConfig{.seed = seed});
        errors.push_back(rmse(r.beta_hat, d.beta_star));
    }
    EXPECT_LE(median(errors), 0.3);
}

TEST(Em, ArgumentErrors) {
    const SimData d = small_data(Scenario::a, 10, 1);
    EXPECT_THROW(fit(without_tree(d.inputs), named_prior("fgdp2"), EmConfig{}), ArgumentError);
    EXPECT_THROW(fit(d.inputs, named_prior("gdp"), EmConfig{}), ArgumentError);
    EXPECT_THROW(fit(d.inputs, named_prior("fgdp2"), EmConfig{.max_em_iters = 0}), ArgumentError);
    EXPECT_THROW(fit(d.inputs, named_prior("fgdp2"), EmConfig{.conv_tol = 0}), ArgumentError);
}

TEST(Em, ResultJsonRoundTrip) {
    const SimData d = small_data(Scenario::b, 20, 4);
    const FitResult r = fit(d.inputs, named_prior("fgdp1"), EmConfig{.max_em_iters = 3, .seed = 6});
    const FitResult back = fit_result_from_json(fit_result_to_json(r));
    EXPECT_EQ(back.state, r.state);
    EXPECT_EQ(back.beta_hat, r.beta_hat);
    EXPECT_EQ(back.prior, r.prior);
    EXPECT_EQ(back.tree_height, 5);
    ASSERT_EQ(back.trace.size(), r.trace.size());
    for (std::size_t k = 0; k < r.trace.size(); ++k) EXPECT_EQ(back.trace[k].objective, r.trace[k].objective);
    EXPECT_EQ(back.iterations, r.iterations);
    EXPECT_THROW(fit_result_from_json("[1,2]"), ParseError);
}
