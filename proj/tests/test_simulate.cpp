#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "spinlets/error.hpp"
#include "spinlets/simulate.hpp"

using namespace spinlets;

TEST(Simulate, ScenarioSignals) {
    const Eigen::VectorXd c = true_beta(Scenario::c);
    ASSERT_EQ(c.size(), 32);
    EXPECT_EQ((c.array() != 0).count(), 16);
    EXPECT_EQ((c.array() == 1).count(), 8);
    EXPECT_EQ(c.segment(16, 8), Eigen::VectorXd::Constant(8, -1.0));

    Eigen::VectorXd d(32);
    d << 1, 1, 0, 0, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0,
         1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1;
    EXPECT_EQ(true_beta(Scenario::d), d);
    for (auto s : {Scenario::a, Scenario::b}) EXPECT_EQ(true_beta(s).size(), 32);
    EXPECT_EQ(parse_scenario("b"), Scenario::b);
    EXPECT_THROW(parse_scenario("e"), ArgumentError);
}

TEST(Simulate, GeneratorIsDeterministicAndShaped) {
    SimConfig cfg;
    cfg.scenario = Scenario::b;
    cfg.n = 40;
    cfg.seed = 17;
    const SimData a = generate(cfg), b = generate(cfg);
    EXPECT_EQ(a.inputs.X, b.inputs.X);
    EXPECT_EQ(a.inputs.t, b.inputs.t);
    EXPECT_EQ(a.inputs.X.rows(), 40);
    EXPECT_EQ(a.inputs.X.cols(), 32);
    EXPECT_EQ(a.b[0], 0.0);
    EXPECT_EQ(a.c[0], 0.0);
    ASSERT_TRUE(a.inputs.tree.has_value());
    EXPECT_EQ(a.inputs.tree->height(), 5);
    cfg.seed = 18;
    EXPECT_NE(generate(cfg).inputs.X, a.inputs.X);
    cfg.n = 1;
    EXPECT_THROW(generate(cfg), ArgumentError);
}

TEST(Simulate, GeneratorMoments) {
    SimConfig cfg;
    cfg.n = 100000;
    cfg.seed = 3;
    const SimData d = generate(cfg);
    const double mean_t = d.inputs.t.mean();
    const double var_t = (d.inputs.t.array() - mean_t).square().mean();
    EXPECT_NEAR(mean_t, 2.0, 0.03);
    EXPECT_NEAR(var_t, 2.0, 0.06);
    EXPECT_NEAR(d.inputs.y.mean(), 0.5, 0.01);
    const Eigen::VectorXd b = d.b.tail(d.b.size() - 1);
    EXPECT_NEAR(b.mean(), 0.0, 0.005);
    EXPECT_NEAR(b.squaredNorm() / static_cast<double>(b.size()), 0.1, 0.003);
    // Row-total ratio for y = 0 replicates: E[x_ij] = t_i exp(a + b_i + c_j).
    double observed = 0, expected = 0;
    for (Eigen::Index i = 0; i < d.inputs.X.rows(); ++i) {
        if (d.inputs.y[i] != 0) continue;
        for (Eigen::Index j = 0; j < 32; ++j) {
            observed += d.inputs.X(i, j);
            expected += d.inputs.t[i] * std::exp(d.a + d.b[i] + d.c[j]);
        }
    }
    EXPECT_NEAR(observed / expected, 1.0, 0.01);
}

TEST(Simulate, SelectionF1) {
    const Eigen::VectorXd star = true_beta(Scenario::a);
    EXPECT_EQ(f1_selection(star, star), 1.0);
    EXPECT_EQ(f1_selection(Eigen::VectorXd::Zero(32), star), 0.0);
    EXPECT_NEAR(f1_selection(Eigen::Vector4d(1, 1, 1, 1), Eigen::Vector4d(1, 0, 1, 0)), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(f1_selection(Eigen::Vector4d(1, 0.004, 1, 0.006), Eigen::Vector4d(1, 0, 1, 0)), 0.8, 1e-15);
    EXPECT_THROW(f1_selection(Eigen::Vector3d::Zero(), Eigen::Vector4d::Zero()), ArgumentError);
}

TEST(Simulate, FusionF1) {
    const TreeShape tree(5);
    const Eigen::VectorXd star = true_beta(Scenario::c);
    EXPECT_EQ(f1_fusion(star, star, tree), 1.0);
    // Constant estimate: every internal node is predicted fused. Count the truly fused ones.
    int truly_fused = 0, internal = 0;
    for (std::size_t col = 0; col < tree.num_nodes(); ++col) {
        const NodeId node = tree.node_at(col);
        if (tree.is_leaf(node)) continue;
        ++internal;
        const auto leaves = tree.descendant_set(node);
        bool equal = true;
        for (int j : leaves) equal = equal && star[j - 1] == star[leaves.front() - 1];
        truly_fused += equal ? 1 : 0;
    }
    EXPECT_EQ(internal, 31);
    const double precision = truly_fused / 31.0;
    EXPECT_NEAR(f1_fusion(Eigen::VectorXd::Constant(32, 0.2), star, tree), 2 * precision / (precision + 1), 1e-15);
    EXPECT_EQ(truly_fused, 28);
}

TEST(Simulate, Rmse) {
    const Eigen::VectorXd star = true_beta(Scenario::b);
    EXPECT_EQ(rmse(star, star), 0.0);
    EXPECT_DOUBLE_EQ(rmse(Eigen::VectorXd::Zero(32), star), 1.0);
    EXPECT_DOUBLE_EQ(rmse(2 * star, star), 1.0);
    EXPECT_THROW(rmse(star, Eigen::VectorXd::Zero(32)), ArgumentError);
}

TEST(Simulate, MedianHelper) {
    EXPECT_EQ(median({3, 1, 2}), 2.0);
    EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
    EXPECT_THROW(median({}), ArgumentError);
}

TEST(Simulate, StudyRowsAndCsv) {
    StudyOptions opt;
    opt.scenarios = {Scenario::a, Scenario::c};
    opt.sizes = {25};
    opt.priors = {named_prior("gdp0"), named_prior("fgdp2")};
    opt.replications = 2;
    opt.em.max_em_iters = 5;
    const auto rows = run_study(opt);
    ASSERT_EQ(rows.size(), 8u);
    for (const auto& r : rows) {
        ASSERT_TRUE(r.metrics.has_value()) << r.error;
        EXPECT_EQ(r.n, 25);
        EXPECT_GE(r.metrics->f1_fusion, 0.0);
        EXPECT_LE(r.metrics->f1_fusion, 1.0);
        EXPECT_GE(r.metrics->rmse, 0.0);
        EXPECT_LE(r.metrics->em_iterations, 5);
        EXPECT_EQ(r.beta_hat.size(), 32);
    }
    std::ostringstream out;
    write_study_csv(rows, out);
    const std::string text = out.str();
    EXPECT_EQ(text.rfind("config,n,prior,rep,f1_fusion,f1_selection,rmse,em_iters,seconds\n", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);

    // Rows other than the timing column are reproducible.
    const auto again = run_study(opt);
    ASSERT_EQ(again.size(), rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        EXPECT_EQ(again[k].beta_hat, rows[k].beta_hat);
        EXPECT_EQ(again[k].prior, rows[k].prior);
        EXPECT_EQ(again[k].rep, rows[k].rep);
    }
}

TEST(Simulate, MultiStartPairs) {
    SimConfig cfg;
    cfg.scenario = Scenario::d;
    cfg.n = 25;
    const SimData d = generate(cfg);
    EmConfig em;
    em.max_em_iters = 3;
    const auto ms = multi_start(d.inputs, named_prior("fgdp2"), em, 20, 5);
    EXPECT_EQ(ms.fits.size(), 20u);
    EXPECT_EQ(ms.beta_distances.size(), 190u);
    EXPECT_EQ(ms.gamma_distances.size(), 190u);
    EXPECT_NEAR(ms.beta_distances[0], (ms.fits[0].beta_hat - ms.fits[1].beta_hat).norm(), 1e-12);
    EXPECT_THROW(multi_start(d.inputs, named_prior("fgdp2"), em, 1, 5), ArgumentError);
}
