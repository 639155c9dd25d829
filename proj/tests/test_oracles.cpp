#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace spinlets;

TEST(Oracles, HermiteRuleIsExactForPolynomials) {
    const auto rule = oracle::gauss_hermite(20);
    const auto integrate = [&](auto f) {
        double s = 0.0;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) s += std::exp(rule.log_weights[k]) * f(rule.nodes[k]);
        return s;
    };
    const double root_pi = std::sqrt(std::numbers::pi);
    EXPECT_NEAR(integrate([](double) { return 1.0; }), root_pi, 1e-13);
    EXPECT_NEAR(integrate([](double x) { return x * x; }), root_pi / 2, 1e-13);
    EXPECT_NEAR(integrate([](double x) { return std::pow(x, 6); }), 15 * root_pi / 8, 1e-12);
    EXPECT_NEAR(integrate([](double x) { return std::pow(x, 5); }), 0.0, 1e-12);
    // exp(-x^2) cos(x) integrates to sqrt(pi) exp(-1/4).
    EXPECT_NEAR(integrate([](double x) { return std::cos(x); }), root_pi * std::exp(-0.25), 1e-13);
}

TEST(Oracles, MarginalLikelihoodMatchesBruteForceGrid) {
    // Two replicates and two leaves: three random effects (a, b_2, c_2) on a plain grid.
    ModelInputs in;
    in.X.resize(2, 2);
    in.X << 1, 3, 0, 2;
    in.y = Eigen::Vector2d(0, 1);
    in.t = Eigen::Vector2d(1.0, 1.5);
    const Eigen::Vector2d gamma(0.2, -0.4);
    const Eigen::Vector3d omega(0.5, 0.3, 0.4);

    const auto log_normal = [](double v, double var) {
        return -0.5 * std::log(2 * std::numbers::pi * var) - v * v / (2 * var);
    };
    const int points = 161;
    const double half_width = 4.5;
    const double step = 2 * half_width / (points - 1);
    double total = 0.0;
    for (int ia = 0; ia < points; ++ia)
        for (int ib = 0; ib < points; ++ib)
            for (int ic = 0; ic < points; ++ic) {
                const double a = -half_width + ia * step, b = -half_width + ib * step, c = -half_width + ic * step;
                double v = log_normal(a, omega[0]) + log_normal(b, omega[1]) + log_normal(c, omega[2]);
                const double bs[2] = {0.0, b}, cs[2] = {0.0, c};
                for (int i = 0; i < 2; ++i)
                    for (int j = 0; j < 2; ++j) {
                        const double eta = a + bs[i] + cs[j] + in.y[i] * gamma[j];
                        const double x = in.X(i, j);
                        v += x * (std::log(in.t[i]) + eta) - in.t[i] * std::exp(eta) - std::lgamma(x + 1);
                    }
                total += std::exp(v);
            }
    const double grid = std::log(total * step * step * step);
    EXPECT_NEAR(oracle::log_marginal_likelihood(in, gamma, omega), grid, 1e-6);
}

TEST(Oracles, BruteForceKnnOrdersByDistanceThenIndex) {
    const std::vector<std::array<double, 4>> pts{{0, 0, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}, {3, 0, 0, 0}};
    const auto nn = oracle::brute_force_knn(pts, 2);
    ASSERT_EQ(nn[0].size(), 2u);
    EXPECT_EQ(nn[0][0].second, 1);
    EXPECT_EQ(nn[0][1].second, 2);
    EXPECT_EQ(nn[3][0].second, 1);
    EXPECT_DOUBLE_EQ(nn[3][0].first, 2.0);
}
