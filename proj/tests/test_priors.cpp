#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinlets/error.hpp"
#include "spinlets/priors.hpp"
#include "spinlets/random.hpp"

using namespace spinlets;

namespace {

PriorSpec make(PriorKind kind, double a1, double e1, double a2, double e2, double theta = 0.5) {
    PriorSpec p;
    p.kind = kind;
    p.alpha1 = a1;
    p.eta1 = e1;
    p.alpha2 = a2;
    p.eta2 = e2;
    p.theta = theta;
    return p;
}

Eigen::VectorXd random_vector(Eigen::Index size, std::uint64_t seed) {
    Rng rng = make_rng(seed, "test-priors");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd v(size);
    for (auto& x : v) x = normal(rng);
    return v;
}

}  // namespace

TEST(Priors, WeightExample) {
    const auto w = estep_weights(Eigen::Vector3d(1.0, 0.0, 0.0), make(PriorKind::fgdp_gamma, 1, 0.01, 1, 0.01));
    EXPECT_NEAR(w.rho[0], 2.0 / 1.01, 1e-12);
    EXPECT_NEAR(w.rho[0], 1.980198, 1e-6);
}

TEST(Priors, NoShrinkageAndNormalJeffreys) {
    const Eigen::VectorXd gamma = random_vector(7, 1);
    const auto zero = estep_weights(gamma, named_prior("gdp0"));
    EXPECT_EQ(zero.rho.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(zero.pairs.empty());
    const auto nj = estep_weights(gamma, named_prior("fgdp-nj"));
    for (Eigen::Index l = 0; l < gamma.size(); ++l) EXPECT_NEAR(nj.rho[l], 1.0 / (gamma[l] * gamma[l]), 1e-9 * nj.rho[l]);
}

TEST(Priors, EqualSiblingsHitTheFloor) {
    const PriorSpec p = make(PriorKind::fgdp_gamma, 1, 1, 1, 0.5);
    const auto w = estep_weights(Eigen::Vector3d(0.4, 0.3, 0.3), p);
    const double eps = 1e-8;
    ASSERT_EQ(w.upsilon.size(), 1);
    EXPECT_DOUBLE_EQ(w.upsilon[0], 2.0 / (eps * (eps + 0.5)));
    // Zero coefficients are floored the same way.
    const auto z = estep_weights(Eigen::Vector3d::Zero(), p);
    EXPECT_DOUBLE_EQ(z.rho[0], 2.0 / (eps * (eps + 1.0)));
}

TEST(Priors, WeightsAreEven) {
    for (const auto& name : named_prior_list()) {
        const PriorSpec p = named_prior(name);
        const Eigen::VectorXd g = random_vector(15, 2);
        const auto plus = estep_weights(g, p), minus = estep_weights(-g, p);
        EXPECT_EQ(plus.rho, minus.rho) << name;
        EXPECT_EQ(plus.upsilon, minus.upsilon) << name;
    }
}

TEST(Priors, PairStructures) {
    EXPECT_TRUE(penalty_pairs(named_prior("gdp"), 5).empty());
    const auto flsa = penalty_pairs(named_prior("flsa"), 4);
    ASSERT_EQ(flsa.size(), 3u);
    EXPECT_EQ(flsa[2], (std::pair<Eigen::Index, Eigen::Index>(2, 3)));
    EXPECT_EQ(penalty_pairs(named_prior("pfl-s"), 5).size(), 10u);
    const auto tree = penalty_pairs(named_prior("fgdp"), 15);
    ASSERT_EQ(tree.size(), 7u);
    EXPECT_EQ(tree[0], (std::pair<Eigen::Index, Eigen::Index>(1, 2)));
    EXPECT_EQ(tree[6], (std::pair<Eigen::Index, Eigen::Index>(13, 14)));
    EXPECT_THROW(penalty_pairs(named_prior("fgdp"), 6), InternalError);
}

TEST(Priors, SmallestTreeBlock) {
    EStepWeights w;
    w.rho = Eigen::Vector3d(1.5, 2.0, 3.0);
    w.upsilon = Eigen::VectorXd::Constant(1, 0.7);
    w.pairs = {{1, 2}};
    const Eigen::MatrixXd lambda = assemble_precision(w, named_prior("fgdp"), 3);
    Eigen::Matrix3d expected;
    expected << 1.5, 0, 0, 0, 2.7, -0.7, 0, -0.7, 3.7;
    EXPECT_EQ(lambda, expected);
}

TEST(Priors, TridiagonalFusedLasso) {
    EStepWeights w;
    w.rho = Eigen::Vector3d(1.0, 2.0, 3.0);
    w.upsilon = Eigen::Vector2d(0.5, 0.25);
    w.pairs = {{0, 1}, {1, 2}};
    const Eigen::MatrixXd lambda = assemble_precision(w, named_prior("flsa"), 3);
    Eigen::Matrix3d expected;
    expected << 1.5, -0.5, 0, -0.5, 2.75, -0.25, 0, -0.25, 3.25;
    EXPECT_EQ(lambda, expected);
}

TEST(Priors, ShapeMismatchIsInternal) {
    EStepWeights w;
    w.rho = Eigen::Vector2d(1.0, 1.0);
    EXPECT_THROW(assemble_precision(w, named_prior("gdp"), 3), InternalError);
    w.rho = Eigen::Vector3d(1.0, 1.0, 1.0);
    EXPECT_THROW(assemble_precision(w, named_prior("flsa"), 3), InternalError);
}

TEST(Priors, QuadraticFormMatchesSumOfSquares) {
    const std::vector<std::string> names{"gdp", "flsa", "pfl-s", "pfl-f", "fgdp2", "fgdp-s", "fgdp-nj"};
    std::uint64_t seed = 10;
    for (const auto& name : names) {
        const PriorSpec p = named_prior(name);
        for (Eigen::Index size : {3, 7, 15, 31}) {
            const Eigen::VectorXd at = random_vector(size, ++seed), c = random_vector(size, ++seed);
            const Eigen::SparseMatrix<double> lambda = assemble_precision(estep_weights(at, p), p, size);
            const double form = c.dot(lambda * c);
            const double oracle = oracle::explicit_quadratic_form(c, at, p);
            EXPECT_NEAR(form, oracle, 1e-10 * std::max(1.0, std::abs(oracle))) << name << " " << size;
        }
    }
}

TEST(Priors, PrecisionIsPositiveSemidefinite) {
    std::uint64_t seed = 100;
    for (const auto& name : named_prior_list()) {
        const PriorSpec p = named_prior(name);
        const Eigen::VectorXd at = 0.3 * random_vector(15, ++seed);
        const Eigen::MatrixXd lambda = assemble_precision(estep_weights(at, p), p, 15);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lambda);
        const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
        EXPECT_GE(solver.eigenvalues().minCoeff(), -1e-10 * scale) << name;
        EXPECT_TRUE(lambda.isApprox(lambda.transpose())) << name;
    }
}

TEST(Priors, LogDensityExamples) {
    EXPECT_NEAR(log_prior_density(Eigen::Vector3d::Zero(), named_prior("fgdp")), -4 * std::log(2.0), 1e-14);
    EXPECT_NEAR(log_prior_density(Eigen::VectorXd::Zero(1), named_prior("gdp")), -std::log(2.0), 1e-14);
    const Eigen::VectorXd g = random_vector(15, 7);
    EXPECT_NEAR(log_prior_density(g, named_prior("fgdp2")), log_prior_density(-g, named_prior("fgdp2")), 1e-12);
    EXPECT_THROW(log_prior_density(g, named_prior("gdp0")), ArgumentError);
    EXPECT_THROW(log_prior_density(g, named_prior("fgdp-nj")), ArgumentError);
}

TEST(Priors, SurrogatePenaltyHasTheWeightsAsCurvature) {
    // d/dc of the penalty equals -rho c away from the floor.
    const PriorSpec p = named_prior("fgdp2");
    const Eigen::VectorXd c = random_vector(7, 8);
    const auto w = estep_weights(c, p);
    const Eigen::SparseMatrix<double> lambda = assemble_precision(w, p, 7);
    const Eigen::VectorXd slope = -(lambda * c);
    for (Eigen::Index l = 0; l < 7; ++l) {
        Eigen::VectorXd up = c, down = c;
        up[l] += 1e-6;
        down[l] -= 1e-6;
        const double numeric = (surrogate_penalty(up, p) - surrogate_penalty(down, p)) / 2e-6;
        EXPECT_NEAR(numeric, slope[l], 1e-5 * std::max(1.0, std::abs(slope[l])));
    }
}

TEST(Priors, QuadratureOracle) {
    EXPECT_NEAR(estep_quadrature_oracle(1.0, 1.0, 1.0), 1.0, 1e-9);
    const std::vector<double> alphas{0.5, 1, 2, 5, 10};
    for (double alpha : alphas)
        for (int e = 0; e < 5; ++e)
            for (int c = 0; c < 5; ++c) {
                const double eta = std::pow(10.0, -3 + 0.75 * e);
                const double coeff = std::pow(10.0, -2 + 0.75 * c);
                const double closed = (alpha + 1) / (coeff * (coeff + eta));
                EXPECT_NEAR(estep_quadrature_oracle(coeff, alpha, eta) / closed, 1.0, 1e-6)
                    << alpha << " " << eta << " " << coeff;
            }
    EXPECT_THROW(estep_quadrature_oracle(0.0, 1, 1), ArgumentError);
    EXPECT_THROW(estep_quadrature_oracle(1.0, -1, 1), ArgumentError);
}

TEST(Priors, NamedTable) {
    const auto s = named_prior("pfl-s");
    EXPECT_EQ(s.kind, PriorKind::pfl_beta);
    EXPECT_DOUBLE_EQ(s.theta, 0.8);
    EXPECT_DOUBLE_EQ(named_prior("pfl-f").theta, 0.2);
    const auto f4 = named_prior("fgdp4");
    EXPECT_DOUBLE_EQ(f4.alpha1, 0.5);
    EXPECT_DOUBLE_EQ(f4.eta2, 0.01);
    EXPECT_EQ(named_prior("fgdp-s").alpha2, -1.0);
    EXPECT_EQ(named_prior("fgdp-f").alpha1, -1.0);
    EXPECT_EQ(named_prior_list().size(), 15u);
    EXPECT_DOUBLE_EQ(*named_prior("fgdp2").xi1(), 0.01);
    try {
        named_prior("fgdp9");
        FAIL();
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("fgdp2"), std::string::npos);
    }
}

TEST(Priors, ParseParams) {
    const auto p = parse_prior_params("pfl_beta,1,0.5,2,0.25,0.3");
    EXPECT_EQ(p.kind, PriorKind::pfl_beta);
    EXPECT_DOUBLE_EQ(p.eta1, 0.5);
    EXPECT_DOUBLE_EQ(p.theta, 0.3);
    EXPECT_THROW(parse_prior_params("fgdp_gamma,1,1"), ArgumentError);
    EXPECT_THROW(parse_prior_params("fgdp_gamma,1,x,1,1"), ArgumentError);
    EXPECT_THROW(parse_prior_params("fgdp_gamma,-2,1,1,1"), ArgumentError);
    EXPECT_THROW(parse_prior_params("pfl_beta,1,1,1,1,1.5"), ArgumentError);
    EXPECT_THROW(parse_prior_params("other,1,1,1,1"), ArgumentError);
}
