#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinlets/error.hpp"
#include "spinlets/lbfgs.hpp"
#include "spinlets/model.hpp"
#include "spinlets/priors.hpp"
#include "spinlets/random.hpp"

using namespace spinlets;

namespace {

ModelInputs single_cell(double x, double t) {
    ModelInputs in;
    in.X = Eigen::MatrixXd::Constant(1, 1, x);
    in.y = Eigen::VectorXd::Zero(1);
    in.t = Eigen::VectorXd::Constant(1, t);
    return in;
}

struct Instance {
    ModelInputs inputs;
    FitState state;
    Eigen::SparseMatrix<double> precision;
};

Instance random_instance(std::uint64_t seed, bool tree) {
    Rng rng = make_rng(seed, "test-model");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Instance r;
    const int n = 2 + static_cast<int>(seed % 6);
    const int h = 1 + static_cast<int>(seed % 3);
    const int m = tree ? 1 << h : 2 + static_cast<int>(seed % 5);
    if (tree) r.inputs.tree = TreeShape(h);
    r.inputs.X.resize(n, m);
    r.inputs.y.resize(n);
    r.inputs.t.resize(n);
    for (int i = 0; i < n; ++i) {
        r.inputs.y[i] = std::poisson_distribution<int>(0.8)(rng);
        r.inputs.t[i] = 0.5 + 2 * unit(rng);
        for (int j = 0; j < m; ++j) r.inputs.X(i, j) = std::poisson_distribution<int>(2.5)(rng);
    }
    const auto p = r.inputs.num_coefficients();
    r.state = FitState::zeros(n, m, p);
    for (auto& g : r.state.gamma) g = 0.3 * normal(rng);
    r.state.zeta_a = 0.2 * normal(rng);
    for (auto& z : r.state.zeta_b) z = 0.2 * normal(rng);
    for (auto& z : r.state.zeta_c) z = 0.2 * normal(rng);
    r.state.k_a = -3 + unit(rng);
    for (auto& k : r.state.k_b) k = -3 + 2 * unit(rng);
    for (auto& k : r.state.k_c) k = -3 + 2 * unit(rng);
    r.state.omega = Eigen::Vector3d(0.5 + unit(rng), 0.5 + unit(rng), 0.5 + unit(rng));
    const PriorSpec prior = named_prior(tree ? "fgdp1" : "pfl-s");
    Eigen::VectorXd at(p);
    for (auto& v : at) v = normal(rng);
    r.precision = assemble_precision(estep_weights(at, prior), prior, p);
    return r;
}

}  // namespace

TEST(Model, LinearPredictorExamples) {
    ModelInputs in;
    in.tree = TreeShape(3);
    in.X = Eigen::MatrixXd::Zero(2, 8);
    in.y = Eigen::Vector2d(0.0, 2.0);
    in.t = Eigen::Vector2d(1.0, 1.0);
    FitState s = FitState::zeros(2, 8, 15);
    EXPECT_EQ(linear_predictor(in, s, 1, 5), 0.0);
    s.zeta_a = 0.7;
    EXPECT_EQ(linear_predictor(in, s, 0, 0), 0.7);
    s.gamma[0] = 1.0;  // root only
    s.zeta_b[0] = 0.1;
    s.zeta_c[4] = -0.3;
    EXPECT_DOUBLE_EQ(linear_predictor(in, s, 1, 5), 0.7 + 0.1 - 0.3 + 2.0);
}

TEST(Model, CompleteLogLikelihoodExamples) {
    const Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);
    EXPECT_DOUBLE_EQ(complete_log_likelihood(single_cell(0, 1), 0, zero1, zero1, zero1), -1.0);
    EXPECT_NEAR(complete_log_likelihood(single_cell(2, 1), 0, zero1, zero1, zero1), -1.693147, 1e-6);
    // Scaling t by c and shifting a by -ln c leaves t exp(eta) unchanged.
    const double c = 3.5;
    const double base = complete_log_likelihood(single_cell(4, 1), 0.2, zero1, zero1, zero1);
    const double moved = complete_log_likelihood(single_cell(4, c), 0.2 - std::log(c), zero1, zero1, zero1);
    EXPECT_NEAR(base, moved, 1e-12);
}

TEST(Model, GvaBoundSingleCellExample) {
    const ModelInputs in = single_cell(0, 1);
    FitState s = FitState::zeros(1, 1, 1);
    s.k_a = 0.0;  // kappa = 1
    EXPECT_NEAR(gva_lower_bound(in, s), -std::exp(0.5), 1e-12);
}

TEST(Model, GvaBoundApproachesLikelihoodAsVarianceVanishes) {
    const Instance inst = random_instance(3, true);
    FitState s = inst.state;
    s.k_a = -40;
    s.k_b.setConstant(-40);
    s.k_c.setConstant(-40);
    const auto n = inst.inputs.num_replicates(), m = inst.inputs.num_leaves();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n), c = Eigen::VectorXd::Zero(m);
    b.tail(n - 1) = s.zeta_b;
    c.tail(m - 1) = s.zeta_c;
    const double loglik = complete_log_likelihood(inst.inputs, s.zeta_a, b, c, s.gamma);
    // Remaining terms: Gaussian log prior at the means plus entropy, both without the 2 pi parts.
    double rest = -s.zeta_a * s.zeta_a / (2 * s.omega[0]) - s.zeta_b.squaredNorm() / (2 * s.omega[1]) -
                  s.zeta_c.squaredNorm() / (2 * s.omega[2]);
    rest -= 0.5 * std::log(s.omega[0]) + 0.5 * (n - 1) * std::log(s.omega[1]) + 0.5 * (m - 1) * std::log(s.omega[2]);
    rest += 0.5 * (s.k_a + s.k_b.sum() + s.k_c.sum()) + 0.5 * (n + m - 1);
    EXPECT_NEAR(gva_lower_bound(inst.inputs, s), loglik + rest, 1e-8);
}

TEST(Model, GvaBoundBelowQuadratureMarginal) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        Rng rng = make_rng(seed, "test-gva");
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        ModelInputs in;
        in.X.resize(3, 2);
        in.y = Eigen::Vector3d(0, 1, 2);
        in.t = Eigen::Vector3d(1 + unit(rng), 1 + unit(rng), 1 + unit(rng));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 2; ++j) in.X(i, j) = std::poisson_distribution<int>(2.0)(rng);
        FitState s = FitState::zeros(3, 2, 2);
        s.gamma = Eigen::Vector2d(0.3 * unit(rng), -0.2);
        s.zeta_a = 0.3;
        s.k_a = std::log(0.1);
        s.k_b.setConstant(std::log(0.2));
        s.k_c.setConstant(std::log(0.3));
        s.omega = Eigen::Vector3d(0.8, 1.1, 0.6);
        const double exact = oracle::log_marginal_likelihood(in, s.gamma, s.omega);
        EXPECT_LE(gva_lower_bound(in, s), exact + 1e-6);
        // Raising the quadrature order does not move the oracle.
        EXPECT_NEAR(exact, oracle::log_marginal_likelihood(in, s.gamma, s.omega, 64), 1e-9);
    }
}

TEST(Model, GradientsMatchFiniteDifferences) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Instance inst = random_instance(seed, seed % 2 == 0);
        const SurrogateObjective q(inst.inputs, inst.precision, inst.state.omega);
        const Eigen::VectorXd x = inst.state.pack();
        Eigen::VectorXd analytic;
        q(x, analytic);
        const auto p = inst.inputs.num_coefficients();
        EXPECT_LE((analytic.head(p) - grad_gamma(inst.inputs, inst.state, inst.precision)).norm(), 1e-12);
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double step = 1e-6 * std::max(1.0, std::abs(x[k]));
            Eigen::VectorXd up = x, down = x;
            up[k] += step;
            down[k] -= step;
            const double numeric = (q.value(up) - q.value(down)) / (2 * step);
            EXPECT_NEAR(analytic[k], numeric, 1e-5 * std::max(1.0, std::abs(numeric))) << "seed " << seed << " k " << k;
        }
    }
}

TEST(Model, GradientSpecialCases) {
    Instance inst = random_instance(4, true);
    // No supervision: the coefficient gradient is -Lambda gamma.
    inst.inputs.y.setZero();
    const Eigen::VectorXd g = grad_gamma(inst.inputs, inst.state, inst.precision);
    EXPECT_LE((g + inst.precision * inst.state.gamma).norm(), 1e-10);

    // Counts equal to their expectation: zero gradients for gamma (no penalty) and zeta at zero means.
    Instance fitted = random_instance(5, false);
    fitted.state.zeta_a = 0;
    fitted.state.zeta_b.setZero();
    fitted.state.zeta_c.setZero();
    fitted.inputs.X = expected_counts(fitted.inputs, fitted.state).value;
    Eigen::SparseMatrix<double> zero(fitted.inputs.num_coefficients(), fitted.inputs.num_coefficients());
    EXPECT_LE(grad_gamma(fitted.inputs, fitted.state, zero).norm(), 1e-10);
    const ZetaGradient gz = grad_zeta(fitted.inputs, fitted.state);
    EXPECT_NEAR(gz.a, 0.0, 1e-10);
    EXPECT_LE(gz.b.norm() + gz.c.norm(), 1e-10);

    // Stationarity in k_a without expected counts gives kappa_a = omega_a.
    Instance empty = random_instance(6, false);
    empty.inputs.t.setConstant(1e-300);
    empty.state.k_a = std::log(empty.state.omega[0]);
    EXPECT_NEAR(grad_k(empty.inputs, empty.state).a, 0.0, 1e-12);
    // Large expected counts shrink kappa.
    Instance big = random_instance(6, false);
    big.inputs.t.setConstant(1e4);
    EXPECT_LT(grad_k(big.inputs, big.state).a, -10.0);
}

TEST(Model, ClampedCellsHaveZeroDerivative) {
    Instance inst = random_instance(8, false);
    inst.state.zeta_a = 40.0;
    const auto counts = expected_counts(inst.inputs, inst.state);
    EXPECT_EQ(counts.num_clamped, static_cast<std::size_t>(inst.inputs.X.size()));
    const SurrogateObjective q(inst.inputs, inst.precision, inst.state.omega);
    Eigen::VectorXd g;
    EXPECT_TRUE(std::isfinite(q(inst.state.pack(), g)));
    EXPECT_EQ(q.last_clamped(), counts.num_clamped);
    EXPECT_TRUE(g.allFinite());
}

TEST(Model, PreconditionerIsPositiveDefinite) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Instance inst = random_instance(seed, seed % 2 == 1);
        const CurvaturePreconditioner pre(inst.inputs, inst.state, inst.precision);
        Rng rng = make_rng(seed, "test-pre");
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::VectorXd r(inst.state.packed_size());
        for (auto& v : r) v = normal(rng);
        EXPECT_GT(r.dot(pre.solve(r)), 0.0);
    }
}

TEST(Model, SdrScoreAndSufficiency) {
    Eigen::VectorXd beta(4), x = Eigen::VectorXd::Zero(4);
    beta << 0.5, -1.0, 0.0, 2.0;
    EXPECT_EQ(sdr_score(x, beta), 0.0);
    x[3] = 1.0;
    EXPECT_EQ(sdr_score(x, beta), 2.0);
    EXPECT_EQ(sdr_score(x, Eigen::VectorXd::Zero(4)), 0.0);

    const std::vector<double> grid{0, 1, 2, 3}, prior{0.4, 0.3, 0.2, 0.1};
    const Eigen::VectorXd intercepts = Eigen::VectorXd::Constant(4, 0.1);
    // No signal: posterior equals prior.
    const auto flat = posterior_response_oracle(x, Eigen::VectorXd::Zero(4), intercepts, grid, prior);
    for (std::size_t g = 0; g < grid.size(); ++g) EXPECT_NEAR(flat[g], prior[g], 1e-15);
    // Equal scores, different counts.
    Eigen::VectorXd x1(4), x2(4);
    x1 << 2, 1, 0, 1;  // score 1 - 1 + 2 = 2
    x2 << 0, 0, 9, 1;  // score 2
    const auto p1 = posterior_response_oracle(x1, beta, intercepts, grid, prior);
    const auto p2 = posterior_response_oracle(x2, beta, intercepts, grid, prior);
    for (std::size_t g = 0; g < grid.size(); ++g) EXPECT_NEAR(p1[g], p2[g], 1e-12);
}

TEST(Model, PosteriorMatchesProductOfPoissonPmfs) {
    Eigen::VectorXd x(2), beta(2), alpha(2);
    x << 3, 1;
    beta << 0.4, -0.7;
    alpha << 0.2, 0.5;
    const std::vector<double> grid{0, 1, 2}, prior{0.5, 0.3, 0.2};
    std::vector<double> direct;
    double total = 0;
    for (std::size_t g = 0; g < 3; ++g) {
        double v = prior[g];
        for (int j = 0; j < 2; ++j) {
            const double mu = std::exp(alpha[j] + grid[g] * beta[j]);
            v *= std::pow(mu, x[j]) * std::exp(-mu) / std::tgamma(x[j] + 1);
        }
        direct.push_back(v);
        total += v;
    }
    const auto p = posterior_response_oracle(x, beta, alpha, grid, prior);
    for (std::size_t g = 0; g < 3; ++g) EXPECT_NEAR(p[g], direct[g] / total, 1e-14);
}

TEST(Model, StatePackingAndJson) {
    const Instance inst = random_instance(9, true);
    FitState copy = FitState::zeros(inst.inputs.num_replicates(), inst.inputs.num_leaves(),
                                    inst.inputs.num_coefficients());
    copy.omega = inst.state.omega;
    copy.unpack(inst.state.pack());
    EXPECT_EQ(copy, inst.state);
    EXPECT_EQ(state_from_json(state_to_json(inst.state)), inst.state);
    EXPECT_THROW(state_from_json("{}"), ParseError);
}

TEST(Model, ValidationErrors) {
    ModelInputs in = single_cell(1, 1);
    in.t[0] = 0.0;
    EXPECT_THROW(in.validate(), ArgumentError);
    ModelInputs tree_in;
    tree_in.tree = TreeShape(2);
    tree_in.X = Eigen::MatrixXd::Zero(2, 3);
    tree_in.y = Eigen::VectorXd::Zero(2);
    tree_in.t = Eigen::VectorXd::Ones(2);
    EXPECT_THROW(tree_in.validate(), ArgumentError);
}

TEST(Model, PenaltyFormsAgree) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const Instance inst = random_instance(seed, seed % 2 == 0);
        const PriorSpec prior = named_prior(seed % 2 == 0 ? "fgdp1" : "pfl-s");
        Eigen::VectorXd at = inst.state.gamma;
        const EStepWeights weights = estep_weights(at, prior);
        const auto lambda = assemble_precision(weights, prior, inst.inputs.num_coefficients());
        const SurrogateObjective by_matrix(inst.inputs, lambda, inst.state.omega);
        const SurrogateObjective by_pairs(inst.inputs, weights, inst.state.omega);
        Eigen::VectorXd g1, g2;
        const double v1 = by_matrix(inst.state.pack(), g1), v2 = by_pairs(inst.state.pack(), g2);
        EXPECT_NEAR(v1, v2, 1e-9 * std::max(1.0, std::abs(v1)));
        EXPECT_LE((g1 - g2).lpNorm<Eigen::Infinity>(), 1e-9 * std::max(1.0, g1.lpNorm<Eigen::Infinity>()));
    }
}

TEST(Model, PairFormAvoidsCancellation) {
    // Fused siblings at a large common value with a floored pair weight.
    ModelInputs in;
    in.tree = TreeShape(1);
    in.X = Eigen::MatrixXd::Ones(2, 2);
    in.y = Eigen::Vector2d(0.0, 1.0);
    in.t = Eigen::Vector2d(1.0, 1.0);
    FitState s = FitState::zeros(2, 2, 3);
    s.gamma = Eigen::Vector3d(0.0, 1.0, 1.0 + 1e-10);
    EStepWeights w;
    w.rho = Eigen::Vector3d::Zero();
    w.upsilon = Eigen::VectorXd::Constant(1, 2e10);
    w.pairs = {{1, 2}};
    const SurrogateObjective with_penalty(in, w, s.omega);
    EStepWeights none = w;
    none.upsilon.setZero();
    const SurrogateObjective without(in, none, s.omega);
    // The penalty is 0.5 * 2e10 * 1e-20 = 1e-10.
    EXPECT_NEAR(without.value(s.pack()) - with_penalty.value(s.pack()), 1e-10, 1e-12);
}
