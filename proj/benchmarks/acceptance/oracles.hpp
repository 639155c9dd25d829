#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spinlets/model.hpp"
#include "spinlets/priors.hpp"

namespace spinlets::oracle {

/// Gauss-Hermite nodes and weights for the weight exp(-x^2). Nodes come from the
/// Jacobi matrix and are polished by Newton; weights from the Christoffel function.
struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> log_weights;
};

HermiteRule gauss_hermite(int order);

/// ln p(X | y, gamma, omega) with every random effect integrated out numerically.
/// The intercept and column effects are integrated on a tensor grid whitened by the
/// Laplace covariance; each row effect is integrated conditionally with its own
/// adaptive rule. Intended for a handful of replicates and leaves.
double log_marginal_likelihood(const ModelInputs& inputs, const Eigen::VectorXd& gamma,
                               const Eigen::Vector3d& omega, int order = 48);

/// Exact neighbours by sorting all distances; ties broken by lower index.
std::vector<std::vector<std::pair<double, std::int32_t>>> brute_force_knn(
    std::span<const std::array<double, 4>> points, std::size_t k);

/// sum_l rho_l c_l^2 + sum over penalized pairs of upsilon (c_u - c_w)^2, with the
/// pair structure and the weights recomputed from their definitions.
/// `weights_at` supplies the coefficients the weights are evaluated at.
double explicit_quadratic_form(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& weights_at,
                               const PriorSpec& prior);

}  // namespace spinlets::oracle
