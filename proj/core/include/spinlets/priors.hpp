#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "spinlets/tree_shape.hpp"

namespace spinlets {

enum class PriorKind { gdp_beta, flsa_beta, pfl_beta, fgdp_gamma };

std::string to_string(PriorKind kind);
PriorKind parse_prior_kind(const std::string& text);

/// Generalized double Pareto penalty on coefficients and on pairwise differences.
struct PriorSpec {
    PriorKind kind = PriorKind::fgdp_gamma;
    double alpha1 = 1.0;
    double eta1 = 1.0;
    double alpha2 = 1.0;
    double eta2 = 1.0;
    double theta = 0.5;
    std::string name;

    bool uses_tree() const { return kind == PriorKind::fgdp_gamma; }
    bool has_pairs() const { return kind != PriorKind::gdp_beta; }
    std::optional<double> xi1() const;
    std::optional<double> xi2() const;

    /// Throws ArgumentError unless alpha >= -1, eta >= 0 and theta in [0, 1].
    void validate() const;

    friend bool operator==(const PriorSpec&, const PriorSpec&) = default;
};

/// The named variants: gdp0, gdp, flsa, pfl-s, pfl-f, fgdp-s, fgdp-f, fgdp, fgdp-nj, fgdp1..fgdp6.
PriorSpec named_prior(const std::string& name);
std::vector<std::string> named_prior_list();

/// `kind,a1,e1,a2,e2[,theta]`.
PriorSpec parse_prior_params(const std::string& text);

/// Index pairs (u, w) penalized through their difference.
std::vector<std::pair<Eigen::Index, Eigen::Index>> penalty_pairs(const PriorSpec& prior, Eigen::Index size);

inline constexpr double kCoefficientFloor = 1e-8;

struct EStepWeights {
    Eigen::VectorXd rho;      // one per coefficient
    Eigen::VectorXd upsilon;  // one per penalty pair
    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
};

/// Conditional expectations (alpha + 1) / (|c| (|c| + eta)) with |c| floored.
EStepWeights estep_weights(const Eigen::VectorXd& coeffs, const PriorSpec& prior);

/// Lambda = diag(rho) + sum over pairs of upsilon (e_u - e_w)(e_u - e_w)^T.
Eigen::SparseMatrix<double> assemble_precision(const EStepWeights& weights, const PriorSpec& prior,
                                               Eigen::Index size);

/// Log prior density. Requires positive alpha and eta in every active component.
double log_prior_density(const Eigen::VectorXd& coeffs, const PriorSpec& prior);

/// Penalty whose quadratic minorizer at the current coefficients is the E-step surrogate:
/// -(alpha + 1) ln(eta + u) summed over the prior's terms, continued quadratically below
/// the coefficient floor. Adding it to the variational bound gives the EM objective.
double surrogate_penalty(const Eigen::VectorXd& coeffs, const PriorSpec& prior);

/// E[rho] by quadrature over lambda ~ Gamma(alpha + 1, |c| + eta) of E[rho | lambda] = lambda / |c|.
double estep_quadrature_oracle(double coeff, double alpha, double eta);

}  // namespace spinlets
