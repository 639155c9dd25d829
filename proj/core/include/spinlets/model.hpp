#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "spinlets/partition_tree.hpp"
#include "spinlets/priors.hpp"
#include "spinlets/tree_shape.hpp"

namespace spinlets {

/// Observed data of the inverse-regression model. Without a tree the design is the
/// identity and the coefficients are the leaf effects themselves.
struct ModelInputs {
    Eigen::MatrixXd X;  // n x m counts
    Eigen::VectorXd y;  // responses
    Eigen::VectorXd t;  // exposures
    std::optional<TreeShape> tree;

    Eigen::Index num_replicates() const { return X.rows(); }
    Eigen::Index num_leaves() const { return X.cols(); }
    Eigen::Index num_coefficients() const;

    /// D * coeffs.
    Eigen::VectorXd leaf_effects(const Eigen::VectorXd& coeffs) const;
    /// D^T * v.
    Eigen::VectorXd aggregate(const Eigen::VectorXd& leaf_values) const;
    DesignMatrix design() const;

    /// Sum over cells of x ln t - ln x!, the part of the bound free of parameters.
    double data_constant() const;

    /// Throws ArgumentError on inconsistent shapes or non-positive exposures.
    void validate() const;

    static ModelInputs from_counts(const Eigen::MatrixXi& X, const SpinDataset& data,
                                   std::optional<TreeShape> tree);
};

/// Variational and model parameters. The corner entries b_1, c_1 are fixed at zero
/// and not stored: zeta_b and k_b hold replicates 2..n, zeta_c and k_c leaves 2..m.
struct FitState {
    Eigen::VectorXd gamma;
    double zeta_a = 0.0;
    Eigen::VectorXd zeta_b;
    Eigen::VectorXd zeta_c;
    double k_a = 0.0;
    Eigen::VectorXd k_b;
    Eigen::VectorXd k_c;
    Eigen::Vector3d omega{1.0, 1.0, 1.0};

    static FitState zeros(Eigen::Index n, Eigen::Index m, Eigen::Index p);

    Eigen::Index packed_size() const;
    /// [gamma | zeta_a | zeta_b | zeta_c | k_a | k_b | k_c]
    Eigen::VectorXd pack() const;
    void unpack(const Eigen::VectorXd& packed);

    void validate(const ModelInputs& inputs) const;

    friend bool operator==(const FitState& a, const FitState& b);
};

/// Expected counts t_i exp(zeta sums + half kappa sums + y_i beta_j) with the exponent
/// clamped at the overflow guard.
struct ExpectedCounts {
    Eigen::MatrixXd value;
    /// Entries whose exponent was clamped (their derivative is zero).
    std::vector<std::uint8_t> clamped;
    std::size_t num_clamped = 0;
};

inline constexpr double kExponentCap = 30.0;

ExpectedCounts expected_counts(const ModelInputs& inputs, const FitState& state);

/// zeta_a + zeta_b_i + zeta_c_j + y_i (d_j^T gamma) with 0-based (i, j).
double linear_predictor(const ModelInputs& inputs, const FitState& state, Eigen::Index i, Eigen::Index j);

/// Sum over cells of x (ln t + eta) - t exp(eta) - ln x! at exact effects.
double complete_log_likelihood(const ModelInputs& inputs, double a, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& c, const Eigen::VectorXd& coeffs);

/// Gaussian variational lower bound on ln p(X | y, gamma, omega), data constants included.
double gva_lower_bound(const ModelInputs& inputs, const FitState& state);

struct ZetaGradient {
    double a = 0.0;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
};

Eigen::VectorXd grad_gamma(const ModelInputs& inputs, const FitState& state,
                           const Eigen::SparseMatrix<double>& precision);
ZetaGradient grad_zeta(const ModelInputs& inputs, const FitState& state);
ZetaGradient grad_k(const ModelInputs& inputs, const FitState& state);

/// Q = bound - gamma^T P gamma / 2 over packed parameters, omega held fixed.
/// Data constants are left out of the value; gradients are unaffected.
class SurrogateObjective {
  public:
    SurrogateObjective(const ModelInputs& inputs, const Eigen::SparseMatrix<double>& precision,
                       const Eigen::Vector3d& omega);
    /// Same objective with the penalty summed over coefficients and pair differences,
    /// which stays accurate when large pair weights multiply nearly equal coefficients.
    SurrogateObjective(const ModelInputs& inputs, const EStepWeights& weights, const Eigen::Vector3d& omega);

    double operator()(const Eigen::VectorXd& packed, Eigen::VectorXd& gradient) const;
    double value(const Eigen::VectorXd& packed) const;

    /// Clamped cells seen by the most recent evaluation.
    std::size_t last_clamped() const { return last_clamped_; }

  private:
    const ModelInputs& inputs_;
    const Eigen::SparseMatrix<double>* precision_ = nullptr;
    const EStepWeights* weights_ = nullptr;
    Eigen::Vector3d omega_;
    mutable std::size_t last_clamped_ = 0;
};

/// Positive-definite curvature approximation of -Q used to precondition the optimizer.
class CurvaturePreconditioner {
  public:
    CurvaturePreconditioner(const ModelInputs& inputs, const FitState& state,
                            const Eigen::SparseMatrix<double>& precision);
    ~CurvaturePreconditioner();
    CurvaturePreconditioner(CurvaturePreconditioner&&) noexcept;
    CurvaturePreconditioner& operator=(CurvaturePreconditioner&&) noexcept;

    /// Approximately solves H v = r.
    Eigen::VectorXd solve(const Eigen::VectorXd& r) const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// beta^T x.
double sdr_score(std::span<const double> x, std::span<const double> beta);
double sdr_score(const Eigen::VectorXd& x, const Eigen::VectorXd& beta);

/// Posterior of a response on a grid when x_j ~ Poisson(exp(intercept_j + y beta_j)).
std::vector<double> posterior_response_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& beta,
                                              const Eigen::VectorXd& intercepts,
                                              const std::vector<double>& y_grid,
                                              const std::vector<double>& y_prior);

std::string state_to_json(const FitState& state);
FitState state_from_json(const std::string& text);

}  // namespace spinlets
