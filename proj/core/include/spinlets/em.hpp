#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spinlets/error.hpp"
#include "spinlets/model.hpp"
#include "spinlets/priors.hpp"

namespace spinlets {

struct EmConfig {
    int max_em_iters = 50;
    /// Total quasi-Newton iterations over the whole fit.
    int max_inner_iters = 1000;
    /// Quasi-Newton iterations allowed within one EM iteration.
    int inner_iters_per_em = 50;
    int lbfgs_memory = 100;
    double conv_tol = 1e-6;
    std::uint64_t seed = 0;
    double init_scale = 0.1;
    bool update_omega = true;
    bool precondition = true;

    void validate() const;
};

struct TraceEntry {
    double objective = 0.0;
    double delta_beta = 0.0;
    int inner_iterations = 0;
};

struct FitResult {
    FitState state;
    Eigen::VectorXd beta_hat;
    PriorSpec prior;
    int tree_height = 0;  // 0 for leaf-space fits
    double initial_objective = 0.0;
    std::vector<TraceEntry> trace;
    bool converged = false;
    int iterations = 0;
    int inner_iterations = 0;
    std::size_t clamped_cells = 0;
    std::vector<std::string> warnings;
};

/// Raised when the objective becomes non-finite; carries the trace so far.
class FitError : public NumericalError {
  public:
    FitError(const std::string& what, std::vector<TraceEntry> trace)
        : NumericalError(what), trace_(std::move(trace)) {}
    const std::vector<TraceEntry>& trace() const { return trace_; }

  private:
    std::vector<TraceEntry> trace_;
};

/// gamma ~ N(0, init_scale^2) from the seed, zeta = 0, k = ln 0.01, omega = 1.
FitState initial_state(const ModelInputs& inputs, const EmConfig& config);

/// Closed-form maximizer of the bound in omega, floored at 1e-8.
Eigen::Vector3d omega_fixed_point(const FitState& state);

/// The quantity every EM iteration increases: the variational bound plus the penalty
/// whose minorizer the E-step builds.
double em_objective(const ModelInputs& inputs, const FitState& state, const PriorSpec& prior);

/// Variational EM: E-step weights, joint quasi-Newton ascent over (gamma, zeta, k), omega update.
FitResult fit(const ModelInputs& inputs, const PriorSpec& prior, const EmConfig& config,
              const FitState* init = nullptr);

std::string fit_result_to_json(const FitResult& result);
FitResult fit_result_from_json(const std::string& text);

}  // namespace spinlets
