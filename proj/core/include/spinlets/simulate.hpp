#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spinlets/em.hpp"
#include "spinlets/priors.hpp"
#include "spinlets/tree_shape.hpp"

namespace spinlets {

enum class Scenario { a, b, c, d };

Scenario parse_scenario(const std::string& text);
std::string to_string(Scenario s);

struct SimConfig {
    Scenario scenario = Scenario::a;
    int n = 200;
    int h = 5;
    std::uint64_t seed = 1;
    int replications = 1;

    void validate() const;
};

/// The multiscale signal of a scenario over 32 leaves.
Eigen::VectorXd true_beta(Scenario s);

struct SimData {
    ModelInputs inputs;  // tree set to the complete tree of height h
    Eigen::VectorXd beta_star;
    double a = 0.0;
    Eigen::VectorXd b;  // length n, b[0] = 0
    Eigen::VectorXd c;  // length m, c[0] = 0
};

/// Draws t ~ Ga(2, 1), y ~ Poisson(0.5), a, b_i, c_j ~ N(0, variance 0.1) and Poisson counts.
SimData generate(const SimConfig& config);

inline constexpr double kDefaultThreshold = 0.005;

double f1_selection(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star,
                    double threshold = kDefaultThreshold);
double f1_fusion(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const TreeShape& tree,
                 double threshold = kDefaultThreshold);
double rmse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star);

struct MetricsRow {
    double f1_fusion = 0.0;
    double f1_selection = 0.0;
    double rmse = 0.0;
    int em_iterations = 0;
};

struct StudyRow {
    Scenario scenario = Scenario::a;
    int n = 0;
    std::string prior;
    int rep = 0;
    std::optional<MetricsRow> metrics;  // empty when the fit failed
    bool converged = false;
    double seconds = 0.0;
    std::string error;
    double initial_objective = 0.0;
    std::vector<TraceEntry> trace;
    Eigen::VectorXd beta_hat;
};

struct StudyOptions {
    std::vector<Scenario> scenarios{Scenario::a};
    std::vector<int> sizes{200};
    std::vector<PriorSpec> priors;
    int replications = 1;
    std::uint64_t seed = 1;
    int h = 5;
    EmConfig em;
};

/// Replication r of every scenario uses data seed `seed + r`; all priors share the data
/// and the initialization seed of a replication.
std::vector<StudyRow> run_study(const StudyOptions& options,
                                const std::function<void(const StudyRow&)>& on_row = {});

/// Columns config,n,prior,rep,f1_fusion,f1_selection,rmse,em_iters,seconds.
void write_study_csv(const std::vector<StudyRow>& rows, std::ostream& out);

struct MultiStartResult {
    std::vector<FitResult> fits;
    std::vector<double> beta_distances;   // all pairs a < b
    std::vector<double> gamma_distances;  // all pairs a < b
};

/// Repeated fits from independent random initializations, start s seeded from (seed, s).
MultiStartResult multi_start(const ModelInputs& inputs, const PriorSpec& prior, EmConfig config, int starts,
                             std::uint64_t seed);

double median(std::vector<double> values);

}  // namespace spinlets
