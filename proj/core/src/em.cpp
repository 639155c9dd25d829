#include "spinlets/em.hpp"

#include <algorithm>
#include <cmath>

#include "json_io.hpp"
#include "spinlets/lbfgs.hpp"
#include "spinlets/random.hpp"

namespace spinlets {

void EmConfig::validate() const {
    if (max_em_iters < 1 || max_inner_iters < 1 || inner_iters_per_em < 1 || lbfgs_memory < 1)
        throw ArgumentError("EM iteration limits and memory must be positive");
    if (!(conv_tol > 0.0)) throw ArgumentError("convergence tolerance must be positive");
    if (!(init_scale >= 0.0)) throw ArgumentError("initialization scale must be non-negative");
}

FitState initial_state(const ModelInputs& inputs, const EmConfig& config) {
    FitState s = FitState::zeros(inputs.num_replicates(), inputs.num_leaves(), inputs.num_coefficients());
    Rng rng = make_rng(config.seed, "em-init");
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index l = 0; l < s.gamma.size(); ++l) s.gamma[l] = config.init_scale * normal(rng);
    const double k0 = std::log(0.01);
    s.k_a = k0;
    s.k_b.setConstant(k0);
    s.k_c.setConstant(k0);
    s.omega.setOnes();
    return s;
}

Eigen::Vector3d omega_fixed_point(const FitState& state) {
    constexpr double floor = 1e-8;
    Eigen::Vector3d w = state.omega;
    w[0] = state.zeta_a * state.zeta_a + std::exp(state.k_a);
    if (state.zeta_b.size() > 0)
        w[1] = (state.zeta_b.squaredNorm() + state.k_b.array().exp().sum()) / static_cast<double>(state.zeta_b.size());
    if (state.zeta_c.size() > 0)
        w[2] = (state.zeta_c.squaredNorm() + state.k_c.array().exp().sum()) / static_cast<double>(state.zeta_c.size());
    return w.cwiseMax(floor);
}

double em_objective(const ModelInputs& inputs, const FitState& state, const PriorSpec& prior) {
    return gva_lower_bound(inputs, state) + surrogate_penalty(state.gamma, prior);
}

FitResult fit(const ModelInputs& inputs, const PriorSpec& prior, const EmConfig& config, const FitState* init) {
    inputs.validate();
    prior.validate();
    config.validate();
    if (prior.uses_tree() != inputs.tree.has_value())
        throw ArgumentError(prior.uses_tree() ? "prior '" + prior.name + "' needs a partition tree"
                                              : "prior '" + prior.name + "' acts on leaf effects; drop the tree");
    if (inputs.num_replicates() < 2 || inputs.num_leaves() < 2)
        throw ArgumentError("fitting needs at least two replicates and two leaves");

    FitResult result;
    result.prior = prior;
    result.tree_height = inputs.tree ? inputs.tree->height() : 0;
    result.state = init ? *init : initial_state(inputs, config);
    result.state.validate(inputs);
    const auto p = inputs.num_coefficients();

    Eigen::VectorXd beta = inputs.leaf_effects(result.state.gamma);
    result.initial_objective = em_objective(inputs, result.state, prior);
    int budget_left = config.max_inner_iters;

    for (int it = 0; it < config.max_em_iters; ++it) {
        const int budget = std::min(config.inner_iters_per_em, budget_left);
        if (budget <= 0) {
            result.warnings.push_back("quasi-Newton budget exhausted before convergence");
            break;
        }
        const EStepWeights weights = estep_weights(result.state.gamma, prior);
        const Eigen::SparseMatrix<double> lambda = assemble_precision(weights, prior, p);
        SurrogateObjective surrogate(inputs, weights, result.state.omega);

        LbfgsOptions options;
        options.memory = config.lbfgs_memory;
        options.max_iters = budget;
        std::optional<CurvaturePreconditioner> preconditioner;
        if (config.precondition) {
            preconditioner.emplace(inputs, result.state, lambda);
            options.precondition = [&](const Eigen::VectorXd& r) { return preconditioner->solve(r); };
        }
        LbfgsResult inner;
        try {
            inner = lbfgs_maximize([&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return surrogate(x, g); },
                                   result.state.pack(), options);
        } catch (const Error& e) {
            throw FitError(std::string("optimization failed: ") + e.what(), result.trace);
        }
        budget_left -= inner.iterations;
        result.inner_iterations += inner.iterations;
        result.state.unpack(inner.x);
        result.clamped_cells += surrogate.last_clamped();
        if (config.update_omega) result.state.omega = omega_fixed_point(result.state);

        const Eigen::VectorXd new_beta = inputs.leaf_effects(result.state.gamma);
        TraceEntry entry;
        entry.delta_beta = (new_beta - beta).norm();
        entry.inner_iterations = inner.iterations;
        entry.objective = em_objective(inputs, result.state, prior);
        if (!std::isfinite(entry.objective)) {
            result.trace.push_back(entry);
            throw FitError("EM objective is not finite", result.trace);
        }
        result.trace.push_back(entry);
        beta = new_beta;
        result.iterations = it + 1;
        if (entry.delta_beta < config.conv_tol) {
            result.converged = true;
            break;
        }
    }
    if (result.clamped_cells > 0)
        result.warnings.push_back("expected-count exponent clamped in " + std::to_string(result.clamped_cells) +
                                  " cell evaluations");
    result.beta_hat = beta;
    return result;
}

namespace {

nlohmann::json prior_json(const PriorSpec& p) {
    return {{"name", p.name},     {"kind", to_string(p.kind)}, {"alpha1", p.alpha1}, {"eta1", p.eta1},
            {"alpha2", p.alpha2}, {"eta2", p.eta2},            {"theta", p.theta}};
}

PriorSpec prior_from(const nlohmann::json& j) {
    PriorSpec p;
    p.name = j.at("name").get<std::string>();
    p.kind = parse_prior_kind(j.at("kind").get<std::string>());
    p.alpha1 = j.at("alpha1").get<double>();
    p.eta1 = j.at("eta1").get<double>();
    p.alpha2 = j.at("alpha2").get<double>();
    p.eta2 = j.at("eta2").get<double>();
    p.theta = j.at("theta").get<double>();
    return p;
}

}  // namespace

std::string fit_result_to_json(const FitResult& r) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& t : r.trace)
        trace.push_back({{"objective", t.objective}, {"delta_beta", t.delta_beta}, {"inner_iterations", t.inner_iterations}});
    nlohmann::json doc = {{"prior", prior_json(r.prior)},
                          {"tree_height", r.tree_height},
                          {"converged", r.converged},
                          {"iterations", r.iterations},
                          {"inner_iterations", r.inner_iterations},
                          {"initial_objective", r.initial_objective},
                          {"beta_hat", detail::vector_json(r.beta_hat)},
                          {"trace", trace},
                          {"clamped_cells", r.clamped_cells},
                          {"warnings", r.warnings},
                          {"state", detail::state_json(r.state)}};
    return doc.dump(1);
}

FitResult fit_result_from_json(const std::string& text) {
    return detail::parse_json_section("model JSON", [&] {
        const auto doc = nlohmann::json::parse(text);
        FitResult r;
        r.prior = prior_from(doc.at("prior"));
        r.tree_height = doc.at("tree_height").get<int>();
        r.converged = doc.at("converged").get<bool>();
        r.iterations = doc.at("iterations").get<int>();
        r.inner_iterations = doc.value("inner_iterations", 0);
        r.initial_objective = doc.value("initial_objective", 0.0);
        r.beta_hat = detail::vector_from_json(doc.at("beta_hat"));
        for (const auto& t : doc.at("trace"))
            r.trace.push_back({t.at("objective").get<double>(), t.at("delta_beta").get<double>(),
                               t.value("inner_iterations", 0)});
        r.clamped_cells = doc.value("clamped_cells", std::size_t{0});
        r.warnings = doc.value("warnings", std::vector<std::string>{});
        r.state = detail::state_from(doc.at("state"));
        return r;
    });
}

}  // namespace spinlets
