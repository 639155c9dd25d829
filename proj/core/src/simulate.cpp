#include "spinlets/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include "spinlets/error.hpp"
#include "spinlets/parallel.hpp"
#include "spinlets/random.hpp"

namespace spinlets {

Scenario parse_scenario(const std::string& text) {
    if (text == "a") return Scenario::a;
    if (text == "b") return Scenario::b;
    if (text == "c") return Scenario::c;
    if (text == "d") return Scenario::d;
    throw ArgumentError("unknown simulation configuration '" + text + "' (expected a, b, c or d)");
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::a: return "a";
        case Scenario::b: return "b";
        case Scenario::c: return "c";
        case Scenario::d: return "d";
    }
    throw InternalError("unknown scenario");
}

void SimConfig::validate() const {
    if (n < 2) throw ArgumentError("simulation needs n >= 2");
    if (h != 5) throw ArgumentError("the simulation signals are defined on 32 leaves (h = 5)");
    if (replications < 1) throw ArgumentError("replications must be positive");
}

Eigen::VectorXd true_beta(Scenario s) {
    std::vector<double> v;
    const auto run = [&](double value, int count) { v.insert(v.end(), static_cast<std::size_t>(count), value); };
    switch (s) {
        case Scenario::a:
            v = {1, 1, 0, 0, 1, 1, 0, 0, 1, 1, -1, -1, 0, 0, -1, -1,
                 1, 1, 0, 0, 1, 1, 0, 0, -1, -1, 1, 1, 0, 0, 1, 1};
            break;
        case Scenario::b:
            run(1, 4), run(0, 4), run(-1, 4), run(0, 4), run(1, 4), run(-1, 4), run(0, 4), run(1, 4);
            break;
        case Scenario::c:
            run(1, 8), run(0, 8), run(-1, 8), run(0, 8);
            break;
        case Scenario::d:
            v = {1, 1, 0, 0};
            run(-1, 4), run(0, 8), run(1, 16);
            break;
    }
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

SimData generate(const SimConfig& config) {
    config.validate();
    const Eigen::Index n = config.n;
    const TreeShape tree(config.h);
    const auto m = static_cast<Eigen::Index>(tree.num_leaves());
    SimData d;
    d.beta_star = true_beta(config.scenario);

    Rng rng = make_rng(config.seed, "simulate");
    std::gamma_distribution<double> exposure(2.0, 1.0);
    std::poisson_distribution<int> response(0.5);
    std::normal_distribution<double> effect(0.0, std::sqrt(0.1));

    d.inputs.t.resize(n);
    d.inputs.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) d.inputs.t[i] = exposure(rng);
    for (Eigen::Index i = 0; i < n; ++i) d.inputs.y[i] = response(rng);
    d.a = effect(rng);
    d.b = Eigen::VectorXd::Zero(n);
    d.c = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 1; i < n; ++i) d.b[i] = effect(rng);
    for (Eigen::Index j = 1; j < m; ++j) d.c[j] = effect(rng);

    d.inputs.X.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const double mu = d.inputs.t[i] * std::exp(d.a + d.b[i] + d.c[j] + d.inputs.y[i] * d.beta_star[j]);
            std::poisson_distribution<long> count(mu);
            d.inputs.X(i, j) = static_cast<double>(count(rng));
        }
    d.inputs.tree = tree;
    return d;
}

namespace {

double f1_from(const std::vector<bool>& truth, const std::vector<bool>& predicted) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
        if (predicted[k] && truth[k]) ++tp;
        else if (predicted[k]) ++fp;
        else if (truth[k]) ++fn;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

void check_lengths(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw ArgumentError("coefficient vectors differ in length");
}

}  // namespace

double f1_selection(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, double threshold) {
    check_lengths(beta_hat, beta_star);
    std::vector<bool> truth, predicted;
    for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
        truth.push_back(beta_star[j] != 0.0);
        predicted.push_back(std::abs(beta_hat[j]) > threshold);
    }
    return f1_from(truth, predicted);
}

double f1_fusion(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const TreeShape& tree,
                 double threshold) {
    check_lengths(beta_hat, beta_star);
    if (static_cast<std::size_t>(beta_hat.size()) != tree.num_leaves())
        throw ArgumentError("coefficient vectors do not match the tree's leaves");
    std::vector<bool> truth, predicted;
    for (std::size_t c = 0; c < tree.num_internal(); ++c) {
        const auto [first, last] = tree.leaf_range(tree.node_at(c));
        const auto len = last - first + 1;
        const auto star = beta_star.segment(first - 1, len);
        const auto hat = beta_hat.segment(first - 1, len);
        truth.push_back(star.maxCoeff() == star.minCoeff());
        predicted.push_back(hat.maxCoeff() - hat.minCoeff() <= threshold);
    }
    return f1_from(truth, predicted);
}

double rmse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star) {
    check_lengths(beta_hat, beta_star);
    const double scale = beta_star.norm();
    if (!(scale > 0.0)) throw ArgumentError("relative error needs a non-zero true signal");
    return (beta_hat - beta_star).norm() / scale;
}

std::vector<StudyRow> run_study(const StudyOptions& options, const std::function<void(const StudyRow&)>& on_row) {
    if (options.priors.empty()) throw ArgumentError("study needs at least one prior");
    if (options.replications < 1) throw ArgumentError("replications must be positive");
    struct Job {
        Scenario scenario;
        int n;
        int rep;
    };
    std::vector<Job> jobs;
    for (auto s : options.scenarios)
        for (int n : options.sizes)
            for (int r = 0; r < options.replications; ++r) jobs.push_back({s, n, r});
    for (const auto& p : options.priors) p.validate();

    const std::size_t per_job = options.priors.size();
    std::vector<StudyRow> rows(jobs.size() * per_job);
    parallel_for(jobs.size(), [&](std::size_t k) {
        const Job& job = jobs[k];
        SimConfig cfg;
        cfg.scenario = job.scenario;
        cfg.n = job.n;
        cfg.h = options.h;
        cfg.seed = options.seed + static_cast<std::uint64_t>(job.rep);
        const SimData data = generate(cfg);
        for (std::size_t q = 0; q < per_job; ++q) {
            const PriorSpec& prior = options.priors[q];
            StudyRow& row = rows[k * per_job + q];
            row.scenario = job.scenario;
            row.n = job.n;
            row.prior = prior.name;
            row.rep = job.rep + 1;
            ModelInputs inputs = data.inputs;
            if (!prior.uses_tree()) inputs.tree.reset();
            EmConfig em = options.em;
            em.seed = cfg.seed;
            const auto start = std::chrono::steady_clock::now();
            try {
                const FitResult result = fit(inputs, prior, em);
                MetricsRow metrics;
                metrics.f1_fusion = f1_fusion(result.beta_hat, data.beta_star, *data.inputs.tree);
                metrics.f1_selection = f1_selection(result.beta_hat, data.beta_star);
                metrics.rmse = rmse(result.beta_hat, data.beta_star);
                metrics.em_iterations = result.iterations;
                row.metrics = metrics;
                row.converged = result.converged;
                row.initial_objective = result.initial_objective;
                row.trace = result.trace;
                row.beta_hat = result.beta_hat;
            } catch (const FitError& e) {
                row.error = e.what();
                row.trace = e.trace();
            } catch (const Error& e) {
                row.error = e.what();
            }
            row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (on_row) on_row(row);
        }
    });
    return rows;
}

void write_study_csv(const std::vector<StudyRow>& rows, std::ostream& out) {
    out << "config,n,prior,rep,f1_fusion,f1_selection,rmse,em_iters,seconds\n";
    const auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out << to_string(r.scenario) << ',' << r.n << ',' << r.prior << ',' << r.rep << ',';
        if (r.metrics)
            out << num(r.metrics->f1_fusion) << ',' << num(r.metrics->f1_selection) << ',' << num(r.metrics->rmse)
                << ',' << r.metrics->em_iterations;
        else
            out << ",,,";
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
        out << ',' << secs << '\n';
    }
}

MultiStartResult multi_start(const ModelInputs& inputs, const PriorSpec& prior, EmConfig config, int starts,
                             std::uint64_t seed) {
    if (starts < 2) throw ArgumentError("multi-start needs at least two starts");
    MultiStartResult out;
    out.fits.resize(static_cast<std::size_t>(starts));
    parallel_for(out.fits.size(), [&](std::size_t s) {
        EmConfig c = config;
        c.seed = derive_seed(seed, "multi-start", s);
        out.fits[s] = fit(inputs, prior, c);
    });
    for (std::size_t a = 0; a < out.fits.size(); ++a)
        for (std::size_t b = a + 1; b < out.fits.size(); ++b) {
            out.beta_distances.push_back((out.fits[a].beta_hat - out.fits[b].beta_hat).norm());
            out.gamma_distances.push_back((out.fits[a].state.gamma - out.fits[b].state.gamma).norm());
        }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ArgumentError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t k = values.size() / 2;
    return values.size() % 2 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

}  // namespace spinlets
