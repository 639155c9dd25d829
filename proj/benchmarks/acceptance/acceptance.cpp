#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "spinlets/em.hpp"
#include "spinlets/error.hpp"
#include "spinlets/ingest.hpp"
#include "spinlets/knn_graph.hpp"
#include "spinlets/lbfgs.hpp"
#include "spinlets/model.hpp"
#include "spinlets/partition_tree.hpp"
#include "spinlets/priors.hpp"
#include "spinlets/random.hpp"
#include "spinlets/simulate.hpp"
#include "spinlets/tree_shape.hpp"

namespace spinlets::acceptance {

std::string to_string(Status status) {
    switch (status) {
        case Status::pass: return "PASS";
        case Status::fail: return "FAIL";
        case Status::skipped: return "SKIP";
    }
    return "?";
}

std::size_t BenchReport::passed() const {
    return static_cast<std::size_t>(
        std::count_if(criteria.begin(), criteria.end(), [](const auto& c) { return c.status == Status::pass; }));
}

std::size_t BenchReport::failed() const {
    return static_cast<std::size_t>(
        std::count_if(criteria.begin(), criteria.end(), [](const auto& c) { return c.status == Status::fail; }));
}

const std::string& reference_design_text() {
    static const std::string text =
        "1 1 0 1 0 0 0 1 0 0 0 0 0 0 0\n"
        "1 1 0 1 0 0 0 0 1 0 0 0 0 0 0\n"
        "1 1 0 0 1 0 0 0 0 1 0 0 0 0 0\n"
        "1 1 0 0 1 0 0 0 0 0 1 0 0 0 0\n"
        "1 0 1 0 0 1 0 0 0 0 0 1 0 0 0\n"
        "1 0 1 0 0 1 0 0 0 0 0 0 1 0 0\n"
        "1 0 1 0 0 0 1 0 0 0 0 0 0 1 0\n"
        "1 0 1 0 0 0 1 0 0 0 0 0 0 0 1\n";
    return text;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

struct Outcome {
    bool passed = false;
    std::string measured;
    std::string tolerance;
};

// Everything the study-based criteria share.
struct StudyCache {
    std::vector<StudyRow> rows;
    std::optional<MultiStartResult> multi;
    double beta_star_norm_d = 0.0;
    bool study_done = false;
};

std::vector<double> column(const std::vector<StudyRow>& rows, Scenario s, int n, const std::string& prior,
                           double MetricsRow::*field) {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.scenario == s && r.n == n && r.prior == prior && r.metrics) out.push_back((*r.metrics).*field);
    return out;
}

std::vector<double> iteration_counts(const std::vector<StudyRow>& rows, Scenario s, int n, const std::string& prior) {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.scenario == s && r.n == n && r.prior == prior && r.metrics) out.push_back(r.metrics->em_iterations);
    return out;
}

double median_or_nan(const std::vector<double>& v) {
    return v.empty() ? std::nan("") : median(v);
}

// ---------------------------------------------------------------------------

Outcome golden_design(const Options& options) {
    std::string golden = reference_design_text();
    if (options.golden_design) {
        std::ifstream in(*options.golden_design, std::ios::binary);
        if (!in) return {false, "cannot read " + options.golden_design->string(), "byte-exact, < 1 ms"};
        std::ostringstream ss;
        ss << in.rdbuf();
        golden = ss.str();
    }
    const auto start = Clock::now();
    const std::string produced = TreeShape(3).design_matrix().to_text();
    const double ms = seconds_since(start) * 1e3;
    const bool equal = produced == golden;
    return {equal && ms < 1.0, fmt("%s, %.4f ms", equal ? "identical" : "differs", ms), "byte-exact, < 1 ms"};
}

Outcome reparameterization(std::uint64_t seed) {
    Rng rng = make_rng(seed, "acceptance-reparam");
    std::uniform_int_distribution<int> height(1, 6);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        PartitionTree tree;
        tree.shape = TreeShape(height(rng));
        const int m = static_cast<int>(tree.num_leaves());
        std::uniform_int_distribution<int> leaf(1, m);
        std::uniform_int_distribution<int> reps(1, 4);
        const int num_pos = 20 + 3 * m;
        SpinDataset data;
        data.replicates.resize(static_cast<std::size_t>(reps(rng)));
        std::uniform_int_distribution<std::size_t> owner(0, data.replicates.size() - 1);
        for (auto& r : data.replicates) r.id = "r" + std::to_string(&r - data.replicates.data());
        for (int q = 0; q < num_pos; ++q) {
            PrimitiveObject po;
            po.replicate_index = owner(rng);
            data.replicates[po.replicate_index].po_indices.push_back(data.pos.size());
            data.pos.push_back(po);
            tree.leaf_assignment.push_back(leaf(rng));
        }
        const CountMatrices counts = aggregate_counts(tree, data);
        Eigen::VectorXd gamma(static_cast<Eigen::Index>(tree.num_nodes()));
        for (auto& g : gamma) g = normal(rng);
        const Eigen::VectorXd beta = tree.shape.expand(gamma);
        for (Eigen::Index i = 0; i < counts.X.rows(); ++i) {
            const double by_leaf = beta.dot(counts.X.row(i).cast<double>().transpose());
            const double by_node = gamma.dot(counts.Z.row(i).cast<double>().transpose());
            worst = std::max(worst, std::abs(by_leaf - by_node));
        }
    }
    return {worst <= 1e-10, fmt("max |diff| %.3g over 1000 cases", worst), "<= 1e-10"};
}

struct RandomInstance {
    ModelInputs inputs;
    FitState state;
    Eigen::SparseMatrix<double> precision;
};

RandomInstance random_instance(Rng& rng, int max_n, int max_m, bool allow_tree) {
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    RandomInstance r;
    const int n = std::uniform_int_distribution<int>(2, max_n)(rng);
    int m = 0;
    if (allow_tree && coin(rng)) {
        int h = 1;
        while ((2 << h) <= max_m && coin(rng)) ++h;
        r.inputs.tree = TreeShape(h);
        m = 1 << h;
    } else {
        m = std::uniform_int_distribution<int>(2, max_m)(rng);
    }
    r.inputs.X.resize(n, m);
    r.inputs.y.resize(n);
    r.inputs.t.resize(n);
    for (int i = 0; i < n; ++i) {
        r.inputs.y[i] = std::poisson_distribution<int>(0.7)(rng);
        r.inputs.t[i] = 0.5 + 2.0 * unit(rng);
        for (int j = 0; j < m; ++j) r.inputs.X(i, j) = std::poisson_distribution<int>(2.0)(rng);
    }
    const Eigen::Index p = r.inputs.num_coefficients();
    r.state = FitState::zeros(n, m, p);
    for (auto& g : r.state.gamma) g = 0.3 * normal(rng);
    r.state.zeta_a = 0.3 * normal(rng);
    for (auto& z : r.state.zeta_b) z = 0.3 * normal(rng);
    for (auto& z : r.state.zeta_c) z = 0.3 * normal(rng);
    r.state.k_a = std::log(0.01) + 3.0 * unit(rng);
    for (auto& k : r.state.k_b) k = std::log(0.01) + 3.0 * unit(rng);
    for (auto& k : r.state.k_c) k = std::log(0.01) + 3.0 * unit(rng);
    for (int c = 0; c < 3; ++c) r.state.omega[c] = 0.5 + 1.5 * unit(rng);

    PriorSpec prior = named_prior(r.inputs.tree ? "fgdp2" : "flsa");
    Eigen::VectorXd at(p);
    for (auto& v : at) v = normal(rng);
    r.precision = assemble_precision(estep_weights(at, prior), prior, p);
    return r;
}

Outcome gradients(std::uint64_t seed) {
    Rng rng = make_rng(seed, "acceptance-gradient");
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const RandomInstance inst = random_instance(rng, 8, 8, true);
        const SurrogateObjective objective(inst.inputs, inst.precision, inst.state.omega);
        const Eigen::VectorXd x = inst.state.pack();
        const Eigen::Index p = inst.inputs.num_coefficients();
        const auto n = inst.inputs.num_replicates(), m = inst.inputs.num_leaves();

        Eigen::VectorXd analytic(x.size());
        const Eigen::VectorXd gg = grad_gamma(inst.inputs, inst.state, inst.precision);
        const ZetaGradient gz = grad_zeta(inst.inputs, inst.state);
        const ZetaGradient gk = grad_k(inst.inputs, inst.state);
        analytic << gg, gz.a, gz.b, gz.c, gk.a, gk.b, gk.c;
        if (analytic.size() != p + 2 * (n + m - 1)) throw InternalError("gradient layout mismatch");

        Eigen::VectorXd numeric(x.size());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double step = 1e-5 * std::max(1.0, std::abs(x[k]));
            Eigen::VectorXd up = x, down = x;
            up[k] += step;
            down[k] -= step;
            numeric[k] = (objective.value(up) - objective.value(down)) / (2.0 * step);
        }
        const double err = (analytic - numeric).lpNorm<Eigen::Infinity>() /
                           std::max(1.0, numeric.lpNorm<Eigen::Infinity>());
        worst = std::max(worst, err);
    }
    return {worst <= 1e-5, fmt("max relative error %.3g over 100 instances", worst), "<= 1e-5, < 30 s"};
}

Outcome estep_grid() {
    const double alphas[] = {0.5, 1, 2, 5, 10};
    double worst = 0.0;
    for (double alpha : alphas)
        for (int e = 0; e < 5; ++e)
            for (int c = 0; c < 5; ++c) {
                const double eta = std::pow(10.0, -3.0 + 0.75 * e);
                const double coef = std::pow(10.0, -2.0 + 0.75 * c);
                const double oracle = estep_quadrature_oracle(coef, alpha, eta);

                PriorSpec single{PriorKind::gdp_beta, alpha, eta, 0.0, 0.0, 0.5, "grid"};
                Eigen::VectorXd v(1);
                v << coef;
                const double rho = estep_weights(v, single).rho[0];

                PriorSpec paired{PriorKind::flsa_beta, alpha, eta, alpha, eta, 0.5, "grid"};
                Eigen::VectorXd w(2);
                w << coef, 0.0;
                const double upsilon = estep_weights(w, paired).upsilon[0];

                worst = std::max({worst, std::abs(rho - oracle) / oracle, std::abs(upsilon - oracle) / oracle});
            }
    return {worst <= 1e-4, fmt("max relative error %.3g over 125 grid points", worst), "<= 1e-4"};
}

Outcome gva_bound(std::uint64_t seed) {
    Rng rng = make_rng(seed, "acceptance-gva");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 50; ++trial) {
        RandomInstance inst;
        ModelInputs& in = inst.inputs;
        const bool tree = trial % 2 == 0;
        if (tree) in.tree = TreeShape(1);
        const Eigen::Index p = tree ? 3 : 2;
        in.X.resize(3, 2);
        in.y.resize(3);
        in.t.resize(3);
        Eigen::VectorXd gamma(p);
        for (auto& g : gamma) g = 0.5 * normal(rng);
        const Eigen::VectorXd beta = tree ? in.tree->expand(gamma) : gamma;
        const double a = 0.3 * normal(rng);
        const double c2 = 0.3 * normal(rng);
        for (int i = 0; i < 3; ++i) {
            in.y[i] = std::poisson_distribution<int>(0.7)(rng);
            in.t[i] = 0.5 + 2.5 * unit(rng);
            const double b = i > 0 ? 0.3 * normal(rng) : 0.0;
            for (int j = 0; j < 2; ++j) {
                const double mu = in.t[i] * std::exp(a + b + (j > 0 ? c2 : 0.0) + in.y[i] * beta[j]);
                in.X(i, j) = std::poisson_distribution<int>(mu)(rng);
            }
        }
        FitState state = FitState::zeros(3, 2, p);
        state.gamma = gamma;
        state.k_a = std::log(0.05);
        state.k_b.setConstant(std::log(0.05));
        state.k_c.setConstant(std::log(0.05));
        for (int c = 0; c < 3; ++c) state.omega[c] = 0.3 + 1.7 * unit(rng);

        // A loose state, then the same state with its variational parameters optimized.
        std::vector<FitState> probes{state};
        {
            Eigen::SparseMatrix<double> zero(p, p);
            const SurrogateObjective objective(in, zero, state.omega);
            Eigen::VectorXd packed = state.pack();
            const auto fixed_gamma = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
                Eigen::VectorXd full = x;
                full.head(p) = gamma;
                const double v = objective(full, g);
                g.head(p).setZero();
                return v;
            };
            LbfgsOptions lo;
            lo.max_iters = 500;
            FitState tight = state;
            tight.unpack(lbfgs_maximize(fixed_gamma, packed, lo).x);
            tight.gamma = gamma;
            probes.push_back(tight);
        }
        const double exact = oracle::log_marginal_likelihood(in, gamma, state.omega);
        for (const auto& s : probes) worst = std::min(worst, exact - gva_lower_bound(in, s));
    }
    return {worst >= -1e-6, fmt("min (log marginal - bound) %.3g over 100 states", worst), "slack >= -1e-6"};
}

Outcome sufficiency(std::uint64_t seed) {
    Rng rng = make_rng(seed, "acceptance-sufficiency");
    std::uniform_int_distribution<int> level(-2, 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int m = 8;
    std::vector<double> grid, prior;
    for (int y = 0; y <= 10; ++y) {
        grid.push_back(y);
        prior.push_back(std::exp(-0.5 + y * std::log(0.5) - std::lgamma(y + 1.0)));
    }
    double worst_pair = 0.0, worst_full = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd beta(m), intercepts(m), x(m);
        for (int j = 0; j < m; ++j) {
            beta[j] = 0.5 * level(rng);
            intercepts[j] = 0.5 * normal(rng);
            x[j] = std::poisson_distribution<int>(3.0)(rng);
        }
        beta[0] = beta[1];
        beta[2] = 0.0;
        // Shuffle counts within groups of equal effect and add mass to zero-effect leaves.
        Eigen::VectorXd other = x;
        std::map<double, std::vector<int>> groups;
        for (int j = 0; j < m; ++j) groups[beta[j]].push_back(j);
        for (auto& [value, members] : groups) {
            std::vector<double> counts;
            for (int j : members) counts.push_back(x[j]);
            std::shuffle(counts.begin(), counts.end(), rng);
            for (std::size_t k = 0; k < members.size(); ++k) other[members[k]] = counts[k];
            if (value == 0.0)
                for (int j : members) other[j] += std::poisson_distribution<int>(2.0)(rng);
        }
        std::swap(other[0], other[1]);
        if (beta.dot(x) != beta.dot(other)) throw InternalError("pair construction broke score equality");

        const auto first = posterior_response_oracle(x, beta, intercepts, grid, prior);
        const auto second = posterior_response_oracle(other, beta, intercepts, grid, prior);

        // Posterior from the full Poisson likelihood of the counts.
        std::vector<double> full(grid.size());
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double lw = std::log(prior[g]);
            for (int j = 0; j < m; ++j) {
                const double eta = intercepts[j] + grid[g] * beta[j];
                lw += other[j] * eta - std::exp(eta) - std::lgamma(other[j] + 1.0);
            }
            full[g] = lw;
            top = std::max(top, lw);
        }
        double total = 0.0;
        for (auto& w : full) total += (w = std::exp(w - top));
        for (std::size_t g = 0; g < grid.size(); ++g) {
            worst_pair = std::max(worst_pair, std::abs(first[g] - second[g]));
            worst_full = std::max(worst_full, std::abs(second[g] - full[g] / total));
        }
    }
    const double worst = std::max(worst_pair, worst_full);
    return {worst <= 1e-12, fmt("max |diff| %.3g between pairs, %.3g against full likelihood", worst_pair, worst_full),
            "<= 1e-12"};
}

Outcome precision_equivalence(std::uint64_t seed) {
    Rng rng = make_rng(seed, "acceptance-precision");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const PriorKind kinds[] = {PriorKind::gdp_beta, PriorKind::flsa_beta, PriorKind::pfl_beta, PriorKind::fgdp_gamma};
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        PriorSpec prior;
        prior.kind = kinds[trial % 4];
        prior.alpha1 = 3.0 * unit(rng);
        prior.eta1 = 0.01 + 2.0 * unit(rng);
        prior.alpha2 = 3.0 * unit(rng);
        prior.eta2 = 0.01 + 2.0 * unit(rng);
        prior.theta = unit(rng);
        Eigen::Index size = 0;
        if (prior.kind == PriorKind::fgdp_gamma)
            size = (Eigen::Index{2} << std::uniform_int_distribution<int>(1, 5)(rng)) - 1;
        else
            size = std::uniform_int_distribution<int>(2, 32)(rng);
        Eigen::VectorXd at(size), coeffs(size);
        for (auto& v : at) v = normal(rng);
        for (auto& v : coeffs) v = normal(rng);
        const Eigen::SparseMatrix<double> lambda = assemble_precision(estep_weights(at, prior), prior, size);
        const double quadratic = coeffs.dot(lambda * coeffs);
        const double explicit_sum = oracle::explicit_quadratic_form(coeffs, at, prior);
        worst = std::max(worst, std::abs(quadratic - explicit_sum) / std::max(1.0, std::abs(explicit_sum)));
    }
    return {worst <= 1e-10, fmt("max relative diff %.3g over 200 cases", worst), "<= 1e-10"};
}

void run_study_once(const Options& options, StudyCache& cache) {
    if (cache.study_done) return;
    cache.study_done = true;
    const int reps = options.full ? 50 : 10;
    std::mutex lock;
    std::size_t done = 0;
    const auto progress = [&](const StudyRow&) {
        std::lock_guard<std::mutex> guard(lock);
        ++done;
        if (options.on_progress && done % 20 == 0) options.on_progress(fmt("study: %zu fits finished", done));
    };

    StudyOptions main;
    main.scenarios = {Scenario::a, Scenario::b, Scenario::c, Scenario::d};
    main.sizes = {25, 200};
    main.priors = {named_prior("fgdp2"), named_prior("gdp")};
    main.replications = reps;
    main.seed = options.seed;
    cache.rows = run_study(main, progress);

    StudyOptions pfl = main;
    pfl.scenarios = {Scenario::c};
    pfl.sizes = {200};
    pfl.priors = {named_prior("pfl-s"), named_prior("pfl-f")};
    const auto extra = run_study(pfl, progress);
    cache.rows.insert(cache.rows.end(), extra.begin(), extra.end());
}

Outcome desk_study(const Options& options, StudyCache& cache) {
    run_study_once(options, cache);
    const auto& rows = cache.rows;
    std::size_t failed_fits = 0;
    for (const auto& r : rows) failed_fits += r.metrics ? 0 : 1;

    bool ok = true;
    std::string detail;
    for (Scenario s : {Scenario::a, Scenario::b, Scenario::c, Scenario::d}) {
        const double fus_f = median_or_nan(column(rows, s, 200, "fgdp2", &MetricsRow::f1_fusion));
        const double fus_g = median_or_nan(column(rows, s, 200, "gdp", &MetricsRow::f1_fusion));
        const double sel_f = median_or_nan(column(rows, s, 200, "fgdp2", &MetricsRow::f1_selection));
        const double sel_g = median_or_nan(column(rows, s, 200, "gdp", &MetricsRow::f1_selection));
        const double rmse_200 = median_or_nan(column(rows, s, 200, "fgdp2", &MetricsRow::rmse));
        const double rmse_25 = median_or_nan(column(rows, s, 25, "fgdp2", &MetricsRow::rmse));
        const bool here = fus_f >= fus_g && sel_f >= sel_g && rmse_200 <= rmse_25;
        ok = ok && here;
        detail += fmt("%s: fus %.3f/%.3f sel %.3f/%.3f rmse %.3f<=%.3f; ", to_string(s).c_str(), fus_f, fus_g,
                      sel_f, sel_g, rmse_200, rmse_25);
    }
    const double pfl_f = median_or_nan(column(rows, Scenario::c, 200, "pfl-f", &MetricsRow::f1_fusion));
    const double pfl_s = median_or_nan(column(rows, Scenario::c, 200, "pfl-s", &MetricsRow::f1_fusion));
    ok = ok && pfl_f >= pfl_s;
    detail += fmt("c: pfl-f fus %.3f >= pfl-s %.3f; failed fits %zu", pfl_f, pfl_s, failed_fits);
    return {ok, detail, "(i) fgdp2 medians >= gdp, (ii) rmse n=200 <= n=25, (iii) pfl-f >= pfl-s; <= 30 min"};
}

Outcome convergence(const Options& options, StudyCache& cache) {
    run_study_once(options, cache);
    const auto& rows = cache.rows;
    const int reps = options.full ? 50 : 10;
    const int needed = (reps * 8 + 9) / 10;
    bool ok = true;
    std::string detail;
    for (Scenario s : {Scenario::a, Scenario::b, Scenario::c, Scenario::d}) {
        int converged = 0;
        for (const auto& r : rows)
            if (r.scenario == s && r.n == 200 && r.prior == "fgdp2" && r.metrics && r.converged) ++converged;
        const double med_f = median_or_nan(iteration_counts(rows, s, 200, "fgdp2"));
        const double med_g = median_or_nan(iteration_counts(rows, s, 200, "gdp"));
        const bool here = converged >= needed && med_f <= med_g;
        ok = ok && here;
        detail += fmt("%s: %d/%d converged, median iters %.1f vs %.1f; ", to_string(s).c_str(), converged, reps,
                      med_f, med_g);
    }
    detail.resize(detail.size() - 2);
    return {ok, detail, fmt(">= %d of %d converged, median iters <= gdp", needed, reps)};
}

Outcome multi_start_stability(const Options& options, StudyCache& cache) {
    SimConfig cfg;
    cfg.scenario = Scenario::d;
    cfg.n = 200;
    cfg.seed = options.seed;
    const SimData data = generate(cfg);
    cache.beta_star_norm_d = data.beta_star.norm();
    EmConfig em;
    cache.multi = multi_start(data.inputs, named_prior("fgdp2"), em, 20, options.seed);
    const auto& ms = *cache.multi;
    const double max_beta = *std::max_element(ms.beta_distances.begin(), ms.beta_distances.end());
    const double med_beta = median(ms.beta_distances);
    const double med_gamma = median(ms.gamma_distances);
    const double bound = 0.25 * cache.beta_star_norm_d;
    const bool ok = max_beta <= bound && med_gamma >= 2.0 * med_beta;
    return {ok,
            fmt("max beta dist %.4f (bound %.4f), median gamma %.4f vs median beta %.4f over %zu pairs", max_beta,
                bound, med_gamma, med_beta, ms.beta_distances.size()),
            "max beta <= 0.25 |beta*|, median gamma >= 2 median beta"};
}

Outcome monotone(const Options& options, StudyCache& cache) {
    run_study_once(options, cache);
    std::size_t fits = 0, violations = 0;
    double worst = 0.0;
    const auto check = [&](double initial, const std::vector<TraceEntry>& trace) {
        ++fits;
        double previous = initial;
        bool bad = false;
        for (const auto& entry : trace) {
            const double drop = previous - entry.objective;
            worst = std::max(worst, drop);
            if (!(entry.objective >= previous - 1e-8)) bad = true;
            previous = entry.objective;
        }
        violations += bad ? 1 : 0;
    };
    for (const auto& r : cache.rows)
        if (!r.trace.empty()) check(r.initial_objective, r.trace);
    if (cache.multi)
        for (const auto& f : cache.multi->fits) check(f.initial_objective, f.trace);
    return {violations == 0 && fits > 0, fmt("%zu fits, %zu with a decrease, largest drop %.3g", fits, violations, worst),
            "non-decreasing within 1e-8"};
}

Outcome partitioner(std::uint64_t seed) {
    std::string detail;
    bool ok = true;

    // Two disconnected cliques.
    {
        const std::size_t size = 25;
        std::vector<std::array<std::int64_t, 3>> edges;
        for (std::size_t block = 0; block < 2; ++block)
            for (std::size_t u = 0; u < size; ++u)
                for (std::size_t v = u + 1; v < size; ++v)
                    edges.push_back({static_cast<std::int64_t>(block * size + u),
                                     static_cast<std::int64_t>(block * size + v), 1});
        const KnnGraph graph = KnnGraph::from_edges(2 * size, edges);
        const PartitionTree tree = recursive_bisect(graph, 1, seed);
        bool exact = tree.leaf_assignment[0] != tree.leaf_assignment[size];
        for (std::size_t q = 0; q < 2 * size; ++q)
            exact = exact && tree.leaf_assignment[q] == tree.leaf_assignment[q < size ? 0 : size];
        ok = ok && exact;
        detail += exact ? "cliques recovered; " : "cliques NOT recovered; ";
    }

    // Balance on random geometric graphs.
    {
        int unbalanced = 0;
        double worst_ratio = 0.0;
        for (int g = 0; g < 20; ++g) {
            Rng rng = make_rng(seed, "acceptance-geometric", static_cast<std::uint64_t>(g));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::vector<Point4> points(2000);
            for (auto& p : points)
                for (auto& c : p) c = unit(rng);
            const KnnGraph graph = build_similarity_graph(knn_search(points, 10));
            const PartitionTree tree = recursive_bisect(graph, 4, seed + static_cast<std::uint64_t>(g), 1.03);
            const auto sizes = tree.node_sizes();
            for (std::size_t k = 0; k < tree.shape.num_internal(); ++k) {
                const double whole = static_cast<double>(sizes[k]);
                const double limit = 1.03 * std::ceil(whole / 2.0);
                for (std::size_t child : {2 * k + 1, 2 * k + 2}) {
                    worst_ratio = std::max(worst_ratio, static_cast<double>(sizes[child]) / (whole / 2.0));
                    if (static_cast<double>(sizes[child]) > limit) ++unbalanced;
                }
            }
        }
        ok = ok && unbalanced == 0;
        detail += fmt("%d unbalanced splits over 20 graphs (largest child/half %.4f); ", unbalanced, worst_ratio);
    }

    // kNN against brute force.
    {
        std::size_t mismatches = 0, checked = 0;
        const std::pair<std::size_t, std::size_t> cases[] = {{60, 5}, {200, 10}, {500, 25}, {500, 40}};
        int index = 0;
        for (const auto& [count, k] : cases) {
            Rng rng = make_rng(seed, "acceptance-knn", static_cast<std::uint64_t>(index));
            std::uniform_int_distribution<int> coarse(0, 6);
            std::uniform_real_distribution<double> unit(0.0, 100.0);
            std::vector<Point4> points(count);
            // Alternate continuous coordinates with a coarse lattice that forces distance ties.
            for (auto& p : points)
                for (auto& c : p) c = index % 2 ? coarse(rng) : unit(rng);
            const KnnResult found = knn_search(points, k);
            const auto truth = oracle::brute_force_knn(points, k);
            for (std::size_t q = 0; q < count; ++q)
                for (std::size_t r = 0; r < k; ++r) {
                    ++checked;
                    if (found.neighbors(q)[r] != truth[q][r].second ||
                        found.distances(q)[r] != static_cast<float>(truth[q][r].first))
                        ++mismatches;
                }
            ++index;
        }
        ok = ok && mismatches == 0;
        detail += fmt("knn %zu/%zu neighbours match brute force", checked - mismatches, checked);
    }
    return {ok, detail, "exact cliques; children <= 1.03 ceil(S/2); knn exact"};
}

SpinDataset synthetic_corpus(std::size_t num_points, std::size_t num_replicates, std::uint64_t seed) {
    Rng rng = make_rng(seed, "acceptance-corpus");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    // Passing lanes: origin and destination clusters with a spread.
    struct Lane {
        Point2 from, to;
        double spread;
    };
    std::vector<Lane> lanes(40);
    for (auto& l : lanes) {
        l.from = {120.0 * unit(rng), 80.0 * unit(rng)};
        l.to = {120.0 * unit(rng), 80.0 * unit(rng)};
        l.spread = 3.0 + 8.0 * unit(rng);
    }
    const auto clip = [](double v, double hi) { return std::clamp(v, 0.0, hi); };
    SpinDataset data;
    data.label = "synthetic";
    data.replicates.resize(num_replicates);
    for (std::size_t r = 0; r < num_replicates; ++r) {
        data.replicates[r].id = "m" + std::to_string(r + 1);
        data.replicates[r].response = std::poisson_distribution<int>(1.0)(rng);
        data.replicates[r].exposure = 0.5 + unit(rng);
    }
    std::uniform_int_distribution<std::size_t> lane_pick(0, lanes.size() - 1);
    std::uniform_int_distribution<std::size_t> owner(0, num_replicates - 1);
    for (std::size_t q = 0; q < num_points; ++q) {
        const Lane& l = lanes[lane_pick(rng)];
        PrimitiveObject po;
        po.origin = {clip(l.from.x + l.spread * normal(rng), 120.0), clip(l.from.y + l.spread * normal(rng), 80.0)};
        po.destination = {clip(l.to.x + l.spread * normal(rng), 120.0), clip(l.to.y + l.spread * normal(rng), 80.0)};
        po.replicate_index = owner(rng);
        data.replicates[po.replicate_index].po_indices.push_back(q);
        data.pos.push_back(po);
    }
    return data;
}

Outcome scale_check(const Options& options) {
    const SpinDataset data = synthetic_corpus(options.scale_points, 128, options.seed);
    const auto points = data.feature_points();
    const std::size_t k = default_k(points.size());

    const auto start = Clock::now();
    KnnGraph graph;
    {
        const KnnResult knn = knn_search(points, k);
        if (options.on_progress) options.on_progress(fmt("scale: knn done after %.1f s", seconds_since(start)));
        graph = build_similarity_graph(knn);
    }
    const double graph_seconds = seconds_since(start);
    if (options.on_progress) options.on_progress(fmt("scale: graph built after %.1f s", graph_seconds));
    const PartitionTree tree = recursive_bisect(graph, 9, options.seed);
    const double build_seconds = seconds_since(start);
    const std::size_t edges = graph.total_edges;
    graph = KnnGraph{};
    if (options.on_progress) options.on_progress(fmt("scale: partition done after %.1f s", build_seconds));

    const CountMatrices counts = aggregate_counts(tree, data);
    const ModelInputs inputs = ModelInputs::from_counts(counts.X, data, tree.shape);
    EmConfig em;
    em.max_em_iters = 1;
    em.seed = options.seed;
    const auto em_start = Clock::now();
    const FitResult result = fit(inputs, named_prior("fgdp2"), em);
    const double em_seconds = seconds_since(em_start);

    const bool ok = build_seconds <= 300.0 && em_seconds <= 60.0 && result.iterations == 1;
    return {ok,
            fmt("Q=%zu K=%zu edges=%zu: graph %.1f s, graph+partition %.1f s; one EM iteration (h=9, n=128) %.2f s",
                points.size(), k, edges, graph_seconds, build_seconds, em_seconds),
            "graph+partition <= 300 s, EM iteration <= 60 s"};
}

}  // namespace

BenchReport run_acceptance(const Options& options) {
    BenchReport report;
    report.full = options.full;
    report.seed = options.seed;
    StudyCache cache;

    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::uint64_t seed = options.seed;
    const std::vector<Entry> entries = {
        {1, "golden design matrix", [&] { return golden_design(options); }},
        {2, "reparameterization identity", [&] { return reparameterization(seed); }},
        {3, "gradient correctness", [&] { return gradients(seed); }},
        {4, "E-step closed form vs quadrature", [&] { return estep_grid(); }},
        {5, "GVA bound validity", [&] { return gva_bound(seed); }},
        {6, "sufficiency of the score", [&] { return sufficiency(seed); }},
        {7, "precision-matrix equivalence", [&] { return precision_equivalence(seed); }},
        {8, "desk-scale study", [&] { return desk_study(options, cache); }},
        {9, "convergence speed", [&] { return convergence(options, cache); }},
        {10, "multi-start stability", [&] { return multi_start_stability(options, cache); }},
        {11, "monotone objective", [&] { return monotone(options, cache); }},
        {12, "partitioner sanity", [&] { return partitioner(seed); }},
        {13, "scale check", [&] { return scale_check(options); }},
    };
    if (entries.size() != kCriterionCount) throw InternalError("criterion table is incomplete");

    // Criterion 11 inspects the fits of 8 to 10, which therefore run whenever it does.
    std::set<int> selected = options.only;
    if (selected.count(11)) selected.insert(10);

    for (const auto& e : entries) {
        CriterionResult result;
        result.id = e.id;
        result.name = e.name;
        if (selected.empty() || selected.count(e.id)) {
            const auto start = Clock::now();
            try {
                const Outcome o = e.run();
                result.status = o.passed ? Status::pass : Status::fail;
                result.measured = o.measured;
                result.tolerance = o.tolerance;
            } catch (const std::exception& ex) {
                result.status = Status::fail;
                result.measured = std::string("error: ") + ex.what();
            }
            result.seconds = seconds_since(start);
            if (e.id == 8 && result.seconds > 1800.0) {
                result.status = Status::fail;
                result.measured += "; over the 30 min budget";
            }
            if (e.id == 3 && result.seconds > 30.0) {
                result.status = Status::fail;
                result.measured += "; over the 30 s budget";
            }
        }
        if (options.on_result) options.on_result(result);
        report.criteria.push_back(result);
    }
    return report;
}

std::string report_to_json(const BenchReport& report) {
    nlohmann::json j;
    j["seed"] = report.seed;
    j["full"] = report.full;
    j["total"] = report.total();
    j["passed"] = report.passed();
    j["failed"] = report.failed();
    j["criteria"] = nlohmann::json::array();
    for (const auto& c : report.criteria)
        j["criteria"].push_back({{"id", c.id},
                                 {"name", c.name},
                                 {"status", to_string(c.status)},
                                 {"measured", c.measured},
                                 {"tolerance", c.tolerance},
                                 {"seconds", c.seconds}});
    return j.dump(2) + "\n";
}

std::string render_table(const BenchReport& report) {
    std::ostringstream out;
    out << fmt("%-3s %-34s %-6s %10s  %s\n", "id", "criterion", "status", "seconds", "measured");
    for (const auto& c : report.criteria)
        out << fmt("%-3d %-34s %-6s %10.2f  ", c.id, c.name.c_str(), to_string(c.status).c_str(), c.seconds)
            << c.measured << "\n";
    out << fmt("%zu of %zu criteria passed (%zu failed)\n", report.passed(), report.total(), report.failed());
    return out.str();
}

}  // namespace spinlets::acceptance
