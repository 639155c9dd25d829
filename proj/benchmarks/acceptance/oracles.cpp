#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "spinlets/error.hpp"

namespace spinlets::oracle {

HermiteRule gauss_hermite(int order) {
    if (order < 1) throw ArgumentError("Gauss-Hermite order must be positive");
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(order > 1 ? order - 1 : 0);
    for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(k / 2.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

    // Orthonormal Hermite values p_0..p_order at x; returns sum of p_k^2 for k < order.
    const auto evaluate = [order](double x, double& p_last, double& p_prev) {
        double prev = 0.0, cur = std::pow(std::numbers::pi, -0.25), sum = 0.0;
        for (int k = 0; k < order; ++k) {
            sum += cur * cur;
            const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
            prev = cur;
            cur = next;
        }
        p_last = cur;
        p_prev = prev;
        return sum;
    };

    HermiteRule rule;
    for (int k = 0; k < order; ++k) {
        double x = solver.eigenvalues()[k], p = 0.0, q = 0.0;
        for (int it = 0; it < 10; ++it) {
            evaluate(x, p, q);
            const double step = p / (std::sqrt(2.0 * order) * q);
            x -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        rule.nodes.push_back(x);
        rule.log_weights.push_back(-std::log(evaluate(x, p, q)));
    }
    return rule;
}

namespace {

double log_sum_exp(const std::vector<double>& terms) {
    const double top = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(top)) return top;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - top);
    return top + std::log(s);
}

double log_normal(double v, double variance) {
    return -0.5 * std::log(2.0 * std::numbers::pi * variance) - v * v / (2.0 * variance);
}

struct Problem {
    const ModelInputs& in;
    Eigen::VectorXd beta;
    Eigen::Vector3d omega;
    Eigen::Index n, m;

    double cell(Eigen::Index i, Eigen::Index j, double eta) const {
        const double x = in.X(i, j);
        return x * (std::log(in.t[i]) + eta) - in.t[i] * std::exp(eta) - std::lgamma(x + 1.0);
    }
    double mean(Eigen::Index i, double eta) const { return in.t[i] * std::exp(eta); }
};

// Random effects laid out as [a | b_2..b_n | c_2..c_m].
Eigen::VectorXd joint_mode(const Problem& pr, Eigen::MatrixXd& neg_hessian) {
    const auto n = pr.n, m = pr.m, dim = n + m - 1;
    const auto b_at = [&](Eigen::Index i) { return i; };          // i >= 1
    const auto c_at = [&](Eigen::Index j) { return n - 1 + j; };  // j >= 1
    const auto eta = [&](const Eigen::VectorXd& r, Eigen::Index i, Eigen::Index j) {
        return r[0] + (i > 0 ? r[b_at(i)] : 0.0) + (j > 0 ? r[c_at(j)] : 0.0) + pr.in.y[i] * pr.beta[j];
    };
    const auto variance = [&](Eigen::Index k) { return k == 0 ? pr.omega[0] : k < n ? pr.omega[1] : pr.omega[2]; };
    const auto objective = [&](const Eigen::VectorXd& r) {
        double v = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < m; ++j) v += pr.cell(i, j, eta(r, i, j));
        for (Eigen::Index k = 0; k < dim; ++k) v += log_normal(r[k], variance(k));
        return v;
    };

    Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < m; ++j) {
                const double e = eta(r, i, j);
                const double mu = pr.mean(i, e);
                std::vector<Eigen::Index> idx{0};
                if (i > 0) idx.push_back(b_at(i));
                if (j > 0) idx.push_back(c_at(j));
                for (auto u : idx) {
                    g[u] += pr.in.X(i, j) - mu;
                    for (auto w : idx) h(u, w) += mu;
                }
            }
        for (Eigen::Index k = 0; k < dim; ++k) {
            g[k] -= r[k] / variance(k);
            h(k, k) += 1.0 / variance(k);
        }
        const Eigen::VectorXd step = h.ldlt().solve(g);
        const double base = objective(r);
        double scale = 1.0;
        Eigen::VectorXd next = r + step;
        while (objective(next) < base && scale > 1e-10) {
            scale *= 0.5;
            next = r + scale * step;
        }
        r = next;
        neg_hessian = h;
        if (step.lpNorm<Eigen::Infinity>() * scale < 1e-12) break;
    }
    return r;
}

}  // namespace

double log_marginal_likelihood(const ModelInputs& inputs, const Eigen::VectorXd& gamma,
                               const Eigen::Vector3d& omega, int order) {
    inputs.validate();
    Problem pr{inputs, inputs.leaf_effects(gamma), omega, inputs.num_replicates(), inputs.num_leaves()};
    const auto n = pr.n, m = pr.m;

    Eigen::MatrixXd neg_hessian;
    const Eigen::VectorXd mode = joint_mode(pr, neg_hessian);
    const Eigen::MatrixXd cov = neg_hessian.inverse();

    // Outer block: the intercept and the column effects.
    const Eigen::Index outer_dim = m;
    std::vector<Eigen::Index> outer_idx{0};
    for (Eigen::Index j = 1; j < m; ++j) outer_idx.push_back(n - 1 + j);
    Eigen::VectorXd center(outer_dim);
    Eigen::MatrixXd outer_cov(outer_dim, outer_dim);
    for (Eigen::Index u = 0; u < outer_dim; ++u) {
        center[u] = mode[outer_idx[u]];
        for (Eigen::Index w = 0; w < outer_dim; ++w) outer_cov(u, w) = cov(outer_idx[u], outer_idx[w]);
    }
    const Eigen::MatrixXd chol = outer_cov.llt().matrixL();
    const Eigen::MatrixXd map = std::sqrt(2.0) * chol;
    const double log_jacobian = map.diagonal().array().log().sum();

    const HermiteRule rule = gauss_hermite(order);
    const HermiteRule inner_rule = gauss_hermite(order);

    // Row effect integral for row i given the intercept and column effects.
    const auto row_integral = [&](Eigen::Index i, double a, const Eigen::VectorXd& c) {
        const auto h = [&](double b) {
            double v = log_normal(b, omega[1]);
            for (Eigen::Index j = 0; j < m; ++j) v += pr.cell(i, j, a + b + c[j] + inputs.y[i] * pr.beta[j]);
            return v;
        };
        double b = 0.0, curvature = 1.0 / omega[1];
        for (int iter = 0; iter < 100; ++iter) {
            double g = -b / omega[1], hh = 1.0 / omega[1];
            for (Eigen::Index j = 0; j < m; ++j) {
                const double mu = pr.mean(i, a + b + c[j] + inputs.y[i] * pr.beta[j]);
                g += inputs.X(i, j) - mu;
                hh += mu;
            }
            double step = g / hh, scale = 1.0;
            const double base = h(b);
            while (h(b + scale * step) < base && scale > 1e-10) scale *= 0.5;
            b += scale * step;
            curvature = hh;
            if (std::abs(scale * step) < 1e-13) break;
        }
        const double s = std::sqrt(2.0 / curvature);
        std::vector<double> terms(inner_rule.nodes.size());
        for (std::size_t k = 0; k < terms.size(); ++k) {
            const double x = inner_rule.nodes[k];
            terms[k] = inner_rule.log_weights[k] + x * x + h(b + s * x);
        }
        return log_sum_exp(terms) + std::log(s);
    };

    const std::size_t per_dim = rule.nodes.size();
    std::size_t total = 1;
    for (Eigen::Index d = 0; d < outer_dim; ++d) total *= per_dim;
    std::vector<double> terms(total);
    Eigen::VectorXd x(outer_dim), c = Eigen::VectorXd::Zero(m);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        double weight = 0.0;
        for (Eigen::Index d = 0; d < outer_dim; ++d) {
            const std::size_t k = rest % per_dim;
            rest /= per_dim;
            x[d] = rule.nodes[k];
            weight += rule.log_weights[k] + x[d] * x[d];
        }
        const Eigen::VectorXd v = center + map * x;
        const double a = v[0];
        for (Eigen::Index j = 1; j < m; ++j) c[j] = v[j];
        double value = log_normal(a, omega[0]);
        for (Eigen::Index j = 1; j < m; ++j) value += log_normal(c[j], omega[2]);
        for (Eigen::Index j = 0; j < m; ++j) value += pr.cell(0, j, a + c[j] + inputs.y[0] * pr.beta[j]);
        for (Eigen::Index i = 1; i < n; ++i) value += row_integral(i, a, c);
        terms[flat] = weight + value;
    }
    return log_sum_exp(terms) + log_jacobian;
}

std::vector<std::vector<std::pair<double, std::int32_t>>> brute_force_knn(
    std::span<const std::array<double, 4>> points, std::size_t k) {
    std::vector<std::vector<std::pair<double, std::int32_t>>> out(points.size());
    for (std::size_t q = 0; q < points.size(); ++q) {
        std::vector<std::pair<double, std::int32_t>> all;
        for (std::size_t p = 0; p < points.size(); ++p) {
            if (p == q) continue;
            double s = 0.0;
            for (int d = 0; d < 4; ++d) s += (points[q][d] - points[p][d]) * (points[q][d] - points[p][d]);
            all.emplace_back(std::sqrt(s), static_cast<std::int32_t>(p));
        }
        std::sort(all.begin(), all.end());
        all.resize(std::min(k, all.size()));
        out[q] = std::move(all);
    }
    return out;
}

double explicit_quadratic_form(const Eigen::VectorXd& coeffs, const Eigen::VectorXd& weights_at,
                               const PriorSpec& prior) {
    const Eigen::Index size = coeffs.size();
    const bool pfl = prior.kind == PriorKind::pfl_beta;
    const double scale1 = pfl ? prior.theta : 1.0;
    const double scale2 = pfl ? 1.0 - prior.theta : 1.0;
    const auto weight = [](double value, double alpha, double eta, double scale) {
        const double u = std::max(std::abs(value), 1e-8);
        return scale * (alpha + 1.0) / (u * (u + eta));
    };

    double total = 0.0;
    for (Eigen::Index l = 0; l < size; ++l)
        total += weight(weights_at[l], prior.alpha1, prior.eta1, scale1) * coeffs[l] * coeffs[l];

    std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
    switch (prior.kind) {
        case PriorKind::gdp_beta: break;
        case PriorKind::flsa_beta:
            for (Eigen::Index j = 0; j + 1 < size; ++j) pairs.emplace_back(j, j + 1);
            break;
        case PriorKind::pfl_beta:
            for (Eigen::Index j = 0; j < size; ++j)
                for (Eigen::Index k = j + 1; k < size; ++k) pairs.emplace_back(j, k);
            break;
        case PriorKind::fgdp_gamma:
            for (Eigen::Index parent = 0; 2 * parent + 2 < size; ++parent)
                pairs.emplace_back(2 * parent + 1, 2 * parent + 2);
            break;
    }
    for (const auto& [u, w] : pairs) {
        const double d = coeffs[u] - coeffs[w];
        total += weight(weights_at[u] - weights_at[w], prior.alpha2, prior.eta2, scale2) * d * d;
    }
    return total;
}

}  // namespace spinlets::oracle
