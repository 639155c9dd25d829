#include "spinlets/lbfgs.hpp"

#include <cmath>
#include <deque>

#include "spinlets/error.hpp"

namespace spinlets {

LbfgsResult lbfgs_maximize(const ObjectiveFn& objective, Eigen::VectorXd init, const LbfgsOptions& options) {
    if (options.memory < 1 || options.max_iters < 0) throw ArgumentError("invalid L-BFGS options");
    LbfgsResult r;
    r.x = std::move(init);
    Eigen::VectorXd grad;
    r.value = objective(r.x, grad);
    r.evaluations = 1;
    if (!std::isfinite(r.value) || grad.size() != r.x.size() || !grad.allFinite())
        throw ArgumentError("objective is not finite at the initial point");

    // Work with the descent problem on h = -f, whose gradient is -grad.
    struct Pair {
        Eigen::VectorXd s, y;
        double rho;
    };
    std::deque<Pair> history;
    Eigen::VectorXd g = -grad;
    Eigen::VectorXd trial_grad;

    const auto apply_h0 = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        if (options.precondition) return options.precondition(v);
        if (history.empty()) return v / std::max(1.0, v.norm());
        const auto& last = history.back();
        return (last.s.dot(last.y) / last.y.squaredNorm()) * v;
    };
    const auto two_loop = [&](const Eigen::VectorXd& gradient) {
        Eigen::VectorXd q = gradient;
        std::vector<double> alpha(history.size());
        for (std::size_t k = history.size(); k-- > 0;) {
            alpha[k] = history[k].rho * history[k].s.dot(q);
            q -= alpha[k] * history[k].y;
        }
        Eigen::VectorXd z = apply_h0(q);
        for (std::size_t k = 0; k < history.size(); ++k) {
            const double b = history[k].rho * history[k].y.dot(z);
            z += (alpha[k] - b) * history[k].s;
        }
        return Eigen::VectorXd(-z);
    };

    r.grad_norm = g.norm();
    while (r.iterations < options.max_iters) {
        if (r.grad_norm < options.grad_tol) {
            r.converged = true;
            break;
        }
        Eigen::VectorXd d = two_loop(g);
        double slope = g.dot(d);
        if (!(slope < 0.0) || !d.allFinite()) {
            history.clear();
            d = -apply_h0(g);
            slope = g.dot(d);
            if (!(slope < 0.0) || !d.allFinite()) {
                d = -g / std::max(1.0, g.norm());
                slope = g.dot(d);
            }
        }

        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd x_new;
        double f_new = 0.0;
        for (int b = 0; b < options.max_backtracks; ++b, step *= 0.5) {
            x_new = r.x + step * d;
            try {
                f_new = objective(x_new, trial_grad);
            } catch (const NumericalError&) {
                ++r.evaluations;
                continue;
            }
            ++r.evaluations;
            if (std::isfinite(f_new) && trial_grad.allFinite() &&
                f_new >= r.value - options.armijo * step * slope && f_new > r.value) {
                accepted = true;
                break;
            }
        }
        ++r.iterations;
        if (!accepted) {
            r.line_search_failed = true;
            break;
        }
        // A full step that leaves the slope nearly as steep undershoots; keep doubling
        // while the objective still rises.
        if (step == 1.0) {
            Eigen::VectorXd far_grad;
            for (int e = 0; e < options.max_backtracks && -trial_grad.dot(d) < options.expand_slope * slope; ++e) {
                const Eigen::VectorXd x_far = r.x + 2.0 * step * d;
                double f_far = 0.0;
                try {
                    f_far = objective(x_far, far_grad);
                } catch (const NumericalError&) {
                    ++r.evaluations;
                    break;
                }
                ++r.evaluations;
                if (!std::isfinite(f_far) || !far_grad.allFinite() || !(f_far > f_new)) break;
                step *= 2.0;
                x_new = x_far;
                f_new = f_far;
                trial_grad = far_grad;
            }
        }
        Eigen::VectorXd g_new = -trial_grad;
        Pair pair{x_new - r.x, g_new - g, 0.0};
        const double sy = pair.s.dot(pair.y);
        if (sy > 1e-12 * pair.s.norm() * pair.y.norm() && sy > 0.0) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (static_cast<int>(history.size()) > options.memory) history.pop_front();
        }
        r.x = std::move(x_new);
        r.value = f_new;
        g = std::move(g_new);
        r.grad_norm = g.norm();
    }
    if (!r.converged && r.grad_norm < options.grad_tol) r.converged = true;
    return r;
}

}  // namespace spinlets
