#include "spinlets/priors.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "spinlets/error.hpp"

namespace spinlets {

std::string to_string(PriorKind kind) {
    switch (kind) {
        case PriorKind::gdp_beta: return "gdp_beta";
        case PriorKind::flsa_beta: return "flsa_beta";
        case PriorKind::pfl_beta: return "pfl_beta";
        case PriorKind::fgdp_gamma: return "fgdp_gamma";
    }
    throw InternalError("unknown prior kind");
}

PriorKind parse_prior_kind(const std::string& text) {
    if (text == "gdp_beta" || text == "gdp") return PriorKind::gdp_beta;
    if (text == "flsa_beta" || text == "flsa") return PriorKind::flsa_beta;
    if (text == "pfl_beta" || text == "pfl") return PriorKind::pfl_beta;
    if (text == "fgdp_gamma" || text == "fgdp") return PriorKind::fgdp_gamma;
    throw ArgumentError("unknown prior kind '" + text + "'");
}

std::optional<double> PriorSpec::xi1() const {
    if (alpha1 == 0.0) return std::nullopt;
    return eta1 / alpha1;
}

std::optional<double> PriorSpec::xi2() const {
    if (!has_pairs() || alpha2 == 0.0) return std::nullopt;
    return eta2 / alpha2;
}

void PriorSpec::validate() const {
    const auto check = [](double alpha, double eta, const char* which) {
        if (!std::isfinite(alpha) || alpha < -1.0)
            throw ArgumentError(std::string("prior ") + which + ": alpha must be at least -1");
        if (!std::isfinite(eta) || eta < 0.0)
            throw ArgumentError(std::string("prior ") + which + ": eta must be non-negative");
    };
    check(alpha1, eta1, "sparsity component");
    if (has_pairs()) check(alpha2, eta2, "fusion component");
    if (!(theta >= 0.0 && theta <= 1.0)) throw ArgumentError("prior theta must lie in [0, 1]");
}

namespace {

PriorSpec make(const std::string& name, PriorKind kind, double a1, double e1, double a2, double e2,
               double theta = 0.5) {
    PriorSpec p;
    p.kind = kind;
    p.alpha1 = a1;
    p.eta1 = e1;
    p.alpha2 = a2;
    p.eta2 = e2;
    p.theta = theta;
    p.name = name;
    return p;
}

const std::vector<PriorSpec>& prior_table() {
    using K = PriorKind;
    static const std::vector<PriorSpec> table = {
        make("gdp0", K::gdp_beta, -1, 1, 0, 0),
        make("gdp", K::gdp_beta, 1, 1, 0, 0),
        make("flsa", K::flsa_beta, 1, 1, 1, 1),
        make("pfl-s", K::pfl_beta, 1, 1, 1, 1, 0.8),
        make("pfl-f", K::pfl_beta, 1, 1, 1, 1, 0.2),
        make("fgdp-s", K::fgdp_gamma, 1, 1, -1, 1),
        make("fgdp-f", K::fgdp_gamma, -1, 1, 1, 1),
        make("fgdp", K::fgdp_gamma, 1, 1, 1, 1),
        make("fgdp-nj", K::fgdp_gamma, 0, 0, 0, 0),
        make("fgdp1", K::fgdp_gamma, 1, 0.1, 1, 0.1),
        make("fgdp2", K::fgdp_gamma, 1, 0.01, 1, 0.01),
        make("fgdp3", K::fgdp_gamma, 1, 0.001, 1, 0.001),
        make("fgdp4", K::fgdp_gamma, 0.5, 0.01, 0.5, 0.01),
        make("fgdp5", K::fgdp_gamma, 2, 0.01, 2, 0.01),
        make("fgdp6", K::fgdp_gamma, 5, 0.01, 5, 0.01),
    };
    return table;
}

double parse_number(const std::string& field, const std::string& whole) {
    double v = 0.0;
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ArgumentError("prior parameters '" + whole + "': '" + field + "' is not a number");
    return v;
}

struct Term {
    double alpha, eta, scale;
};

Term rho_term(const PriorSpec& p) {
    return {p.alpha1, p.eta1, p.kind == PriorKind::pfl_beta ? p.theta : 1.0};
}

Term upsilon_term(const PriorSpec& p) {
    return {p.alpha2, p.eta2, p.kind == PriorKind::pfl_beta ? 1.0 - p.theta : 1.0};
}

double expectation(double value, const Term& term) {
    if (term.alpha + 1.0 == 0.0 || term.scale == 0.0) return 0.0;
    const double u = std::max(std::abs(value), kCoefficientFloor);
    return term.scale * (term.alpha + 1.0) / (u * (u + term.eta));
}

double penalty_term(double value, const Term& term) {
    const double k = term.alpha + 1.0;
    if (k == 0.0 || term.scale == 0.0) return 0.0;
    const double u = std::abs(value);
    const double eps = kCoefficientFloor;
    if (u >= eps) return -term.scale * k * std::log(term.eta + u);
    const double rho_floor = k / (eps * (eps + term.eta));
    return term.scale * (-k * std::log(term.eta + eps) - 0.5 * rho_floor * (u * u - eps * eps));
}

double log_density_term(double value, double alpha, double eta, const char* which) {
    if (!(alpha > 0.0) || !(eta > 0.0))
        throw ArgumentError(std::string("prior density undefined: ") + which +
                            " needs positive alpha and eta");
    const double xi = eta / alpha;
    return -std::log(2.0 * xi) - (alpha + 1.0) * std::log1p(std::abs(value) / (alpha * xi));
}

}  // namespace

PriorSpec named_prior(const std::string& name) {
    for (const auto& p : prior_table())
        if (p.name == name) return p;
    std::string known;
    for (const auto& p : prior_table()) known += (known.empty() ? "" : ", ") + p.name;
    throw ArgumentError("unknown prior '" + name + "' (known: " + known + ")");
}

std::vector<std::string> named_prior_list() {
    std::vector<std::string> names;
    for (const auto& p : prior_table()) names.push_back(p.name);
    return names;
}

PriorSpec parse_prior_params(const std::string& text) {
    std::vector<std::string> fields;
    std::stringstream ss(text);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 5 && fields.size() != 6)
        throw ArgumentError("prior parameters must be 'kind,a1,e1,a2,e2[,theta]', got '" + text + "'");
    PriorSpec p;
    p.kind = parse_prior_kind(fields[0]);
    p.alpha1 = parse_number(fields[1], text);
    p.eta1 = parse_number(fields[2], text);
    p.alpha2 = parse_number(fields[3], text);
    p.eta2 = parse_number(fields[4], text);
    if (fields.size() == 6) p.theta = parse_number(fields[5], text);
    p.name = text;
    p.validate();
    return p;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> penalty_pairs(const PriorSpec& prior, Eigen::Index size) {
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
        case PriorKind::fgdp_gamma: {
            if (size < 3 || ((size + 1) & size) != 0)
                throw InternalError("tree coefficient count must be 2^(h+1) - 1");
            for (Eigen::Index k = 0; 2 * k + 2 < size; ++k) pairs.emplace_back(2 * k + 1, 2 * k + 2);
            break;
        }
    }
    return pairs;
}

EStepWeights estep_weights(const Eigen::VectorXd& coeffs, const PriorSpec& prior) {
    EStepWeights w;
    const Term rt = rho_term(prior), ut = upsilon_term(prior);
    w.rho.resize(coeffs.size());
    for (Eigen::Index l = 0; l < coeffs.size(); ++l) w.rho[l] = expectation(coeffs[l], rt);
    w.pairs = penalty_pairs(prior, coeffs.size());
    w.upsilon.resize(static_cast<Eigen::Index>(w.pairs.size()));
    for (std::size_t q = 0; q < w.pairs.size(); ++q) {
        const auto [u, v] = w.pairs[q];
        w.upsilon[static_cast<Eigen::Index>(q)] = expectation(coeffs[u] - coeffs[v], ut);
    }
    return w;
}

Eigen::SparseMatrix<double> assemble_precision(const EStepWeights& weights, const PriorSpec& prior,
                                               Eigen::Index size) {
    if (weights.rho.size() != size || weights.upsilon.size() != static_cast<Eigen::Index>(weights.pairs.size()))
        throw InternalError("E-step weights do not match the coefficient count");
    const auto expected_pairs = penalty_pairs(prior, size);
    if (expected_pairs != weights.pairs) throw InternalError("E-step pairs do not match the prior");
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(size) + 4 * weights.pairs.size());
    for (Eigen::Index l = 0; l < size; ++l) entries.emplace_back(l, l, weights.rho[l]);
    for (std::size_t q = 0; q < weights.pairs.size(); ++q) {
        const auto [u, v] = weights.pairs[q];
        const double w = weights.upsilon[static_cast<Eigen::Index>(q)];
        entries.emplace_back(u, u, w);
        entries.emplace_back(v, v, w);
        entries.emplace_back(u, v, -w);
        entries.emplace_back(v, u, -w);
    }
    Eigen::SparseMatrix<double> lambda(size, size);
    lambda.setFromTriplets(entries.begin(), entries.end());
    return lambda;
}

double log_prior_density(const Eigen::VectorXd& coeffs, const PriorSpec& prior) {
    const Term rt = rho_term(prior), ut = upsilon_term(prior);
    double total = 0.0;
    for (Eigen::Index l = 0; l < coeffs.size(); ++l)
        total += rt.scale * log_density_term(coeffs[l], prior.alpha1, prior.eta1, "sparsity component");
    for (const auto& [u, v] : penalty_pairs(prior, coeffs.size()))
        total += ut.scale * log_density_term(coeffs[u] - coeffs[v], prior.alpha2, prior.eta2, "fusion component");
    return total;
}

double surrogate_penalty(const Eigen::VectorXd& coeffs, const PriorSpec& prior) {
    const Term rt = rho_term(prior), ut = upsilon_term(prior);
    double total = 0.0;
    for (Eigen::Index l = 0; l < coeffs.size(); ++l) total += penalty_term(coeffs[l], rt);
    for (const auto& [u, v] : penalty_pairs(prior, coeffs.size())) total += penalty_term(coeffs[u] - coeffs[v], ut);
    return total;
}

double estep_quadrature_oracle(double coeff, double alpha, double eta) {
    if (!(alpha > 0.0) || !(eta > 0.0) || !(std::abs(coeff) > 0.0))
        throw ArgumentError("quadrature oracle needs alpha > 0, eta > 0 and a non-zero coefficient");
    const double u = std::abs(coeff);
    // Unnormalized joint of (coefficient, lambda): Laplace(u | lambda) times the
    // Gamma(alpha, eta) kernel, on a log scale centred near its mode.
    const double mode = alpha / (u + eta);
    const auto log_joint = [&](double lambda) {
        return std::log(0.5 * lambda) - lambda * u + (alpha - 1.0) * std::log(lambda) - eta * lambda;
    };
    const double shift = log_joint(mode);
    boost::math::quadrature::exp_sinh<double> integrator;
    double err_num = 0.0, err_den = 0.0;
    const double num = integrator.integrate(
        [&](double lambda) { return lambda <= 0.0 ? 0.0 : (lambda / u) * std::exp(log_joint(lambda) - shift); },
        1e-14, &err_num);
    const double den = integrator.integrate(
        [&](double lambda) { return lambda <= 0.0 ? 0.0 : std::exp(log_joint(lambda) - shift); }, 1e-14,
        &err_den);
    if (!std::isfinite(num) || !std::isfinite(den) || !(den > 0.0) || err_num > 1e-8 * std::abs(num) ||
        err_den > 1e-8 * std::abs(den))
        throw NumericalError("E-step quadrature did not converge");
    return num / den;
}

}  // namespace spinlets
