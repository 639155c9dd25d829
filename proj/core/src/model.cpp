#include "spinlets/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

#include "json_io.hpp"
#include "spinlets/error.hpp"

namespace spinlets {

namespace {

std::string cell(Eigen::Index i, Eigen::Index j) {
    return "(" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")";
}

bool same_vector(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a.size() == 0 || a == b);
}

struct Unpacked {
    Eigen::Index p, n, m;
    Eigen::VectorXd gamma;
    double za, ka;
    Eigen::VectorXd zb, zc, kb, kc;
};

Unpacked unpack_params(const ModelInputs& inputs, const Eigen::VectorXd& packed) {
    Unpacked u;
    u.p = inputs.num_coefficients();
    u.n = inputs.num_replicates();
    u.m = inputs.num_leaves();
    if (packed.size() != u.p + 2 * (u.n + u.m - 1))
        throw InternalError("packed parameter vector has the wrong length");
    Eigen::Index at = 0;
    u.gamma = packed.segment(at, u.p);
    at += u.p;
    u.za = packed[at++];
    u.zb = packed.segment(at, u.n - 1);
    at += u.n - 1;
    u.zc = packed.segment(at, u.m - 1);
    at += u.m - 1;
    u.ka = packed[at++];
    u.kb = packed.segment(at, u.n - 1);
    at += u.n - 1;
    u.kc = packed.segment(at, u.m - 1);
    return u;
}

}  // namespace

Eigen::Index ModelInputs::num_coefficients() const {
    return tree ? static_cast<Eigen::Index>(tree->num_nodes()) : X.cols();
}

Eigen::VectorXd ModelInputs::leaf_effects(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != num_coefficients()) throw InternalError("coefficient vector has the wrong length");
    return tree ? tree->expand(coeffs) : coeffs;
}

Eigen::VectorXd ModelInputs::aggregate(const Eigen::VectorXd& leaf_values) const {
    if (leaf_values.size() != num_leaves()) throw InternalError("leaf vector has the wrong length");
    return tree ? tree->aggregate(leaf_values) : leaf_values;
}

DesignMatrix ModelInputs::design() const {
    if (tree) return tree->design_matrix();
    DesignMatrix d;
    d.rows = d.cols = static_cast<std::size_t>(num_leaves());
    d.row_ones.resize(d.rows);
    for (std::size_t j = 0; j < d.rows; ++j) d.row_ones[j] = {j};
    return d;
}

double ModelInputs::data_constant() const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double log_t = std::log(t[i]);
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double x = X(i, j);
            if (x != 0.0) total += x * log_t - std::lgamma(x + 1.0);
        }
    }
    return total;
}

void ModelInputs::validate() const {
    if (X.rows() < 1 || X.cols() < 1) throw ArgumentError("count matrix is empty");
    if (y.size() != X.rows() || t.size() != X.rows())
        throw ArgumentError("responses and exposures must have one entry per replicate");
    if (tree && static_cast<Eigen::Index>(tree->num_leaves()) != X.cols())
        throw ArgumentError("count matrix columns do not match the tree's leaves");
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (!(t[i] > 0.0) || !std::isfinite(t[i]))
            throw ArgumentError("exposure of replicate " + std::to_string(i + 1) + " must be positive");
        if (!std::isfinite(y[i])) throw ArgumentError("response of replicate " + std::to_string(i + 1) + " is not finite");
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            if (!(X(i, j) >= 0.0) || !std::isfinite(X(i, j)))
                throw ArgumentError("count " + cell(i, j) + " must be a non-negative number");
    }
}

ModelInputs ModelInputs::from_counts(const Eigen::MatrixXi& X, const SpinDataset& data,
                                     std::optional<TreeShape> tree) {
    ModelInputs in;
    in.X = X.cast<double>();
    const auto n = static_cast<Eigen::Index>(data.num_replicates());
    if (X.rows() != n) throw ArgumentError("count matrix rows do not match the replicates");
    in.y.resize(n);
    in.t.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        in.y[i] = data.replicates[static_cast<std::size_t>(i)].response;
        in.t[i] = data.replicates[static_cast<std::size_t>(i)].exposure;
    }
    in.tree = std::move(tree);
    in.validate();
    return in;
}

FitState FitState::zeros(Eigen::Index n, Eigen::Index m, Eigen::Index p) {
    FitState s;
    s.gamma = Eigen::VectorXd::Zero(p);
    s.zeta_b = Eigen::VectorXd::Zero(n - 1);
    s.zeta_c = Eigen::VectorXd::Zero(m - 1);
    s.k_b = Eigen::VectorXd::Zero(n - 1);
    s.k_c = Eigen::VectorXd::Zero(m - 1);
    return s;
}

Eigen::Index FitState::packed_size() const {
    return gamma.size() + 2 + zeta_b.size() + zeta_c.size() + k_b.size() + k_c.size();
}

Eigen::VectorXd FitState::pack() const {
    Eigen::VectorXd v(packed_size());
    v << gamma, zeta_a, zeta_b, zeta_c, k_a, k_b, k_c;
    return v;
}

void FitState::unpack(const Eigen::VectorXd& packed) {
    if (packed.size() != packed_size()) throw InternalError("packed parameter vector has the wrong length");
    Eigen::Index at = 0;
    const auto take = [&](Eigen::VectorXd& v) {
        v = packed.segment(at, v.size());
        at += v.size();
    };
    take(gamma);
    zeta_a = packed[at++];
    take(zeta_b);
    take(zeta_c);
    k_a = packed[at++];
    take(k_b);
    take(k_c);
}

void FitState::validate(const ModelInputs& inputs) const {
    const auto n = inputs.num_replicates(), m = inputs.num_leaves();
    if (gamma.size() != inputs.num_coefficients() || zeta_b.size() != n - 1 || k_b.size() != n - 1 ||
        zeta_c.size() != m - 1 || k_c.size() != m - 1)
        throw ArgumentError("fit state shapes do not match the data");
    if (!(omega.array() > 0.0).all()) throw ArgumentError("omega components must be positive");
    if (!pack().allFinite() || !omega.allFinite()) throw ArgumentError("fit state has non-finite entries");
}

bool operator==(const FitState& a, const FitState& b) {
    return same_vector(a.gamma, b.gamma) && a.zeta_a == b.zeta_a && same_vector(a.zeta_b, b.zeta_b) &&
           same_vector(a.zeta_c, b.zeta_c) && a.k_a == b.k_a && same_vector(a.k_b, b.k_b) &&
           same_vector(a.k_c, b.k_c) && a.omega == b.omega;
}

ExpectedCounts expected_counts(const ModelInputs& inputs, const FitState& state) {
    const auto n = inputs.num_replicates(), m = inputs.num_leaves();
    const Eigen::VectorXd beta = inputs.leaf_effects(state.gamma);
    ExpectedCounts out;
    out.value.resize(n, m);
    out.clamped.assign(static_cast<std::size_t>(n * m), 0);
    const double base = state.zeta_a + 0.5 * std::exp(state.k_a);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double row = i > 0 ? state.zeta_b[i - 1] + 0.5 * std::exp(state.k_b[i - 1]) : 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double col = j > 0 ? state.zeta_c[j - 1] + 0.5 * std::exp(state.k_c[j - 1]) : 0.0;
            double e = base + row + col + inputs.y[i] * beta[j];
            if (!std::isfinite(e)) throw NumericalError("non-finite expected count at cell " + cell(i, j));
            if (e > kExponentCap) {
                e = kExponentCap;
                out.clamped[static_cast<std::size_t>(i * m + j)] = 1;
                ++out.num_clamped;
            }
            out.value(i, j) = inputs.t[i] * std::exp(e);
        }
    }
    return out;
}

double linear_predictor(const ModelInputs& inputs, const FitState& state, Eigen::Index i, Eigen::Index j) {
    if (i < 0 || i >= inputs.num_replicates() || j < 0 || j >= inputs.num_leaves())
        throw ArgumentError("cell " + cell(i, j) + " is out of range");
    const Eigen::VectorXd beta = inputs.leaf_effects(state.gamma);
    return state.zeta_a + (i > 0 ? state.zeta_b[i - 1] : 0.0) + (j > 0 ? state.zeta_c[j - 1] : 0.0) +
           inputs.y[i] * beta[j];
}

double complete_log_likelihood(const ModelInputs& inputs, double a, const Eigen::VectorXd& b,
                               const Eigen::VectorXd& c, const Eigen::VectorXd& coeffs) {
    const auto n = inputs.num_replicates(), m = inputs.num_leaves();
    if (b.size() != n || c.size() != m) throw ArgumentError("random effects have the wrong length");
    const Eigen::VectorXd beta = inputs.leaf_effects(coeffs);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            const double eta = a + b[i] + c[j] + inputs.y[i] * beta[j];
            const double x = inputs.X(i, j);
            total += x * (std::log(inputs.t[i]) + eta) - inputs.t[i] * std::exp(eta) - std::lgamma(x + 1.0);
        }
    return total;
}

SurrogateObjective::SurrogateObjective(const ModelInputs& inputs, const Eigen::SparseMatrix<double>& precision,
                                       const Eigen::Vector3d& omega)
    : inputs_(inputs), precision_(&precision), omega_(omega) {
    const auto p = inputs.num_coefficients();
    if (precision.rows() != p || precision.cols() != p)
        throw InternalError("precision matrix does not match the coefficient count");
    if (!(omega.array() > 0.0).all()) throw ArgumentError("omega components must be positive");
}

SurrogateObjective::SurrogateObjective(const ModelInputs& inputs, const EStepWeights& weights,
                                       const Eigen::Vector3d& omega)
    : inputs_(inputs), weights_(&weights), omega_(omega) {
    const auto p = inputs.num_coefficients();
    if (weights.rho.size() != p || weights.upsilon.size() != static_cast<Eigen::Index>(weights.pairs.size()))
        throw InternalError("E-step weights do not match the coefficient count");
    for (const auto& [a, b] : weights.pairs)
        if (a < 0 || b < 0 || a >= p || b >= p) throw InternalError("E-step pair index out of range");
    if (!(omega.array() > 0.0).all()) throw ArgumentError("omega components must be positive");
}

double SurrogateObjective::value(const Eigen::VectorXd& packed) const {
    Eigen::VectorXd unused;
    return (*this)(packed, unused);
}

double SurrogateObjective::operator()(const Eigen::VectorXd& packed, Eigen::VectorXd& gradient) const {
    const Unpacked u = unpack_params(inputs_, packed);
    const auto n = u.n, m = u.m;
    const double wa = omega_[0], wb = omega_[1], wc = omega_[2];
    const Eigen::VectorXd beta = inputs_.leaf_effects(u.gamma);
    const double kappa_a = std::exp(u.ka);
    const Eigen::VectorXd kappa_b = u.kb.array().exp();
    const Eigen::VectorXd kappa_c = u.kc.array().exp();

    Eigen::VectorXd beta_grad = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd row_eps = Eigen::VectorXd::Zero(n), col_eps = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd row_mass = Eigen::VectorXd::Zero(n), col_mass = Eigen::VectorXd::Zero(m);
    double value = 0.0;
    std::size_t clamped = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double zb = i > 0 ? u.zb[i - 1] : 0.0;
        const double hb = i > 0 ? 0.5 * kappa_b[i - 1] : 0.0;
        const double yi = inputs_.y[i], ti = inputs_.t[i];
        double row_value = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            const double zc = j > 0 ? u.zc[j - 1] : 0.0;
            const double hc = j > 0 ? 0.5 * kappa_c[j - 1] : 0.0;
            const double lin = u.za + zb + zc + yi * beta[j];
            double e = lin + 0.5 * kappa_a + hb + hc;
            if (!std::isfinite(e)) throw NumericalError("non-finite expected count at cell " + cell(i, j));
            bool capped = false;
            if (e > kExponentCap) {
                e = kExponentCap;
                capped = true;
                ++clamped;
            }
            const double expected = ti * std::exp(e);
            const double x = inputs_.X(i, j);
            row_value += x * lin - expected;
            const double moving = capped ? 0.0 : expected;
            const double eps = x - moving;
            beta_grad[j] += eps * yi;
            row_eps[i] += eps;
            col_eps[j] += eps;
            row_mass[i] += moving;
            col_mass[j] += moving;
        }
        value += row_value;
    }
    last_clamped_ = clamped;

    Eigen::VectorXd pg;
    double quadratic = 0.0;
    if (weights_ != nullptr) {
        pg = weights_->rho.cwiseProduct(u.gamma);
        quadratic = pg.dot(u.gamma);
        for (std::size_t q = 0; q < weights_->pairs.size(); ++q) {
            const auto [a, b] = weights_->pairs[q];
            const double w = weights_->upsilon[static_cast<Eigen::Index>(q)];
            const double diff = u.gamma[a] - u.gamma[b];
            quadratic += w * diff * diff;
            pg[a] += w * diff;
            pg[b] -= w * diff;
        }
    } else {
        pg = *precision_ * u.gamma;
        quadratic = u.gamma.dot(pg);
    }
    value -= 0.5 * quadratic;
    value -= (u.za * u.za + kappa_a) / (2.0 * wa);
    value -= (u.zb.squaredNorm() + kappa_b.sum()) / (2.0 * wb);
    value -= (u.zc.squaredNorm() + kappa_c.sum()) / (2.0 * wc);
    value -= 0.5 * std::log(wa) + 0.5 * static_cast<double>(n - 1) * std::log(wb) +
             0.5 * static_cast<double>(m - 1) * std::log(wc);
    value += 0.5 * (u.ka + u.kb.sum() + u.kc.sum()) + 0.5 * static_cast<double>(n + m - 1);
    if (!std::isfinite(value)) throw NumericalError("surrogate objective is not finite");

    gradient.resize(packed.size());
    Eigen::Index at = 0;
    gradient.segment(at, u.p) = inputs_.aggregate(beta_grad) - pg;
    at += u.p;
    const double total_mass = row_mass.sum();
    gradient[at++] = -u.za / wa + row_eps.sum();
    for (Eigen::Index i = 1; i < n; ++i) gradient[at++] = -u.zb[i - 1] / wb + row_eps[i];
    for (Eigen::Index j = 1; j < m; ++j) gradient[at++] = -u.zc[j - 1] / wc + col_eps[j];
    gradient[at++] = -kappa_a / (2.0 * wa) + 0.5 - 0.5 * total_mass * kappa_a;
    for (Eigen::Index i = 1; i < n; ++i)
        gradient[at++] = -kappa_b[i - 1] / (2.0 * wb) + 0.5 - 0.5 * row_mass[i] * kappa_b[i - 1];
    for (Eigen::Index j = 1; j < m; ++j)
        gradient[at++] = -kappa_c[j - 1] / (2.0 * wc) + 0.5 - 0.5 * col_mass[j] * kappa_c[j - 1];
    return value;
}

namespace {

Eigen::VectorXd full_gradient(const ModelInputs& inputs, const FitState& state,
                              const Eigen::SparseMatrix<double>* precision) {
    state.validate(inputs);
    const auto p = inputs.num_coefficients();
    Eigen::SparseMatrix<double> zero(p, p);
    SurrogateObjective objective(inputs, precision ? *precision : zero, state.omega);
    Eigen::VectorXd g;
    objective(state.pack(), g);
    return g;
}

}  // namespace

double gva_lower_bound(const ModelInputs& inputs, const FitState& state) {
    state.validate(inputs);
    const auto p = inputs.num_coefficients();
    Eigen::SparseMatrix<double> zero(p, p);
    SurrogateObjective objective(inputs, zero, state.omega);
    return objective.value(state.pack()) + inputs.data_constant();
}

Eigen::VectorXd grad_gamma(const ModelInputs& inputs, const FitState& state,
                           const Eigen::SparseMatrix<double>& precision) {
    return full_gradient(inputs, state, &precision).head(inputs.num_coefficients());
}

ZetaGradient grad_zeta(const ModelInputs& inputs, const FitState& state) {
    const Eigen::VectorXd g = full_gradient(inputs, state, nullptr);
    const auto p = inputs.num_coefficients(), n = inputs.num_replicates(), m = inputs.num_leaves();
    return {g[p], g.segment(p + 1, n - 1), g.segment(p + n, m - 1)};
}

ZetaGradient grad_k(const ModelInputs& inputs, const FitState& state) {
    const Eigen::VectorXd g = full_gradient(inputs, state, nullptr);
    const auto p = inputs.num_coefficients(), n = inputs.num_replicates(), m = inputs.num_leaves();
    const auto at = p + n + m - 1;
    return {g[at], g.segment(at + 1, n - 1), g.segment(at + n, m - 1)};
}

struct CurvaturePreconditioner::Impl {
    Eigen::Index p = 0;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool factored = false;
    Eigen::VectorXd coefficient_diag;
    Eigen::VectorXd rest_diag;
};

CurvaturePreconditioner::CurvaturePreconditioner(const ModelInputs& inputs, const FitState& state,
                                                 const Eigen::SparseMatrix<double>& precision)
    : impl_(std::make_unique<Impl>()) {
    const auto n = inputs.num_replicates(), m = inputs.num_leaves(), p = inputs.num_coefficients();
    impl_->p = p;
    const auto expected = expected_counts(inputs, state);
    const Eigen::MatrixXd& mu = expected.value;

    Eigen::VectorXd leaf_weight = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < n; ++i) leaf_weight += inputs.y[i] * inputs.y[i] * mu.row(i).transpose();

    // D^T diag(w) D couples each node with itself and its ancestors through the
    // weight below the deeper node.
    std::vector<Eigen::Triplet<double>> entries;
    constexpr double ridge = 1e-6;
    if (inputs.tree) {
        const Eigen::VectorXd below = inputs.tree->aggregate(leaf_weight);
        for (Eigen::Index c = 0; c < p; ++c) {
            entries.emplace_back(c, c, below[c] + ridge);
            for (Eigen::Index a = c; a > 0;) {
                a = (a - 1) / 2;
                entries.emplace_back(a, c, below[c]);
                entries.emplace_back(c, a, below[c]);
            }
        }
    } else {
        for (Eigen::Index j = 0; j < m; ++j) entries.emplace_back(j, j, leaf_weight[j] + ridge);
    }
    Eigen::SparseMatrix<double> curvature(p, p);
    curvature.setFromTriplets(entries.begin(), entries.end());
    curvature += precision;
    impl_->coefficient_diag = curvature.diagonal();
    impl_->ldlt.compute(curvature);
    impl_->factored = impl_->ldlt.info() == Eigen::Success;

    const double wa = state.omega[0], wb = state.omega[1], wc = state.omega[2];
    const Eigen::VectorXd row_mass = mu.rowwise().sum();
    const Eigen::VectorXd col_mass = mu.colwise().sum().transpose();
    const double total = row_mass.sum();
    const auto k_curv = [](double kappa, double w, double mass) {
        return kappa / (2.0 * w) + 0.5 * kappa * mass + 0.25 * kappa * kappa * mass;
    };
    Eigen::VectorXd rest(2 * (n + m - 1));
    Eigen::Index at = 0;
    rest[at++] = 1.0 / wa + total;
    for (Eigen::Index i = 1; i < n; ++i) rest[at++] = 1.0 / wb + row_mass[i];
    for (Eigen::Index j = 1; j < m; ++j) rest[at++] = 1.0 / wc + col_mass[j];
    rest[at++] = k_curv(std::exp(state.k_a), wa, total);
    for (Eigen::Index i = 1; i < n; ++i) rest[at++] = k_curv(std::exp(state.k_b[i - 1]), wb, row_mass[i]);
    for (Eigen::Index j = 1; j < m; ++j) rest[at++] = k_curv(std::exp(state.k_c[j - 1]), wc, col_mass[j]);
    impl_->rest_diag = rest.cwiseMax(1e-12);
}

CurvaturePreconditioner::~CurvaturePreconditioner() = default;
CurvaturePreconditioner::CurvaturePreconditioner(CurvaturePreconditioner&&) noexcept = default;
CurvaturePreconditioner& CurvaturePreconditioner::operator=(CurvaturePreconditioner&&) noexcept = default;

Eigen::VectorXd CurvaturePreconditioner::solve(const Eigen::VectorXd& r) const {
    const auto p = impl_->p;
    Eigen::VectorXd out(r.size());
    Eigen::VectorXd head;
    if (impl_->factored) head = impl_->ldlt.solve(r.head(p));
    if (!impl_->factored || !head.allFinite()) head = r.head(p).cwiseQuotient(impl_->coefficient_diag);
    out.head(p) = head;
    out.tail(r.size() - p) = r.tail(r.size() - p).cwiseQuotient(impl_->rest_diag);
    return out;
}

double sdr_score(std::span<const double> x, std::span<const double> beta) {
    if (x.size() != beta.size()) throw ArgumentError("score vectors differ in length");
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += beta[j] * x[j];
    return s;
}

double sdr_score(const Eigen::VectorXd& x, const Eigen::VectorXd& beta) {
    return sdr_score(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                     std::span<const double>(beta.data(), static_cast<std::size_t>(beta.size())));
}

std::vector<double> posterior_response_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& beta,
                                              const Eigen::VectorXd& intercepts,
                                              const std::vector<double>& y_grid,
                                              const std::vector<double>& y_prior) {
    if (x.size() != beta.size() || intercepts.size() != beta.size())
        throw ArgumentError("x, beta and intercepts must have equal length");
    if (y_grid.size() != y_prior.size() || y_grid.empty())
        throw ArgumentError("response grid and prior must be non-empty and of equal length");
    const double score = sdr_score(x, beta);
    std::vector<double> logw(y_grid.size());
    for (std::size_t g = 0; g < y_grid.size(); ++g) {
        const double yv = y_grid[g];
        double lw = y_prior[g] > 0.0 ? std::log(y_prior[g]) : -std::numeric_limits<double>::infinity();
        lw += yv * score;
        for (Eigen::Index j = 0; j < beta.size(); ++j) lw -= std::exp(intercepts[j] + yv * beta[j]);
        logw[g] = lw;
    }
    const double top = *std::max_element(logw.begin(), logw.end());
    if (!std::isfinite(top)) throw ArgumentError("prior puts no mass on the grid");
    double total = 0.0;
    for (auto& w : logw) total += (w = std::exp(w - top));
    for (auto& w : logw) w /= total;
    return logw;
}

namespace detail {

nlohmann::json state_json(const FitState& state) {
    return {{"gamma", vector_json(state.gamma)},   {"zeta_a", state.zeta_a},
            {"zeta_b", vector_json(state.zeta_b)}, {"zeta_c", vector_json(state.zeta_c)},
            {"k_a", state.k_a},                    {"k_b", vector_json(state.k_b)},
            {"k_c", vector_json(state.k_c)},       {"omega", vector_json(state.omega)}};
}

FitState state_from(const nlohmann::json& j) {
    return parse_json_section("fit state", [&] {
        FitState s;
        s.gamma = vector_from_json(j.at("gamma"));
        s.zeta_a = j.at("zeta_a").get<double>();
        s.zeta_b = vector_from_json(j.at("zeta_b"));
        s.zeta_c = vector_from_json(j.at("zeta_c"));
        s.k_a = j.at("k_a").get<double>();
        s.k_b = vector_from_json(j.at("k_b"));
        s.k_c = vector_from_json(j.at("k_c"));
        const Eigen::VectorXd omega = vector_from_json(j.at("omega"));
        if (omega.size() != 3) throw ParseError("fit state: omega must have three entries");
        s.omega = omega;
        return s;
    });
}

}  // namespace detail

std::string state_to_json(const FitState& state) { return detail::state_json(state).dump(); }

FitState state_from_json(const std::string& text) {
    return detail::parse_json_section("fit state", [&] { return detail::state_from(nlohmann::json::parse(text)); });
}

}  // namespace spinlets
