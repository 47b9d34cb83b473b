#include "displab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace displab {

double psi(int m, double n, double x) {
    if (m < 0) throw std::invalid_argument("psi: m must be >= 0");
    if (!(n > 0.0)) throw std::invalid_argument("psi: n must be > 0");
    if (m == 0) return std::exp(-n * x);
    if (x == 0.0) return 0.0;
    return std::pow(x, m) * std::exp(-n * x);
}

double c_constant(int m, double n) {
    if (m < 1) throw std::invalid_argument("c_constant: integral diverges for m = 0");
    if (!(n > 0.0)) throw std::invalid_argument("c_constant: n must be > 0");
    return std::tgamma(static_cast<double>(m)) / std::pow(n, m);
}

SpectralFunction psi_multiplier(int m, double n, double scale) {
    return {[m, n, scale](double x) { return Complex(psi(m, n, scale * x), 0.0); }};
}

SpectralFunction heat_multiplier(double t) {
    if (t < 0.0) throw std::invalid_argument("heat: t must be >= 0");
    return {[t](double x) { return Complex(std::exp(-t * x), 0.0); }};
}

SpectralFunction schrodinger_multiplier(double t) {
    return {[t](double x) { return std::exp(Complex(0.0, t * x)); }};
}

SpectralFunction complex_semigroup_multiplier(Complex z) {
    if (z.real() < 0.0) throw std::invalid_argument("complex_semigroup: Re z must be >= 0");
    return {[z](double x) { return std::exp(-z * x); }};
}

SpectralFunction wave_cos_multiplier(double t) {
    return {[t](double x) { return Complex(std::cos(t * std::sqrt(std::max(x, 0.0))), 0.0); }};
}

SpectralFunction wave_sin_multiplier(double t) {
    return {[t](double x) { return Complex(std::sin(t * std::sqrt(std::max(x, 0.0))), 0.0); }};
}

namespace {

struct Mode1D {
    double lambda;
    Eigen::VectorXd values;  // l2-normalized
};

// Eigenpairs of the 3-point periodic Laplacian (2u_j - u_{j+1} - u_{j-1})/h^2.
std::vector<Mode1D> torus_modes_1d(int n, double h) {
    const double pi = std::numbers::pi;
    std::vector<Mode1D> modes;
    modes.reserve(n);
    auto lam = [&](int k) {
        const double s = std::sin(pi * k / n);
        return 4.0 / (h * h) * s * s;
    };
    {
        Mode1D m{0.0, Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)))};
        modes.push_back(std::move(m));
    }
    for (int k = 1; k < (n + 1) / 2; ++k) {
        Eigen::VectorXd c(n), s(n);
        for (int j = 0; j < n; ++j) {
            c[j] = std::sqrt(2.0 / n) * std::cos(2.0 * pi * k * j / n);
            s[j] = std::sqrt(2.0 / n) * std::sin(2.0 * pi * k * j / n);
        }
        modes.push_back({lam(k), std::move(c)});
        modes.push_back({lam(k), std::move(s)});
    }
    if (n % 2 == 0) {
        Eigen::VectorXd a(n);
        for (int j = 0; j < n; ++j) a[j] = (j % 2 == 0 ? 1.0 : -1.0) / std::sqrt(static_cast<double>(n));
        modes.push_back({lam(n / 2), std::move(a)});
    }
    return modes;
}

}  // namespace

SelfAdjointOperator SelfAdjointOperator::torus_laplacian(std::shared_ptr<const Space> space) {
    if (space->geometry() != Geometry::torus_grid)
        throw std::invalid_argument("torus_laplacian: space is not a torus grid");
    const int N = space->size();
    if (N > kDenseCap)
        throw std::invalid_argument("torus_laplacian: space exceeds dense cap; use FourierTorusOperator");

    const int dim = space->dim();
    const int n = space->n_per_axis();
    const auto axis = torus_modes_1d(n, space->spacing());

    SelfAdjointOperator op;
    op.space_ = space;
    op.builder_ = OperatorBuilder::torus_laplacian_analytic;
    op.eigenvalues_.resize(N);
    op.modes_.resize(N, N);

    const double mu_scale = std::pow(space->spacing(), -0.5 * dim);
    std::vector<int> tuple(dim, 0);
    std::vector<std::pair<double, int>> order(N);
    Eigen::MatrixXd cols(N, N);
    for (int col = 0; col < N; ++col) {
        double lambda = 0.0;
        for (int a = 0; a < dim; ++a) lambda += axis[tuple[a]].lambda;
        for (int x = 0; x < N; ++x) {
            long rem = x;
            double v = mu_scale;
            for (int a = 0; a < dim; ++a) {
                v *= axis[tuple[a]].values[static_cast<int>(rem % n)];
                rem /= n;
            }
            cols(x, col) = v;
        }
        order[col] = {lambda, col};
        for (int a = 0; a < dim; ++a) {
            if (++tuple[a] < static_cast<int>(axis.size())) break;
            tuple[a] = 0;
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (int k = 0; k < N; ++k) {
        op.eigenvalues_[k] = order[k].first;
        op.modes_.col(k) = cols.col(order[k].second);
    }
    op.clamp_kernel();
    return op;
}

SelfAdjointOperator SelfAdjointOperator::interval_laplacian(std::shared_ptr<const Space> space) {
    if (space->geometry() != Geometry::interval_grid)
        throw std::invalid_argument("interval_laplacian: space is not an interval grid");
    const int n = space->size();
    if (n > kDenseCap) throw std::invalid_argument("interval_laplacian: space exceeds dense cap");
    const double h = space->spacing();
    const double pi = std::numbers::pi;

    SelfAdjointOperator op;
    op.space_ = space;
    op.builder_ = OperatorBuilder::interval_laplacian_analytic;
    op.eigenvalues_.resize(n);
    op.modes_.resize(n, n);
    const double mu_scale = 1.0 / std::sqrt(h);

    if (space->boundary_condition() == BoundaryCondition::dirichlet) {
        for (int k = 1; k <= n; ++k) {
            const double s = std::sin(0.5 * pi * k / (n + 1));
            op.eigenvalues_[k - 1] = 4.0 / (h * h) * s * s;
            for (int j = 0; j < n; ++j)
                op.modes_(j, k - 1) =
                    mu_scale * std::sqrt(2.0 / (n + 1)) * std::sin(pi * k * (j + 1) / (n + 1));
        }
    } else {
        for (int k = 0; k < n; ++k) {
            const double s = std::sin(0.5 * pi * k / n);
            op.eigenvalues_[k] = 4.0 / (h * h) * s * s;
            const double scale = (k == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (int j = 0; j < n; ++j)
                op.modes_(j, k) = mu_scale * scale * std::cos(pi * k * (j + 0.5) / n);
        }
    }
    op.clamp_kernel();
    return op;
}

SelfAdjointOperator SelfAdjointOperator::from_dense(std::shared_ptr<const Space> space,
                                                    const Eigen::MatrixXd& op_matrix,
                                                    OperatorBuilder tag) {
    const int n = space->size();
    if (n > kDenseCap) throw std::invalid_argument("dense operator exceeds cap");
    // Symmetrize in the mu inner product: S = W^{1/2} H W^{-1/2}.
    Eigen::VectorXd sqw(n);
    for (int i = 0; i < n; ++i) sqw[i] = std::sqrt(space->weight(i));
    Eigen::MatrixXd S = sqw.asDiagonal() * op_matrix * sqw.cwiseInverse().asDiagonal();
    S = 0.5 * (S + S.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    SelfAdjointOperator op;
    op.space_ = space;
    op.builder_ = tag;
    op.eigenvalues_ = es.eigenvalues();
    op.modes_ = sqw.cwiseInverse().asDiagonal() * es.eigenvectors();
    op.clamp_kernel();
    return op;
}

SelfAdjointOperator SelfAdjointOperator::graph_laplacian(std::shared_ptr<const Space> space) {
    if (space->geometry() != Geometry::general_graph)
        throw std::invalid_argument("graph_laplacian: space is not a general graph");
    const int n = space->size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : space->edges()) {
        H(e.a, e.a) += e.weight / space->weight(e.a);
        H(e.b, e.b) += e.weight / space->weight(e.b);
        H(e.a, e.b) -= e.weight / space->weight(e.a);
        H(e.b, e.a) -= e.weight / space->weight(e.b);
    }
    return from_dense(space, H, OperatorBuilder::graph_laplacian_dense);
}

SelfAdjointOperator SelfAdjointOperator::divergence_form(std::shared_ptr<const Space> space,
                                                         const RealState& a) {
    if (space->geometry() != Geometry::torus_grid)
        throw std::invalid_argument("divergence_form: only torus grids supported");
    if (a.size() != space->size())
        throw std::invalid_argument("divergence_form: coefficient field size mismatch");
    for (int i = 0; i < a.size(); ++i)
        if (!(a[i] > 0.0)) throw std::invalid_argument("divergence_form: coefficients must be positive");

    const int N = space->size();
    const int n = space->n_per_axis();
    const int dim = space->dim();
    const double h = space->spacing();
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(N, N);
    long stride = 1;
    for (int ax = 0; ax < dim; ++ax) {
        for (long x = 0; x < N; ++x) {
            const long axis_idx = (x / stride) % n;
            const long nb = (axis_idx + 1 < n) ? x + stride : x + stride - stride * n;
            const double ae = 0.5 * (a[x] + a[nb]);  // edge coefficient
            H(x, x) += ae / (h * h);
            H(nb, nb) += ae / (h * h);
            H(x, nb) -= ae / (h * h);
            H(nb, x) -= ae / (h * h);
        }
        stride *= n;
    }
    return from_dense(space, H, OperatorBuilder::divergence_form_dense);
}

void SelfAdjointOperator::clamp_kernel() {
    const double lmax = eigenvalues_.size() ? eigenvalues_[eigenvalues_.size() - 1] : 0.0;
    const double tol = kKernelClampRel * std::max(lmax, 1.0);
    for (int k = 0; k < eigenvalues_.size(); ++k) {
        if (eigenvalues_[k] < -1e-10)
            throw std::runtime_error("operator has a negative eigenvalue beyond tolerance");
        if (eigenvalues_[k] < tol) eigenvalues_[k] = 0.0;
    }
}

double SelfAdjointOperator::lambda_min_positive() const {
    for (int k = 0; k < size(); ++k)
        if (eigenvalues_[k] > 0.0) return eigenvalues_[k];
    return 0.0;
}

Complex SelfAdjointOperator::inner(const State& u, const State& v) const {
    Complex acc = 0.0;
    for (int i = 0; i < size(); ++i) acc += std::conj(u[i]) * v[i] * space_->weight(i);
    return acc;
}

double SelfAdjointOperator::norm(const State& v) const {
    return std::sqrt(std::real(inner(v, v)));
}

Eigen::VectorXcd SelfAdjointOperator::coefficients(const State& v) const {
    Eigen::VectorXcd wv = v;
    for (int i = 0; i < size(); ++i) wv[i] *= space_->weight(i);
    return modes_.transpose() * wv;
}

State SelfAdjointOperator::from_coefficients(const Eigen::VectorXcd& c) const {
    return modes_ * c;
}

State SelfAdjointOperator::apply_calculus(const SpectralFunction& f, const State& v) const {
    Eigen::VectorXcd c = coefficients(v);
    for (int k = 0; k < size(); ++k) {
        const Complex fv = f(eigenvalues_[k]);
        if (!std::isfinite(fv.real()) || !std::isfinite(fv.imag()))
            throw std::runtime_error("apply_calculus: multiplier not finite at eigenvalue " +
                                     std::to_string(eigenvalues_[k]));
        c[k] *= fv;
    }
    return from_coefficients(c);
}

State SelfAdjointOperator::heat(double t, const State& v) const {
    return apply_calculus(heat_multiplier(t), v);
}
State SelfAdjointOperator::schrodinger(double t, const State& v) const {
    return apply_calculus(schrodinger_multiplier(t), v);
}
State SelfAdjointOperator::complex_semigroup(Complex z, const State& v) const {
    return apply_calculus(complex_semigroup_multiplier(z), v);
}
State SelfAdjointOperator::wave_cos(double t, const State& v) const {
    return apply_calculus(wave_cos_multiplier(t), v);
}
State SelfAdjointOperator::wave_sin(double t, const State& v) const {
    return apply_calculus(wave_sin_multiplier(t), v);
}

State SelfAdjointOperator::kernel_projector(const State& v) const {
    Eigen::VectorXcd c = coefficients(v);
    for (int k = 0; k < size(); ++k)
        if (eigenvalues_[k] > 0.0) c[k] = 0.0;
    return from_coefficients(c);
}

Eigen::MatrixXd SelfAdjointOperator::kernel_matrix(const std::function<double(double)>& f) const {
    Eigen::VectorXd fv(size());
    for (int k = 0; k < size(); ++k) fv[k] = f(eigenvalues_[k]);
    return modes_ * fv.asDiagonal() * modes_.transpose();
}

Eigen::MatrixXcd SelfAdjointOperator::kernel_matrix_c(const SpectralFunction& f) const {
    Eigen::VectorXcd fv(size());
    for (int k = 0; k < size(); ++k) fv[k] = f(eigenvalues_[k]);
    return modes_.cast<Complex>() * fv.asDiagonal() * modes_.transpose().cast<Complex>();
}

double SelfAdjointOperator::sobolev_norm(double s, const State& v) const {
    if (s < 0.0) throw std::invalid_argument("sobolev_norm: s must be >= 0");
    Eigen::VectorXcd c = coefficients(v);
    double acc = 0.0;
    for (int k = 0; k < size(); ++k)
        acc += std::pow(1.0 + eigenvalues_[k], s) * std::norm(c[k]);
    return std::sqrt(acc);
}

double SelfAdjointOperator::reproducing_residual(int m, double n, int points_per_decade) const {
    if (m < 1) throw std::invalid_argument("reproducing_residual: m must be >= 1");
    const double lmin = lambda_min_positive();
    const double lmax = lambda_max();
    if (lmin == 0.0) return 0.0;  // spectrum is {0}: identity handled by P_N(H)
    const double s_lo = 1e-8 / lmax;
    const double s_hi = 1e8 / lmin;
    const double decades = std::log10(s_hi / s_lo);
    const int npts = std::max(2, static_cast<int>(std::ceil(decades * points_per_decade)));
    const double du = std::log(s_hi / s_lo) / (npts - 1);
    const double kappa = 1.0 / c_constant(m, n);

    double worst = 0.0;
    for (int k = 0; k < size(); ++k) {
        const double lam = eigenvalues_[k];
        if (lam <= 0.0) continue;
        // int psi(s lam) ds/s = int psi(e^u lam) du, trapezoid in u = log s
        double acc = 0.0;
        for (int i = 0; i < npts; ++i) {
            const double s = s_lo * std::exp(i * du);
            const double w = (i == 0 || i == npts - 1) ? 0.5 : 1.0;
            acc += w * psi(m, n, s * lam);
        }
        acc *= du;
        worst = std::max(worst, std::abs(kappa * acc - 1.0));
    }
    return worst;
}

static double upper_incomplete_gamma_int(int m, double x) {
    // Gamma(m, x) = (m-1)! e^{-x} sum_{j<m} x^j / j!, integer m >= 1
    double fact = 1.0;
    for (int j = 2; j < m; ++j) fact *= j;
    double sum = 0.0, term = 1.0;
    for (int j = 0; j < m; ++j) {
        if (j > 0) term *= x / j;
        sum += term;
    }
    return fact * std::exp(-x) * sum;
}

SelfAdjointOperator::SquareFunctionResult SelfAdjointOperator::square_function_norm(
    int m, double n, double q, const State& v, std::span<const double> u_grid) const {
    if (m < 2) throw std::invalid_argument("square_function_norm: m must be >= 2");
    SpectralFunction phi{[m, n](double lam) {
        return Complex(upper_incomplete_gamma_int(m, n * lam) / std::pow(n, m), 0.0);
    }};
    SquareFunctionResult out;
    out.low_frequency_term = lq_norm(*space_, apply_calculus(phi, v), q);

    // trapezoid in log u over the supplied grid
    double acc = 0.0;
    for (size_t i = 0; i < u_grid.size(); ++i) {
        const double u = u_grid[i];
        const double val = lq_norm(*space_, apply_calculus(psi_multiplier(m, n, u), v), q);
        double w = 0.0;
        if (i > 0) w += 0.5 * std::log(u_grid[i] / u_grid[i - 1]);
        if (i + 1 < u_grid.size()) w += 0.5 * std::log(u_grid[i + 1] / u_grid[i]);
        acc += w * val * val;
    }
    out.square_term = std::sqrt(acc);
    return out;
}

double lq_norm(const Space& space, const State& v, double q) {
    if (q < 1.0) throw std::invalid_argument("lq_norm: q must be >= 1");
    if (std::isinf(q)) {
        double m = 0.0;
        for (int i = 0; i < v.size(); ++i) m = std::max(m, std::abs(v[i]));
        return m;
    }
    double acc = 0.0;
    for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), q) * space.weight(i);
    return std::pow(acc, 1.0 / q);
}

}  // namespace displab
