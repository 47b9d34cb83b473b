#include "displab/kernels.hpp"

#include <Eigen/SVD>
#include <array>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace displab {

double theta_heat_kernel(int dim, double period, double t, std::span<const double> deltas) {
    if (!(t > 0.0)) throw std::invalid_argument("theta_heat_kernel: t must be positive");
    const double pi = std::numbers::pi;
    double prod = 1.0;
    for (int a = 0; a < dim; ++a) {
        double acc = 0.0;
        for (int img = -5; img <= 5; ++img) {
            const double d = deltas[a] + img * period;
            acc += std::exp(-d * d / (4.0 * t));
        }
        prod *= acc / std::sqrt(4.0 * pi * t);
    }
    return prod;
}

bool within_wrap_budget(const Space& space, double extent) {
    if (space.geometry() != Geometry::torus_grid) return true;
    return extent < space.period() / 4.0;
}

DueResult check_due(const SelfAdjointOperator& H, std::span<const double> t_grid) {
    const Space& sp = H.space();
    const double h = sp.spacing();
    DueResult out;
    for (double t : t_grid) {
        if (t > sp.diameter() * sp.diameter())
            throw std::invalid_argument("check_due: t above diameter^2");
        if (t < h * h) {
            out.warnings.push_back("t below spacing^2: discrete kernel is not Gaussian there");
            continue;
        }
        // p_t(x,x) = sum_k e^{-t lambda_k} phi_k(x)^2
        Eigen::VectorXd decay(H.size());
        for (int k = 0; k < H.size(); ++k) decay[k] = std::exp(-t * H.eigenvalues()[k]);
        Eigen::VectorXd diag =
            (H.modes() * decay.asDiagonal()).cwiseProduct(H.modes()).rowwise().sum();
        const double r = std::sqrt(t);
        for (int x = 0; x < sp.size(); ++x)
            out.sup_constant = std::max(out.sup_constant, diag[x] * sp.ball_measure({x, r}));
    }
    return out;
}

GaussianFit fit_gaussian_ue(const SelfAdjointOperator& H, const SpectralFunction& f,
                            std::span<const double> t_grid, int max_pairs) {
    const Space& sp = H.space();
    const int N = sp.size();
    GaussianFit best;
    best.C = std::numeric_limits<double>::infinity();

    // deterministic pair sample: strided (x, y)
    std::vector<std::pair<int, int>> pairs;
    const int stride = std::max(1, static_cast<int>(static_cast<long>(N) * N / max_pairs));
    for (long flat = 0; flat < static_cast<long>(N) * N; flat += stride)
        pairs.emplace_back(static_cast<int>(flat / N), static_cast<int>(flat % N));

    const std::array<double, 3> trial_cs{0.25, 0.125, 0.0625};
    std::array<double, 3> C{0.0, 0.0, 0.0};
    for (double t : t_grid) {
        Eigen::VectorXcd fv(H.size());
        for (int k = 0; k < H.size(); ++k) fv[k] = f(H.eigenvalues()[k]);
        const double r = std::sqrt(t);
        std::vector<int> xs;
        for (auto [x, y] : pairs) xs.push_back(x);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        std::vector<double> ball(sp.size(), -1.0);
        for (int x : xs) ball[x] = sp.ball_measure({x, r});
        for (auto [x, y] : pairs) {
            const double d = sp.dist(x, y);
            if (!within_wrap_budget(sp, d + r)) continue;
            // K(x,y) without the full dense kernel
            Complex kxy = 0.0;
            for (int k = 0; k < H.size(); ++k) kxy += H.modes()(x, k) * fv[k] * H.modes()(y, k);
            for (size_t ci = 0; ci < trial_cs.size(); ++ci)
                C[ci] = std::max(C[ci], std::abs(kxy) * ball[x] * std::exp(trial_cs[ci] * d * d / t));
        }
    }
    for (size_t ci = 0; ci < trial_cs.size(); ++ci) {
        if (C[ci] < best.C) {
            best.C = C[ci];
            best.c = trial_cs[ci];
        }
    }
    best.worst_ratio = 1.0;  // C is the sample supremum
    return best;
}

Eigen::MatrixXcd kernel_subblock(const SelfAdjointOperator& H, const SpectralFunction& f,
                                 std::span<const int> F, std::span<const int> E) {
    const int nf = static_cast<int>(F.size());
    const int ne = static_cast<int>(E.size());
    Eigen::MatrixXcd left(nf, H.size());
    for (int i = 0; i < nf; ++i)
        for (int k = 0; k < H.size(); ++k)
            left(i, k) = H.modes()(F[i], k) * f(H.eigenvalues()[k]);
    Eigen::MatrixXd right(H.size(), ne);
    for (int j = 0; j < ne; ++j) right.col(j) = H.modes().row(E[j]).transpose();
    return left * right.cast<Complex>();
}

double weighted_subblock_norm(const Space& space, const Eigen::MatrixXcd& block,
                              std::span<const int> F, std::span<const int> E) {
    Eigen::MatrixXcd scaled = block;
    for (int i = 0; i < scaled.rows(); ++i)
        scaled.row(i) *= std::sqrt(space.weight(F[i]));
    for (int j = 0; j < scaled.cols(); ++j)
        scaled.col(j) *= std::sqrt(space.weight(E[j]));
    if (scaled.rows() == 0 || scaled.cols() == 0) return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(scaled);
    return svd.singularValues()[0];
}

double localized_operator_norm(const SelfAdjointOperator& H, const SpectralFunction& f,
                               std::span<const int> F, std::span<const int> E) {
    return weighted_subblock_norm(H.space(), kernel_subblock(H, f, F, E), F, E);
}

DaviesGaffneyResult check_davies_gaffney(const SelfAdjointOperator& H,
                                         std::span<const int> E, std::span<const int> F,
                                         double t) {
    const Space& sp = H.space();
    DaviesGaffneyResult out;
    const double d = sp.set_distance(E, F);
    out.norm = localized_operator_norm(H, heat_multiplier(t), F, E);
    out.gaussian = std::exp(-d * d / (4.0 * t));
    out.ratio = out.norm / out.gaussian;
    if (sp.geometry() == Geometry::torus_grid)
        out.within_budget = t <= sp.period() * sp.period() / 16.0;
    return out;
}

FiniteSpeedResult check_finite_speed(const SelfAdjointOperator& H,
                                     std::span<const int> E, std::span<const int> F, double t) {
    const Space& sp = H.space();
    FiniteSpeedResult out;
    out.separation = sp.set_distance(E, F);
    out.inside_cone = t < out.separation - 3.0 * sp.spacing();
    out.tail = localized_operator_norm(H, wave_cos_multiplier(t), F, E);
    return out;
}

RealState maximal_function(const Space& space, const State& v) {
    const int N = space.size();
    RealState out = RealState::Zero(N);
    std::vector<std::pair<double, int>> order(N);
    for (int c = 0; c < N; ++c) {
        for (int j = 0; j < N; ++j) order[j] = {space.dist(c, j), j};
        std::sort(order.begin(), order.end());
        // prefix averages over balls B(c, r) as r sweeps the sorted distances
        std::vector<double> avg(N);
        double mass = 0.0, measure = 0.0;
        for (int j = 0; j < N; ++j) {
            mass += std::abs(v[order[j].second]) * space.weight(order[j].second);
            measure += space.weight(order[j].second);
            avg[j] = mass / measure;
        }
        // extend each ball to include ties at the same radius
        for (int j = N - 2; j >= 0; --j)
            if (order[j].first == order[j + 1].first) avg[j] = avg[j + 1];
        // suffix max: for a point at sorted position j, admissible balls
        // centered at c are those with radius >= d(c, x)
        std::vector<double> best(N);
        double running = 0.0;
        for (int j = N - 1; j >= 0; --j) {
            running = std::max(running, avg[j]);
            best[j] = running;
        }
        for (int j = 0; j < N; ++j) {
            int x = order[j].second;
            out[x] = std::max(out[x], best[j]);
        }
    }
    return out;
}

MaximalDominationResult check_maximal_domination(const SelfAdjointOperator& H, const State& v,
                                                 int x0, std::span<const double> t_grid) {
    const Space& sp = H.space();
    RealState Mv = maximal_function(sp, v);
    MaximalDominationResult out;
    if (Mv[x0] <= 0.0) {
        out.skipped = true;
        return out;
    }
    for (double t : t_grid) {
        if (t < sp.spacing() * sp.spacing() || t > sp.diameter() * sp.diameter())
            throw std::invalid_argument("check_maximal_domination: t outside [spacing^2, diameter^2]");
        State u = H.heat(t, v);
        double linf = 0.0;
        for (int x : sp.ball_members({x0, std::sqrt(t)}))
            linf = std::max(linf, std::abs(u[x]));
        out.ratio = std::max(out.ratio, linf / Mv[x0]);
    }
    return out;
}

TransmutationQuadrature transmutation_quadrature(const SelfAdjointOperator& H, Complex z,
                                                 double tail_tol, int points_per_period) {
    if (!(z.real() > 0.0)) throw std::invalid_argument("transmutation: Re z must be > 0");
    TransmutationQuadrature q;
    const double alpha = z.real() / (4.0 * std::norm(z));  // Re(1/4z)
    q.s_max = std::sqrt(-std::log(tail_tol) / alpha);
    // resolve both the fastest wave period 2 pi / sqrt(lambda_max) and the
    // chirp of exp(-s^2/4z) at s_max
    const double beta = std::abs(z.imag()) / (4.0 * std::norm(z));  // |Im(1/4z)|
    const double rate = std::sqrt(std::max(H.lambda_max(), 1.0)) + 2.0 * beta * q.s_max;
    int n = static_cast<int>(std::ceil(q.s_max * rate * points_per_period / (2.0 * std::numbers::pi)));
    n = std::max(n, 64);
    if (n % 2 == 1) ++n;
    q.n_points = n;
    return q;
}

State transmutation(const SelfAdjointOperator& H, Complex z, const State& v,
                    double s_max, int n_points) {
    if (!(z.real() > 0.0)) throw std::invalid_argument("transmutation: Re z must be > 0");
    if (n_points < 2 || n_points % 2 == 1)
        throw std::invalid_argument("transmutation: n_points must be even and >= 2");
    {
        const auto need = transmutation_quadrature(H, z);
        if (n_points < need.n_points / 2)
            throw std::invalid_argument("transmutation: under-resolved quadrature, need >= " +
                                        std::to_string(need.n_points) + " points");
    }
    const double ds = s_max / n_points;
    const Complex inv4z = 1.0 / (4.0 * z);
    Eigen::VectorXcd mult = Eigen::VectorXcd::Zero(H.size());
    for (int i = 0; i <= n_points; ++i) {
        const double s = i * ds;
        double w = (i == 0 || i == n_points) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const Complex g = std::exp(-s * s * inv4z) * (w * ds / 3.0);
        for (int k = 0; k < H.size(); ++k)
            mult[k] += g * std::cos(s * std::sqrt(std::max(H.eigenvalues()[k], 0.0)));
    }
    mult /= std::sqrt(std::numbers::pi * z);
    Eigen::VectorXcd c = H.coefficients(v);
    return H.from_coefficients(mult.cwiseProduct(c));
}

State transmutation(const SelfAdjointOperator& H, Complex z, const State& v) {
    const auto q = transmutation_quadrature(H, z);
    return transmutation(H, z, v, q.s_max, q.n_points);
}

State dalembert_oracle(const Space& space, const State& v, double t) {
    if (space.geometry() != Geometry::torus_grid || space.dim() != 1)
        throw std::invalid_argument("dalembert_oracle: requires a 1D torus grid");
    const double h = space.spacing();
    const double kf = t / h;
    const long k = std::lround(kf);
    if (std::abs(kf - static_cast<double>(k)) > 1e-9)
        throw std::invalid_argument("dalembert_oracle: t must be an integer multiple of spacing");
    const int n = space.size();
    State out(n);
    for (int j = 0; j < n; ++j) {
        const long plus = ((j + k) % n + n) % n;
        const long minus = ((j - k) % n + n) % n;
        out[j] = 0.5 * (v[plus] + v[minus]);
    }
    return out;
}

}  // namespace displab
