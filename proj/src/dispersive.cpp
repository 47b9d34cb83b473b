#include "displab/dispersive.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace displab {

namespace {

constexpr int kBallMemberCap = 256;

double set_measure(const Space& space, std::span<const int> members) {
    double mu = 0.0;
    for (int i : members) mu += space.weight(i);
    return mu;
}

/// Sub-block Phi_F diag(vals) Phi_E^T for per-eigenvalue multiplier values.
Eigen::MatrixXcd subblock_from_values(const SelfAdjointOperator& H,
                                      const Eigen::VectorXcd& vals,
                                      std::span<const int> F, std::span<const int> E) {
    const auto& phi = H.modes();
    Eigen::MatrixXcd block(F.size(), E.size());
    for (std::size_t a = 0; a < F.size(); ++a) {
        Eigen::VectorXcd row = phi.row(F[a]).transpose().cast<Complex>().cwiseProduct(vals);
        for (std::size_t b = 0; b < E.size(); ++b)
            block(a, b) = row.cwiseProduct(phi.row(E[b]).transpose().cast<Complex>()).sum();
    }
    return block;
}

/// Norm of diag(mu_F)^{1/2} M diag(mu_E)^{-1/2} for an action-representation
/// matrix M[y, x] = (T e_x)(y).
double weighted_action_norm(const Space& space, const Eigen::MatrixXcd& M,
                            std::span<const int> F, std::span<const int> E) {
    Eigen::MatrixXcd W = M;
    for (Eigen::Index a = 0; a < W.rows(); ++a)
        W.row(a) *= std::sqrt(space.weight(F[a]));
    for (Eigen::Index b = 0; b < W.cols(); ++b)
        W.col(b) /= std::sqrt(space.weight(E[b]));
    if (W.size() == 0) return 0.0;
    return W.jacobiSvd().singularValues()(0);
}

double cubic_smoothstep_down(double x) {
    // 1 on [0,1], 0 on [2,inf), cubic in between
    if (x <= 1.0) return 1.0;
    if (x >= 2.0) return 0.0;
    const double u = x - 1.0;
    return 1.0 - u * u * (3.0 - 2.0 * u);
}

}  // namespace

std::vector<BallPair> make_pair_family(const Space& space, double r, double L_max,
                                       int base_center) {
    if (!(r >= space.spacing()))
        throw std::invalid_argument("make_pair_family: radius below grid spacing");
    if (base_center < 0 || base_center >= space.size())
        throw std::invalid_argument("make_pair_family: base center out of range");

    Ball base{base_center, r};
    auto base_members = space.ball_members(base);
    if (base_members.empty()) throw std::runtime_error("make_pair_family: empty base ball");
    if (static_cast<int>(base_members.size()) > kBallMemberCap)
        throw std::invalid_argument("make_pair_family: ball exceeds 256 members");

    std::vector<BallPair> family;
    for (int k = 0;; ++k) {
        const double L_target = k * r;
        if (L_target > L_max + 1e-12) break;
        const double center_dist = L_target + 2.0 * r;
        if (center_dist > space.diameter() + 1e-12) break;

        // deterministic partner center: nearest realizable distance, lowest index
        int partner = -1;
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < space.size(); ++j) {
            const double err = std::abs(space.dist(base_center, j) - center_dist);
            if (err < best - 1e-15) {
                best = err;
                partner = j;
            }
        }
        if (partner < 0) break;

        BallPair p;
        p.B = base;
        p.B_tilde = Ball{partner, r};
        p.r = r;
        p.members_B = base_members;
        p.members_B_tilde = space.ball_members(p.B_tilde);
        if (p.members_B_tilde.empty()) continue;
        if (static_cast<int>(p.members_B_tilde.size()) > kBallMemberCap)
            throw std::invalid_argument("make_pair_family: ball exceeds 256 members");
        p.L = space.set_distance(p.members_B, p.members_B_tilde);
        family.push_back(std::move(p));
    }
    if (family.empty()) throw std::runtime_error("make_pair_family: no admissible pairs");
    return family;
}

double localized_norm(const Space& space, const OperatorAction& T,
                      std::span<const int> B, std::span<const int> B_tilde) {
    if (B.empty() || B_tilde.empty())
        throw std::invalid_argument("localized_norm: empty ball");
    Eigen::MatrixXcd M(B_tilde.size(), B.size());
    for (std::size_t b = 0; b < B.size(); ++b) {
        State e = State::Zero(space.size());
        e[B[b]] = 1.0;
        State Te = T(e);
        for (std::size_t a = 0; a < B_tilde.size(); ++a) M(a, b) = Te[B_tilde[a]];
    }
    return weighted_action_norm(space, M, B_tilde, B);
}

double localized_norm(const SelfAdjointOperator& H, const SpectralFunction& f,
                      const BallPair& pair) {
    if (pair.members_B.empty() || pair.members_B_tilde.empty())
        throw std::invalid_argument("localized_norm: empty ball");
    return localized_operator_norm(H, f, pair.members_B_tilde, pair.members_B);
}

HmResult hm_constant(const SelfAdjointOperator& H, const SpectralFunction& T,
                     int m, double n, double r, std::span<const BallPair> pairs) {
    const double r2 = r * r;
    SpectralFunction g{[&T, m, n, r2](double x) { return T(x) * psi(m, n, r2 * x); }};

    HmResult res;
    res.table.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        HmRow row;
        row.L = p.L;
        row.measured = localized_norm(H, g, p);
        row.normalizer = std::sqrt(set_measure(H.space(), p.members_B) *
                                   set_measure(H.space(), p.members_B_tilde));
        row.value = row.measured / row.normalizer;
        if (row.value > res.A_star) {
            res.A_star = row.value;
            res.argmax = static_cast<int>(i);
        }
        res.table.push_back(row);
    }
    return res;
}

HmResult hm_constant(const FourierTorusOperator& H, const SpectralFunction& T,
                     int m, double n, double r, std::span<const BallPair> pairs) {
    const double r2 = r * r;
    SpectralFunction g{[&T, m, n, r2](double x) { return T(x) * psi(m, n, r2 * x); }};
    const State col = H.kernel_column(g, 0);
    const Space& space = H.space();

    HmResult res;
    res.table.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.members_B.empty() || p.members_B_tilde.empty())
            throw std::invalid_argument("hm_constant: empty ball");
        Eigen::MatrixXcd block(p.members_B_tilde.size(), p.members_B.size());
        for (std::size_t a = 0; a < p.members_B_tilde.size(); ++a)
            for (std::size_t b = 0; b < p.members_B.size(); ++b)
                block(a, b) = col[H.index_diff(p.members_B_tilde[a], p.members_B[b])];
        HmRow row;
        row.L = p.L;
        row.measured =
            weighted_subblock_norm(space, block, p.members_B_tilde, p.members_B);
        row.normalizer = std::sqrt(set_measure(space, p.members_B) *
                                   set_measure(space, p.members_B_tilde));
        row.value = row.measured / row.normalizer;
        if (row.value > res.A_star) {
            res.A_star = row.value;
            res.argmax = static_cast<int>(i);
        }
        res.table.push_back(row);
    }
    return res;
}

namespace {

NIndependenceResult n_independence_impl(
    const std::function<double(const SpectralFunction&, int, double)>& a_star_of,
    const std::function<SpectralFunction(double)>& T_of_t,
    std::span<const double> t_grid, int m, std::span<const double> n_set) {
    NIndependenceResult res;
    res.n_values.assign(n_set.begin(), n_set.end());
    for (double n : n_set) {
        std::vector<double> a;
        a.reserve(t_grid.size());
        for (double t : t_grid) a.push_back(a_star_of(T_of_t(t), m, n));
        res.a_star.push_back(std::move(a));
    }
    if (t_grid.size() >= 3 && n_set.size() >= 1) {
        std::vector<double> tx(t_grid.begin(), t_grid.end());
        for (const auto& a : res.a_star)
            res.exponents.push_back(fit_decay_exponent(tx, a).slope);
        const auto [lo, hi] = std::minmax_element(res.exponents.begin(), res.exponents.end());
        res.exponent_drift = *hi - *lo;
    }
    res.worst_ratio = 1.0;
    for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (const auto& a : res.a_star) {
            lo = std::min(lo, a[ti]);
            hi = std::max(hi, a[ti]);
        }
        if (lo > 0.0) res.worst_ratio = std::max(res.worst_ratio, hi / lo);
    }
    return res;
}

}  // namespace

NIndependenceResult check_n_independence(
    const SelfAdjointOperator& H,
    const std::function<SpectralFunction(double)>& T_of_t,
    std::span<const double> t_grid, int m, double r,
    std::span<const double> n_set, std::span<const BallPair> pairs) {
    return n_independence_impl(
        [&](const SpectralFunction& T, int mm, double nn) {
            return hm_constant(H, T, mm, nn, r, pairs).A_star;
        },
        T_of_t, t_grid, m, n_set);
}

NIndependenceResult check_n_independence(
    const FourierTorusOperator& H,
    const std::function<SpectralFunction(double)>& T_of_t,
    std::span<const double> t_grid, int m, double r,
    std::span<const double> n_set, std::span<const BallPair> pairs) {
    return n_independence_impl(
        [&](const SpectralFunction& T, int mm, double nn) {
            return hm_constant(H, T, mm, nn, r, pairs).A_star;
        },
        T_of_t, t_grid, m, n_set);
}

MMonotonicityResult check_m_monotonicity(const SelfAdjointOperator& H,
                                         const SpectralFunction& T,
                                         std::span<const int> m_list, double n, double r,
                                         std::span<const BallPair> pairs, double bound) {
    if (!std::is_sorted(m_list.begin(), m_list.end()))
        throw std::invalid_argument("check_m_monotonicity: m_list must be ascending");
    MMonotonicityResult res;
    res.m_list.assign(m_list.begin(), m_list.end());
    for (int m : m_list) res.a_star.push_back(hm_constant(H, T, m, n, r, pairs).A_star);
    res.pass = true;
    for (std::size_t i = 0; i + 1 < res.a_star.size(); ++i) {
        const double c = (res.m_list[i + 1] == res.m_list[i])
                             ? 1.0
                             : res.a_star[i + 1] / res.a_star[i];
        res.c_ratios.push_back(c);
        if (!(c <= bound)) res.pass = false;
    }
    return res;
}

SchrodingerDecayResult schrodinger_decay_experiment(
    const SelfAdjointOperator& H, double h, int m_prime, int m,
    std::span<const double> t_grid, double r, std::span<const BallPair> pairs) {
    std::vector<double> tv, av;
    for (double t : t_grid) {
        if (!(t > 0.0))
            throw std::invalid_argument("schrodinger_decay_experiment: t must be positive");
        const double h2 = h * h;
        SpectralFunction Tt{[t, h2, m_prime](double x) {
            return std::exp(Complex(0.0, t * x)) * psi(m_prime, 1.0, h2 * x);
        }};
        tv.push_back(t);
        av.push_back(hm_constant(H, Tt, m, 1.0, r, pairs).A_star);
    }
    if (tv.size() < 3)
        throw std::invalid_argument("schrodinger_decay_experiment: need >= 3 time points");

    SchrodingerDecayResult res;
    res.fit = fit_decay_exponent(tv, av);
    res.t_values = std::move(tv);
    res.a_star = std::move(av);
    res.outside_theorem_hypotheses = (H.space().dim() == 1);
    return res;
}

SchrodingerDecayResult schrodinger_decay_experiment(
    const FourierTorusOperator& H, double h, int m_prime, int m,
    std::span<const double> t_grid, double r, std::span<const BallPair> pairs) {
    std::vector<double> tv, av;
    for (double t : t_grid) {
        if (!(t > 0.0))
            throw std::invalid_argument("schrodinger_decay_experiment: t must be positive");
        const double h2 = h * h;
        SpectralFunction Tt{[t, h2, m_prime](double x) {
            return std::exp(Complex(0.0, t * x)) * psi(m_prime, 1.0, h2 * x);
        }};
        tv.push_back(t);
        av.push_back(hm_constant(H, Tt, m, 1.0, r, pairs).A_star);
    }
    if (tv.size() < 3)
        throw std::invalid_argument("schrodinger_decay_experiment: need >= 3 time points");

    SchrodingerDecayResult res;
    res.fit = fit_decay_exponent(tv, av);
    res.t_values = std::move(tv);
    res.a_star = std::move(av);
    res.outside_theorem_hypotheses = (H.space().dim() == 1);
    return res;
}

WaveEnvelopeResult wave_envelope_experiment(const SelfAdjointOperator& H, int m0, double r,
                                            std::span<const double> s_grid,
                                            std::span<const BallPair> pairs) {
    const int d = H.space().dim();
    WaveEnvelopeResult res;
    res.ridge_ok = true;
    for (double s : s_grid) {
        SpectralFunction f{[s, m0, r](double x) {
            return Complex(std::cos(s * std::sqrt(x)) * psi(m0, 1.0, r * r * x), 0.0);
        }};
        std::vector<WaveEnvelopeRow> rows;
        double peak = 0.0;
        for (const auto& p : pairs) {
            WaveEnvelopeRow row;
            row.s = s;
            row.L = p.L;
            row.measured = localized_norm(H, f, p);
            row.envelope = std::pow(r / (s + r), 0.5 * (d - 1)) *
                           std::pow(1.0 + std::abs(p.L - s) / r, -0.5 * (d + 1));
            row.ratio = row.measured / row.envelope;
            res.max_ratio = std::max(res.max_ratio, row.ratio);
            if (p.L > s + 2.0 * r) res.cone_max = std::max(res.cone_max, row.measured);
            if (p.L > s + 6.0 * r)
                res.strict_cone_max = std::max(res.strict_cone_max, row.measured);
            peak = std::max(peak, row.measured);
            rows.push_back(row);
        }
        if (s > 0.0) {
            double ridge_L = 0.0;
            for (const auto& row : rows)
                if (row.measured >= 0.5 * peak) ridge_L = std::max(ridge_L, row.L);
            if (std::abs(ridge_L - s) > 2.0 * r) res.ridge_ok = false;
        }
        res.table.insert(res.table.end(), rows.begin(), rows.end());
    }
    return res;
}

ThreeRegimeResult three_regime_split(const SelfAdjointOperator& H, Complex z, double r,
                                     int m, std::span<const BallPair> pairs) {
    if (!(z.real() > 0.0))
        throw std::invalid_argument("three_regime_split: Re z must be positive");
    const double t_abs = std::abs(z.imag());
    if (!(t_abs > 0.0))
        throw std::invalid_argument("three_regime_split: need a nonzero time component");

    const Space& space = H.space();
    ThreeRegimeResult res;
    res.kappa_eff = (space.geometry() == Geometry::torus_grid) ? space.period() / 4.0
                                                               : space.diameter();

    const auto quad = transmutation_quadrature(H, z);
    const double ds = quad.s_max / quad.n_points;
    const Complex prefactor = 1.0 / std::sqrt(std::numbers::pi * z);
    const double switch_scale = t_abs / r;

    // Per-eigenvalue Simpson quadrature of each regime's weighted integrand.
    const int N = H.size();
    std::array<Eigen::VectorXcd, 3> piece;
    for (auto& p : piece) p = Eigen::VectorXcd::Zero(N);
    for (int i = 0; i <= quad.n_points; ++i) {
        const double s = i * ds;
        const double w_simpson =
            (i == 0 || i == quad.n_points) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const Complex gauss = std::exp(-s * s / (4.0 * z));
        const double chi = cubic_smoothstep_down(s / switch_scale);
        const double w2 = (s < res.kappa_eff) ? (1.0 - chi) : 0.0;
        const double w3 = (s < res.kappa_eff) ? 0.0 : (1.0 - chi);
        const Complex base = w_simpson * (ds / 3.0) * prefactor * gauss;
        for (int k = 0; k < N; ++k) {
            const double c = std::cos(s * std::sqrt(H.eigenvalues()[k]));
            piece[0][k] += base * (chi * c);
            piece[1][k] += base * (w2 * c);
            piece[2][k] += base * (w3 * c);
        }
    }

    // Consistency of the partition against the exact multiplier.
    double sup_exact = 0.0, sup_err = 0.0;
    Eigen::VectorXcd exact(N);
    for (int k = 0; k < N; ++k) {
        exact[k] = std::exp(-z * H.eigenvalues()[k]);
        sup_exact = std::max(sup_exact, std::abs(exact[k]));
        sup_err = std::max(sup_err,
                           std::abs(piece[0][k] + piece[1][k] + piece[2][k] - exact[k]));
    }
    res.multiplier_consistency = sup_err / sup_exact;

    // Localized norms per regime, with the psi_m(r^2 H) cutoff folded in.
    Eigen::VectorXd cutoff(N);
    for (int k = 0; k < N; ++k) cutoff[k] = psi(m, 1.0, r * r * H.eigenvalues()[k]);
    SpectralFunction direct{[z, m, r](double x) {
        return std::exp(-z * x) * psi(m, 1.0, r * r * x);
    }};
    for (const auto& p : pairs) {
        ThreeRegimeRow row;
        row.L = p.L;
        for (int j = 0; j < 3; ++j) {
            Eigen::VectorXcd vals = piece[j].cwiseProduct(cutoff.cast<Complex>());
            auto block = subblock_from_values(H, vals, p.members_B_tilde, p.members_B);
            row.regime_norm[j] =
                weighted_subblock_norm(space, block, p.members_B_tilde, p.members_B);
        }
        row.direct_norm = localized_norm(H, direct, p);
        if (row.direct_norm > 0.0)
            res.far_fraction = std::max(res.far_fraction, row.regime_norm[2] / row.direct_norm);
        res.rows.push_back(row);
    }
    return res;
}

}  // namespace displab
