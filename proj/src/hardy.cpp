#include "displab/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace displab {

namespace {

SpectralFunction bq_multiplier(double r, int M) {
    return SpectralFunction{[r, M](double x) {
        return Complex(std::pow(1.0 - std::exp(-r * r * x), M), 0.0);
    }};
}

double l2_ball_norm(const Space& space, const State& v, std::span<const int> members) {
    double acc = 0.0;
    for (int i : members) acc += std::norm(v[i]) * space.weight(i);
    return std::sqrt(acc);
}

double l1_norm(const Space& space, const State& v) {
    double acc = 0.0;
    for (int i = 0; i < v.size(); ++i) acc += std::abs(v[i]) * space.weight(i);
    return acc;
}

Atom finalize_atom(const SelfAdjointOperator& H, const Ball& ball, int M,
                   std::vector<int> members, State pre) {
    const Space& space = H.space();
    const double mu_q = space.ball_measure(ball);
    const double norm = l2_ball_norm(space, pre, members);
    if (norm <= 0.0) throw std::invalid_argument("make_atom: zero pre-function");
    pre *= 1.0 / (norm * std::sqrt(mu_q));

    Atom a;
    a.ball = ball;
    a.order = M;
    a.members = std::move(members);
    a.pre_function = std::move(pre);
    a.realized = H.apply_calculus(bq_multiplier(ball.radius, M), a.pre_function);
    return a;
}

}  // namespace

int default_atom_order(int dim) {
    const int from_dim = static_cast<int>(std::ceil(0.75 + 0.375 * dim));
    return std::max(3, from_dim);
}

Atom make_atom(const SelfAdjointOperator& H, const Ball& ball, int M, AtomShape shape,
               std::uint64_t seed) {
    if (M < default_atom_order(H.space().dim()))
        throw std::invalid_argument("make_atom: order below the admissible minimum");
    const Space& space = H.space();
    auto members = space.ball_members(ball);
    if (members.empty()) throw std::invalid_argument("make_atom: empty ball");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
    const double phase = phase_dist(rng);

    State pre = State::Zero(space.size());
    const double r = ball.radius;
    for (int i : members) {
        const double dist = space.dist(ball.center, i);
        switch (shape) {
            case AtomShape::indicator:
                pre[i] = 1.0;
                break;
            case AtomShape::centered_bump:
                pre[i] = std::exp(-4.0 * dist * dist / (r * r));
                break;
            case AtomShape::oscillating_bump:
                pre[i] = std::cos(std::numbers::pi * dist / r + phase) *
                         std::exp(-2.0 * dist * dist / (r * r));
                break;
        }
    }
    return finalize_atom(H, ball, M, std::move(members), std::move(pre));
}

Atom make_atom(const SelfAdjointOperator& H, const Ball& ball, int M,
               const State& pre_function) {
    if (M < default_atom_order(H.space().dim()))
        throw std::invalid_argument("make_atom: order below the admissible minimum");
    const Space& space = H.space();
    auto members = space.ball_members(ball);
    if (members.empty()) throw std::invalid_argument("make_atom: empty ball");
    std::vector<bool> inside(space.size(), false);
    for (int i : members) inside[i] = true;
    for (int i = 0; i < space.size(); ++i)
        if (!inside[i] && pre_function[i] != Complex(0.0, 0.0))
            throw std::invalid_argument("make_atom: pre-function supported outside the ball");
    return finalize_atom(H, ball, M, std::move(members), pre_function);
}

std::vector<Atom> make_atom_family(const SelfAdjointOperator& H, int M,
                                   std::span<const double> radii, int center_stride,
                                   std::uint64_t seed) {
    if (center_stride < 1) throw std::invalid_argument("make_atom_family: bad stride");
    const Space& space = H.space();
    std::vector<Atom> out;
    std::uint64_t k = 0;
    for (double r : radii)
        for (int c = 0; c < space.size(); c += center_stride)
            for (AtomShape shape :
                 {AtomShape::indicator, AtomShape::centered_bump, AtomShape::oscillating_bump})
                out.push_back(make_atom(H, Ball{c, r}, M, shape, seed + (k++)));
    return out;
}

AtomL1Audit atom_l1_audit(const SelfAdjointOperator& H, std::span<const Atom> atoms) {
    const Space& space = H.space();
    AtomL1Audit audit;
    for (const auto& a : atoms) {
        const double l1 = l1_norm(space, a.realized);
        audit.per_atom.push_back(l1);
        audit.max_l1 = std::max(audit.max_l1, l1);

        // binomial expansion oracle: (1 - e^{-r^2 H})^M = sum_k C(M,k)(-1)^k e^{-k r^2 H}
        State expanded = State::Zero(space.size());
        double coeff = 1.0;
        for (int k = 0; k <= a.order; ++k) {
            expanded += coeff * H.heat(k * a.ball.radius * a.ball.radius, a.pre_function);
            coeff *= -static_cast<double>(a.order - k) / (k + 1);
        }
        const double denom = std::max(1e-300, a.realized.cwiseAbs().maxCoeff());
        audit.binomial_residual = std::max(
            audit.binomial_residual, (expanded - a.realized).cwiseAbs().maxCoeff() / denom);
    }
    return audit;
}

double bmo_norm(const SelfAdjointOperator& H, const State& v,
                std::span<const Ball> ball_family, int M) {
    const Space& space = H.space();
    double sup = 0.0;
    for (const auto& q : ball_family) {
        auto members = space.ball_members(q);
        if (members.empty()) continue;
        State bqv = H.apply_calculus(bq_multiplier(q.radius, M), v);
        const double term = l2_ball_norm(space, bqv, members) /
                            std::sqrt(space.ball_measure(q));
        sup = std::max(sup, term);
    }
    return sup;
}

double bmo_norm_by_atoms(const SelfAdjointOperator& H, const State& v,
                         std::span<const Ball> ball_family, int M) {
    const Space& space = H.space();
    double sup = 0.0;
    for (const auto& q : ball_family) {
        auto members = space.ball_members(q);
        if (members.empty()) continue;
        State bqv = H.apply_calculus(bq_multiplier(q.radius, M), v);
        State pre = State::Zero(space.size());
        for (int i : members) pre[i] = bqv[i];
        if (l2_ball_norm(space, pre, members) <= 0.0) continue;
        Atom a = make_atom(H, q, M, pre);
        sup = std::max(sup, std::abs(H.inner(v, a.realized)));
    }
    return sup;
}

PairingResult pairing_experiment(const SelfAdjointOperator& H, const SpectralFunction& T,
                                 std::span<const Atom> atoms) {
    PairingResult res;
    std::vector<State> transported;
    transported.reserve(atoms.size());
    for (const auto& a : atoms) transported.push_back(H.apply_calculus(T, a.realized));
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            const double val = std::abs(H.inner(transported[i], atoms[j].realized));
            if (val > res.sup) {
                res.sup = val;
                res.argmax_a = static_cast<int>(i);
                res.argmax_b = static_cast<int>(j);
            }
        }
    }
    return res;
}

PairingResult regularized_pairing(const SelfAdjointOperator& H, const SpectralFunction& T,
                                  double s, std::span<const Atom> atoms) {
    if (!(s > 0.0)) throw std::invalid_argument("regularized_pairing: s must be positive");
    SpectralFunction Ts{[&T, s](double x) { return T(x) * std::exp(-s * x); }};
    return pairing_experiment(H, Ts, atoms);
}

L1LinfResult l1_linf_regularized(const SelfAdjointOperator& H, const SpectralFunction& T,
                                 double s) {
    if (!(s > 0.0)) throw std::invalid_argument("l1_linf_regularized: s must be positive");
    SpectralFunction Ts{[&T, s](double x) { return T(x) * std::exp(-s * x); }};
    L1LinfResult res;
    res.value = H.kernel_matrix_c(Ts).cwiseAbs().maxCoeff();
    const Space& space = H.space();
    if (space.geometry() == Geometry::torus_grid) {
        const double budget = space.period() * space.period() / 16.0;
        res.within_budget = (s <= budget);
    }
    return res;
}

DecayFit l1_linf_exponent(const SelfAdjointOperator& H, const SpectralFunction& T,
                          std::span<const double> s_grid) {
    std::vector<double> xs, ys;
    for (double s : s_grid) {
        xs.push_back(s);
        ys.push_back(l1_linf_regularized(H, T, s).value);
    }
    return fit_decay_exponent(xs, ys);
}

SumBoundResult sum_bound_check(double x, int d, int N) {
    if (!(x > 0.0)) throw std::invalid_argument("sum_bound_check: x must be positive");
    if (N < 1) throw std::invalid_argument("sum_bound_check: N must be >= 1");
    SumBoundResult res;
    for (int l = 0;; ++l) {
        const double y = std::ldexp(x, l);  // 2^l x
        const double term = std::pow(y, d) * std::exp(-y * y);
        res.S += term;
        ++res.terms;
        // terms decrease monotonically once y^2 >= d/2; stop when negligible
        if (y * y >= 0.5 * d && term < 1e-16) break;
        if (l > 4000) break;
    }
    res.product = res.S * std::pow(x, N);
    return res;
}

}  // namespace displab
