#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "displab/fit.hpp"
#include "displab/operators.hpp"
#include "displab/space.hpp"

namespace displab {

/// Default regularization order for semigroup-adapted atoms and BMO.
int default_atom_order(int dim);

enum class AtomShape { indicator, centered_bump, oscillating_bump };

/// Semigroup-adapted Hardy atom a = (1 - e^{-r^2 H})^M f_Q with f_Q supported
/// in the ball and ||f_Q||_{L^2(Q,mu)} <= mu(Q)^{-1/2}.
struct Atom {
    Ball ball;
    int order = 0;  // M
    std::vector<int> members;
    State pre_function;
    State realized;
};

Atom make_atom(const SelfAdjointOperator& H, const Ball& ball, int M, AtomShape shape,
               std::uint64_t seed);
Atom make_atom(const SelfAdjointOperator& H, const Ball& ball, int M,
               const State& pre_function);

/// Deterministic family: all three shapes x dyadic radii x lattice centers.
std::vector<Atom> make_atom_family(const SelfAdjointOperator& H, int M,
                                   std::span<const double> radii, int center_stride,
                                   std::uint64_t seed);

struct AtomL1Audit {
    double max_l1 = 0.0;
    std::vector<double> per_atom;
    double binomial_residual = 0.0;  // max relative deviation from the expansion
};
AtomL1Audit atom_l1_audit(const SelfAdjointOperator& H, std::span<const Atom> atoms);

/// sup over Q of (mu(Q)^{-1} int_Q |B_Q v|^2 dmu)^{1/2}, B_Q = (1-e^{-r^2H})^M.
double bmo_norm(const SelfAdjointOperator& H, const State& v,
                std::span<const Ball> ball_family, int M);

/// Dual characterization: sup over the family's balls of |<v, a_Q>| with the
/// atom adapted to v on each ball (the finite-sample duality witness).
double bmo_norm_by_atoms(const SelfAdjointOperator& H, const State& v,
                         std::span<const Ball> ball_family, int M);

struct PairingResult {
    double sup = 0.0;      // measured sup (lower bound of the true sup)
    int argmax_a = -1;
    int argmax_b = -1;
};
PairingResult pairing_experiment(const SelfAdjointOperator& H, const SpectralFunction& T,
                                 std::span<const Atom> atoms);
PairingResult regularized_pairing(const SelfAdjointOperator& H, const SpectralFunction& T,
                                  double s, std::span<const Atom> atoms);

struct L1LinfResult {
    double value = 0.0;       // max_{x,y} |K(x,y)| of T e^{-sH}
    bool within_budget = true;
};
L1LinfResult l1_linf_regularized(const SelfAdjointOperator& H, const SpectralFunction& T,
                                 double s);
/// Fitted s-exponent of the L^1 -> L^inf norm across an s-decade.
DecayFit l1_linf_exponent(const SelfAdjointOperator& H, const SpectralFunction& T,
                          std::span<const double> s_grid);

struct SumBoundResult {
    double S = 0.0;        // sum_{l>=0} (2^l x)^d exp(-(2^l x)^2), tail < 1e-16
    double product = 0.0;  // S * x^N
    int terms = 0;
};
SumBoundResult sum_bound_check(double x, int d, int N);

}  // namespace displab
