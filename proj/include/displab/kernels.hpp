#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "displab/operators.hpp"
#include "displab/space.hpp"

namespace displab {

/// Continuum heat kernel on a d-dimensional torus of the given period,
/// periodized Gaussian truncated at +-5 images per axis.
double theta_heat_kernel(int dim, double period, double t, std::span<const double> deltas);

/// Wrap budget for propagation checks on a periodic proxy: requires
/// t + r + s < period / 4 so wave-speed-1 propagation cannot wrap.
bool within_wrap_budget(const Space& space, double extent);

struct DueResult {
    double sup_constant = 0.0;  // sup_{x,t} p_t(x,x) mu(B(x, sqrt t))
    std::vector<std::string> warnings;
};
DueResult check_due(const SelfAdjointOperator& H, std::span<const double> t_grid);

struct GaussianFit {
    double C = 0.0;           // prefactor
    double c = 0.0;           // exponent constant
    double worst_ratio = 0.0; // <= 1 + 1e-9 by construction
};
/// Fit the (UEmn)-type envelope C / mu(B(x,sqrt t)) * exp(-c d(x,y)^2 / t)
/// over a scan of trial c in {1/4, 1/8, 1/16}; smallest C wins.
GaussianFit fit_gaussian_ue(const SelfAdjointOperator& H, const SpectralFunction& f,
                            std::span<const double> t_grid, int max_pairs = 2048);

struct DaviesGaffneyResult {
    double norm = 0.0;      // ||P_F e^{-tH} P_E||_{L^2 -> L^2}
    double gaussian = 0.0;  // exp(-d(E,F)^2 / 4t)
    double ratio = 0.0;
    bool within_budget = true;
};
DaviesGaffneyResult check_davies_gaffney(const SelfAdjointOperator& H,
                                         std::span<const int> E, std::span<const int> F,
                                         double t);

struct FiniteSpeedResult {
    double tail = 0.0;  // ||P_F cos(t sqrt H) P_E||
    double separation = 0.0;
    bool inside_cone = false;  // t < d(E,F) - 3 spacing
};
FiniteSpeedResult check_finite_speed(const SelfAdjointOperator& H,
                                     std::span<const int> E, std::span<const int> F, double t);

/// Uncentered Hardy-Littlewood maximal function of |v| on the space.
RealState maximal_function(const Space& space, const State& v);

struct MaximalDominationResult {
    double ratio = 0.0;  // sup_t ||e^{-tH} v||_{L^inf(B(x0,sqrt t))} / Mv(x0)
    bool skipped = false;
};
MaximalDominationResult check_maximal_domination(const SelfAdjointOperator& H, const State& v,
                                                 int x0, std::span<const double> t_grid);

struct TransmutationQuadrature {
    double s_max = 0.0;
    int n_points = 0;
};
TransmutationQuadrature transmutation_quadrature(const SelfAdjointOperator& H, Complex z,
                                                 double tail_tol = 1e-12,
                                                 int points_per_period = 8);

/// e^{-zH} v approximated through the wave group:
/// (1/sqrt(pi z)) int_0^{s_max} cos(s sqrt H) e^{-s^2/4z} v ds (Simpson).
State transmutation(const SelfAdjointOperator& H, Complex z, const State& v,
                    double s_max, int n_points);
State transmutation(const SelfAdjointOperator& H, Complex z, const State& v);

/// Periodized d'Alembert solution on a 1D torus for t = k * spacing:
/// (v(x+t) + v(x-t)) / 2 with exact index shifts.
State dalembert_oracle(const Space& space, const State& v, double t);

/// Matrix norm of a mu-weighted sub-block: largest singular value of
/// diag(mu_F)^{1/2} K[F,E] diag(mu_E)^{1/2}.
double weighted_subblock_norm(const Space& space, const Eigen::MatrixXcd& block,
                              std::span<const int> F, std::span<const int> E);

/// Sub-block K[F,E] of the kernel of f(H), built from the mode table without
/// forming the full dense kernel.
Eigen::MatrixXcd kernel_subblock(const SelfAdjointOperator& H, const SpectralFunction& f,
                                 std::span<const int> F, std::span<const int> E);

/// ||f(H)||_{L^2(E,mu) -> L^2(F,mu)} localized operator norm.
double localized_operator_norm(const SelfAdjointOperator& H, const SpectralFunction& f,
                               std::span<const int> F, std::span<const int> E);

}  // namespace displab
