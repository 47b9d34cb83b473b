#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "displab/fit.hpp"
#include "displab/fourier_torus.hpp"
#include "displab/kernels.hpp"
#include "displab/operators.hpp"
#include "displab/space.hpp"

namespace displab {

/// Two balls of equal radius with their realized separation.
struct BallPair {
    Ball B;
    Ball B_tilde;
    double r = 0.0;
    double L = 0.0;  // min over member pairs of dist; 0 iff the members intersect
    std::vector<int> members_B;
    std::vector<int> members_B_tilde;
};

/// Deterministic family of equal-radius pairs: the base ball sits at
/// `base_center`, partners at separations L on multiples of r up to L_max.
/// Balls are capped at 256 members to bound the column-wise propagator cost.
std::vector<BallPair> make_pair_family(const Space& space, double r, double L_max,
                                       int base_center = 0);

using OperatorAction = std::function<State(const State&)>;

/// ||T||_{L^2(B,mu) -> L^2(B~,mu)} for an arbitrary operator action, built
/// column-wise from per-point indicator states.
double localized_norm(const Space& space, const OperatorAction& T,
                      std::span<const int> B, std::span<const int> B_tilde);

/// Same norm for a spectral multiplier, via the mode-table sub-block.
double localized_norm(const SelfAdjointOperator& H, const SpectralFunction& f,
                      const BallPair& pair);

struct HmRow {
    double L = 0.0;
    double measured = 0.0;    // localized norm of T psi_{m,n}(r^2 H)
    double normalizer = 0.0;  // mu(B)^{1/2} mu(B~)^{1/2}
    double value = 0.0;       // measured / normalizer
};

struct HmResult {
    double A_star = 0.0;
    int argmax = -1;  // index into the pair family
    std::vector<HmRow> table;
};

/// A* = max over pairs of ||T psi_{m,n}(r^2 H)||_{L^2(B)->L^2(B~)} /
/// (mu(B)^{1/2} mu(B~)^{1/2}).
HmResult hm_constant(const SelfAdjointOperator& H, const SpectralFunction& T,
                     int m, double n, double r, std::span<const BallPair> pairs);

/// FFT-backed variant for large torus grids: one kernel column per
/// multiplier serves every pair through the convolution structure.
HmResult hm_constant(const FourierTorusOperator& H, const SpectralFunction& T,
                     int m, double n, double r, std::span<const BallPair> pairs);

struct NIndependenceResult {
    std::vector<double> n_values;
    std::vector<double> exponents;              // fitted decay exponent per n
    std::vector<std::vector<double>> a_star;    // [n index][t index]
    double exponent_drift = 0.0;                // max - min fitted exponent
    double worst_ratio = 0.0;                   // max over (t, n, n') of A*_n / A*_n'
};

/// Sweeps A*(t) for each n and compares fitted decay exponents.
NIndependenceResult check_n_independence(
    const SelfAdjointOperator& H,
    const std::function<SpectralFunction(double)>& T_of_t,
    std::span<const double> t_grid, int m, double r,
    std::span<const double> n_set, std::span<const BallPair> pairs);
NIndependenceResult check_n_independence(
    const FourierTorusOperator& H,
    const std::function<SpectralFunction(double)>& T_of_t,
    std::span<const double> t_grid, int m, double r,
    std::span<const double> n_set, std::span<const BallPair> pairs);

struct MMonotonicityResult {
    std::vector<int> m_list;
    std::vector<double> a_star;
    std::vector<double> c_ratios;  // A*_{m'} / A*_m per consecutive pair
    bool pass = false;
};

/// Verifies A*_{m'} <= C * A*_m for consecutive m' > m in an ascending list.
MMonotonicityResult check_m_monotonicity(const SelfAdjointOperator& H,
                                         const SpectralFunction& T,
                                         std::span<const int> m_list, double n, double r,
                                         std::span<const BallPair> pairs,
                                         double bound = 10.0);

struct SchrodingerDecayResult {
    DecayFit fit;
    std::vector<double> t_values;
    std::vector<double> a_star;
    bool outside_theorem_hypotheses = false;  // d = 1 free-particle proxy
};

/// A*(t) of T_t = e^{itH} psi_{m'}(h^2 H) fitted against |t|^{-d/2} over
/// t in [h^2, min(h, wrap budget)].
SchrodingerDecayResult schrodinger_decay_experiment(
    const SelfAdjointOperator& H, double h, int m_prime, int m,
    std::span<const double> t_grid, double r, std::span<const BallPair> pairs);
SchrodingerDecayResult schrodinger_decay_experiment(
    const FourierTorusOperator& H, double h, int m_prime, int m,
    std::span<const double> t_grid, double r, std::span<const BallPair> pairs);

struct WaveEnvelopeRow {
    double s = 0.0;
    double L = 0.0;
    double measured = 0.0;
    double envelope = 0.0;
    double ratio = 0.0;
};

struct WaveEnvelopeResult {
    std::vector<WaveEnvelopeRow> table;
    double max_ratio = 0.0;
    // The measured profile is a plateau up to the wavefront (every pair whose
    // member-distance window [L, L+4r] straddles s sees the front), so the
    // ridge is located as the largest L still holding half the per-s maximum.
    bool ridge_ok = false;        // per s > 0, that edge satisfies |L - s| <= 2r
    double cone_max = 0.0;        // max measured over pairs with L > s + 2r
    double strict_cone_max = 0.0; // max measured over pairs with L > s + 6r
};

/// Localized norms of cos(s sqrt H) psi_{m0}(r^2 H) against the envelope
/// (r/(s+r))^{(d-1)/2} (1 + |L-s|/r)^{-(d+1)/2}.
WaveEnvelopeResult wave_envelope_experiment(const SelfAdjointOperator& H, int m0, double r,
                                            std::span<const double> s_grid,
                                            std::span<const BallPair> pairs);

struct ThreeRegimeRow {
    double L = 0.0;
    double regime_norm[3] = {0.0, 0.0, 0.0};
    double direct_norm = 0.0;  // localized norm of e^{-zH} psi_m(r^2 H)
};

struct ThreeRegimeResult {
    double kappa_eff = 0.0;
    std::vector<ThreeRegimeRow> rows;
    double far_fraction = 0.0;        // max over pairs of far-regime / direct
    double multiplier_consistency = 0.0;  // sup_lambda |sum of pieces - exact| / sup |exact|
};

/// Splits the wave-transmutation integral for e^{-zH}, z = h^2 - it, into the
/// ranges s in [0,|t|/r] (smoothed by a cubic smoothstep up to 2|t|/r),
/// [|t|/r, kappa_eff], [kappa_eff, inf), and reports per-regime localized norms.
ThreeRegimeResult three_regime_split(const SelfAdjointOperator& H, Complex z, double r,
                                     int m, std::span<const BallPair> pairs);

}  // namespace displab
