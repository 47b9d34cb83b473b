#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "displab/fit.hpp"
#include "displab/fourier_torus.hpp"
#include "displab/operators.hpp"
#include "displab/space.hpp"

namespace displab {

/// Admissibility of an exponent pair: 2/p + d/q = d/2, excluding (2, inf, 2).
/// q (or p) may be infinity.
bool is_admissible(double p, double q, int d);

/// Discrete L^q norm with explicit weights; q = infinity gives the max
/// modulus. The space-based variant lives with the operator calculus.
double lq_norm_weighted(std::span<const double> weights, const State& v, double q);

/// Mixed time norm (int ||u(t)||_q^p dt)^{1/p} from uniform samples over
/// [-T, T] via composite Simpson; the half-grid Richardson value must agree
/// within 1% or the call throws (advising a finer dt). Sample count must be
/// 1 mod 4. p = infinity gives the max over samples.
double mixed_norm_from_samples(std::span<const double> qnorms, double dt, double p);
double mixed_norm(const Space& space, std::span<const State> u, double dt, double p,
                  double q);

struct StrichartzConstantResult {
    double constant = 0.0;  // measured sup over the family (lower bound)
    std::vector<double> per_datum;
    int skipped = 0;  // data with vanishing localized denominator
};

/// sup over f of mixed_norm(e^{itH} psi_{2l,1}(h^2 H) f; L^p_t L^q_x over
/// [-T,T]) / ||psi_{l,1/2}(h^2 H) f||_2. dt = h^2/16.
StrichartzConstantResult strichartz_constant(const SelfAdjointOperator& H, double h,
                                             int ell, double p, double q, double T,
                                             std::span<const State> data);
StrichartzConstantResult strichartz_constant(const FourierTorusOperator& H, double h,
                                             int ell, double p, double q, double T,
                                             std::span<const State> data);

struct StrichartzReport {
    std::vector<double> h_grid;
    std::vector<double> constants;
    double beta = 0.0;       // fitted exponent of C(h) ~ h^{-beta}
    double r_squared = 0.0;
    double target = 0.0;     // admissible loss budget for this run
    double ceiling = 0.0;    // hard rail 2/p + 0.1
    bool pass = false;       // beta <= target
    bool ceiling_ok = false; // beta <= ceiling
};

/// Regression of log C(h) against log h; at least 3 h-values spanning a
/// decade are required.
StrichartzReport loss_report(std::span<const double> h_grid,
                             std::span<const double> constants, double target, double p);

/// Sweep over h with per-h data families and time horizons.
StrichartzReport loss_sweep(const FourierTorusOperator& H, int ell, double p, double q,
                            std::span<const double> h_grid,
                            const std::function<std::vector<State>(double)>& family_of_h,
                            const std::function<double(double)>& horizon_of_h,
                            double target);

/// Gaussian wave packets at the psi-band frequency plus seeded band-limited
/// random fields, in physical space on the operator's grid.
std::vector<State> wave_packet_family(const Space& space, double h, int n_packets,
                                      int n_random, std::uint64_t seed);

/// Spectrally truncated flow on a d-dimensional torus: only the frequency
/// modes with non-negligible psi_{2l,1}(h^2 lambda) weight are kept (stencil
/// dispersion relation of an n-per-axis grid), and the evolved field is
/// evaluated on a reduced grid fine enough that L^q norms of the truncated
/// trigonometric polynomial are exact for even q <= 4.
class BandFlow {
public:
    BandFlow(int dim, int n, double period, int ell, double h,
             double weight_threshold = 1e-9);
    ~BandFlow();
    BandFlow(const BandFlow&) = delete;
    BandFlow& operator=(const BandFlow&) = delete;

    int dim() const { return dim_; }
    double period() const { return period_; }
    double h() const { return h_; }
    int ell() const { return ell_; }
    int mode_count() const { return static_cast<int>(lambda_.size()); }
    const std::vector<double>& lambdas() const { return lambda_; }
    const std::vector<std::array<int, 3>>& freqs() const { return freqs_; }
    int grid_per_axis() const { return m_; }
    double cell_measure() const;

    /// ||psi_{l,1/2}(h^2 H) f||_2 for coefficients over the active modes
    /// (orthonormal Fourier basis in L^2(mu)).
    double localized_l2(const Eigen::VectorXcd& coeffs) const;
    /// Values of e^{itH} psi_{2l,1}(h^2 H) f on the reduced grid.
    State evaluate(const Eigen::VectorXcd& coeffs, double t) const;
    double qnorm_at(const Eigen::VectorXcd& coeffs, double t, double q) const;

private:
    int dim_;
    double period_;
    int ell_;
    double h_;
    std::vector<std::array<int, 3>> freqs_;  // signed per-axis frequencies
    std::vector<double> lambda_;
    std::vector<double> weight2l_;  // psi_{2l,1}(h^2 lambda)
    std::vector<double> weightl_;   // psi_{l,1/2}(h^2 lambda)
    int m_ = 0;                     // reduced grid points per axis
    void* plan_bwd_ = nullptr;      // fftw_plan
    mutable Eigen::VectorXcd buffer_;
};

std::vector<Eigen::VectorXcd> band_data_family(const BandFlow& flow, int n_packets,
                                               int n_random, std::uint64_t seed);
StrichartzConstantResult strichartz_constant(const BandFlow& flow, double p, double q,
                                             double T,
                                             std::span<const Eigen::VectorXcd> data);

/// Full-interval run on a compact torus via per-h BandFlow instances.
StrichartzReport compact_loss_sweep(int dim, int n, double period, int ell, double p,
                                    double q, std::span<const double> h_grid,
                                    int n_packets, int n_random, std::uint64_t seed,
                                    double T, double target);

/// max over the family of mixed_norm(e^{itH} u0) / ||u0||_{W^{gamma/p,2}}.
/// dt must resolve the family's spectral bandwidth; the Richardson check in
/// mixed_norm enforces adequacy.
double sobolev_strichartz_ratio(const SelfAdjointOperator& H,
                                std::span<const State> family, double gamma, double p,
                                double q, double T, double dt);

/// rho_lambda(x) = sin(lambda - x)/(lambda - x) + sin(lambda + x)/(lambda + x),
/// with the removable singularity sin(0)/0 = 1.
double rho(double lambda, double x);
/// Whether rho_lambda stays inside [1/2, 2] on [lambda, lambda + 1).
bool rho_in_band(double lambda, int samples = 2048);

/// Sharp spectral window 1_{[lambda, lambda+1)}(sqrt(H)) applied to v.
State cluster_projector(const SelfAdjointOperator& H, double lambda, const State& v);
/// L^2 -> L^q operator norm of the cluster projector; 0 for empty clusters.
/// q = 2 gives 1 on non-empty clusters, q = infinity the closed-form row
/// maximum, other q a monotone fixed-point iteration.
double cluster_operator_norm(const SelfAdjointOperator& H, double lambda, double q);
/// (d-1)/2 (1/2 - 1/q) below the critical exponent 2(d+1)/(d-1),
/// d(1/2 - 1/q) - 1/2 at or above it.
double cluster_predicted_exponent(int d, double q);

struct ClusterFitResult {
    std::vector<double> lambdas;  // non-empty clusters only
    std::vector<double> norms;
    DecayFit fit;
    double predicted = 0.0;
};
ClusterFitResult cluster_norm_fit(const SelfAdjointOperator& H, double q,
                                  std::span<const double> lambda_grid);

}  // namespace displab
