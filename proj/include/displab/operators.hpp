#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "displab/space.hpp"

namespace displab {

using State = Eigen::VectorXcd;
using RealState = Eigen::VectorXd;
using Complex = std::complex<double>;

/// psi_{m,n}(x) = x^m exp(-n x), the regularized spectral cutoff profile.
double psi(int m, double n, double x);

/// c_{m,n} = Gamma(m) / n^m = int_0^inf psi_{m,n}(s) ds/s, m >= 1.
double c_constant(int m, double n);

/// Spectral multiplier lambda >= 0 -> complex value, finite on the spectrum.
struct SpectralFunction {
    std::function<Complex(double)> eval;
    Complex operator()(double x) const { return eval(x); }
};

SpectralFunction psi_multiplier(int m, double n, double scale);     // psi_{m,n}(scale * lambda)
SpectralFunction heat_multiplier(double t);                         // exp(-t lambda)
SpectralFunction schrodinger_multiplier(double t);                  // exp(i t lambda)
SpectralFunction complex_semigroup_multiplier(Complex z);           // exp(-z lambda), Re z >= 0
SpectralFunction wave_cos_multiplier(double t);                     // cos(t sqrt(lambda))
SpectralFunction wave_sin_multiplier(double t);                     // sin(t sqrt(lambda))

enum class OperatorBuilder {
    torus_laplacian_analytic,
    interval_laplacian_analytic,
    graph_laplacian_dense,
    divergence_form_dense,
};

/// Nonnegative self-adjoint operator held by its full eigensystem, columns of
/// the mode table orthonormal in the mu-weighted inner product. Immutable.
class SelfAdjointOperator {
public:
    static constexpr int kDenseCap = 4096;
    static constexpr double kKernelClampRel = 1e-10;

    static SelfAdjointOperator torus_laplacian(std::shared_ptr<const Space> space);
    static SelfAdjointOperator interval_laplacian(std::shared_ptr<const Space> space);
    static SelfAdjointOperator graph_laplacian(std::shared_ptr<const Space> space);
    // -div(a grad) on a torus grid; `a` is a per-point coefficient field,
    // averaged onto edges.
    static SelfAdjointOperator divergence_form(std::shared_ptr<const Space> space,
                                               const RealState& a);

    const Space& space() const { return *space_; }
    std::shared_ptr<const Space> space_ptr() const { return space_; }
    OperatorBuilder builder() const { return builder_; }

    int size() const { return static_cast<int>(eigenvalues_.size()); }
    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
    double lambda_max() const { return eigenvalues_[size() - 1]; }
    /// Smallest strictly positive eigenvalue; 0 if the spectrum is {0}.
    double lambda_min_positive() const;
    const Eigen::MatrixXd& modes() const { return modes_; }

    /// mu-weighted inner product <u, v>_mu = sum_x conj(u) v mu.
    Complex inner(const State& u, const State& v) const;
    double norm(const State& v) const;

    /// Spectral coefficients <v, phi_k>_mu for all modes.
    Eigen::VectorXcd coefficients(const State& v) const;
    State from_coefficients(const Eigen::VectorXcd& c) const;

    State apply_calculus(const SpectralFunction& f, const State& v) const;
    State heat(double t, const State& v) const;
    State schrodinger(double t, const State& v) const;
    State complex_semigroup(Complex z, const State& v) const;
    State wave_cos(double t, const State& v) const;
    State wave_sin(double t, const State& v) const;

    /// Projection onto the eigenvalue-zero subspace N(H).
    State kernel_projector(const State& v) const;

    /// Dense kernel K(x,y) with (f(H)v)(x) = sum_y K(x,y) v(y) mu(y).
    Eigen::MatrixXd kernel_matrix(const std::function<double(double)>& f) const;
    Eigen::MatrixXcd kernel_matrix_c(const SpectralFunction& f) const;

    double sobolev_norm(double s, const State& v) const;

    /// max over lambda_k > 0 of |(1/c_{m,n}) int psi_{m,n}(s lambda) ds/s - 1|
    /// on a log-uniform quadrature with `points_per_decade` nodes per decade.
    double reproducing_residual(int m, double n, int points_per_decade = 64) const;

    struct SquareFunctionResult {
        double low_frequency_term = 0.0;  // ||phi(H) v||_{L^q}
        double square_term = 0.0;         // (int_0^1 ||psi(uH)v||_q^2 du/u)^{1/2}
    };
    SquareFunctionResult square_function_norm(int m, double n, double q, const State& v,
                                              std::span<const double> u_grid) const;

private:
    SelfAdjointOperator() = default;
    static SelfAdjointOperator from_dense(std::shared_ptr<const Space> space,
                                          const Eigen::MatrixXd& op, OperatorBuilder tag);
    void clamp_kernel();

    std::shared_ptr<const Space> space_;
    OperatorBuilder builder_ = OperatorBuilder::torus_laplacian_analytic;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd modes_;
};

double lq_norm(const Space& space, const State& v, double q);

}  // namespace displab
