#pragma once

#include <memory>

#include "displab/operators.hpp"
#include "displab/space.hpp"

namespace displab {

/// Matrix-free functional calculus for the standard grid Laplacian on large
/// torus grids, diagonalized by the discrete Fourier transform. Eigenvalues
/// follow the same stencil dispersion relation as the dense torus builder,
/// so the two backends agree wherever both apply.
class FourierTorusOperator {
public:
    explicit FourierTorusOperator(std::shared_ptr<const Space> space);
    ~FourierTorusOperator();
    FourierTorusOperator(const FourierTorusOperator&) = delete;
    FourierTorusOperator& operator=(const FourierTorusOperator&) = delete;

    const Space& space() const { return *space_; }
    std::shared_ptr<const Space> space_ptr() const { return space_; }
    int size() const { return static_cast<int>(lambda_.size()); }
    double lambda_max() const { return lambda_max_; }
    /// Eigenvalue at the flat frequency index (same axis decomposition as
    /// the spatial grid indices).
    double lambda(int k) const { return lambda_[k]; }

    State apply_calculus(const SpectralFunction& f, const State& v) const;
    State heat(double t, const State& v) const;
    State schrodinger(double t, const State& v) const;

    /// mu-weighted norm, identical to the dense backend convention.
    double norm(const State& v) const;

    /// Kernel column K(., x0) of f(H): f(H) applied to the point mass at x0.
    State kernel_column(const SpectralFunction& f, int x0 = 0) const;

    /// Flat index of the per-axis wrapped coordinate difference a - b.
    int index_diff(int a, int b) const;

private:
    std::shared_ptr<const Space> space_;
    std::vector<double> lambda_;
    double lambda_max_ = 0.0;
    void* plan_fwd_ = nullptr;   // fftw_plan
    void* plan_bwd_ = nullptr;
    mutable Eigen::VectorXcd buffer_;
};

}  // namespace displab
