#include "displab/fourier_torus.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace displab {

FourierTorusOperator::FourierTorusOperator(std::shared_ptr<const Space> space)
    : space_(std::move(space)) {
    if (space_->geometry() != Geometry::torus_grid)
        throw std::invalid_argument("FourierTorusOperator: torus grids only");
    const int d = space_->dim();
    const int n = space_->n_per_axis();
    const int N = space_->size();
    const double h = space_->spacing();

    lambda_.resize(N);
    const double scale = 4.0 / (h * h);
    for (int idx = 0; idx < N; ++idx) {
        int rem = idx;
        double lam = 0.0;
        for (int a = 0; a < d; ++a) {
            const int k = rem % n;
            rem /= n;
            const double s = std::sin(std::numbers::pi * k / n);
            lam += scale * s * s;
        }
        lambda_[idx] = lam;
        lambda_max_ = std::max(lambda_max_, lam);
    }

    buffer_.resize(N);
    int dims[3] = {n, n, n};
    auto* data = reinterpret_cast<fftw_complex*>(buffer_.data());
    plan_fwd_ = fftw_plan_dft(d, dims, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_bwd_ = fftw_plan_dft(d, dims, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_fwd_ || !plan_bwd_)
        throw std::runtime_error("FourierTorusOperator: FFTW plan creation failed");
}

FourierTorusOperator::~FourierTorusOperator() {
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

State FourierTorusOperator::apply_calculus(const SpectralFunction& f, const State& v) const {
    const int N = size();
    if (static_cast<int>(v.size()) != N)
        throw std::invalid_argument("apply_calculus: state size mismatch");
    buffer_ = v;
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    for (int k = 0; k < N; ++k) {
        const Complex fv = f(lambda_[k]);
        if (!std::isfinite(fv.real()) || !std::isfinite(fv.imag()))
            throw std::domain_error("apply_calculus: multiplier not finite at lambda=" +
                                    std::to_string(lambda_[k]));
        buffer_[k] *= fv / static_cast<double>(N);
    }
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    return buffer_;
}

State FourierTorusOperator::heat(double t, const State& v) const {
    return apply_calculus(heat_multiplier(t), v);
}

State FourierTorusOperator::schrodinger(double t, const State& v) const {
    return apply_calculus(schrodinger_multiplier(t), v);
}

double FourierTorusOperator::norm(const State& v) const {
    double acc = 0.0;
    for (int i = 0; i < v.size(); ++i) acc += std::norm(v[i]) * space_->weight(i);
    return std::sqrt(acc);
}

State FourierTorusOperator::kernel_column(const SpectralFunction& f, int x0) const {
    State e = State::Zero(size());
    e[x0] = 1.0 / space_->weight(x0);
    return apply_calculus(f, e);
}

int FourierTorusOperator::index_diff(int a, int b) const {
    const int d = space_->dim();
    const int n = space_->n_per_axis();
    int out = 0;
    int stride = 1;
    for (int ax = 0; ax < d; ++ax) {
        const int ia = a % n;
        const int ib = b % n;
        a /= n;
        b /= n;
        out += ((ia - ib + n) % n) * stride;
        stride *= n;
    }
    return out;
}

}  // namespace displab
