#include "displab/strichartz.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace displab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_fast_size(int m) {
    for (int f : {2, 3, 5})
        while (m % f == 0) m /= f;
    return m == 1;
}

int next_fast_size(int m) {
    while (!is_fast_size(m)) ++m;
    return m;
}

/// Uniform sample times covering [-T, T] with count = n_steps + 1, n_steps a
/// multiple of 4 so the Richardson half-grid is Simpson-compatible.
std::vector<double> time_grid(double T, double dt_target, double& dt_out) {
    if (!(T > 0.0)) throw std::invalid_argument("time grid: T must be positive");
    int n_steps = static_cast<int>(std::ceil(2.0 * T / dt_target));
    n_steps = std::max(8, ((n_steps + 3) / 4) * 4);
    dt_out = 2.0 * T / n_steps;
    std::vector<double> t(n_steps + 1);
    for (int j = 0; j <= n_steps; ++j) t[j] = -T + j * dt_out;
    return t;
}

double simpson_pth_root(std::span<const double> f_p, double dt, double p) {
    const std::size_t n = f_p.size() - 1;
    double acc = f_p.front() + f_p.back();
    for (std::size_t j = 1; j < n; ++j) acc += (j % 2 == 1 ? 4.0 : 2.0) * f_p[j];
    return std::pow(acc * dt / 3.0, 1.0 / p);
}

struct DatumEvaluator {
    std::function<double(std::size_t)> denom;
    std::function<double(std::size_t, double)> qnorm_at;
};

StrichartzConstantResult constant_core(double p, double q, double T, double dt_target,
                                       std::size_t n_data, const DatumEvaluator& ev) {
    if (!(p >= 2.0) || !(q >= 2.0))
        throw std::invalid_argument("strichartz_constant: exponents must be >= 2");
    if (q == kInf) throw std::invalid_argument("strichartz_constant: q = infinity excluded");
    double dt = 0.0;
    const auto times = time_grid(T, dt_target, dt);
    StrichartzConstantResult res;
    for (std::size_t i = 0; i < n_data; ++i) {
        const double den = ev.denom(i);
        if (den < 1e-14) {
            ++res.skipped;
            continue;
        }
        std::vector<double> qn(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) qn[j] = ev.qnorm_at(i, times[j]);
        const double num = mixed_norm_from_samples(qn, dt, p);
        res.per_datum.push_back(num / den);
        res.constant = std::max(res.constant, num / den);
    }
    return res;
}

}  // namespace

bool is_admissible(double p, double q, int d) {
    if (d < 1) throw std::invalid_argument("is_admissible: dimension must be positive");
    if (!(p >= 2.0) || !(q >= 2.0)) return false;
    if (p == 2.0 && q == kInf && d == 2) return false;
    const double lhs = (p == kInf ? 0.0 : 2.0 / p) + (q == kInf ? 0.0 : d / q);
    return std::abs(lhs - 0.5 * d) <= 1e-12;
}

double lq_norm_weighted(std::span<const double> weights, const State& v, double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("lq_norm: q must be >= 1");
    if (static_cast<std::size_t>(v.size()) != weights.size())
        throw std::invalid_argument("lq_norm: size mismatch");
    if (q == kInf) return v.cwiseAbs().maxCoeff();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        acc += std::pow(std::abs(v[i]), q) * weights[i];
    return std::pow(acc, 1.0 / q);
}

double mixed_norm_from_samples(std::span<const double> qnorms, double dt, double p) {
    if (p == kInf) {
        double m = 0.0;
        for (double x : qnorms) m = std::max(m, x);
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("mixed_norm: p must be >= 1");
    if (!(dt > 0.0)) throw std::invalid_argument("mixed_norm: dt must be positive");
    if (qnorms.size() < 5 || (qnorms.size() - 1) % 4 != 0)
        throw std::invalid_argument("mixed_norm: sample count must be 1 mod 4 (and >= 5)");
    std::vector<double> f_p(qnorms.size());
    for (std::size_t j = 0; j < qnorms.size(); ++j) f_p[j] = std::pow(qnorms[j], p);
    const double fine = simpson_pth_root(f_p, dt, p);
    std::vector<double> coarse_p;
    for (std::size_t j = 0; j < f_p.size(); j += 2) coarse_p.push_back(f_p[j]);
    const double coarse = simpson_pth_root(coarse_p, 2.0 * dt, p);
    const double scale = std::max(fine, coarse);
    if (scale > 0.0 && std::abs(fine - coarse) > 0.01 * scale)
        throw std::runtime_error(
            "mixed_norm: half-grid quadrature disagrees by more than 1%; use a finer dt");
    return fine;
}

double mixed_norm(const Space& space, std::span<const State> u, double dt, double p,
                  double q) {
    std::vector<double> qn(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) qn[j] = lq_norm(space, u[j], q);
    return mixed_norm_from_samples(qn, dt, p);
}

StrichartzConstantResult strichartz_constant(const SelfAdjointOperator& H, double h,
                                             int ell, double p, double q, double T,
                                             std::span<const State> data) {
    if (ell < 1) throw std::invalid_argument("strichartz_constant: ell must be >= 1");
    const SpectralFunction denom_mult = psi_multiplier(ell, 0.5, h * h);
    DatumEvaluator ev;
    ev.denom = [&](std::size_t i) { return H.norm(H.apply_calculus(denom_mult, data[i])); };
    ev.qnorm_at = [&](std::size_t i, double t) {
        SpectralFunction mult{[t, h, ell](double x) {
            return std::exp(Complex(0.0, t * x)) * psi(2 * ell, 1.0, h * h * x);
        }};
        return lq_norm(H.space(), H.apply_calculus(mult, data[i]), q);
    };
    return constant_core(p, q, T, h * h / 16.0, data.size(), ev);
}

StrichartzConstantResult strichartz_constant(const FourierTorusOperator& H, double h,
                                             int ell, double p, double q, double T,
                                             std::span<const State> data) {
    if (ell < 1) throw std::invalid_argument("strichartz_constant: ell must be >= 1");
    const SpectralFunction denom_mult = psi_multiplier(ell, 0.5, h * h);
    DatumEvaluator ev;
    ev.denom = [&](std::size_t i) { return H.norm(H.apply_calculus(denom_mult, data[i])); };
    ev.qnorm_at = [&](std::size_t i, double t) {
        SpectralFunction mult{[t, h, ell](double x) {
            return std::exp(Complex(0.0, t * x)) * psi(2 * ell, 1.0, h * h * x);
        }};
        return lq_norm(H.space(), H.apply_calculus(mult, data[i]), q);
    };
    return constant_core(p, q, T, h * h / 16.0, data.size(), ev);
}

StrichartzReport loss_report(std::span<const double> h_grid,
                             std::span<const double> constants, double target, double p) {
    if (h_grid.size() < 3) throw std::invalid_argument("loss_report: need >= 3 h-values");
    auto fit = fit_decay_exponent(h_grid, constants);
    StrichartzReport rep;
    rep.h_grid.assign(h_grid.begin(), h_grid.end());
    rep.constants.assign(constants.begin(), constants.end());
    rep.beta = -fit.slope;  // C(h) ~ h^{-beta}
    rep.r_squared = fit.r_squared;
    rep.target = target;
    rep.ceiling = (p == kInf ? 0.0 : 2.0 / p) + 0.1;
    rep.pass = rep.beta <= target;
    rep.ceiling_ok = rep.beta <= rep.ceiling;
    return rep;
}

namespace {

void validate_h_grid(std::span<const double> h_grid, double spacing, double period) {
    if (h_grid.size() < 3) throw std::invalid_argument("loss sweep: need >= 3 h-values");
    const auto [lo, hi] = std::minmax_element(h_grid.begin(), h_grid.end());
    if (*lo < 8.0 * spacing || *hi > period / 8.0)
        throw std::invalid_argument("loss sweep: h grid outside [8 spacing, period/8]");
    if (*hi / *lo < 10.0 * (1.0 - 1e-9))
        throw std::invalid_argument("loss sweep: h grid must span a decade");
}

}  // namespace

StrichartzReport loss_sweep(const FourierTorusOperator& H, int ell, double p, double q,
                            std::span<const double> h_grid,
                            const std::function<std::vector<State>(double)>& family_of_h,
                            const std::function<double(double)>& horizon_of_h,
                            double target) {
    validate_h_grid(h_grid, H.space().spacing(), H.space().period());
    std::vector<double> constants;
    for (double h : h_grid) {
        const auto data = family_of_h(h);
        const auto res = strichartz_constant(H, h, ell, p, q, horizon_of_h(h), data);
        if (res.per_datum.empty())
            throw std::runtime_error("loss_sweep: all data skipped at one h");
        constants.push_back(res.constant);
    }
    return loss_report(h_grid, constants, target, p);
}

std::vector<State> wave_packet_family(const Space& space, double h, int n_packets,
                                      int n_random, std::uint64_t seed) {
    if (space.geometry() != Geometry::torus_grid)
        throw std::invalid_argument("wave_packet_family: torus grids only");
    const int d = space.dim();
    const int n = space.n_per_axis();
    const double s = space.spacing();
    const double P = space.period();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss;

    std::vector<State> out;
    const double xi_mag = std::sqrt(2.0) / h;  // band center of psi_{2,1}(h^2 lambda)
    const double w = 2.0 * h;
    for (int kp = 0; kp < n_packets; ++kp) {
        std::array<double, 3> xc{}, xi{};
        double dir2 = 0.0;
        for (int a = 0; a < d; ++a) {
            xc[a] = unif(rng) * P;
            xi[a] = gauss(rng);
            dir2 += xi[a] * xi[a];
        }
        for (int a = 0; a < d; ++a) xi[a] *= xi_mag / std::sqrt(std::max(dir2, 1e-30));
        State f(space.size());
        for (int idx = 0; idx < space.size(); ++idx) {
            int rem = idx;
            double phase = 0.0, env = 0.0;
            for (int a = 0; a < d; ++a) {
                const double x = (rem % n) * s;
                rem /= n;
                double delta = x - xc[a];
                delta -= P * std::round(delta / P);
                phase += xi[a] * delta;
                env += delta * delta;
            }
            f[idx] = std::exp(Complex(-env / (2.0 * w * w), phase));
        }
        out.push_back(std::move(f));
    }
    for (int kr = 0; kr < n_random; ++kr) {
        State f(space.size());
        for (int idx = 0; idx < space.size(); ++idx) f[idx] = Complex(gauss(rng), gauss(rng));
        out.push_back(std::move(f));
    }
    return out;
}

BandFlow::BandFlow(int dim, int n, double period, int ell, double h,
                   double weight_threshold)
    : dim_(dim), period_(period), ell_(ell), h_(h) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("BandFlow: dimension in [1,3]");
    if (n < 4 || !(period > 0.0) || ell < 1 || !(h > 0.0))
        throw std::invalid_argument("BandFlow: bad parameters");
    const double s = period / n;
    const double scale = 4.0 / (s * s);
    const double psi_max = psi(2 * ell, 1.0, 2.0 * ell);
    const double cut = weight_threshold * psi_max;

    // per-axis frequency bound from the single-axis symbol
    int kmax = 0;
    for (int k = 1; k <= n / 2; ++k) {
        const double sa = std::sin(std::numbers::pi * k / static_cast<double>(n));
        if (psi(2 * ell, 1.0, h * h * scale * sa * sa) >= cut)
            kmax = k;
        else if (k > kmax + 2)
            break;
    }
    if (kmax == 0) throw std::invalid_argument("BandFlow: no active modes at this h");

    std::array<int, 3> k{};
    const int lo = -kmax, hi = kmax;
    for (k[0] = lo; k[0] <= hi; ++k[0])
        for (k[1] = (dim > 1 ? lo : 0); k[1] <= (dim > 1 ? hi : 0); ++k[1])
            for (k[2] = (dim > 2 ? lo : 0); k[2] <= (dim > 2 ? hi : 0); ++k[2]) {
                double lam = 0.0;
                for (int a = 0; a < dim; ++a) {
                    const double sa = std::sin(std::numbers::pi * k[a] / static_cast<double>(n));
                    lam += scale * sa * sa;
                }
                const double w2l = psi(2 * ell, 1.0, h * h * lam);
                if (w2l < cut) continue;
                freqs_.push_back(k);
                lambda_.push_back(lam);
                weight2l_.push_back(w2l);
                weightl_.push_back(psi(ell, 0.5, h * h * lam));
            }
    if (freqs_.empty()) throw std::invalid_argument("BandFlow: empty active band");

    m_ = next_fast_size(std::max(16, 4 * kmax + 2));
    int total = 1;
    for (int a = 0; a < dim; ++a) total *= m_;
    buffer_.resize(total);
    int dims[3] = {m_, m_, m_};
    auto* dataptr = reinterpret_cast<fftw_complex*>(buffer_.data());
    plan_bwd_ = fftw_plan_dft(dim, dims, dataptr, dataptr, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!plan_bwd_) throw std::runtime_error("BandFlow: FFTW plan creation failed");
}

BandFlow::~BandFlow() {
    if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

double BandFlow::cell_measure() const {
    return std::pow(period_ / m_, dim_);
}

double BandFlow::localized_l2(const Eigen::VectorXcd& coeffs) const {
    if (coeffs.size() != static_cast<Eigen::Index>(lambda_.size()))
        throw std::invalid_argument("BandFlow: coefficient size mismatch");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i)
        acc += std::norm(coeffs[i]) * weightl_[i] * weightl_[i];
    return std::sqrt(acc);
}

State BandFlow::evaluate(const Eigen::VectorXcd& coeffs, double t) const {
    if (coeffs.size() != static_cast<Eigen::Index>(lambda_.size()))
        throw std::invalid_argument("BandFlow: coefficient size mismatch");
    buffer_.setZero();
    for (std::size_t i = 0; i < freqs_.size(); ++i) {
        int idx = 0;
        for (int a = 0; a < dim_; ++a)
            idx = idx * m_ + ((freqs_[i][a] % m_) + m_) % m_;
        buffer_[idx] += coeffs[i] * weight2l_[i] * std::exp(Complex(0.0, t * lambda_[i]));
    }
    fftw_execute(static_cast<fftw_plan>(plan_bwd_));
    return buffer_ / std::pow(period_, 0.5 * dim_);
}

double BandFlow::qnorm_at(const Eigen::VectorXcd& coeffs, double t, double q) const {
    State u = evaluate(coeffs, t);
    if (q == kInf) return u.cwiseAbs().maxCoeff();
    const double cell = cell_measure();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) acc += std::pow(std::abs(u[i]), q) * cell;
    return std::pow(acc, 1.0 / q);
}

std::vector<Eigen::VectorXcd> band_data_family(const BandFlow& flow, int n_packets,
                                               int n_random, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss;
    const int d = flow.dim();
    const double P = flow.period();
    const double two_pi = 2.0 * std::numbers::pi;
    const double kappa0 = std::sqrt(2.0 * flow.ell()) / flow.h();  // band center
    const double w = 2.0 * flow.h();

    std::vector<Eigen::VectorXcd> out;
    for (int kp = 0; kp < n_packets; ++kp) {
        std::array<double, 3> xc{}, dir{};
        double dir2 = 0.0;
        for (int a = 0; a < d; ++a) {
            xc[a] = unif(rng) * P;
            dir[a] = gauss(rng);
            dir2 += dir[a] * dir[a];
        }
        for (int a = 0; a < d; ++a) dir[a] *= kappa0 / std::sqrt(std::max(dir2, 1e-30));
        Eigen::VectorXcd c(flow.mode_count());
        for (int i = 0; i < flow.mode_count(); ++i) {
            double off2 = 0.0, phase = 0.0;
            for (int a = 0; a < d; ++a) {
                const double kappa = two_pi * flow.freqs()[i][a] / P;
                off2 += (kappa - dir[a]) * (kappa - dir[a]);
                phase -= kappa * xc[a];
            }
            c[i] = std::exp(Complex(-0.5 * off2 * w * w, phase));
        }
        out.push_back(std::move(c));
    }
    for (int kr = 0; kr < n_random; ++kr) {
        Eigen::VectorXcd c(flow.mode_count());
        for (int i = 0; i < flow.mode_count(); ++i) c[i] = Complex(gauss(rng), gauss(rng));
        out.push_back(std::move(c));
    }
    return out;
}

StrichartzConstantResult strichartz_constant(const BandFlow& flow, double p, double q,
                                             double T,
                                             std::span<const Eigen::VectorXcd> data) {
    DatumEvaluator ev;
    ev.denom = [&](std::size_t i) { return flow.localized_l2(data[i]); };
    ev.qnorm_at = [&](std::size_t i, double t) { return flow.qnorm_at(data[i], t, q); };
    return constant_core(p, q, T, flow.h() * flow.h() / 16.0, data.size(), ev);
}

StrichartzReport compact_loss_sweep(int dim, int n, double period, int ell, double p,
                                    double q, std::span<const double> h_grid,
                                    int n_packets, int n_random, std::uint64_t seed,
                                    double T, double target) {
    validate_h_grid(h_grid, period / n, period);
    std::vector<double> constants;
    std::uint64_t k = 0;
    for (double h : h_grid) {
        BandFlow flow(dim, n, period, ell, h);
        const auto data = band_data_family(flow, n_packets, n_random, seed + 1000 * (k++));
        const auto res = strichartz_constant(flow, p, q, T, data);
        if (res.per_datum.empty())
            throw std::runtime_error("compact_loss_sweep: all data skipped at one h");
        constants.push_back(res.constant);
    }
    return loss_report(h_grid, constants, target, p);
}

double sobolev_strichartz_ratio(const SelfAdjointOperator& H,
                                std::span<const State> family, double gamma, double p,
                                double q, double T, double dt) {
    double best = 0.0;
    double dt_out = 0.0;
    const auto times = time_grid(T, dt, dt_out);
    for (const auto& u0 : family) {
        const double den = H.sobolev_norm(gamma / p, u0);
        if (den < 1e-14) continue;
        std::vector<double> qn(times.size());
        for (std::size_t j = 0; j < times.size(); ++j)
            qn[j] = lq_norm(H.space(), H.schrodinger(times[j], u0), q);
        best = std::max(best, mixed_norm_from_samples(qn, dt_out, p) / den);
    }
    return best;
}

double rho(double lambda, double x) {
    auto sinc = [](double y) { return y == 0.0 ? 1.0 : std::sin(y) / y; };
    return sinc(lambda - x) + sinc(lambda + x);
}

bool rho_in_band(double lambda, int samples) {
    for (int i = 0; i < samples; ++i) {
        const double v = rho(lambda, lambda + static_cast<double>(i) / samples);
        if (v < 0.5 || v > 2.0) return false;
    }
    return true;
}

namespace {

std::vector<int> cluster_modes(const SelfAdjointOperator& H, double lambda) {
    std::vector<int> out;
    for (int k = 0; k < H.size(); ++k) {
        const double r = std::sqrt(std::max(0.0, H.eigenvalues()[k]));
        if (r >= lambda && r < lambda + 1.0) out.push_back(k);
    }
    return out;
}

}  // namespace

State cluster_projector(const SelfAdjointOperator& H, double lambda, const State& v) {
    if (lambda < 0.0) throw std::invalid_argument("cluster_projector: lambda must be >= 0");
    SpectralFunction window{[lambda](double x) {
        const double r = std::sqrt(std::max(0.0, x));
        return Complex(r >= lambda && r < lambda + 1.0 ? 1.0 : 0.0, 0.0);
    }};
    return H.apply_calculus(window, v);
}

double cluster_operator_norm(const SelfAdjointOperator& H, double lambda, double q) {
    if (!(q >= 2.0)) throw std::invalid_argument("cluster_operator_norm: q must be >= 2");
    const auto modes = cluster_modes(H, lambda);
    if (modes.empty()) return 0.0;
    if (q == 2.0) return 1.0;

    const int N = H.size();
    const int K = static_cast<int>(modes.size());
    Eigen::MatrixXd Phi(N, K);
    for (int j = 0; j < K; ++j) Phi.col(j) = H.modes().col(modes[j]);

    // closed-form row maximum: exact for q = infinity, the starting point for
    // the fixed-point iteration otherwise
    int best_row = 0;
    double best = 0.0;
    for (int x = 0; x < N; ++x) {
        const double r = Phi.row(x).norm();
        if (r > best) {
            best = r;
            best_row = x;
        }
    }
    if (q == kInf) return best;

    Eigen::VectorXd c = Phi.row(best_row).transpose().normalized();
    double value = 0.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd v = Phi * c;
        double acc = 0.0;
        for (int x = 0; x < N; ++x) acc += std::pow(std::abs(v[x]), q) * H.space().weight(x);
        const double next = std::pow(acc, 1.0 / q);
        Eigen::VectorXd g(N);
        for (int x = 0; x < N; ++x)
            g[x] = H.space().weight(x) * std::pow(std::abs(v[x]), q - 2.0) * v[x];
        c = (Phi.transpose() * g).normalized();
        if (std::abs(next - value) <= 1e-11 * std::max(1.0, next)) {
            value = next;
            break;
        }
        value = next;
    }
    return value;
}

double cluster_predicted_exponent(int d, double q) {
    if (d < 2) throw std::invalid_argument("cluster_predicted_exponent: d must be >= 2");
    const double inv_q = (q == kInf ? 0.0 : 1.0 / q);
    const double critical = 2.0 * (d + 1.0) / (d - 1.0);
    if (q < critical) return 0.5 * (d - 1.0) * (0.5 - inv_q);
    return d * (0.5 - inv_q) - 0.5;
}

ClusterFitResult cluster_norm_fit(const SelfAdjointOperator& H, double q,
                                  std::span<const double> lambda_grid) {
    const double top = 0.5 * std::sqrt(H.lambda_max());
    ClusterFitResult res;
    for (double lam : lambda_grid) {
        if (lam > top)
            throw std::invalid_argument("cluster_norm_fit: lambda above sqrt(lambda_max)/2");
        const double nrm = cluster_operator_norm(H, lam, q);
        if (nrm <= 0.0) continue;  // empty cluster skipped
        res.lambdas.push_back(lam);
        res.norms.push_back(nrm);
    }
    if (res.lambdas.size() < 3)
        throw std::invalid_argument("cluster_norm_fit: fewer than 3 non-empty clusters");
    // plain log-log least squares; cluster grids need not span a full decade
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double n = static_cast<double>(res.lambdas.size());
    for (std::size_t i = 0; i < res.lambdas.size(); ++i) {
        const double x = std::log(res.lambdas[i]);
        const double y = std::log(res.norms[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y; syy += y * y;
    }
    const double vxx = sxx - sx * sx / n;
    const double vxy = sxy - sx * sy / n;
    const double vyy = syy - sy * sy / n;
    res.fit.slope = vxy / vxx;
    res.fit.intercept = (sy - res.fit.slope * sx) / n;
    res.fit.r_squared = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
    res.fit.n_samples = static_cast<int>(res.lambdas.size());
    res.predicted = cluster_predicted_exponent(H.space().dim(), q);
    return res;
}

}  // namespace displab
