#include "displab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "displab/dispersive.hpp"
#include "displab/hardy.hpp"
#include "displab/kernels.hpp"
#include "displab/operators.hpp"
#include "displab/space.hpp"
#include "displab/strichartz.hpp"
#include "json.hpp"

namespace displab {

namespace {

using Json = nlohmann::ordered_json;
constexpr const char* kReportVersion = "1.0";
constexpr double kInf = std::numeric_limits<double>::infinity();

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- validation

void require_object(const Json& j, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
}

void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed,
                         const std::string& ctx) {
    require_object(j, ctx);
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError(ctx + ": unknown key '" + key + "'");
}

const Json& require_key(const Json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError(ctx + ": missing required key '" + key + "'");
    return j.at(key);
}

double get_number(const Json& j, const std::string& key, const std::string& ctx,
                  double lo, double hi) {
    const Json& v = require_key(j, key, ctx);
    if (!v.is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
    const double x = v.get<double>();
    if (!(x >= lo) || !(x <= hi))
        throw ConfigError(ctx + "." + key + ": value " + std::to_string(x) +
                          " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

int get_int(const Json& j, const std::string& key, const std::string& ctx, int lo,
            int hi) {
    const Json& v = require_key(j, key, ctx);
    if (!v.is_number_integer())
        throw ConfigError(ctx + "." + key + ": expected an integer");
    const long long x = v.get<long long>();
    if (x < lo || x > hi)
        throw ConfigError(ctx + "." + key + ": value " + std::to_string(x) +
                          " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
}

std::vector<double> get_number_array(const Json& j, const std::string& key,
                                     const std::string& ctx, double lo, double hi,
                                     std::size_t min_len) {
    const Json& v = require_key(j, key, ctx);
    if (!v.is_array()) throw ConfigError(ctx + "." + key + ": expected an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ConfigError(ctx + "." + key + ": non-numeric entry");
        const double x = e.get<double>();
        if (!(x >= lo) || !(x <= hi))
            throw ConfigError(ctx + "." + key + ": entry " + std::to_string(x) +
                              " outside range");
        out.push_back(x);
    }
    if (out.size() < min_len)
        throw ConfigError(ctx + "." + key + ": need at least " +
                          std::to_string(min_len) + " entries");
    return out;
}

std::string get_string(const Json& j, const std::string& key, const std::string& ctx) {
    const Json& v = require_key(j, key, ctx);
    if (!v.is_string()) throw ConfigError(ctx + "." + key + ": expected a string");
    return v.get<std::string>();
}

// ---------------------------------------------------------------- reporting

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct CheckRow {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct Report {
    std::vector<CheckRow> checks;
    std::vector<std::vector<std::string>> csv_rows;  // first cell: table name
    Json extra = Json::object();

    void add_check(const std::string& name, double value, double threshold, bool pass) {
        checks.push_back({name, value, threshold, pass});
    }
    void add_upper(const std::string& name, double value, double threshold) {
        add_check(name, value, threshold, value <= threshold);
    }
    void add_row(const std::string& table, std::initializer_list<double> values) {
        std::vector<std::string> row{table};
        for (double v : values) row.push_back(fmt17(v));
        csv_rows.push_back(std::move(row));
    }
    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(),
                           [](const CheckRow& c) { return c.pass; });
    }
};

std::string config_digest(const std::string& canonical) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ------------------------------------------------------------- worker pool

/// Deterministic parallel map: item i writes slot i; the reduction order of
/// anything derived from the slots is fixed, so the worker count never
/// changes a reported number.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

// ----------------------------------------------------------- construction

struct Context {
    std::shared_ptr<const Space> space;
    std::string operator_type;
    std::uint64_t seed = 0;
    int workers = 1;
};

std::shared_ptr<const Space> build_space(const Json& cfg) {
    reject_unknown_keys(cfg, {"geometry", "dim", "n", "period"}, "space");
    const std::string geom = get_string(cfg, "geometry", "space");
    if (geom != "torus_grid")
        throw ConfigError("space.geometry: only 'torus_grid' is supported");
    const int dim = get_int(cfg, "dim", "space", 1, 3);
    const int n = get_int(cfg, "n", "space", 2, 1 << 16);
    const double period = get_number(cfg, "period", "space", 1e-9, 1e9);
    return std::make_shared<Space>(Space::torus_grid(dim, n, period));
}

SelfAdjointOperator build_dense(const Context& ctx) {
    if (ctx.operator_type != "torus_laplacian")
        throw ConfigError("operator.type: this experiment kind needs 'torus_laplacian'");
    if (ctx.space->size() > SelfAdjointOperator::kDenseCap)
        throw ConfigError("space: " + std::to_string(ctx.space->size()) +
                          " points exceed the dense operator cap");
    return SelfAdjointOperator::torus_laplacian(ctx.space);
}

State random_state(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    State v(n);
    for (int i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
    return v;
}

std::vector<int> ball_or_throw(const Space& space, int center, double radius,
                               const std::string& ctx) {
    if (center < 0 || center >= space.size())
        throw ConfigError(ctx + ": center out of range");
    if (!(radius > 0.0)) throw ConfigError(ctx + ": radius must be positive");
    auto members = space.ball_members({center, radius});
    if (members.empty()) throw ConfigError(ctx + ": empty ball");
    return members;
}

// ------------------------------------------------------------ experiments

void run_identity_audits(const Context& ctx, const Json& params, const Json& tol,
                         Report& rep) {
    reject_unknown_keys(params, {"trials", "t_values"}, "params");
    reject_unknown_keys(tol, {"exactness", "reproducing", "unitarity", "semigroup"},
                        "tolerances");
    const int trials = get_int(params, "trials", "params", 1, 100000);
    const auto t_values = get_number_array(params, "t_values", "params", 1e-12, 1e6, 1);
    const double tol_exact = get_number(tol, "exactness", "tolerances", 0.0, 1.0);
    const double tol_repro = get_number(tol, "reproducing", "tolerances", 0.0, 1.0);
    const double tol_unit = get_number(tol, "unitarity", "tolerances", 0.0, 1.0);
    const double tol_semi = get_number(tol, "semigroup", "tolerances", 0.0, 1.0);

    auto H = build_dense(ctx);
    const double lmax = H.lambda_max();

    // per-trial randomness drawn up front so worker scheduling cannot reorder it
    struct Trial {
        double alpha, gamma, phi, theta;
        State v;
    };
    std::mt19937_64 rng(ctx.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Trial> trial_data;
    for (int i = 0; i < trials; ++i) {
        Trial t;
        t.alpha = 3.0 * unif(rng);
        t.gamma = 1.0 + 8.0 * unif(rng);
        t.phi = 6.28 * unif(rng);
        t.theta = 6.28 * unif(rng);
        t.v = random_state(H.size(), rng);
        trial_data.push_back(std::move(t));
    }
    std::vector<double> dev_bound(trials), dev_attain(trials);
    parallel_for(trials, ctx.workers, [&](int i) {
        const Trial& t = trial_data[i];
        SpectralFunction f{[&t, lmax](double x) {
            const double u = x / lmax;
            const double amp = 0.25 + std::pow(std::sin(t.gamma * u + t.phi), 2);
            return amp * std::exp(Complex(0.0, t.theta + t.alpha * u));
        }};
        double fmax = 0.0;
        int argmax = 0;
        for (int k = 0; k < H.size(); ++k) {
            const double a = std::abs(f(H.eigenvalues()[k]));
            if (a > fmax) {
                fmax = a;
                argmax = k;
            }
        }
        dev_bound[i] =
            std::max(0.0, H.norm(H.apply_calculus(f, t.v)) / (fmax * H.norm(t.v)) - 1.0);
        State mode = H.modes().col(argmax).cast<Complex>();
        dev_attain[i] = std::abs(H.norm(H.apply_calculus(f, mode)) - fmax) / fmax;
    });
    double worst = 0.0;
    for (int i = 0; i < trials; ++i)
        worst = std::max({worst, dev_bound[i], dev_attain[i]});
    rep.add_upper("calculus_exactness", worst, tol_exact);
    rep.add_upper("reproducing_residual", H.reproducing_residual(2, 1.0), tol_repro);

    std::mt19937_64 rng2(ctx.seed + 1);
    State v = random_state(H.size(), rng2);
    double unit_worst = 0.0, semi_worst = 0.0;
    for (std::size_t i = 0; i < t_values.size(); ++i) {
        const double t = t_values[i];
        unit_worst = std::max(unit_worst,
                              std::abs(H.norm(H.schrodinger(t, v)) - H.norm(v)) / H.norm(v));
        const double t2 = t_values[(i + 1) % t_values.size()];
        semi_worst = std::max(
            semi_worst, (H.heat(t, H.heat(t2, v)) - H.heat(t + t2, v)).norm() / v.norm());
        rep.add_row("unitarity", {t, unit_worst});
    }
    rep.add_upper("unitarity", unit_worst, tol_unit);
    rep.add_upper("heat_semigroup", semi_worst, tol_semi);
}

void run_heat_bounds(const Context& ctx, const Json& params, const Json& tol,
                     Report& rep) {
    reject_unknown_keys(params, {"t_grid", "dg"}, "params");
    reject_unknown_keys(tol, {"due_factor", "dg_ratio"}, "tolerances");
    const auto t_grid = get_number_array(params, "t_grid", "params", 1e-12, 1e6, 1);
    const Json& dg = require_key(params, "dg", "params");
    reject_unknown_keys(dg, {"e_center", "e_radius", "f_center", "f_radius", "t"},
                        "params.dg");
    const double due_factor = get_number(tol, "due_factor", "tolerances", 1.0, 1e6);
    const double dg_ratio = get_number(tol, "dg_ratio", "tolerances", 1.0, 1e6);

    auto H = build_dense(ctx);
    const int d = ctx.space->dim();
    std::vector<double> zeros(d, 0.0);
    double worst = 0.0;
    for (double t : t_grid) {
        std::vector<double> one{t};
        const double measured = check_due(H, one).sup_constant;
        const double oracle = theta_heat_kernel(d, ctx.space->period(), t, zeros) *
                              ctx.space->ball_measure({0, std::sqrt(t)});
        const double fac = std::max(measured / oracle, oracle / measured);
        worst = std::max(worst, fac);
        rep.add_row("due", {t, measured, oracle, fac});
    }
    rep.add_upper("due_vs_theta_factor", worst, due_factor);

    auto E = ball_or_throw(*ctx.space, get_int(dg, "e_center", "params.dg", 0, 1 << 30),
                           get_number(dg, "e_radius", "params.dg", 0.0, 1e9), "params.dg.E");
    auto F = ball_or_throw(*ctx.space, get_int(dg, "f_center", "params.dg", 0, 1 << 30),
                           get_number(dg, "f_radius", "params.dg", 0.0, 1e9), "params.dg.F");
    const double t_dg = get_number(dg, "t", "params.dg", 1e-12, 1e6);
    auto res = check_davies_gaffney(H, E, F, t_dg);
    rep.add_upper("davies_gaffney_ratio", res.ratio, dg_ratio);
    rep.add_check("davies_gaffney_within_budget", res.within_budget ? 1.0 : 0.0, 1.0,
                  res.within_budget);
    rep.add_row("davies_gaffney", {t_dg, res.norm, res.gaussian, res.ratio});
}

void run_finite_speed(const Context& ctx, const Json& params, const Json& tol,
                      Report& rep) {
    reject_unknown_keys(params, {"cases", "dalembert"}, "params");
    reject_unknown_keys(tol, {"tail", "dalembert"}, "tolerances");
    const double tol_tail = get_number(tol, "tail", "tolerances", 0.0, 1.0);
    const double tol_dal = get_number(tol, "dalembert", "tolerances", 0.0, 1.0);
    const Json& cases = require_key(params, "cases", "params");
    if (!cases.is_array() || cases.empty())
        throw ConfigError("params.cases: expected a non-empty array");

    auto H = build_dense(ctx);
    double worst = 0.0;
    for (const auto& c : cases) {
        reject_unknown_keys(c, {"e_center", "e_radius", "f_center", "f_radius", "t"},
                            "params.cases[]");
        auto E = ball_or_throw(*ctx.space, get_int(c, "e_center", "case", 0, 1 << 30),
                               get_number(c, "e_radius", "case", 0.0, 1e9), "case.E");
        auto F = ball_or_throw(*ctx.space, get_int(c, "f_center", "case", 0, 1 << 30),
                               get_number(c, "f_radius", "case", 0.0, 1e9), "case.F");
        const double t = get_number(c, "t", "case", 0.0, 1e9);
        auto res = check_finite_speed(H, E, F, t);
        if (!res.inside_cone)
            throw ConfigError("params.cases[]: t not inside the light cone margin");
        worst = std::max(worst, res.tail);
        rep.add_row("finite_speed", {t, res.separation, res.tail});
    }
    rep.add_upper("finite_speed_tail", worst, tol_tail);

    if (params.contains("dalembert")) {
        if (ctx.space->dim() != 1)
            throw ConfigError("params.dalembert: only defined on 1D tori");
        const Json& dal = params.at("dalembert");
        reject_unknown_keys(dal, {"mode", "steps"}, "params.dalembert");
        const int mode = get_int(dal, "mode", "params.dalembert", 0, H.size() - 1);
        const int steps = get_int(dal, "steps", "params.dalembert", 1, 1 << 20);
        State v = H.modes().col(mode).cast<Complex>();
        const double t = steps * ctx.space->spacing();
        State u = H.wave_cos(t, v);
        State oracle = dalembert_oracle(*ctx.space, v, t);
        const double err = (u - oracle).norm() / std::max(1e-300, oracle.norm());
        rep.add_upper("dalembert_error", err, tol_dal);
    }
}

void run_transmutation(const Context& ctx, const Json& params, const Json& tol,
                       Report& rep) {
    reject_unknown_keys(params, {"z_res", "z_ims", "trials"}, "params");
    reject_unknown_keys(tol, {"relative"}, "tolerances");
    const auto z_res = get_number_array(params, "z_res", "params", 1e-12, 1e6, 1);
    const auto z_ims = get_number_array(params, "z_ims", "params", -1e6, 1e6, 1);
    const int trials = get_int(params, "trials", "params", 1, 1000);
    const double tol_rel = get_number(tol, "relative", "tolerances", 0.0, 1.0);

    auto H = build_dense(ctx);
    std::mt19937_64 rng(ctx.seed);
    std::vector<State> data;
    for (int i = 0; i < trials; ++i) data.push_back(random_state(H.size(), rng));

    std::vector<Complex> zs;
    for (double re : z_res)
        for (double im : z_ims) zs.emplace_back(re, im);
    std::vector<double> errs(zs.size());
    parallel_for(static_cast<int>(zs.size()), ctx.workers, [&](int i) {
        double worst = 0.0;
        for (const auto& v : data) {
            State approx = transmutation(H, zs[i], v);
            State exact = H.complex_semigroup(zs[i], v);
            worst = std::max(worst, (approx - exact).norm() / exact.norm());
        }
        errs[i] = worst;
    });
    double worst = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        worst = std::max(worst, errs[i]);
        rep.add_row("transmutation", {zs[i].real(), zs[i].imag(), errs[i]});
    }
    rep.add_upper("transmutation_relative_error", worst, tol_rel);
}

void run_hm_decay(const Context& ctx, const Json& params, const Json& tol, Report& rep) {
    reject_unknown_keys(params,
                        {"h", "r", "m", "m_prime", "t_values", "l_max", "n_set"},
                        "params");
    reject_unknown_keys(tol, {"slope_tol", "r_squared", "drift"}, "tolerances");
    const double h = get_number(params, "h", "params", 1e-9, 1e9);
    const double r = get_number(params, "r", "params", 1e-9, 1e9);
    const int m = get_int(params, "m", "params", 1, 20);
    const int m_prime = get_int(params, "m_prime", "params", 1, 20);
    const auto t_values = get_number_array(params, "t_values", "params", 1e-15, 1e6, 3);
    const double l_max = get_number(params, "l_max", "params", r, 1e9);
    const double slope_tol = get_number(tol, "slope_tol", "tolerances", 0.0, 10.0);
    const double r2_min = get_number(tol, "r_squared", "tolerances", 0.0, 1.0);

    auto pairs = make_pair_family(*ctx.space, r, l_max);
    const int d = ctx.space->dim();

    SchrodingerDecayResult res;
    std::optional<FourierTorusOperator> Hf;
    std::optional<SelfAdjointOperator> Hd;
    if (ctx.operator_type == "fourier_torus") {
        Hf.emplace(ctx.space);
        res = schrodinger_decay_experiment(*Hf, h, m_prime, m, t_values, r, pairs);
    } else {
        Hd.emplace(build_dense(ctx));
        res = schrodinger_decay_experiment(*Hd, h, m_prime, m, t_values, r, pairs);
    }
    for (std::size_t i = 0; i < res.t_values.size(); ++i)
        rep.add_row("a_star", {res.t_values[i], res.a_star[i]});
    rep.add_upper("decay_slope_deviation", std::abs(res.fit.slope + 0.5 * d), slope_tol);
    rep.add_check("fit_r_squared", res.fit.r_squared, r2_min,
                  res.fit.r_squared >= r2_min);
    rep.extra["fitted_slope"] = res.fit.slope;

    if (params.contains("n_set")) {
        const auto n_set = get_number_array(params, "n_set", "params", 1e-6, 1e6, 2);
        const double drift_tol = get_number(tol, "drift", "tolerances", 0.0, 10.0);
        auto T_of_t = [h, m_prime](double t) {
            const double h2 = h * h;
            return SpectralFunction{[t, h2, m_prime](double x) {
                return std::exp(Complex(0.0, t * x)) * psi(m_prime, 1.0, h2 * x);
            }};
        };
        NIndependenceResult ni;
        if (Hf)
            ni = check_n_independence(*Hf, T_of_t, t_values, m, r, n_set, pairs);
        else
            ni = check_n_independence(*Hd, T_of_t, t_values, m, r, n_set, pairs);
        rep.add_upper("n_independence_drift", ni.exponent_drift, drift_tol);
        for (std::size_t i = 0; i < n_set.size(); ++i)
            rep.add_row("n_independence", {n_set[i], ni.exponents[i]});
    }
}

void run_wave_envelope(const Context& ctx, const Json& params, const Json& tol,
                       Report& rep) {
    reject_unknown_keys(params, {"m0", "r", "s_values", "l_max", "l_stride"}, "params");
    reject_unknown_keys(tol, {"ratio_max", "cone"}, "tolerances");
    const int m0 = get_int(params, "m0", "params", 1, 20);
    const double r = get_number(params, "r", "params", 1e-9, 1e9);
    const auto s_values = get_number_array(params, "s_values", "params", 0.0, 1e9, 1);
    const double l_max = get_number(params, "l_max", "params", r, 1e9);
    const int l_stride = get_int(params, "l_stride", "params", 1, 1000);
    const double ratio_max = get_number(tol, "ratio_max", "tolerances", 0.0, 1e9);
    const double cone_tol = get_number(tol, "cone", "tolerances", 0.0, 1.0);

    auto H = build_dense(ctx);
    auto fam = make_pair_family(*ctx.space, r, l_max);
    std::vector<BallPair> picked;
    for (std::size_t i = 0; i < fam.size(); i += l_stride) picked.push_back(fam[i]);
    auto res = wave_envelope_experiment(H, m0, r, s_values, picked);
    for (const auto& row : res.table)
        rep.add_row("wave_envelope", {row.s, row.L, row.measured, row.envelope, row.ratio});
    rep.add_upper("envelope_ratio", res.max_ratio, ratio_max);
    rep.add_check("ridge_within_2r", res.ridge_ok ? 1.0 : 0.0, 1.0, res.ridge_ok);
    rep.add_upper("cone_vanishing", res.cone_max, cone_tol);
}

void run_hardy_pairing(const Context& ctx, const Json& params, const Json& tol,
                       Report& rep) {
    reject_unknown_keys(params,
                        {"radii", "center_stride", "order", "t_values", "h", "m_prime",
                         "s_values", "s_grid"},
                        "params");
    reject_unknown_keys(tol,
                        {"l1_max", "binomial", "bmo", "slope_tol", "spread",
                         "linf_slope_tol"},
                        "tolerances");
    const auto radii = get_number_array(params, "radii", "params", 1e-9, 1e9, 1);
    const int stride = get_int(params, "center_stride", "params", 1, 1 << 30);
    const auto t_values = get_number_array(params, "t_values", "params", 1e-15, 1e6, 3);
    const double h = get_number(params, "h", "params", 1e-9, 1e9);
    const int m_prime = get_int(params, "m_prime", "params", 1, 20);
    const auto s_values = get_number_array(params, "s_values", "params", 1e-15, 1e9, 1);
    const auto s_grid = get_number_array(params, "s_grid", "params", 1e-15, 1e9, 3);
    const double l1_max = get_number(tol, "l1_max", "tolerances", 0.0, 1e9);
    const double tol_binom = get_number(tol, "binomial", "tolerances", 0.0, 1.0);
    const double tol_bmo = get_number(tol, "bmo", "tolerances", 0.0, 1.0);
    const double slope_tol = get_number(tol, "slope_tol", "tolerances", 0.0, 10.0);
    const double spread_tol = get_number(tol, "spread", "tolerances", 1.0, 1e9);
    const double linf_tol = get_number(tol, "linf_slope_tol", "tolerances", 0.0, 10.0);

    auto H = build_dense(ctx);
    const int d = ctx.space->dim();
    const int order = params.contains("order")
                          ? get_int(params, "order", "params", default_atom_order(d), 20)
                          : default_atom_order(d);
    auto atoms = make_atom_family(H, order, radii, stride, ctx.seed);

    auto audit = atom_l1_audit(H, atoms);
    rep.add_upper("atom_l1_max", audit.max_l1, l1_max);
    rep.add_upper("binomial_residual", audit.binomial_residual, tol_binom);

    std::vector<Ball> balls;
    for (const auto& a : atoms) balls.push_back(a.ball);
    State ones = State::Constant(H.size(), 1.0);
    rep.add_upper("bmo_of_constants", bmo_norm(H, ones, balls, order), tol_bmo);

    std::vector<double> sups;
    for (double t : t_values) {
        SpectralFunction Tt{[t, h, m_prime](double x) {
            return std::exp(Complex(0.0, t * x)) * psi(m_prime, 1.0, h * h * x);
        }};
        const double sup = pairing_experiment(H, Tt, atoms).sup;
        sups.push_back(sup);
        rep.add_row("pairing", {t, sup});
    }
    auto fit = fit_decay_exponent(t_values, sups);
    rep.add_upper("pairing_slope_deviation", std::abs(fit.slope + 0.5 * d), slope_tol);
    rep.extra["pairing_slope"] = fit.slope;

    SpectralFunction loc = psi_multiplier(m_prime, 1.0, h * h);
    double lo = kInf, hi = 0.0;
    for (double s : s_values) {
        const double v = regularized_pairing(H, loc, s, atoms).sup;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        rep.add_row("regularized_pairing", {s, v});
    }
    rep.add_upper("regularized_spread", hi / lo, spread_tol);

    SpectralFunction id{[](double) { return Complex(1.0, 0.0); }};
    auto linf_fit = l1_linf_exponent(H, id, s_grid);
    rep.add_upper("l1_linf_slope_deviation", std::abs(linf_fit.slope + 0.5 * d), linf_tol);
    rep.extra["l1_linf_slope"] = linf_fit.slope;
}

void run_strichartz_sweep(const Context& ctx, const Json& params, const Json& tol,
                          Report& rep) {
    reject_unknown_keys(params,
                        {"variant", "ell", "p", "q", "h_grid", "packets", "randoms",
                         "horizon_scale", "gamma", "horizon"},
                        "params");
    reject_unknown_keys(tol, {"target"}, "tolerances");
    const std::string variant = get_string(params, "variant", "params");
    const int ell = get_int(params, "ell", "params", 1, 20);
    const double p = get_number(params, "p", "params", 2.0, 1e6);
    const double q = get_number(params, "q", "params", 2.0, 1e6);
    const auto h_grid = get_number_array(params, "h_grid", "params", 1e-9, 1e9, 3);
    const int packets = get_int(params, "packets", "params", 0, 1000);
    const int randoms = get_int(params, "randoms", "params", 0, 1000);
    const double target = get_number(tol, "target", "tolerances", 0.0, 10.0);
    if (!is_admissible(p, q, ctx.space->dim()))
        throw ConfigError("params: (p, q) not admissible in this dimension");

    StrichartzReport srep;
    if (variant == "proxy") {
        if (ctx.operator_type != "fourier_torus")
            throw ConfigError("operator.type: proxy sweep needs 'fourier_torus'");
        const double scale = get_number(params, "horizon_scale", "params", 1e-9, 1e9);
        FourierTorusOperator H(ctx.space);
        auto family = [&](double h) {
            return wave_packet_family(*ctx.space, h, packets, randoms, ctx.seed);
        };
        auto horizon = [scale](double h) { return std::min(1.0, scale * h); };
        srep = loss_sweep(H, ell, p, q, h_grid, family, horizon, target);
    } else if (variant == "compact") {
        get_number(params, "gamma", "params", 0.0, 10.0);  // recorded context
        const double T = get_number(params, "horizon", "params", 1e-9, 1e9);
        srep = compact_loss_sweep(ctx.space->dim(), ctx.space->n_per_axis(),
                                  ctx.space->period(), ell, p, q, h_grid, packets,
                                  randoms, ctx.seed, T, target);
    } else {
        throw ConfigError("params.variant: expected 'proxy' or 'compact'");
    }
    for (std::size_t i = 0; i < srep.h_grid.size(); ++i)
        rep.add_row("strichartz", {srep.h_grid[i], srep.constants[i]});
    rep.add_upper("loss_exponent", srep.beta, srep.target);
    rep.add_upper("sobolev_ceiling", srep.beta, srep.ceiling);
    rep.extra["beta"] = srep.beta;
    rep.extra["r_squared"] = srep.r_squared;
}

void run_cluster_fit(const Context& ctx, const Json& params, const Json& tol,
                     Report& rep) {
    reject_unknown_keys(params, {"q", "lambda_values"}, "params");
    reject_unknown_keys(tol, {"slope_tol"}, "tolerances");
    const Json& qj = require_key(params, "q", "params");
    double q;
    if (qj.is_string()) {
        if (qj.get<std::string>() != "inf")
            throw ConfigError("params.q: expected a number or 'inf'");
        q = kInf;
    } else {
        q = get_number(params, "q", "params", 2.0, 1e6);
    }
    const auto lambdas = get_number_array(params, "lambda_values", "params", 0.0, 1e9, 3);
    const double slope_tol = get_number(tol, "slope_tol", "tolerances", 0.0, 10.0);

    auto H = build_dense(ctx);
    auto res = cluster_norm_fit(H, q, lambdas);
    for (std::size_t i = 0; i < res.lambdas.size(); ++i)
        rep.add_row("cluster", {res.lambdas[i], res.norms[i]});
    rep.add_upper("cluster_slope_deviation", std::abs(res.fit.slope - res.predicted),
                  slope_tol);
    rep.extra["fitted_slope"] = res.fit.slope;
    rep.extra["predicted_slope"] = res.predicted;
}

using KindFn = void (*)(const Context&, const Json&, const Json&, Report&);

const std::vector<std::pair<std::string, KindFn>>& kind_table() {
    static const std::vector<std::pair<std::string, KindFn>> table{
        {"heat_bounds", run_heat_bounds},
        {"finite_speed", run_finite_speed},
        {"transmutation", run_transmutation},
        {"hm_decay", run_hm_decay},
        {"wave_envelope", run_wave_envelope},
        {"hardy_pairing", run_hardy_pairing},
        {"strichartz_sweep", run_strichartz_sweep},
        {"cluster_fit", run_cluster_fit},
        {"identity_audits", run_identity_audits},
    };
    return table;
}

}  // namespace

std::vector<std::string> experiment_kinds() {
    std::vector<std::string> out;
    for (const auto& [name, fn] : kind_table()) out.push_back(name);
    return out;
}

int run_experiment(const RunOptions& opts, std::string& message) {
    const auto t0 = std::chrono::steady_clock::now();
    Json cfg;
    std::string stem;
    Report rep;
    Context ctx;
    std::string kind;
    try {
        std::ifstream in(opts.config_path);
        if (!in) {
            message = "cannot open config file: " + opts.config_path;
            return run_config_error;
        }
        try {
            cfg = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            message = std::string("config parse error: ") + e.what();
            return run_config_error;
        }
        reject_unknown_keys(
            cfg, {"kind", "space", "operator", "seed", "output", "tolerances", "params"},
            "config");
        kind = get_string(cfg, "kind", "config");
        ctx.space = build_space(require_key(cfg, "space", "config"));
        const Json& op = require_key(cfg, "operator", "config");
        reject_unknown_keys(op, {"type"}, "operator");
        ctx.operator_type = get_string(op, "type", "operator");
        if (ctx.operator_type != "torus_laplacian" && ctx.operator_type != "fourier_torus")
            throw ConfigError("operator.type: unknown operator '" + ctx.operator_type + "'");
        const Json& sj = require_key(cfg, "seed", "config");
        if (!sj.is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
        ctx.seed = opts.seed_override.value_or(sj.get<std::uint64_t>());
        const Json& out = require_key(cfg, "output", "config");
        reject_unknown_keys(out, {"stem"}, "output");
        stem = get_string(out, "stem", "output");
        if (stem.empty() || stem.find('/') != std::string::npos)
            throw ConfigError("output.stem: must be a non-empty bare file stem");

        int workers = opts.workers;
        if (workers == 0) {
            if (const char* env = std::getenv("DISPERSIVE_LAB_WORKERS")) workers = std::atoi(env);
            if (workers <= 0) workers = 1;
        }
        if (workers < 1) throw ConfigError("workers: must be >= 1");
        ctx.workers = workers;

        const Json& tol = require_key(cfg, "tolerances", "config");
        const Json& par = require_key(cfg, "params", "config");
        KindFn fn = nullptr;
        for (const auto& [name, f] : kind_table())
            if (name == kind) fn = f;
        if (!fn) throw ConfigError("config.kind: unknown experiment kind '" + kind + "'");
        fn(ctx, par, tol, rep);
    } catch (const ConfigError& e) {
        message = std::string("validation error: ") + e.what();
        return run_config_error;
    } catch (const std::invalid_argument& e) {
        message = std::string("validation error: ") + e.what();
        return run_config_error;
    } catch (const std::exception& e) {
        message = std::string("internal error: ") + e.what();
        return run_internal_error;
    }

    // persist CSV + JSON
    try {
        namespace fs = std::filesystem;
        fs::create_directories(opts.out_dir);
        // seed override must produce the same bytes as a config carrying it
        Json canonical = cfg;
        canonical["seed"] = ctx.seed;
        const std::string digest = config_digest(canonical.dump());

        std::ofstream csv(fs::path(opts.out_dir) / (stem + ".csv"), std::ios::binary);
        csv << "table,values...\n";
        for (const auto& row : rep.csv_rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                csv << (i ? "," : "") << row[i];
            csv << "\n";
        }
        for (const auto& c : rep.checks)
            csv << "check," << c.name << "," << fmt17(c.value) << "," << fmt17(c.threshold)
                << "," << (c.pass ? "pass" : "fail") << "\n";

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        Json j;
        j["version"] = kReportVersion;
        j["kind"] = kind;
        j["config_digest"] = digest;
        j["seed"] = ctx.seed;
        Json checks = Json::array();
        for (const auto& c : rep.checks)
            checks.push_back(Json{{"name", c.name},
                                  {"value", c.value},
                                  {"threshold", c.threshold},
                                  {"pass", c.pass}});
        j["checks"] = checks;
        for (const auto& [k, v] : rep.extra.items()) j[k] = v;
        j["pass"] = rep.all_pass();
        j["wall_time_seconds"] = wall;
        std::ofstream js(fs::path(opts.out_dir) / (stem + ".json"), std::ios::binary);
        js << j.dump(2) << "\n";
    } catch (const std::exception& e) {
        message = std::string("internal error while writing reports: ") + e.what();
        return run_internal_error;
    }

    std::ostringstream msg;
    for (const auto& c : rep.checks)
        msg << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value
            << " threshold=" << c.threshold << "\n";
    msg << (rep.all_pass() ? "all checks passed" : "some checks failed");
    message = msg.str();
    return rep.all_pass() ? run_ok : run_check_failed;
}

}  // namespace displab
