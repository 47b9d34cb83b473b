#include "displab/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace displab {

namespace {

double axis_wrap(double delta, double period) {
    double d = std::abs(delta);
    d = std::fmod(d, period);
    return std::min(d, period - d);
}

}  // namespace

Space Space::torus_grid(int dim, int n_per_axis, double period) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("torus_grid: dim must be 1, 2 or 3");
    if (n_per_axis < 4) throw std::invalid_argument("torus_grid: n_per_axis < 4 is degenerate");
    if (period <= 0.0) throw std::invalid_argument("torus_grid: period must be positive");

    Space s;
    s.geometry_ = Geometry::torus_grid;
    s.dim_ = dim;
    s.n_per_axis_ = n_per_axis;
    s.period_ = period;
    s.spacing_ = period / n_per_axis;

    const int n = n_per_axis;
    long total = 1;
    for (int a = 0; a < dim; ++a) total *= n;
    const double w = std::pow(s.spacing_, dim);
    s.coords_.resize(total);
    s.weights_.assign(total, w);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        std::array<double, 3> c{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            c[a] = static_cast<double>(rem % n) * s.spacing_;
            rem /= n;
        }
        s.coords_[idx] = c;
    }
    s.total_measure_ = w * static_cast<double>(total);
    s.diameter_ = 0.5 * period * std::sqrt(static_cast<double>(dim));
    return s;
}

Space Space::interval_grid(int n, double length, BoundaryCondition bc) {
    if (n < 4) throw std::invalid_argument("interval_grid: n < 4 is degenerate");
    if (length <= 0.0) throw std::invalid_argument("interval_grid: length must be positive");

    Space s;
    s.geometry_ = Geometry::interval_grid;
    s.bc_ = bc;
    s.dim_ = 1;
    s.n_per_axis_ = n;
    s.length_ = length;
    s.coords_.resize(n);
    if (bc == BoundaryCondition::dirichlet) {
        // interior nodes of a grid with endpoints on the boundary
        s.spacing_ = length / (n + 1);
        for (int j = 0; j < n; ++j) s.coords_[j] = {(j + 1) * s.spacing_, 0.0, 0.0};
    } else {
        // cell-centered; total measure equals the domain length
        s.spacing_ = length / n;
        for (int j = 0; j < n; ++j) s.coords_[j] = {(j + 0.5) * s.spacing_, 0.0, 0.0};
    }
    s.weights_.assign(n, s.spacing_);
    s.total_measure_ = s.spacing_ * n;
    s.diameter_ = s.coords_[n - 1][0] - s.coords_[0][0];
    return s;
}

Space Space::general_graph(std::vector<std::array<double, 3>> coords,
                           std::vector<double> weights,
                           std::vector<GraphEdge> edges) {
    const int n = static_cast<int>(weights.size());
    if (n < 2) throw std::invalid_argument("general_graph: need at least 2 points");
    if (coords.size() != weights.size())
        throw std::invalid_argument("general_graph: coords/weights size mismatch");
    for (double w : weights)
        if (!(w > 0.0)) throw std::invalid_argument("general_graph: weights must be strictly positive");

    Space s;
    s.geometry_ = Geometry::general_graph;
    s.dim_ = 1;
    s.coords_ = std::move(coords);
    s.weights_ = std::move(weights);
    s.edges_ = std::move(edges);
    s.total_measure_ = 0.0;
    for (double w : s.weights_) s.total_measure_ += w;

    // Dijkstra from every source; edge lengths are the edge weights.
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (const auto& e : s.edges_) {
        if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n)
            throw std::invalid_argument("general_graph: edge endpoint out of range");
        if (!(e.weight > 0.0))
            throw std::invalid_argument("general_graph: edge weight must be positive");
        adj[e.a].emplace_back(e.b, e.weight);
        adj[e.b].emplace_back(e.a, e.weight);
    }
    s.graph_dist_.assign(static_cast<size_t>(n) * n, std::numeric_limits<double>::infinity());
    double min_edge = std::numeric_limits<double>::infinity();
    for (const auto& e : s.edges_) min_edge = std::min(min_edge, e.weight);
    for (int src = 0; src < n; ++src) {
        auto* dist = &s.graph_dist_[static_cast<size_t>(src) * n];
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
        dist[src] = 0.0;
        pq.emplace(0.0, src);
        while (!pq.empty()) {
            auto [d, u] = pq.top();
            pq.pop();
            if (d > dist[u]) continue;
            for (auto [v, w] : adj[u]) {
                if (d + w < dist[v]) {
                    dist[v] = d + w;
                    pq.emplace(dist[v], v);
                }
            }
        }
    }
    double diam = 0.0;
    for (double d : s.graph_dist_) {
        if (!std::isfinite(d)) throw std::invalid_argument("general_graph: graph is disconnected");
        diam = std::max(diam, d);
    }
    s.diameter_ = diam;
    s.spacing_ = min_edge;
    return s;
}

double Space::dist(int i, int j) const {
    switch (geometry_) {
        case Geometry::torus_grid: {
            double sum = 0.0;
            for (int a = 0; a < dim_; ++a) {
                const double d = axis_wrap(coords_[i][a] - coords_[j][a], period_);
                sum += d * d;
            }
            return std::sqrt(sum);
        }
        case Geometry::interval_grid:
            return std::abs(coords_[i][0] - coords_[j][0]);
        case Geometry::general_graph:
            return graph_dist_[static_cast<size_t>(i) * size() + j];
    }
    return 0.0;
}

std::vector<int> Space::ball_members(const Ball& ball) const {
    if (!(ball.radius > 0.0)) throw std::invalid_argument("ball_members: radius must be positive");
    const double tol = 1e-12 * (spacing_ > 0.0 ? spacing_ : 1.0);
    std::vector<int> out;
    for (int j = 0; j < size(); ++j)
        if (dist(ball.center, j) <= ball.radius + tol) out.push_back(j);
    return out;
}

double Space::ball_measure(const Ball& ball) const {
    double m = 0.0;
    for (int j : ball_members(ball)) m += weights_[j];
    return m;
}

std::vector<int> Space::corona_members(const Ball& ball, int i) const {
    if (i < 0) throw std::invalid_argument("corona_members: index must be >= 0");
    if (i == 0) return ball_members(ball);
    const auto outer = ball_members({ball.center, std::ldexp(ball.radius, i)});
    const auto inner = ball_members({ball.center, std::ldexp(ball.radius, i - 1)});
    std::vector<int> out;
    std::set_difference(outer.begin(), outer.end(), inner.begin(), inner.end(),
                        std::back_inserter(out));
    return out;
}

double Space::set_distance(std::span<const int> E, std::span<const int> F) const {
    double best = std::numeric_limits<double>::infinity();
    for (int x : E)
        for (int y : F) best = std::min(best, dist(x, y));
    return best;
}

namespace {

void validate_radii(const Space& space, std::span<const double> radii) {
    const double lo = space.spacing();
    const double hi = space.diameter() / 4.0;
    for (double r : radii)
        if (r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12))
            throw std::invalid_argument("audit radius outside [spacing, diameter/4]");
}

}  // namespace

DoublingAudit check_doubling(const Space& space, std::span<const int> centers,
                             std::span<const double> radii) {
    validate_radii(space, radii);
    DoublingAudit audit;
    double sxx = 0.0, sxy = 0.0, sx = 0.0, sy = 0.0;
    int nfit = 0;
    for (int c : centers) {
        for (double r : radii) {
            const double m1 = space.ball_measure({c, r});
            const double m2 = space.ball_measure({c, 2.0 * r});
            if (m1 <= 0.0) {
                audit.warnings.push_back("empty ball below grid scale");
                continue;
            }
            audit.worst_constant = std::max(audit.worst_constant, m2 / m1);
            const double lx = std::log(r), ly = std::log(m1);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++nfit;
            ++audit.n_samples;
        }
    }
    if (nfit >= 2) {
        const double denom = nfit * sxx - sx * sx;
        if (std::abs(denom) > 1e-14) audit.exponent_fit = (nfit * sxy - sx * sy) / denom;
    }
    return audit;
}

AhlforsAudit check_ahlfors(const Space& space, std::span<const int> centers,
                           std::span<const double> radii, double ratio_bound) {
    validate_radii(space, radii);
    AhlforsAudit audit;
    audit.c_low = std::numeric_limits<double>::infinity();
    audit.c_high = 0.0;
    const double d = static_cast<double>(space.dim());
    for (int c : centers) {
        for (double r : radii) {
            const double ratio = space.ball_measure({c, r}) / std::pow(r, d);
            audit.c_low = std::min(audit.c_low, ratio);
            audit.c_high = std::max(audit.c_high, ratio);
        }
    }
    audit.pass = audit.c_low > 0.0 && audit.c_high / audit.c_low <= ratio_bound;
    return audit;
}

}  // namespace displab
