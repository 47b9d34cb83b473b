#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace displab {

enum class Geometry { torus_grid, interval_grid, general_graph };
enum class BoundaryCondition { dirichlet, neumann };

struct Ball {
    int center = 0;
    double radius = 0.0;
};

struct GraphEdge {
    int a = 0;
    int b = 0;
    double weight = 1.0;
};

/// Discretized metric measure space of homogeneous type: a finite point set
/// with a metric, strictly positive weights mu(x) and a declared homogeneous
/// dimension. Immutable after construction.
class Space {
public:
    static Space torus_grid(int dim, int n_per_axis, double period);
    static Space interval_grid(int n, double length, BoundaryCondition bc);
    static Space general_graph(std::vector<std::array<double, 3>> coords,
                               std::vector<double> weights,
                               std::vector<GraphEdge> edges);

    int size() const { return static_cast<int>(weights_.size()); }
    int dim() const { return dim_; }
    Geometry geometry() const { return geometry_; }
    BoundaryCondition boundary_condition() const { return bc_; }
    double period() const { return period_; }
    double length() const { return length_; }
    double spacing() const { return spacing_; }
    double diameter() const { return diameter_; }
    int n_per_axis() const { return n_per_axis_; }

    double weight(int i) const { return weights_[i]; }
    const std::vector<double>& weights() const { return weights_; }
    double total_measure() const { return total_measure_; }
    const std::array<double, 3>& coord(int i) const { return coords_[i]; }

    double dist(int i, int j) const;

    // Closed ball at grid tolerance 1e-12 * spacing.
    std::vector<int> ball_members(const Ball& ball) const;
    double ball_measure(const Ball& ball) const;

    // C_0(Q) = Q, C_i(Q) = members(2^i Q) \ members(2^{i-1} Q) for i >= 1.
    std::vector<int> corona_members(const Ball& ball, int i) const;

    // min_{x in E, y in F} dist(x, y); 0 if the sets intersect.
    double set_distance(std::span<const int> E, std::span<const int> F) const;

    const std::vector<GraphEdge>& edges() const { return edges_; }

private:
    Space() = default;

    Geometry geometry_ = Geometry::torus_grid;
    BoundaryCondition bc_ = BoundaryCondition::neumann;
    int dim_ = 1;
    int n_per_axis_ = 0;
    double period_ = 0.0;
    double length_ = 0.0;
    double spacing_ = 0.0;
    double diameter_ = 0.0;
    double total_measure_ = 0.0;
    std::vector<std::array<double, 3>> coords_;
    std::vector<double> weights_;
    std::vector<GraphEdge> edges_;
    std::vector<double> graph_dist_;  // dense all-pairs cache, graphs only
};

struct DoublingAudit {
    double worst_constant = 0.0;  // sup mu(B(x,2r)) / mu(B(x,r))
    double exponent_fit = 0.0;    // slope of log mu(B(x,r)) vs log r
    int n_samples = 0;
    std::vector<std::string> warnings;
};

struct AhlforsAudit {
    double c_low = 0.0;   // inf mu(B(x,r)) / r^d
    double c_high = 0.0;  // sup mu(B(x,r)) / r^d
    bool pass = false;
    std::vector<std::string> warnings;
};

// Radii outside [spacing, diameter/4] are rejected (discrete measure is not
// Ahlfors below the grid scale; a compact space saturates above diameter/4).
DoublingAudit check_doubling(const Space& space, std::span<const int> centers,
                             std::span<const double> radii);
AhlforsAudit check_ahlfors(const Space& space, std::span<const int> centers,
                           std::span<const double> radii,
                           double ratio_bound = 16.0);

}  // namespace displab
