#pragma once

#include <cmath>
#include <vector>

#include "nonlocal/error.hpp"
#include "nonlocal/quadrature.hpp"

namespace nonlocal {

/// Uniform partition of Omega = (a, b). Degrees of freedom are the interior
/// nodes 1..N-1; the boundary nodes carry the zero extension.
class Mesh {
public:
    Mesh(double a, double b, int n_elements) : a_(a), b_(b), n_(n_elements) {
        if (!(a < b)) {
            throw InvalidParameter("mesh: require a < b");
        }
        if (n_elements < 2) {
            throw InvalidParameter("mesh: n_elements must be >= 2");
        }
        nodes_.resize(n_ + 1);
        for (int i = 0; i <= n_; ++i) {
            nodes_[i] = a_ + (b_ - a_) * (static_cast<double>(i) / n_);
        }
        nodes_[n_] = b_;
    }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    double length() const noexcept { return b_ - a_; }
    int n_elements() const noexcept { return n_; }
    int interior_count() const noexcept { return n_ - 1; }
    double h() const noexcept { return (b_ - a_) / n_; }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    double node(int i) const { return nodes_.at(i); }

    /// Coordinate of interior degree of freedom i (0-based), i.e. node i+1.
    double dof_coordinate(int i) const { return nodes_.at(i + 1); }

private:
    double a_;
    double b_;
    int n_;
    std::vector<double> nodes_;
};

inline Mesh build_uniform_mesh(double a, double b, int n_elements) {
    return Mesh(a, b, n_elements);
}

/// One Gauss point inside element `element`, with both local hat values.
struct QuadraturePoint {
    int element;
    double x;
    double weight;  ///< includes the Jacobian h/2
    double psi_left;
    double psi_right;
};

/// Calls fn(QuadraturePoint) for every Gauss point of every element.
template <class F>
void for_each_quadrature_point(const Mesh& mesh, int order, F&& fn) {
    const auto& rule = quad::gauss_legendre(order);
    const double h = mesh.h();
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const double x0 = mesh.node(e);
        for (int g = 0; g < rule.order(); ++g) {
            const double xi = 0.5 * (rule.nodes[g] + 1.0);
            fn(QuadraturePoint{e, x0 + h * xi, 0.5 * h * rule.weights[g], 1.0 - xi, xi});
        }
    }
}

/// Interior dof index of mesh node `node`, or -1 for the two boundary nodes.
inline int dof_of_node(const Mesh& mesh, int node) noexcept {
    return (node <= 0 || node >= mesh.n_elements()) ? -1 : node - 1;
}

} // namespace nonlocal
