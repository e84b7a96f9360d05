#pragma once

#include "fiberplan/geometry.hpp"
#include "fiberplan/material.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fiberplan {

// Thickness-integrated in-plane stress (N/mm), symmetric by construction.
struct StressTensor2 {
    double s11{0.0};
    double s22{0.0};
    double s12{0.0};
};

enum class DofMask { X, Y, Both };

struct DirichletRegion {
    std::string tag;       // boundary tag in the mesh
    Point2 displacement;   // prescribed displacement, mm
    DofMask mask{DofMask::Both};
    // Optional polynomial part, used by patch and convergence tests;
    // scenario files only populate the constant term:
    //   u(x) = displacement + linear * x
    //          + (q0 x^2 + q1 x y + q2 y^2, q3 x^2 + q4 x y + q5 y^2)
    Eigen::Matrix2d linear = Eigen::Matrix2d::Zero();
    std::array<double, 6> quadratic{};
};

// Prescribed-displacement load case. Must constrain enough dofs to
// eliminate rigid-body modes; the solver reports failure otherwise.
struct LoadCase {
    std::vector<DirichletRegion> dirichlet;
};

struct SolveResult {
    std::vector<Point2> displacement;        // per node, mm
    double strain_energy{0.0};               // N*mm
    std::vector<StressTensor2> element_stress;
    // Per-element strain energy divided by the element's modulus value
    // (N/mm units); contracting it with the modulus gradient gives the
    // stiffness sensitivity without touching the solver again.
    std::vector<double> unit_energy;
    std::vector<double> element_modulus; // thickness-integrated, GPa*mm
};

// Isotropic plane-stress constitutive matrix for a thickness-integrated
// modulus E: [[E, E nu, 0], [E nu, E, 0], [0, 0, mu]] / (1 - nu^2) with
// mu = E / (2 (1 + nu)).
Eigen::Matrix3d constitutive_matrix(double E, double nu);

// One-shot solve; builds the assembly workspace internally.
SolveResult solve(const Mesh& mesh, const FiberLayout& layout, const MaterialParams& params,
                  const LoadCase& load);

// Plastic share of the element's stress tensor at its centroid.
StressTensor2 plastic_stress(const SolveResult& result, const Mesh& mesh,
                             const FiberLayout& layout, const MaterialParams& params,
                             std::size_t element);

// Strain-energy gradient with respect to all fiber vertex coordinates,
// flattened per path as (x0, y0, x1, y1, ...). Under pure Dirichlet
// loading with zero body force the adjoint reduces to
// dU/dtheta = 1/2 u^T dK/dtheta u.
std::vector<Eigen::VectorXd> stiffness_sensitivity(const Mesh& mesh, const FiberLayout& layout,
                                                   const MaterialParams& params,
                                                   const SolveResult& result);

// Reusable solver for one mesh + load case: element geometry, dof
// elimination, sparsity pattern and symbolic factorization are computed
// once, so repeated solves with different layouts only refresh values.
class FemSystem {
public:
    FemSystem(const Mesh& mesh, const MaterialParams& params, const LoadCase& load);

    SolveResult solve(const FiberLayout& layout) const;

    // Evaluates the thickness-integrated modulus at every element
    // centroid for the given layout.
    std::vector<double> centroid_moduli(const FiberLayout& layout) const;
    SolveResult solve_with_moduli(const std::vector<double>& moduli_gpamm) const;

    const Mesh& mesh() const { return *mesh_; }
    const MaterialParams& params() const { return params_; }

private:
    const Mesh* mesh_;
    MaterialParams params_;

    struct Element {
        int nodes[3];
        double area;
        Eigen::Matrix<double, 3, 6> B;
        Eigen::Matrix<double, 6, 6> K1; // stiffness at unit modulus
    };
    std::vector<Element> elements_;

    std::vector<int> free_index_;        // dof -> free index or -1
    std::vector<double> prescribed_;     // dof -> value (constrained only)
    std::vector<char> constrained_;      // dof -> bool
    int n_free_{0};

    Eigen::SparseMatrix<double> pattern_;            // K_ff pattern
    std::vector<std::array<int, 36>> value_slots_;   // per element, -1 if not in K_ff
    // Concurrent solves each need their own factorization workspace;
    // a thread-local cache keyed by this id keeps the symbolic analysis
    // per (thread, system) pair.
    std::uint64_t system_id_{0};
};

} // namespace fiberplan
