#include "fiberplan/fem.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <set>

namespace fiberplan {

namespace {

// GPa*mm -> N/mm (MPa*mm); keeps strain energy in N*mm for mm-valued
// displacements.
constexpr double kGPaToNmm = 1000.0;

} // namespace

Eigen::Matrix3d constitutive_matrix(double E, double nu) {
    if (E <= 0.0) throw Error("modulus must be positive");
    if (nu <= 0.0 || nu >= 0.5) throw Error("nu must lie in (0, 0.5)");
    Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
    const double c = E / (1.0 - nu * nu);
    D(0, 0) = c;
    D(1, 1) = c;
    D(0, 1) = D(1, 0) = c * nu;
    D(2, 2) = shear_modulus(E, nu);
    return D;
}

FemSystem::FemSystem(const Mesh& mesh, const MaterialParams& params, const LoadCase& load)
    : mesh_(&mesh), params_(params) {
    params.validate();
    const int n_nodes = static_cast<int>(mesh.nodes.size());
    const int n_dofs = 2 * n_nodes;

    elements_.reserve(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Element e;
        e.nodes[0] = mesh.triangles[t][0];
        e.nodes[1] = mesh.triangles[t][1];
        e.nodes[2] = mesh.triangles[t][2];
        const Point2 p0 = mesh.nodes[e.nodes[0]];
        const Point2 p1 = mesh.nodes[e.nodes[1]];
        const Point2 p2 = mesh.nodes[e.nodes[2]];
        e.area = 0.5 * (p1 - p0).cross(p2 - p0);
        if (e.area <= 1e-12) throw Error("degenerate mesh triangle");
        const double b[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
        const double c[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
        e.B.setZero();
        for (int k = 0; k < 3; ++k) {
            e.B(0, 2 * k) = b[k];
            e.B(1, 2 * k + 1) = c[k];
            e.B(2, 2 * k) = c[k];
            e.B(2, 2 * k + 1) = b[k];
        }
        e.B /= (2.0 * e.area);
        e.K1 = e.area * e.B.transpose() * constitutive_matrix(1.0, params.nu) * e.B;
        elements_.push_back(e);
    }

    // Dirichlet data: tag -> nodes via tagged boundary edges.
    constrained_.assign(n_dofs, 0);
    prescribed_.assign(n_dofs, 0.0);
    for (const DirichletRegion& region : load.dirichlet) {
        std::set<int> nodes;
        for (const auto& be : mesh.boundary_edges)
            if (be.tag == region.tag) {
                nodes.insert(be.a);
                nodes.insert(be.b);
            }
        if (nodes.empty()) throw Error("no boundary edges carry tag '" + region.tag + "'");
        for (int n : nodes) {
            const Point2 pos = mesh.nodes[n];
            const auto& q = region.quadratic;
            const Point2 u{region.displacement.x + region.linear(0, 0) * pos.x +
                               region.linear(0, 1) * pos.y + q[0] * pos.x * pos.x +
                               q[1] * pos.x * pos.y + q[2] * pos.y * pos.y,
                           region.displacement.y + region.linear(1, 0) * pos.x +
                               region.linear(1, 1) * pos.y + q[3] * pos.x * pos.x +
                               q[4] * pos.x * pos.y + q[5] * pos.y * pos.y};
            const bool fix_x = region.mask != DofMask::Y;
            const bool fix_y = region.mask != DofMask::X;
            if (fix_x) {
                const int dof = 2 * n;
                if (constrained_[dof] && std::abs(prescribed_[dof] - u.x) > 1e-12)
                    throw Error("conflicting prescribed displacement at a shared node");
                constrained_[dof] = 1;
                prescribed_[dof] = u.x;
            }
            if (fix_y) {
                const int dof = 2 * n + 1;
                if (constrained_[dof] && std::abs(prescribed_[dof] - u.y) > 1e-12)
                    throw Error("conflicting prescribed displacement at a shared node");
                constrained_[dof] = 1;
                prescribed_[dof] = u.y;
            }
        }
    }

    free_index_.assign(n_dofs, -1);
    n_free_ = 0;
    for (int d = 0; d < n_dofs; ++d)
        if (!constrained_[d]) free_index_[d] = n_free_++;
    if (n_free_ == n_dofs) throw Error("load case constrains no dofs");

    // Assemble the K_ff pattern once and record, per element entry, the
    // flat position in the CSC value array.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(elements_.size() * 36);
    for (const Element& e : elements_) {
        for (int li = 0; li < 6; ++li) {
            const int gi = 2 * e.nodes[li / 2] + (li % 2);
            if (constrained_[gi]) continue;
            for (int lj = 0; lj < 6; ++lj) {
                const int gj = 2 * e.nodes[lj / 2] + (lj % 2);
                if (constrained_[gj]) continue;
                trips.emplace_back(free_index_[gi], free_index_[gj], 1.0);
            }
        }
    }
    pattern_.resize(n_free_, n_free_);
    pattern_.setFromTriplets(trips.begin(), trips.end());
    pattern_.makeCompressed();

    value_slots_.assign(elements_.size(), {});
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    auto slot_of = [&](int row, int col) {
        for (int p = outer[col]; p < outer[col + 1]; ++p)
            if (inner[p] == row) return p;
        throw Error("internal: missing pattern entry");
    };
    for (std::size_t t = 0; t < elements_.size(); ++t) {
        const Element& e = elements_[t];
        for (int li = 0; li < 6; ++li) {
            const int gi = 2 * e.nodes[li / 2] + (li % 2);
            for (int lj = 0; lj < 6; ++lj) {
                const int gj = 2 * e.nodes[lj / 2] + (lj % 2);
                int slot = -1;
                if (!constrained_[gi] && !constrained_[gj])
                    slot = slot_of(free_index_[gi], free_index_[gj]);
                value_slots_[t][li * 6 + lj] = slot;
            }
        }
    }

    static std::atomic<std::uint64_t> next_system_id{1};
    system_id_ = next_system_id.fetch_add(1);
}

std::vector<double> FemSystem::centroid_moduli(const FiberLayout& layout) const {
    std::vector<double> moduli(elements_.size());
    for (std::size_t t = 0; t < elements_.size(); ++t)
        moduli[t] = modulus(layout, params_, mesh_->centroid(t));
    return moduli;
}

SolveResult FemSystem::solve(const FiberLayout& layout) const {
    return solve_with_moduli(centroid_moduli(layout));
}

SolveResult FemSystem::solve_with_moduli(const std::vector<double>& moduli_gpamm) const {
    if (moduli_gpamm.size() != elements_.size()) throw Error("modulus array size mismatch");
    Eigen::SparseMatrix<double> K = pattern_;
    double* values = K.valuePtr();
    std::fill(values, values + K.nonZeros(), 0.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_free_);

    for (std::size_t t = 0; t < elements_.size(); ++t) {
        const Element& e = elements_[t];
        const double E = moduli_gpamm[t] * kGPaToNmm;
        for (int li = 0; li < 6; ++li) {
            const int gi = 2 * e.nodes[li / 2] + (li % 2);
            if (constrained_[gi]) continue;
            for (int lj = 0; lj < 6; ++lj) {
                const int gj = 2 * e.nodes[lj / 2] + (lj % 2);
                const double k = E * e.K1(li, lj);
                if (constrained_[gj])
                    rhs[free_index_[gi]] -= k * prescribed_[gj];
                else
                    values[value_slots_[t][li * 6 + lj]] += k;
            }
        }
    }

    // Thread-local factorization workspace; symbolic analysis happens
    // once per (thread, system).
    using Ldlt = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
    static thread_local std::map<std::uint64_t, std::unique_ptr<Ldlt>> ldlt_cache;
    std::unique_ptr<Ldlt>& ldlt = ldlt_cache[system_id_];
    if (!ldlt) {
        ldlt = std::make_unique<Ldlt>();
        ldlt->analyzePattern(pattern_);
    }

    ldlt->factorize(K);
    if (ldlt->info() != Eigen::Success)
        throw Error("FEM solve failed: singular system (insufficient constraints?)");
    {
        // A consistent rhs hides rigid-body modes from the residual
        // check, so reject near-zero or negative pivots explicitly.
        const auto& Dv = ldlt->vectorD();
        const double dmax = Dv.maxCoeff();
        if (dmax <= 0.0 || Dv.minCoeff() < 1e-12 * dmax)
            throw Error("FEM solve failed: singular system (insufficient constraints?)");
    }
    const Eigen::VectorXd u_free = ldlt->solve(rhs);
    const double rhs_norm = rhs.norm();
    if (rhs_norm > 0.0) {
        // K holds both triangles, so the plain product is the full residual.
        const double rel_res = (K * u_free - rhs).norm() / rhs_norm;
        if (rel_res > 1e-10)
            throw Error("FEM solve failed: residual too large (singular system?)");
    }

    SolveResult result;
    result.displacement.resize(mesh_->nodes.size());
    for (std::size_t n = 0; n < mesh_->nodes.size(); ++n) {
        const int dx = static_cast<int>(2 * n);
        const int dy = dx + 1;
        result.displacement[n].x = constrained_[dx] ? prescribed_[dx] : u_free[free_index_[dx]];
        result.displacement[n].y = constrained_[dy] ? prescribed_[dy] : u_free[free_index_[dy]];
    }

    result.element_stress.resize(elements_.size());
    result.unit_energy.resize(elements_.size());
    result.element_modulus = moduli_gpamm;
    double energy = 0.0;
    for (std::size_t t = 0; t < elements_.size(); ++t) {
        const Element& e = elements_[t];
        Eigen::Matrix<double, 6, 1> ue;
        for (int k = 0; k < 3; ++k) {
            ue[2 * k] = result.displacement[e.nodes[k]].x;
            ue[2 * k + 1] = result.displacement[e.nodes[k]].y;
        }
        const double unit = 0.5 * ue.dot(e.K1 * ue);
        result.unit_energy[t] = unit;
        const double E = moduli_gpamm[t] * kGPaToNmm;
        energy += E * unit;
        const Eigen::Vector3d strain = e.B * ue;
        const Eigen::Vector3d stress = constitutive_matrix(E, params_.nu) * strain;
        result.element_stress[t] = {stress[0], stress[1], stress[2]};
    }
    result.strain_energy = energy;
    return result;
}

SolveResult solve(const Mesh& mesh, const FiberLayout& layout, const MaterialParams& params,
                  const LoadCase& load) {
    return FemSystem(mesh, params, load).solve(layout);
}

StressTensor2 plastic_stress(const SolveResult& result, const Mesh& mesh,
                             const FiberLayout& layout, const MaterialParams& params,
                             std::size_t element) {
    const Point2 c = mesh.centroid(element);
    const double a_f = alpha_fiber(layout, params, c);
    const double a_p = alpha_plastic(a_f, params);
    const double plastic = params.E_plastic * a_p;
    const double factor = plastic / (plastic + params.E_fiber * a_f);
    const StressTensor2& s = result.element_stress[element];
    return {s.s11 * factor, s.s22 * factor, s.s12 * factor};
}

std::vector<Eigen::VectorXd> stiffness_sensitivity(const Mesh& mesh, const FiberLayout& layout,
                                                   const MaterialParams& params,
                                                   const SolveResult& result) {
    if (result.unit_energy.size() != mesh.triangles.size())
        throw Error("solve result does not match mesh");
    std::vector<Eigen::VectorXd> grad;
    grad.reserve(layout.paths.size());
    for (const FiberPath& p : layout.paths) grad.emplace_back(Eigen::VectorXd::Zero(2 * p.size()));

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double w = result.unit_energy[t] * kGPaToNmm;
        if (w == 0.0) continue;
        const ModulusGradient mg = modulus_gradient(layout, params, mesh.centroid(t));
        for (const auto& entry : mg.entries) {
            grad[entry.path][2 * entry.vertex] += w * entry.d.x;
            grad[entry.path][2 * entry.vertex + 1] += w * entry.d.y;
        }
    }
    return grad;
}

} // namespace fiberplan
