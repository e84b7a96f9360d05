#pragma once

#include "fiberplan/fem.hpp"
#include "fiberplan/geometry.hpp"
#include "fiberplan/material.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace fiberplan {

struct ObjectiveWeights {
    double w_lap{1e-8};
    double w_min_l{1.0};
    double w_bdy{1.0};

    void validate() const {
        if (w_lap < 0 || w_min_l < 0 || w_bdy < 0) throw Error("objective weights must be >= 0");
    }
};

// Total = neg_energy + w_lap * lap + w_min_l * min_l + w_bdy * bdy.
struct ObjectiveBreakdown {
    double total{0.0};
    double neg_energy{0.0};
    double lap{0.0};
    double min_l{0.0};
    double bdy{0.0};
};

// Smoothness penalty: squared deviation of each interior vertex from
// its neighbor midpoint, summed over all paths and scaled by the cube
// of the total segment count so upsampling leaves the scale unchanged.
double laplacian_reg(const FiberLayout& layout);

// max(l_min - length, 0)^2 per path.
double min_length_reg(const FiberPath& path, double l_min);

// Sum over vertices of max(d_min - signed_distance, 0)^2.
double boundary_reg(const FiberPath& path, const Domain& domain, double d_min);

// Mean squared vertex Laplacian (no segment-count scaling); the
// smoothness metric reported by ablation runs.
double mean_squared_vertex_laplacian(const FiberLayout& layout);

// Objective evaluation bound to one scenario: domain, meshes, material,
// load cases and weights. Owns the per-load FEM systems so repeated
// evaluations reuse symbolic factorizations. Thread-safe for concurrent
// const calls.
class Evaluator {
public:
    Evaluator(Domain domain, Mesh optimization_mesh, MaterialParams params,
              std::vector<LoadCase> loads, ObjectiveWeights weights,
              std::optional<Mesh> subsequence_mesh = std::nullopt);

    // Full objective; one FEM solve per load case on the optimization
    // mesh (or the coarser subsequence mesh when `coarse`).
    ObjectiveBreakdown evaluate(const FiberLayout& layout, bool coarse = false) const;

    // Exact objective gradient over flattened vertex coordinates
    // (path-major, x before y).
    Eigen::VectorXd gradient(const FiberLayout& layout) const;

    // Per-load-case strain energies on the optimization mesh.
    std::vector<double> case_energies(const FiberLayout& layout) const;
    double mean_energy(const FiberLayout& layout) const;

    // Per-load-case solves on the optimization mesh.
    std::vector<SolveResult> solve_all(const FiberLayout& layout) const;

    // Plastic stress tensors per element, averaged over load cases.
    std::vector<StressTensor2> mean_plastic_stress(const FiberLayout& layout,
                                                   const std::vector<SolveResult>& results) const;

    // Best contiguous subsequence of layout.paths[path_index] under the
    // full objective with the candidate substituted. Ties prefer longer
    // subsequences, then earlier start. Searches the coarse mesh when
    // one is configured. Candidate endpoints are strided when the
    // exhaustive count would exceed `max_candidates`. Candidates longer
    // than `max_length` are excluded (the planner's fiber budget); when
    // nothing fits, the shortest candidate wins.
    FiberPath best_subsequence(const FiberLayout& layout, std::size_t path_index,
                               double max_length = std::numeric_limits<double>::infinity()) const;

    const Domain& domain() const { return domain_; }
    const Mesh& optimization_mesh() const { return *mesh_; }
    const Mesh& subsequence_mesh() const { return subseq_mesh_ ? *subseq_mesh_ : *mesh_; }
    const MaterialParams& params() const { return params_; }
    const ObjectiveWeights& weights() const { return weights_; }
    const std::vector<LoadCase>& loads() const { return loads_; }

    std::uint64_t evaluation_count() const { return eval_count_->load(); }
    void reset_evaluation_count() { eval_count_->store(0); }

    // Swaps the objective weights (ablation runs zero w_lap). Not
    // thread-safe against concurrent evaluations.
    void set_weights(const ObjectiveWeights& w) {
        w.validate();
        weights_ = w;
    }

    std::size_t max_subsequence_candidates{10000};

    // Per-path fiber budget (mm). Paths longer than this are penalized
    // by a quadratic hinge mirroring the minimum-length regularizer
    // (weighted by w_min_l, folded into the breakdown's min_l term).
    // Without it the gradient grows paths without bound: extra covered
    // area always raises the strain energy. The budget realizes the
    // walk-length cap as the optimizer-side length control.
    double length_budget{std::numeric_limits<double>::infinity()};

private:
    ObjectiveBreakdown assemble(const FiberLayout& layout, double mean_energy) const;
    double length_budget_penalty(const FiberPath& path) const;

    Domain domain_;
    // Meshes live on the heap: the FEM systems hold pointers into them,
    // so their addresses must survive moves of the evaluator.
    std::unique_ptr<const Mesh> mesh_;
    std::unique_ptr<const Mesh> subseq_mesh_;
    MaterialParams params_;
    std::vector<LoadCase> loads_;
    ObjectiveWeights weights_;
    std::vector<FemSystem> systems_;
    std::vector<FemSystem> subseq_systems_;
    std::unique_ptr<std::atomic<std::uint64_t>> eval_count_;
};

// Flattened coordinate helpers shared by the optimizer.
Eigen::VectorXd flatten(const FiberLayout& layout);
void unflatten(const Eigen::VectorXd& x, FiberLayout& layout);

} // namespace fiberplan
