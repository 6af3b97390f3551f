#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "tracefem/mesh.hpp"
#include "tracefem/reconstruct.hpp"
#include "tracefem/surfgeom.hpp"
#include "tracefem/types.hpp"

namespace tracefem {

// Plane-stress material: mu = E/(2(1+nu)), lambda = E nu/(1-nu^2).
struct Material {
    double E = 0.0;
    double nu = 0.0;
    double mu = 0.0;
    double lambda = 0.0;
};
Material lame_plane_stress(double E, double nu);

// gamma1 is the single gamma for m_B = 1; gamma2 weights the Hessian jumps
// (m_B = 2 only).
struct StabilizationParams {
    double gamma1 = 0.0;
    double gamma2 = 0.0;
};

// Assembled membrane system. The elastic part and the two face-penalty
// parts are kept separate so stabilization parameters can be swept without
// reassembly; matrix() combines them with the stored gammas.
struct MembraneSystem {
    Eigen::SparseMatrix<double> K_a;
    Eigen::SparseMatrix<double> K_j1;
    Eigen::SparseMatrix<double> K_j2;  // already scaled by h^2
    Eigen::VectorXd load;
    StabilizationParams stab;
    int bulk_order = 1;
    double h = 0.0;  // N^{-1/3} of the active mesh
    int n_dof = 0;

    Eigen::SparseMatrix<double> matrix() const;
};

using LoadFn = std::function<Vec3(const Vec3&)>;

MembraneSystem assemble_system(const ActiveMesh& active, const SurfaceMesh& surface,
                               const Material& mat, const StabilizationParams& stab,
                               const LoadFn& load, int quad_degree = 4);

struct DisplacementField {
    const ActiveMesh* active = nullptr;
    Eigen::VectorXd u;  // 3 per active node
};

// Symmetric reduction of the homogeneous Dirichlet DOFs followed by a
// sparse LDLT solve; verifies positivity of the pivots and the residual.
DisplacementField apply_constraints_and_solve(const MembraneSystem& system,
                                              const ActiveMesh& active,
                                              const std::vector<int>& constrained_dofs);

// Displacement and full gradient of u_h at a reference point of an active
// background element.
Vec3 displacement_at(const DisplacementField& field, int elem, const Vec3& r);
Mat3 displacement_gradient_at(const DisplacementField& field, int elem, const Vec3& r);

// In-plane stress sigma = 2 mu eps_G + lambda tr(eps_G) P at a reference
// point of a surface element.
Mat3 evaluate_stress(const DisplacementField& field, const SurfaceElement& elem,
                     const Material& mat, const Vec2& r);

}  // namespace tracefem
