#include "tracefem/membrane.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

namespace tracefem {

Material lame_plane_stress(double E, double nu) {
    if (std::abs(1.0 - nu * nu) < 1e-300)
        throw Error("lame_plane_stress: nu = +-1 is not admissible");
    Material m;
    m.E = E;
    m.nu = nu;
    m.mu = E / (2.0 * (1.0 + nu));
    m.lambda = E * nu / (1.0 - nu * nu);
    return m;
}

Eigen::SparseMatrix<double> MembraneSystem::matrix() const {
    Eigen::SparseMatrix<double> K = K_a + stab.gamma1 * K_j1;
    if (bulk_order == 2) K = K + stab.gamma2 * K_j2;
    return K;
}

namespace {

using Triplet = Eigen::Triplet<double>;

void scatter(const std::vector<int>& dofs, const Eigen::MatrixXd& local,
             std::vector<Triplet>& out) {
    const int n = static_cast<int>(dofs.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (local(i, j) != 0.0) out.emplace_back(dofs[i], dofs[j], local(i, j));
}

}  // namespace

MembraneSystem assemble_system(const ActiveMesh& active, const SurfaceMesh& surface,
                               const Material& mat, const StabilizationParams& stab,
                               const LoadFn& load, int quad_degree) {
    const TetMesh& mesh = *active.parent;
    const int order = mesh.order;
    const int npe = mesh.nodes_per_element();
    const ReferenceElement& bulk = ReferenceElement::get(RefKind::Tet, order);

    MembraneSystem sys;
    sys.bulk_order = order;
    sys.stab = stab;
    sys.h = active.mesh_parameter();
    sys.n_dof = active.dof_count();
    sys.load = Eigen::VectorXd::Zero(sys.n_dof);

    std::vector<Triplet> trip_a, trip_j1, trip_j2;

    // Surface terms: a_h and the load, integrated element by element with
    // bulk gradients evaluated at the surface quadrature points.
    for (const SurfaceElement& se : surface.elements) {
        if (!active.node_local.count(mesh.elements[se.parent][0]))
            throw Error("assemble_system: surface parent element is not active");
        const AffineMap map = mesh.affine_map(se.parent);
        std::vector<int> dofs(3 * npe);
        for (int i = 0; i < npe; ++i)
            for (int a = 0; a < 3; ++a)
                dofs[3 * i + a] = active.dof(mesh.elements[se.parent][i], a);

        Eigen::MatrixXd local = Eigen::MatrixXd::Zero(3 * npe, 3 * npe);
        Eigen::VectorXd local_b = Eigen::VectorXd::Zero(3 * npe);

        for (const SurfaceQP& qp : surface_quadrature(se, quad_degree)) {
            const Vec3 r = map.to_reference(qp.frame.x);
            const BasisValues vals = bulk.values(r);
            const BasisGrads ref_grads = bulk.gradients(r);
            const Mat3 P = tangential_projector(qp.frame.normal);

            std::array<Vec3, 10> q;  // projected physical gradients
            for (int i = 0; i < npe; ++i)
                q[i] = P * map.push_gradient(ref_grads.g[i]);

            const double w = qp.weight;
            for (int i = 0; i < npe; ++i)
                for (int j = 0; j < npe; ++j) {
                    const double qq = q[i].dot(q[j]);
                    for (int a = 0; a < 3; ++a)
                        for (int b = 0; b < 3; ++b) {
                            const double v =
                                mat.mu * (P(a, b) * qq + q[j](a) * q[i](b)) +
                                mat.lambda * q[i](a) * q[j](b);
                            local(3 * i + a, 3 * j + b) += w * v;
                        }
                }
            const Vec3 f = load(qp.frame.x);
            for (int i = 0; i < npe; ++i)
                for (int a = 0; a < 3; ++a)
                    local_b(3 * i + a) += w * vals.v[i] * f(a);
        }
        scatter(dofs, local, trip_a);
        for (int i = 0; i < 3 * npe; ++i) sys.load(dofs[i]) += local_b(i);
    }

    // Face penalties: jumps of gradients (and Hessians for order 2) across
    // the interior faces of the active mesh.
    const QuadratureRule face_rule = quadrature_rule(RefKind::Triangle, 4);
    const double h2 = sys.h * sys.h;
    for (const Face& face : active.interior_faces) {
        const Vec3& xa = mesh.nodes[face.corners[0]];
        const Vec3 e1 = mesh.nodes[face.corners[1]] - xa;
        const Vec3 e2 = mesh.nodes[face.corners[2]] - xa;
        const double jac = e1.cross(e2).norm();

        const int elems[2] = {face.left, face.right};
        AffineMap maps[2] = {mesh.affine_map(face.left), mesh.affine_map(face.right)};

        // Union of the two elements' nodes.
        std::vector<int> union_nodes;
        int side_local[2][10];
        for (int s = 0; s < 2; ++s)
            for (int i = 0; i < npe; ++i) {
                const int g = mesh.elements[elems[s]][i];
                auto it = std::find(union_nodes.begin(), union_nodes.end(), g);
                if (it == union_nodes.end()) {
                    side_local[s][i] = static_cast<int>(union_nodes.size());
                    union_nodes.push_back(g);
                } else {
                    side_local[s][i] = static_cast<int>(it - union_nodes.begin());
                }
            }
        const int nu = static_cast<int>(union_nodes.size());

        Eigen::MatrixXd j1 = Eigen::MatrixXd::Zero(nu, nu);
        Eigen::MatrixXd j2 = Eigen::MatrixXd::Zero(nu, nu);
        std::vector<Vec3> jump_g(nu);
        std::vector<Mat3> jump_h(nu);

        for (std::size_t qi = 0; qi < face_rule.points.size(); ++qi) {
            const Vec3 y = xa + face_rule.points[qi].x() * e1 +
                           face_rule.points[qi].y() * e2;
            const double w = face_rule.weights[qi] * jac;
            for (int i = 0; i < nu; ++i) {
                jump_g[i].setZero();
                jump_h[i].setZero();
            }
            for (int s = 0; s < 2; ++s) {
                const double sign = s == 0 ? 1.0 : -1.0;
                const Vec3 r = maps[s].to_reference(y);
                const BasisGrads ref_grads = bulk.gradients(r);
                for (int i = 0; i < npe; ++i)
                    jump_g[side_local[s][i]] +=
                        sign * maps[s].push_gradient(ref_grads.g[i]);
                if (order == 2) {
                    const BasisHessians ref_h = bulk.hessians(r);
                    for (int i = 0; i < npe; ++i)
                        jump_h[side_local[s][i]] +=
                            sign * maps[s].push_hessian(ref_h.h[i]);
                }
            }
            for (int i = 0; i < nu; ++i)
                for (int j = 0; j < nu; ++j) {
                    j1(i, j) += w * jump_g[i].dot(jump_g[j]);
                    if (order == 2)
                        j2(i, j) += w * h2 *
                                    jump_h[i].cwiseProduct(jump_h[j]).sum();
                }
        }

        // The jump terms act componentwise on the displacement.
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nu; ++j) {
                if (j1(i, j) == 0.0 && (order != 2 || j2(i, j) == 0.0)) continue;
                for (int a = 0; a < 3; ++a) {
                    const int di = active.dof(union_nodes[i], a);
                    const int dj = active.dof(union_nodes[j], a);
                    trip_j1.emplace_back(di, dj, j1(i, j));
                    if (order == 2) trip_j2.emplace_back(di, dj, j2(i, j));
                }
            }
    }

    sys.K_a.resize(sys.n_dof, sys.n_dof);
    sys.K_a.setFromTriplets(trip_a.begin(), trip_a.end());
    sys.K_j1.resize(sys.n_dof, sys.n_dof);
    sys.K_j1.setFromTriplets(trip_j1.begin(), trip_j1.end());
    sys.K_j2.resize(sys.n_dof, sys.n_dof);
    if (order == 2) sys.K_j2.setFromTriplets(trip_j2.begin(), trip_j2.end());
    return sys;
}

DisplacementField apply_constraints_and_solve(const MembraneSystem& system,
                                              const ActiveMesh& active,
                                              const std::vector<int>& constrained_dofs) {
    const int n = system.n_dof;
    std::vector<char> fixed(n, 0);
    for (int d : constrained_dofs) {
        if (d < 0 || d >= n) throw Error("constraint DOF out of range");
        fixed[d] = 1;
    }
    std::vector<int> free_index(n, -1);
    int n_free = 0;
    for (int i = 0; i < n; ++i)
        if (!fixed[i]) free_index[i] = n_free++;
    if (n_free == 0) throw Error("all DOFs constrained");

    const Eigen::SparseMatrix<double> K = system.matrix();
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < K.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
            if (free_index[it.row()] >= 0 && free_index[it.col()] >= 0)
                trips.emplace_back(free_index[it.row()], free_index[it.col()],
                                   it.value());
    Eigen::SparseMatrix<double> Kff(n_free, n_free);
    Kff.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd bf(n_free);
    for (int i = 0; i < n; ++i)
        if (free_index[i] >= 0) bf(free_index[i]) = system.load(i);

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(Kff);
    if (solver.info() != Eigen::Success)
        throw Error("solver breakdown: factorization failed (system not SPD)");
    const Eigen::VectorXd D = solver.vectorD();
    const double dmax = D.maxCoeff();
    const double dmin = D.minCoeff();
    if (dmin <= 0.0 || dmin < 1e-14 * dmax)
        throw Error("solver breakdown: system not positive definite "
                    "(smallest pivot " + std::to_string(dmin) + ")");

    Eigen::VectorXd uf = solver.solve(bf);
    const double bnorm = bf.norm();
    if (bnorm > 0.0) {
        Eigen::VectorXd res = bf - Kff * uf;
        if (res.norm() > 1e-12 * bnorm) uf += solver.solve(res);  // one refinement
        res = bf - Kff * uf;
        if (res.norm() > 1e-10 * bnorm)
            throw Error("linear solve did not reach the residual tolerance");
    }

    DisplacementField field;
    field.active = &active;
    field.u = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        if (free_index[i] >= 0) field.u(i) = uf(free_index[i]);
    return field;
}

Vec3 displacement_at(const DisplacementField& field, int elem, const Vec3& r) {
    const TetMesh& mesh = *field.active->parent;
    const ReferenceElement& bulk = ReferenceElement::get(RefKind::Tet, mesh.order);
    const BasisValues vals = bulk.values(r);
    Vec3 u = Vec3::Zero();
    for (int i = 0; i < vals.n; ++i) {
        const int g = mesh.elements[elem][i];
        for (int a = 0; a < 3; ++a)
            u(a) += vals.v[i] * field.u(field.active->dof(g, a));
    }
    return u;
}

Mat3 displacement_gradient_at(const DisplacementField& field, int elem,
                              const Vec3& r) {
    const TetMesh& mesh = *field.active->parent;
    const ReferenceElement& bulk = ReferenceElement::get(RefKind::Tet, mesh.order);
    const AffineMap map = mesh.affine_map(elem);
    const BasisGrads ref_grads = bulk.gradients(r);
    Mat3 G = Mat3::Zero();  // G(a,b) = d u_a / d x_b
    for (int i = 0; i < ref_grads.n; ++i) {
        const Vec3 g = map.push_gradient(ref_grads.g[i]);
        const int gl = mesh.elements[elem][i];
        for (int a = 0; a < 3; ++a)
            G.row(a) += field.u(field.active->dof(gl, a)) * g.transpose();
    }
    return G;
}

Mat3 evaluate_stress(const DisplacementField& field, const SurfaceElement& elem,
                     const Material& mat, const Vec2& r) {
    const TangentFrame frame = surface_frame(elem, r);
    const Mat3 P = tangential_projector(frame.normal);
    const AffineMap map = field.active->parent->affine_map(elem.parent);
    const Mat3 G = displacement_gradient_at(field, elem.parent,
                                            map.to_reference(frame.x));
    const Mat3 eps = 0.5 * (G + G.transpose());
    const Mat3 eps_g = P * eps * P;
    return 2.0 * mat.mu * eps_g + mat.lambda * eps_g.trace() * P;
}

}  // namespace tracefem
