#pragma once

#include <array>
#include <vector>

#include "tracefem/types.hpp"

namespace tracefem {

// Reference element kinds. Tet and Triangle exist at order 1 and 2,
// Quad8 is the 8-node serendipity quadrilateral on [-1,1]^2 (order 2 only).
enum class RefKind { Tet, Triangle, Quad8 };

// Basis values / derivatives at a point. Capacity covers the largest
// element (10-node tet); `n` is the actual node count.
struct BasisValues {
    int n = 0;
    std::array<double, 10> v{};
};
struct BasisGrads {
    int n = 0;
    std::array<Vec3, 10> g{};  // z-component is zero for 2D elements
};
struct BasisHessians {
    int n = 0;
    std::array<Mat3, 10> h{};
};

struct ReferenceElement {
    RefKind kind;
    int order;       // 1 or 2 (Quad8: 2)
    int node_count;  // 4|10 tet, 3|6 triangle, 8 quad8
    int dim;         // 3 for tet, 2 otherwise
    std::vector<Vec3> nodes;  // reference coordinates of the nodes

    // Singleton access; throws on unsupported (kind, order) combinations.
    static const ReferenceElement& get(RefKind kind, int order);

    BasisValues values(const Vec3& r) const;
    BasisGrads gradients(const Vec3& r) const;
    BasisHessians hessians(const Vec3& r) const;
};

// deriv = 0|1|2 dispatch matching the tabulated evaluators above.
// Only one of the output structs is filled depending on `deriv`.
void eval_reference_basis(const ReferenceElement& elem, const Vec3& r, int deriv,
                          BasisValues* values, BasisGrads* grads, BasisHessians* hess);

// Quadrature rule on the reference domain of `kind`.
// Tet and triangle rules are conical-product Gauss rules (all weights
// positive); Quad8 rules are tensor Gauss-Legendre on [-1,1]^2.
struct QuadratureRule {
    RefKind kind;
    int degree;  // every polynomial up to this total degree is integrated exactly
    std::vector<Vec3> points;
    std::vector<double> weights;
};
QuadratureRule quadrature_rule(RefKind kind, int degree);

// 1D Gauss rules used to build the composite rules; exposed for tests.
// gauss_legendre_01: weight 1 on [0,1]; gauss_jacobi_01: weight (1-x)^alpha on [0,1].
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w);
void gauss_jacobi_01(int n, int alpha, std::vector<double>& x, std::vector<double>& w);

// Affine map x = A r + x1 of the reference tetrahedron onto an element.
// A = [x2-x1, x3-x1, x4-x1]; the inverse is computed once and reused.
struct AffineMap {
    Mat3 A;
    Mat3 A_inv;
    Vec3 x1;
    double det;  // det A = 6 x element volume

    static AffineMap from_corners(const Vec3& x1, const Vec3& x2, const Vec3& x3,
                                  const Vec3& x4);

    Vec3 to_physical(const Vec3& r) const { return A * r + x1; }
    Vec3 to_reference(const Vec3& x) const { return A_inv * (x - x1); }
    // grad_x phi = A^{-T} grad_r phi
    Vec3 push_gradient(const Vec3& gref) const { return A_inv.transpose() * gref; }
    // hess_x phi = A^{-T} hess_r phi A^{-1}
    Mat3 push_hessian(const Mat3& href) const {
        return A_inv.transpose() * href * A_inv;
    }
};

// Basis evaluation in physical coordinates through the inverse map:
// r(x) = A^{-1}(x - x1), values phi(r(x)), gradients A^{-T} grad_r phi.
struct PhysicalBasis {
    Vec3 r;
    BasisValues values;
    BasisGrads gradients;  // physical-space gradients
};
PhysicalBasis inverse_affine_map(const AffineMap& map, const ReferenceElement& elem,
                                 const Vec3& x);

}  // namespace tracefem
