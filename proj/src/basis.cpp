#include "tracefem/basis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace tracefem {

namespace {

// Barycentric gradients of the reference tet / triangle.
const Vec3 kTetLamGrad[4] = {Vec3(-1, -1, -1), Vec3(1, 0, 0), Vec3(0, 1, 0),
                             Vec3(0, 0, 1)};
const Vec3 kTriLamGrad[3] = {Vec3(-1, -1, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};

// P2 tet edge -> corner pair, matching the corner-first node numbering:
// node 4=(0,1), 5=(1,2), 6=(0,2), 7=(0,3), 8=(1,3), 9=(2,3).
constexpr int kTetEdge[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};
// P2 triangle: node 3=(0,1), 4=(1,2), 5=(2,0).
constexpr int kTriEdge[3][2] = {{0, 1}, {1, 2}, {2, 0}};

ReferenceElement make_tet(int order) {
    ReferenceElement e;
    e.kind = RefKind::Tet;
    e.order = order;
    e.dim = 3;
    e.node_count = order == 1 ? 4 : 10;
    e.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
    if (order == 2) {
        for (auto& ed : kTetEdge)
            e.nodes.push_back(0.5 * (e.nodes[ed[0]] + e.nodes[ed[1]]));
    }
    return e;
}

ReferenceElement make_triangle(int order) {
    ReferenceElement e;
    e.kind = RefKind::Triangle;
    e.order = order;
    e.dim = 2;
    e.node_count = order == 1 ? 3 : 6;
    e.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    if (order == 2) {
        for (auto& ed : kTriEdge)
            e.nodes.push_back(0.5 * (e.nodes[ed[0]] + e.nodes[ed[1]]));
    }
    return e;
}

ReferenceElement make_quad8() {
    ReferenceElement e;
    e.kind = RefKind::Quad8;
    e.order = 2;
    e.dim = 2;
    e.node_count = 8;
    e.nodes = {Vec3(-1, -1, 0), Vec3(1, -1, 0), Vec3(1, 1, 0), Vec3(-1, 1, 0),
               Vec3(0, -1, 0),  Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0)};
    return e;
}

void simplex_values(const ReferenceElement& e, const Vec3& r, BasisValues& out) {
    const bool tet = e.kind == RefKind::Tet;
    double lam[4];
    int nc;
    if (tet) {
        lam[0] = 1.0 - r.x() - r.y() - r.z();
        lam[1] = r.x();
        lam[2] = r.y();
        lam[3] = r.z();
        nc = 4;
    } else {
        lam[0] = 1.0 - r.x() - r.y();
        lam[1] = r.x();
        lam[2] = r.y();
        nc = 3;
    }
    out.n = e.node_count;
    if (e.order == 1) {
        for (int i = 0; i < nc; ++i) out.v[i] = lam[i];
        return;
    }
    for (int i = 0; i < nc; ++i) out.v[i] = lam[i] * (2.0 * lam[i] - 1.0);
    const int ne = tet ? 6 : 3;
    for (int k = 0; k < ne; ++k) {
        const int a = tet ? kTetEdge[k][0] : kTriEdge[k][0];
        const int b = tet ? kTetEdge[k][1] : kTriEdge[k][1];
        out.v[nc + k] = 4.0 * lam[a] * lam[b];
    }
}

void simplex_gradients(const ReferenceElement& e, const Vec3& r, BasisGrads& out) {
    const bool tet = e.kind == RefKind::Tet;
    const Vec3* dlam = tet ? kTetLamGrad : kTriLamGrad;
    double lam[4];
    int nc;
    if (tet) {
        lam[0] = 1.0 - r.x() - r.y() - r.z();
        lam[1] = r.x();
        lam[2] = r.y();
        lam[3] = r.z();
        nc = 4;
    } else {
        lam[0] = 1.0 - r.x() - r.y();
        lam[1] = r.x();
        lam[2] = r.y();
        nc = 3;
    }
    out.n = e.node_count;
    if (e.order == 1) {
        for (int i = 0; i < nc; ++i) out.g[i] = dlam[i];
        return;
    }
    for (int i = 0; i < nc; ++i) out.g[i] = (4.0 * lam[i] - 1.0) * dlam[i];
    const int ne = tet ? 6 : 3;
    for (int k = 0; k < ne; ++k) {
        const int a = tet ? kTetEdge[k][0] : kTriEdge[k][0];
        const int b = tet ? kTetEdge[k][1] : kTriEdge[k][1];
        out.g[nc + k] = 4.0 * (lam[a] * dlam[b] + lam[b] * dlam[a]);
    }
}

void simplex_hessians(const ReferenceElement& e, BasisHessians& out) {
    const bool tet = e.kind == RefKind::Tet;
    const Vec3* dlam = tet ? kTetLamGrad : kTriLamGrad;
    const int nc = tet ? 4 : 3;
    out.n = e.node_count;
    if (e.order == 1) {
        for (int i = 0; i < out.n; ++i) out.h[i].setZero();
        return;
    }
    for (int i = 0; i < nc; ++i) out.h[i] = 4.0 * dlam[i] * dlam[i].transpose();
    const int ne = tet ? 6 : 3;
    for (int k = 0; k < ne; ++k) {
        const int a = tet ? kTetEdge[k][0] : kTriEdge[k][0];
        const int b = tet ? kTetEdge[k][1] : kTriEdge[k][1];
        out.h[nc + k] = 4.0 * (dlam[a] * dlam[b].transpose() +
                               dlam[b] * dlam[a].transpose());
    }
}

// Serendipity quad8 on [-1,1]^2; nodes 0-3 corners CCW, 4-7 mid-edges.
void quad8_eval(const Vec3& r, int deriv, BasisValues* val, BasisGrads* grad,
                BasisHessians* hess) {
    const double xi = r.x(), eta = r.y();
    const double xs[8] = {-1, 1, 1, -1, 0, 1, 0, -1};
    const double es[8] = {-1, -1, 1, 1, -1, 0, 1, 0};
    if (val) val->n = 8;
    if (grad) grad->n = 8;
    if (hess) hess->n = 8;
    for (int i = 0; i < 8; ++i) {
        const double a = xi * xs[i], b = eta * es[i];
        double v = 0, dx = 0, de = 0, dxx = 0, dee = 0, dxe = 0;
        if (i < 4) {
            v = 0.25 * (1 + a) * (1 + b) * (a + b - 1);
            dx = 0.25 * xs[i] * (1 + b) * (2 * a + b);
            de = 0.25 * es[i] * (1 + a) * (a + 2 * b);
            dxx = 0.5 * (1 + b);
            dee = 0.5 * (1 + a);
            dxe = 0.25 * xs[i] * es[i] * (2 * a + 2 * b + 1);
        } else if (xs[i] == 0.0) {
            v = 0.5 * (1 - xi * xi) * (1 + b);
            dx = -xi * (1 + b);
            de = 0.5 * es[i] * (1 - xi * xi);
            dxx = -(1 + b);
            dee = 0.0;
            dxe = -xi * es[i];
        } else {
            v = 0.5 * (1 + a) * (1 - eta * eta);
            dx = 0.5 * xs[i] * (1 - eta * eta);
            de = -eta * (1 + a);
            dxx = 0.0;
            dee = -(1 + a);
            dxe = -eta * xs[i];
        }
        if (deriv == 0 && val) val->v[i] = v;
        if (deriv == 1 && grad) grad->g[i] = Vec3(dx, de, 0);
        if (deriv == 2 && hess) {
            Mat3 h = Mat3::Zero();
            h(0, 0) = dxx;
            h(1, 1) = dee;
            h(0, 1) = h(1, 0) = dxe;
            hess->h[i] = h;
        }
    }
}

}  // namespace

const ReferenceElement& ReferenceElement::get(RefKind kind, int order) {
    static const ReferenceElement tet1 = make_tet(1);
    static const ReferenceElement tet2 = make_tet(2);
    static const ReferenceElement tri1 = make_triangle(1);
    static const ReferenceElement tri2 = make_triangle(2);
    static const ReferenceElement quad = make_quad8();
    switch (kind) {
        case RefKind::Tet:
            if (order == 1) return tet1;
            if (order == 2) return tet2;
            break;
        case RefKind::Triangle:
            if (order == 1) return tri1;
            if (order == 2) return tri2;
            break;
        case RefKind::Quad8:
            if (order == 2) return quad;
            break;
    }
    throw Error("unsupported reference element (kind, order) combination");
}

BasisValues ReferenceElement::values(const Vec3& r) const {
    BasisValues out;
    if (kind == RefKind::Quad8) {
        quad8_eval(r, 0, &out, nullptr, nullptr);
    } else {
        simplex_values(*this, r, out);
    }
    return out;
}

BasisGrads ReferenceElement::gradients(const Vec3& r) const {
    BasisGrads out;
    if (kind == RefKind::Quad8) {
        quad8_eval(r, 1, nullptr, &out, nullptr);
    } else {
        simplex_gradients(*this, r, out);
    }
    return out;
}

BasisHessians ReferenceElement::hessians(const Vec3& r) const {
    BasisHessians out;
    if (kind == RefKind::Quad8) {
        quad8_eval(r, 2, nullptr, nullptr, &out);
    } else {
        simplex_hessians(*this, out);
    }
    return out;
}

void eval_reference_basis(const ReferenceElement& elem, const Vec3& r, int deriv,
                          BasisValues* values, BasisGrads* grads,
                          BasisHessians* hess) {
    switch (deriv) {
        case 0:
            if (!values) throw Error("eval_reference_basis: missing output");
            *values = elem.values(r);
            return;
        case 1:
            if (!grads) throw Error("eval_reference_basis: missing output");
            *grads = elem.gradients(r);
            return;
        case 2:
            if (!hess) throw Error("eval_reference_basis: missing output");
            *hess = elem.hessians(r);
            return;
        default:
            throw Error("eval_reference_basis: deriv must be 0, 1 or 2");
    }
}

// ---------------------------------------------------------------------------
// Gauss rules via Golub-Welsch on the Jacobi recurrence, weight (1-x)^alpha
// on [-1,1] (beta = 0), then mapped to [0,1] where requested.
// ---------------------------------------------------------------------------

namespace {

void gauss_jacobi_m11(int n, int alpha, std::vector<double>& x,
                      std::vector<double>& w) {
    if (n < 1) throw Error("gauss rule needs at least one point");
    const double a = alpha;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        double diag;
        if (k == 0) {
            diag = -a / (a + 2.0);
        } else {
            const double q = 2.0 * k + a;
            diag = -a * a / (q * (q + 2.0));
        }
        J(k, k) = diag;
        if (k >= 1) {
            const double q = 2.0 * k + a;
            const double b2 =
                4.0 * k * k * (k + a) * (k + a) / (q * q * (q + 1.0) * (q - 1.0));
            J(k, k - 1) = J(k - 1, k) = std::sqrt(b2);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 = std::pow(2.0, a + 1.0) / (a + 1.0);
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        x[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        w[i] = mu0 * v0 * v0;
    }
}

}  // namespace

void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
    gauss_jacobi_m11(n, 0, x, w);
    for (int i = 0; i < n; ++i) {
        x[i] = 0.5 * (x[i] + 1.0);
        w[i] *= 0.5;
    }
}

void gauss_jacobi_01(int n, int alpha, std::vector<double>& x,
                     std::vector<double>& w) {
    gauss_jacobi_m11(n, alpha, x, w);
    const double scale = std::pow(2.0, alpha + 1.0);
    for (int i = 0; i < n; ++i) {
        x[i] = 0.5 * (x[i] + 1.0);
        w[i] /= scale;
    }
}

QuadratureRule quadrature_rule(RefKind kind, int degree) {
    if (degree < 0 || degree > 30) throw Error("quadrature_rule: unsupported degree");
    const int n = std::max(1, (degree + 2) / 2);  // 2n-1 >= degree
    QuadratureRule rule;
    rule.kind = kind;
    rule.degree = 2 * n - 1;

    if (kind == RefKind::Quad8) {
        std::vector<double> x, w;
        gauss_jacobi_m11(n, 0, x, w);  // Legendre on [-1,1]
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                rule.points.emplace_back(x[i], x[j], 0.0);
                rule.weights.push_back(w[i] * w[j]);
            }
        return rule;
    }

    if (kind == RefKind::Triangle) {
        // Duffy transform r = u, s = v(1-u); the (1-u) Jacobian is absorbed
        // into the Gauss-Jacobi weight.
        std::vector<double> u, wu, v, wv;
        gauss_jacobi_01(n, 1, u, wu);
        gauss_legendre_01(n, v, wv);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                rule.points.emplace_back(u[i], v[j] * (1.0 - u[i]), 0.0);
                rule.weights.push_back(wu[i] * wv[j]);
            }
        return rule;
    }

    // Tet: r = u, s = v(1-u), t = w(1-u)(1-v); Jacobian (1-u)^2 (1-v).
    std::vector<double> u, wu, v, wv, t, wt;
    gauss_jacobi_01(n, 2, u, wu);
    gauss_jacobi_01(n, 1, v, wv);
    gauss_legendre_01(n, t, wt);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const double r = u[i];
                const double s = v[j] * (1.0 - u[i]);
                const double tt = t[k] * (1.0 - u[i]) * (1.0 - v[j]);
                rule.points.emplace_back(r, s, tt);
                rule.weights.push_back(wu[i] * wv[j] * wt[k]);
            }
    return rule;
}

AffineMap AffineMap::from_corners(const Vec3& x1, const Vec3& x2, const Vec3& x3,
                                  const Vec3& x4) {
    AffineMap m;
    m.x1 = x1;
    m.A.col(0) = x2 - x1;
    m.A.col(1) = x3 - x1;
    m.A.col(2) = x4 - x1;
    m.det = m.A.determinant();
    if (std::abs(m.det) < 1e-300) throw Error("degenerate tetrahedron (singular map)");
    m.A_inv = m.A.inverse();
    return m;
}

PhysicalBasis inverse_affine_map(const AffineMap& map, const ReferenceElement& elem,
                                 const Vec3& x) {
    PhysicalBasis out;
    out.r = map.to_reference(x);
    out.values = elem.values(out.r);
    BasisGrads ref = elem.gradients(out.r);
    out.gradients.n = ref.n;
    for (int i = 0; i < ref.n; ++i) out.gradients.g[i] = map.push_gradient(ref.g[i]);
    return out;
}

}  // namespace tracefem
