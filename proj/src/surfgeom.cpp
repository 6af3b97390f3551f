#include "tracefem/surfgeom.hpp"

#include <cmath>

namespace tracefem {

const ReferenceElement& surface_reference(SurfaceElemKind kind) {
    switch (kind) {
        case SurfaceElemKind::Tri3: return ReferenceElement::get(RefKind::Triangle, 1);
        case SurfaceElemKind::Tri6: return ReferenceElement::get(RefKind::Triangle, 2);
        case SurfaceElemKind::Quad8: return ReferenceElement::get(RefKind::Quad8, 2);
    }
    throw Error("unknown surface element kind");
}

TangentFrame surface_frame(const SurfaceElement& elem, const Vec2& r) {
    const ReferenceElement& ref = surface_reference(elem.kind);
    const Vec3 rr(r.x(), r.y(), 0.0);
    const BasisValues v = ref.values(rr);
    const BasisGrads g = ref.gradients(rr);
    TangentFrame frame;
    frame.x = Vec3::Zero();
    frame.t_r = Vec3::Zero();
    frame.t_s = Vec3::Zero();
    for (int i = 0; i < v.n; ++i) {
        frame.x += v.v[i] * elem.nodes[i];
        frame.t_r += g.g[i].x() * elem.nodes[i];
        frame.t_s += g.g[i].y() * elem.nodes[i];
    }
    const Vec3 cross = frame.t_r.cross(frame.t_s);
    frame.jacobian = cross.norm();
    if (frame.jacobian <= 1e-14) throw Error("degenerate surface element (J ~ 0)");
    frame.normal = cross / frame.jacobian;
    return frame;
}

Mat3 tangential_projector(const Vec3& n) {
    const double len = n.norm();
    if (len < 1e-300) throw Error("tangential_projector: zero normal");
    const Vec3 u = n / len;
    return Mat3::Identity() - u * u.transpose();
}

std::vector<SurfaceQP> surface_quadrature(const SurfaceElement& elem, int degree) {
    const RefKind rk =
        elem.kind == SurfaceElemKind::Quad8 ? RefKind::Quad8 : RefKind::Triangle;
    const QuadratureRule rule = quadrature_rule(rk, degree);
    std::vector<SurfaceQP> out;
    out.reserve(rule.points.size());
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        SurfaceQP qp;
        qp.ref = Vec2(rule.points[q].x(), rule.points[q].y());
        qp.frame = surface_frame(elem, qp.ref);
        qp.weight = rule.weights[q] * qp.frame.jacobian;
        out.push_back(qp);
    }
    return out;
}

double element_area(const SurfaceElement& elem, int degree) {
    double area = 0.0;
    for (const SurfaceQP& qp : surface_quadrature(elem, degree)) area += qp.weight;
    return area;
}

double surface_area(const SurfaceMesh& surface, int degree) {
    double area = 0.0;
    for (const SurfaceElement& e : surface.elements) area += element_area(e, degree);
    return area;
}

}  // namespace tracefem
