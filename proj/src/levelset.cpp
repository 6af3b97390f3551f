#include "tracefem/levelset.hpp"

#include <cmath>

namespace tracefem {

namespace {
constexpr double kMedialAxisGuard = 1e-12;
}

AnalyticField AnalyticField::sphere(const Vec3& center, double radius) {
    AnalyticField f;
    f.kind_ = Kind::Sphere;
    f.p_ = center;
    f.r_ = radius;
    return f;
}

AnalyticField AnalyticField::cylinder(const Vec3& axis_point, const Vec3& axis_dir,
                                      double radius) {
    AnalyticField f;
    f.kind_ = Kind::Cylinder;
    f.p_ = axis_point;
    f.d_ = axis_dir.normalized();
    f.r_ = radius;
    return f;
}

AnalyticField AnalyticField::cylinder_quadratic(const Vec3& axis_point,
                                                const Vec3& axis_dir,
                                                double radius) {
    AnalyticField f = cylinder(axis_point, axis_dir, radius);
    f.kind_ = Kind::CylinderQuadratic;
    return f;
}

AnalyticField AnalyticField::plane(const Vec3& point, const Vec3& normal) {
    AnalyticField f;
    f.kind_ = Kind::Plane;
    f.p_ = point;
    f.d_ = normal.normalized();
    return f;
}

double AnalyticField::value(const Vec3& x) const {
    switch (kind_) {
        case Kind::Sphere:
            return (x - p_).norm() - r_;
        case Kind::Cylinder: {
            const Vec3 v = x - p_;
            return (v - v.dot(d_) * d_).norm() - r_;
        }
        case Kind::CylinderQuadratic: {
            const Vec3 v = x - p_;
            return (v - v.dot(d_) * d_).squaredNorm() - r_ * r_;
        }
        case Kind::Plane:
            return d_.dot(x - p_);
    }
    return 0.0;
}

AnalyticField::Eval AnalyticField::eval(const Vec3& x) const {
    Eval out;
    out.phi = value(x);
    switch (kind_) {
        case Kind::Sphere: {
            const Vec3 v = x - p_;
            const double n = v.norm();
            if (n < kMedialAxisGuard)
                throw Error("level set gradient undefined on the medial axis");
            out.grad = v / n;
            out.closest = p_ + r_ * out.grad;
            return out;
        }
        case Kind::Cylinder:
        case Kind::CylinderQuadratic: {
            const Vec3 v = x - p_;
            const Vec3 radial = v - v.dot(d_) * d_;
            const double rho = radial.norm();
            if (rho < kMedialAxisGuard)
                throw Error("level set gradient undefined on the medial axis");
            const Vec3 dir = radial / rho;
            out.grad = kind_ == Kind::Cylinder ? dir : Vec3(2.0 * radial);
            out.closest = x - radial + r_ * dir;
            return out;
        }
        case Kind::Plane:
            out.grad = d_;
            out.closest = x - out.phi * d_;
            return out;
    }
    throw Error("unreachable");
}

NodalField sample_nodal(const AnalyticField& field, const TetMesh& mesh) {
    NodalField out;
    out.mesh = &mesh;
    out.values.resize(mesh.node_count());
    const double floor = 1e-12 * mesh.cell_diagonal();
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        if (field.kind() == AnalyticField::Kind::Sphere ||
            field.kind() == AnalyticField::Kind::Cylinder ||
            field.kind() == AnalyticField::Kind::CylinderQuadratic) {
            // Reject nodes where the closest point is ill defined.
            try {
                field.eval(mesh.nodes[i]);
            } catch (const Error&) {
                throw Error("sample_nodal: node " + std::to_string(i) +
                            " lies on the medial axis");
            }
        }
        double v = field.value(mesh.nodes[i]);
        if (std::abs(v) < floor) v = floor;
        out.values[i] = v;
    }
    return out;
}

DiscreteEval eval_discrete(const TetMesh& mesh, const NodalField& field, int elem,
                           const Vec3& r) {
    const ReferenceElement& ref = ReferenceElement::get(RefKind::Tet, mesh.order);
    const BasisValues vals = ref.values(r);
    const BasisGrads grads = ref.gradients(r);
    const AffineMap map = mesh.affine_map(elem);
    DiscreteEval out{0.0, Vec3::Zero()};
    Vec3 gref = Vec3::Zero();
    for (int i = 0; i < vals.n; ++i) {
        const double phi_i = field.values[mesh.elements[elem][i]];
        out.phi += vals.v[i] * phi_i;
        gref += grads.g[i] * phi_i;
    }
    out.grad = map.push_gradient(gref);
    return out;
}

}  // namespace tracefem
