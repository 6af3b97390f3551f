#pragma once

#include <vector>

#include "tracefem/mesh.hpp"
#include "tracefem/types.hpp"

namespace tracefem {

// Analytic level-set fields. Sphere, cylinder and plane are signed distance
// functions; cylinder_quadratic is the non-distance variant rho^2 - r^2 with
// the same zero set as the distance cylinder.
class AnalyticField {
  public:
    enum class Kind { Sphere, Cylinder, CylinderQuadratic, Plane };

    static AnalyticField sphere(const Vec3& center, double radius);
    static AnalyticField cylinder(const Vec3& axis_point, const Vec3& axis_dir,
                                  double radius);
    static AnalyticField cylinder_quadratic(const Vec3& axis_point,
                                            const Vec3& axis_dir, double radius);
    static AnalyticField plane(const Vec3& point, const Vec3& normal);

    Kind kind() const { return kind_; }

    // Level-set value; defined everywhere.
    double value(const Vec3& x) const;

    // Value, gradient and closest point p(x) = x - phi grad(phi) for distance
    // fields (analytic projection for the quadratic variant). Throws when x
    // is on the medial axis (sphere center / cylinder axis), where the
    // gradient direction is undefined.
    struct Eval {
        double phi;
        Vec3 grad;
        Vec3 closest;
    };
    Eval eval(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const { return eval(x).grad; }

  private:
    Kind kind_;
    Vec3 p_ = Vec3::Zero();  // center / axis point / plane point
    Vec3 d_ = Vec3::Zero();  // axis direction / plane normal (unit)
    double r_ = 0.0;
};

// Nodal level-set values Phi on the background mesh. Values below the
// classification noise floor are nudged positive so sign-based topology
// rules stay well defined; the nudge is applied once here so every element
// sees the same value for a shared node.
struct NodalField {
    const TetMesh* mesh = nullptr;
    std::vector<double> values;
};

NodalField sample_nodal(const AnalyticField& field, const TetMesh& mesh);

// Interpolated value and physical-space gradient of the nodal field on one
// element; r may lie slightly outside the reference domain.
struct DiscreteEval {
    double phi;
    Vec3 grad;
};
DiscreteEval eval_discrete(const TetMesh& mesh, const NodalField& field, int elem,
                           const Vec3& r);

}  // namespace tracefem
