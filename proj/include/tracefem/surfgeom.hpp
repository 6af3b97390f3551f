#pragma once

#include <vector>

#include "tracefem/basis.hpp"
#include "tracefem/reconstruct.hpp"
#include "tracefem/types.hpp"

namespace tracefem {

// Parametric frame of a surface element at a 2D reference point.
struct TangentFrame {
    Vec3 x;
    Vec3 t_r, t_s;
    Vec3 normal;      // unit, oriented by the stored node order
    double jacobian;  // |t_r x t_s|
};

TangentFrame surface_frame(const SurfaceElement& elem, const Vec2& r);

// P = I - n (x) n
Mat3 tangential_projector(const Vec3& n);

// Reference element backing a surface element kind.
const ReferenceElement& surface_reference(SurfaceElemKind kind);

struct SurfaceQP {
    Vec2 ref;
    double weight;  // quadrature weight x surface Jacobian
    TangentFrame frame;
};

std::vector<SurfaceQP> surface_quadrature(const SurfaceElement& elem, int degree);

double element_area(const SurfaceElement& elem, int degree = 4);
double surface_area(const SurfaceMesh& surface, int degree = 4);

}  // namespace tracefem
