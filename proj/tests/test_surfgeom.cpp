#include <doctest.h>

#include "test_helpers.hpp"
#include "tracefem/reconstruct.hpp"
#include "tracefem/surfgeom.hpp"

using namespace tracefem;
using namespace tracefem::testing;

namespace {

SurfaceElement flat_tri6_z0() {
    SurfaceElement se;
    se.kind = SurfaceElemKind::Tri6;
    se.nodes[0] = Vec3(0, 0, 0);
    se.nodes[1] = Vec3(1, 0, 0);
    se.nodes[2] = Vec3(0, 1, 0);
    for (int m = 0; m < 3; ++m)
        se.nodes[3 + m] = 0.5 * (se.nodes[m] + se.nodes[(m + 1) % 3]);
    return se;
}

SurfaceElement flat_unit_quad8() {
    SurfaceElement se;
    se.kind = SurfaceElemKind::Quad8;
    const Vec3 corners[4] = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0),
                             Vec3(0, 1, 0)};
    for (int i = 0; i < 4; ++i) {
        se.nodes[i] = corners[i];
        se.nodes[4 + i] = 0.5 * (corners[i] + corners[(i + 1) % 4]);
    }
    return se;
}

// Quad8 patch on the cylinder rho = r about the x axis, bounded by the
// angles [th0, th1] and the axial extent [x0, x1]; all 8 nodes sampled from
// the true surface.
SurfaceElement cylinder_patch(double r, double th0, double th1, double x0,
                              double x1) {
    auto at = [&](double th, double x) {
        return Vec3(x, r * std::cos(th), r * std::sin(th));
    };
    const double thm = 0.5 * (th0 + th1);
    const double xm = 0.5 * (x0 + x1);
    SurfaceElement se;
    se.kind = SurfaceElemKind::Quad8;
    se.nodes[0] = at(th0, x0);
    se.nodes[1] = at(th1, x0);
    se.nodes[2] = at(th1, x1);
    se.nodes[3] = at(th0, x1);
    se.nodes[4] = at(thm, x0);
    se.nodes[5] = at(th1, xm);
    se.nodes[6] = at(thm, x1);
    se.nodes[7] = at(th0, xm);
    return se;
}

}  // namespace

TEST_CASE("surface frame of flat elements") {
    const SurfaceElement tri = flat_tri6_z0();
    const TangentFrame tf = surface_frame(tri, Vec2(1.0 / 3, 1.0 / 3));
    CHECK(std::abs(std::abs(tf.normal.z()) - 1.0) <= 1e-12);
    CHECK(tf.jacobian == doctest::Approx(1.0).epsilon(1e-12));  // 2 x area

    const SurfaceElement quad = flat_unit_quad8();
    const TangentFrame qf = surface_frame(quad, Vec2(0.1, -0.3));
    CHECK(qf.jacobian == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(std::abs(qf.normal.z()) - 1.0) <= 1e-12);
}

TEST_CASE("frame invariants and FD tangents on a curved patch") {
    const SurfaceElement se = cylinder_patch(1.0, 0.3, 0.8, 0.5, 1.1);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec2 r(uniform(-0.9, 0.9), uniform(-0.9, 0.9));
        const TangentFrame tf = surface_frame(se, r);
        CHECK(tf.normal.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::abs(tf.normal.dot(tf.t_r)) <= 1e-10);
        CHECK(std::abs(tf.normal.dot(tf.t_s)) <= 1e-10);
        CHECK(tf.jacobian > 0.0);

        const double step = 1e-6;
        const Vec3 xp = surface_frame(se, r + Vec2(step, 0)).x;
        const Vec3 xm = surface_frame(se, r - Vec2(step, 0)).x;
        CHECK((tf.t_r - (xp - xm) / (2 * step)).norm() <= 1e-6);
        const Vec3 yp = surface_frame(se, r + Vec2(0, step)).x;
        const Vec3 ym = surface_frame(se, r - Vec2(0, step)).x;
        CHECK((tf.t_s - (yp - ym) / (2 * step)).norm() <= 1e-6);
    }
}

TEST_CASE("tangential projector identities") {
    const Mat3 pz = tangential_projector(Vec3(0, 0, 1));
    CHECK((pz - Vec3(1, 1, 0).asDiagonal().toDenseMatrix()).norm() <= 1e-15);

    const Vec3 diag = Vec3(1, 1, 1).normalized();
    const Mat3 pd = tangential_projector(Vec3(1, 1, 1));  // renormalized inside
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(pd(i, j) ==
                  doctest::Approx(i == j ? 2.0 / 3 : -1.0 / 3).epsilon(1e-13));
    CHECK((pd * diag).norm() <= 1e-12);

    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 n = random_point(-1, 1).normalized();
        const Mat3 p = tangential_projector(n);
        CHECK((p - p.transpose()).norm() <= 1e-12);
        CHECK((p * p - p).norm() <= 1e-12);
        CHECK((p * n).norm() <= 1e-12);
        CHECK(p.trace() == doctest::Approx(2.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(tangential_projector(Vec3::Zero()), Error);
}

TEST_CASE("surface quadrature: flat areas and the cylinder sector oracle") {
    SurfaceElement tri = flat_tri6_z0();
    CHECK(element_area(tri) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(element_area(flat_unit_quad8()) == doctest::Approx(1.0).epsilon(1e-12));

    // Curved patch vs the analytic sector area r * dtheta * dx.
    const double th0 = 0.30, th1 = 0.40, x0 = 0.5, x1 = 0.6;
    const SurfaceElement patch = cylinder_patch(1.0, th0, th1, x0, x1);
    const double sector = 1.0 * (th1 - th0) * (x1 - x0);
    CHECK(std::abs(element_area(patch, 6) - sector) <= 1e-6 * sector);

    // Weight times Jacobian sums to the area for every frame returned.
    double acc = 0.0;
    for (const SurfaceQP& qp : surface_quadrature(patch, 4)) {
        CHECK(qp.weight > 0.0);
        acc += qp.weight;
    }
    CHECK(acc == doctest::Approx(element_area(patch, 4)));
}

TEST_CASE("reconstructed cylinder normals approach the exact radial normal") {
    const Box box{Vec3(0, -1.32, -1.32), Vec3(4, 1.28, 1.28)};
    const AnalyticField cyl = AnalyticField::cylinder(Vec3::Zero(), Vec3(1, 0, 0), 1.0);
    auto worst_angle = [&](int n) {
        const TetMesh mesh = build_background_mesh(box, n, 2);
        const LevelSetProbe probe = LevelSetProbe::exact(mesh, cyl);
        const ReconstructResult res =
            reconstruct_surface(mesh, probe, ReconstructConfig{});
        double worst = 0.0;
        for (const SurfaceElement& se : res.surface.elements) {
            const Vec2 c = se.kind == SurfaceElemKind::Quad8 ? Vec2(0, 0)
                                                             : Vec2(1.0 / 3, 1.0 / 3);
            const TangentFrame tf = surface_frame(se, c);
            const Vec3 exact = cyl.eval(tf.x).grad;
            worst = std::max(worst, (tf.normal - exact).norm());
        }
        return worst;
    };
    const double w1 = worst_angle(5);
    const double w2 = worst_angle(10);
    CHECK(w2 <= w1 / 2.5);  // ~ h^2
    CHECK(w1 < 0.5);
}

TEST_CASE("surface_area: empty surface and composite sums") {
    SurfaceMesh empty;
    CHECK(surface_area(empty) == 0.0);
    SurfaceMesh two;
    two.elements = {flat_tri6_z0(), flat_unit_quad8()};
    CHECK(surface_area(two) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("degenerate surface elements are rejected") {
    SurfaceElement bad = flat_tri6_z0();
    for (int i = 0; i < 6; ++i) bad.nodes[i] = Vec3(0.3, 0.3, 0.3);
    CHECK_THROWS_AS(surface_frame(bad, Vec2(0.3, 0.3)), Error);
}
