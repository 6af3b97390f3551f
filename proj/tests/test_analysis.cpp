#include <doctest.h>

#include <cmath>

#include "test_helpers.hpp"
#include "tracefem/analysis.hpp"
#include "tracefem/study.hpp"

using namespace tracefem;
using namespace tracefem::testing;

TEST_CASE("mesh_size: h = N^(-1/3)") {
    CHECK(mesh_size(1000) == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(mesh_size(8) == doctest::Approx(0.5).epsilon(1e-13));
    // h = 0.2321 corresponds to N ~ 80.
    CHECK(std::llround(std::pow(1.0 / 0.2321, 3.0)) == 80);
    CHECK_THROWS_AS(mesh_size(0), Error);
}

TEST_CASE("exact benchmark load and stress") {
    const BenchmarkConfig cfg;
    CHECK(exact_benchmark(cfg, Vec3(4, 0, 0)).sigma_exact == doctest::Approx(0.0));
    CHECK(exact_benchmark(cfg, Vec3(0, 1, 0)).sigma_exact ==
          doctest::Approx(7.95775).epsilon(1e-5));
    const Vec3 f = exact_benchmark(cfg, Vec3(2, 0, 0)).load;
    CHECK(f.x() == doctest::Approx(1.0 / (16.0 * M_PI)).epsilon(1e-12));
    CHECK(f.x() == doctest::Approx(0.019894).epsilon(1e-4));
    CHECK(f.y() == 0.0);
    CHECK(f.z() == 0.0);
}

TEST_CASE("convergence rates: analytic and table-transcribed values") {
    const auto r1 = convergence_rates({4.0, 1.0}, {0.2, 0.1});
    CHECK(std::isnan(r1[0]));
    CHECK(r1[1] == doctest::Approx(2.0).epsilon(1e-12));

    const auto r2 = convergence_rates({4.2421, 2.0101}, {0.2321, 0.1456});
    CHECK(r2[1] == doctest::Approx(1.6017).epsilon(1e-3));

    const auto r3 = convergence_rates({2.5, 2.5, 2.5}, {0.4, 0.2, 0.1});
    CHECK(r3[1] == doctest::Approx(0.0));
    CHECK(r3[2] == doctest::Approx(0.0));

    CHECK_THROWS_AS(convergence_rates({1.0}, {0.1}), Error);
    CHECK_THROWS_AS(convergence_rates({1.0, 0.0}, {0.2, 0.1}), Error);
    CHECK_THROWS_AS(convergence_rates({1.0, 0.5}, {0.1, 0.2}), Error);
}

TEST_CASE("symmetric 3x3 eigenvalues via Jacobi sweeps") {
    Mat3 d = Vec3(3.0, -1.0, 0.5).asDiagonal();
    const Vec3 ev = symmetric_eigenvalues(d);
    CHECK(ev(0) == doctest::Approx(3.0).epsilon(1e-13));
    CHECK(ev(1) == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(ev(2) == doctest::Approx(-1.0).epsilon(1e-13));

    // Projected tensors have the normal in their null space.
    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 n = random_point(-1, 1).normalized();
        Mat3 m;
        m << uniform(-2, 2), uniform(-2, 2), uniform(-2, 2), 0, uniform(-2, 2),
            uniform(-2, 2), 0, 0, uniform(-2, 2);
        const Mat3 sym = 0.5 * (m + m.transpose());
        const Mat3 p = Mat3::Identity() - n * n.transpose();
        const Mat3 projected = p * sym * p;
        const Vec3 evs = symmetric_eigenvalues(projected);
        const double closest =
            std::min({std::abs(evs(0)), std::abs(evs(1)), std::abs(evs(2))});
        CHECK(closest <= 1e-9 * std::max(1.0, projected.norm()));
    }
}

TEST_CASE("stress_error vanishes for a matched uniaxial state") {
    // Flat surface z = 0.53 in the unit box, displacement chosen so that
    // sigma = diag(5, 0, 0); benchmark constants chosen so sigma_e ~ 5.
    const Box box{Vec3(0, 0, 0), Vec3(1, 1, 1)};
    const TetMesh mesh = build_background_mesh(box, 2, 2);
    const AnalyticField plane = AnalyticField::plane(Vec3(0, 0, 0.53), Vec3(0, 0, 1));
    const NodalField nf = sample_nodal(plane, mesh);
    const LevelSetProbe probe = LevelSetProbe::discrete(mesh, nf);
    const ReconstructResult recon =
        reconstruct_surface(mesh, probe, ReconstructConfig{});
    const ActiveMesh active = active_submesh(mesh, recon.cut_flags);

    const Material mat = lame_plane_stress(100.0, 0.5);
    const double eps1 = 5.0 / mat.E;
    const double eps2 = -mat.lambda * eps1 / (2.0 * mat.mu + mat.lambda);
    DisplacementField field;
    field.active = &active;
    field.u = Eigen::VectorXd::Zero(active.dof_count());
    for (int node : active.nodes) {
        const Vec3 x = mesh.nodes[node];
        field.u(active.dof(node, 0)) = eps1 * x.x();
        field.u(active.dof(node, 1)) = eps2 * x.y();
    }

    BenchmarkConfig cfg;
    cfg.length = 1e9;  // sigma_e ~ F/(4 pi r t) for x << L
    cfg.force = 5.0 * 4.0 * M_PI * cfg.radius * cfg.thickness;
    const double err = stress_error(field, recon.surface, mat, cfg);
    CHECK(err <= 1e-9);
}

TEST_CASE("benchmark constraints pick the end planes") {
    const Box box{Vec3(0, -1.32, -1.32), Vec3(4, 1.28, 1.28)};
    const LevelPipeline lp =
        run_level(box, 5, 1, ReconstructConfig{}, true, BenchmarkConfig{});
    const std::vector<int> bc = benchmark_constraints(*lp.active, BenchmarkConfig{});
    CHECK(!bc.empty());
    int expected = 0;
    for (int node : lp.active->nodes) {
        const double x = lp.mesh->nodes[node].x();
        if (std::abs(x) <= 1e-9 * 4.0) ++expected;
        if (std::abs(x - 4.0) <= 1e-9 * 4.0) expected += 2;
    }
    CHECK(static_cast<int>(bc.size()) == expected);
    for (int d : bc) {
        const int node = lp.active->nodes[d / 3];
        const double x = lp.mesh->nodes[node].x();
        if (d % 3 == 0)
            CHECK(std::abs(x) <= 1e-9 * 4.0);
        else
            CHECK(std::abs(x - 4.0) <= 1e-9 * 4.0);
    }
}

TEST_CASE("golden section search") {
    const GoldenResult r = golden_section(
        [](double g) { return (g - 3.0) * (g - 3.0); }, 0.0, 100.0);
    CHECK(std::abs(r.x - 3.0) <= 1e-2);
    CHECK(r.evaluations < 30);

    // Scaling the objective does not change the argmin (same comparisons).
    const GoldenResult r5 = golden_section(
        [](double g) { return 5.0 * (g - 3.0) * (g - 3.0); }, 0.0, 100.0);
    CHECK(r5.x == r.x);

    // Failures count as +infinity.
    const GoldenResult rf = golden_section(
        [](double g) {
            if (g > 50.0) throw Error("unstable");
            return (g - 3.0) * (g - 3.0);
        },
        0.0, 100.0);
    CHECK(std::abs(rf.x - 3.0) <= 1e-2);
}

TEST_CASE("Nelder-Mead simplex on the shifted bowl") {
    const SimplexResult r = nelder_mead2(
        [](const Vec2& g) {
            return (g.x() - 1.0) * (g.x() - 1.0) + (g.y() - 2.0) * (g.y() - 2.0);
        },
        Vec2(1.0, 1.0));
    CHECK(std::abs(r.x.x() - 1.0) <= 1e-2);
    CHECK(std::abs(r.x.y() - 2.0) <= 1e-2);
    CHECK(r.evaluations <= 60);

    // Iterates stay in the first quadrant.
    const SimplexResult rc = nelder_mead2(
        [](const Vec2& g) {
            CHECK(g.x() >= 0.0);
            CHECK(g.y() >= 0.0);
            return (g.x() + 0.5) * (g.x() + 0.5) + g.y() * g.y();
        },
        Vec2(1.0, 1.0));
    CHECK(rc.x.x() <= 0.05);
}
