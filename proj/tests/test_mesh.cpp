#include <doctest.h>

#include <map>
#include <set>

#include "test_helpers.hpp"
#include "tracefem/mesh.hpp"
#include "tracefem/reconstruct.hpp"

using namespace tracefem;

namespace {

const Box kUnitBox{Vec3(0, 0, 0), Vec3(1, 1, 1)};

TetMesh two_tets_sharing_a_face() {
    TetMesh mesh;
    mesh.order = 1;
    mesh.subdivisions = 1;
    mesh.box = kUnitBox;
    mesh.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1),
                  Vec3(1, 1, 1)};
    mesh.elements.push_back({0, 1, 2, 3, -1, -1, -1, -1, -1, -1});
    mesh.elements.push_back({1, 2, 3, 4, -1, -1, -1, -1, -1, -1});
    return mesh;
}

}  // namespace

TEST_CASE("unit cube, n=1: 8 nodes, 6 positive tets filling the cube") {
    const TetMesh mesh = build_background_mesh(kUnitBox, 1, 1);
    CHECK(mesh.node_count() == 8);
    CHECK(mesh.element_count() == 6);
    double total = 0.0;
    for (int e = 0; e < 6; ++e) {
        const double v = mesh.element_volume(e);
        CHECK(v > 0.0);
        total += v;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("unit cube, n=1, order 2: midpoint nodes are edge means") {
    const TetMesh mesh = build_background_mesh(kUnitBox, 1, 2);
    CHECK(mesh.element_count() == 6);
    constexpr int kEdge[6][2] = {{0, 1}, {1, 2}, {0, 2}, {0, 3}, {1, 3}, {2, 3}};
    for (const auto& el : mesh.elements) {
        for (int m = 0; m < 6; ++m) {
            CHECK(el[4 + m] >= 0);
            const Vec3 mid = 0.5 * (mesh.nodes[el[kEdge[m][0]]] +
                                    mesh.nodes[el[kEdge[m][1]]]);
            CHECK((mesh.nodes[el[4 + m]] - mid).norm() == 0.0);
        }
    }
    // No duplicate nodes.
    std::set<std::array<long long, 3>> seen;
    const double tol = 1e-12 * mesh.box.diagonal();
    for (const Vec3& p : mesh.nodes) {
        std::array<long long, 3> key{static_cast<long long>(std::llround(p.x() / tol)),
                                     static_cast<long long>(std::llround(p.y() / tol)),
                                     static_cast<long long>(std::llround(p.z() / tol))};
        CHECK(seen.insert(key).second);
    }
}

TEST_CASE("refinement: n=2 halves the spacing and multiplies elements by 8") {
    const TetMesh m1 = build_background_mesh(kUnitBox, 1, 1);
    const TetMesh m2 = build_background_mesh(kUnitBox, 2, 1);
    CHECK(m2.element_count() == 8 * m1.element_count());
    CHECK(m2.cell_diagonal() == doctest::Approx(0.5 * m1.cell_diagonal()));
    for (int e = 0; e < static_cast<int>(m2.element_count()); ++e)
        CHECK(m2.element_volume(e) > 0.0);
}

TEST_CASE("build_background_mesh rejects bad input") {
    CHECK_THROWS_AS(build_background_mesh(kUnitBox, 0, 1), Error);
    CHECK_THROWS_AS(build_background_mesh(Box{Vec3(0, 0, 0), Vec3(1, 0, 1)}, 2, 1),
                    Error);
    CHECK_THROWS_AS(build_background_mesh(kUnitBox, 1, 3), Error);
}

TEST_CASE("face_adjacency: single tet has no interior faces") {
    TetMesh mesh = two_tets_sharing_a_face();
    mesh.elements.pop_back();
    CHECK(face_adjacency(mesh).faces.empty());
}

TEST_CASE("face_adjacency: two glued tets share exactly one face") {
    const TetMesh mesh = two_tets_sharing_a_face();
    const FaceSet fs = face_adjacency(mesh);
    REQUIRE(fs.faces.size() == 1);
    const Face& f = fs.faces[0];
    CHECK(f.left == 0);
    CHECK(f.right == 1);
    CHECK(f.corners == std::array<int, 3>{1, 2, 3});
    CHECK(f.normal.norm() == doctest::Approx(1.0).epsilon(1e-12));
    // Normal points from element 0 towards element 1.
    Vec3 c0 = Vec3::Zero(), c1 = Vec3::Zero();
    for (int i = 0; i < 4; ++i) {
        c0 += 0.25 * mesh.nodes[mesh.elements[0][i]];
        c1 += 0.25 * mesh.nodes[mesh.elements[1][i]];
    }
    CHECK(f.normal.dot(c1 - c0) > 0.0);
}

TEST_CASE("face_adjacency: interior face count of the 6-tet cube (oracle)") {
    const TetMesh mesh = build_background_mesh(kUnitBox, 1, 1);
    // Brute-force oracle: collect all element faces, count shared triples.
    std::map<std::array<int, 3>, int> count;
    constexpr int kFace[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    for (const auto& el : mesh.elements)
        for (const auto& fc : kFace) {
            std::array<int, 3> key{el[fc[0]], el[fc[1]], el[fc[2]]};
            std::sort(key.begin(), key.end());
            ++count[key];
        }
    int interior = 0, boundary = 0;
    for (const auto& [key, c] : count) (c == 2 ? interior : boundary)++;
    CHECK(boundary == 12);  // each cube face is split into two triangles
    const FaceSet fs = face_adjacency(mesh);
    CHECK(static_cast<int>(fs.faces.size()) == interior);
    CHECK(fs.faces.size() == (24 - 12) / 2);
}

TEST_CASE("face canonicalization is stable and order 2 mids are consistent") {
    const TetMesh mesh = build_background_mesh(kUnitBox, 2, 2);
    const FaceSet a = face_adjacency(mesh);
    const FaceSet b = face_adjacency(mesh);
    REQUIRE(a.faces.size() == b.faces.size());
    for (std::size_t i = 0; i < a.faces.size(); ++i) {
        CHECK(a.faces[i].corners == b.faces[i].corners);
        CHECK(a.faces[i].mids == b.faces[i].mids);
        for (int m = 0; m < 3; ++m) CHECK(a.faces[i].mids[m] >= 0);
    }
}

TEST_CASE("active_submesh: trivial flag patterns") {
    const TetMesh mesh = build_background_mesh(kUnitBox, 2, 1);
    std::vector<char> flags(mesh.element_count(), 0);
    CHECK_THROWS_AS(active_submesh(mesh, flags), Error);

    flags[5] = 1;
    const ActiveMesh active = active_submesh(mesh, flags);
    CHECK(active.elements.size() == 1);
    CHECK(active.interior_faces.empty());
    CHECK(active.nodes.size() == 4);
    CHECK(active.dof_count() == 12);
    // DOF map is a bijection onto 0..n_dof-1.
    std::set<int> dofs;
    for (int node : active.nodes)
        for (int c = 0; c < 3; ++c) dofs.insert(active.dof(node, c));
    CHECK(static_cast<int>(dofs.size()) == active.dof_count());
    CHECK(*dofs.begin() == 0);
    CHECK(*dofs.rbegin() == active.dof_count() - 1);
}

TEST_CASE("active_submesh: every active cylinder element touches F_h") {
    const Box box{Vec3(-1.5, -1.5, 0), Vec3(1.5, 1.5, 4)};
    const TetMesh mesh = build_background_mesh(box, 12, 1);
    const AnalyticField cyl =
        AnalyticField::cylinder(Vec3::Zero(), Vec3(0, 0, 1), 1.0);
    const LevelSetProbe probe = LevelSetProbe::exact(mesh, cyl);
    const SamplingGrid grid = SamplingGrid::make();
    std::vector<char> flags(mesh.element_count(), 0);
    for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e)
        flags[e] = classify_element(probe, grid, e, 0.0).verdict == Verdict::ValidCut;
    const ActiveMesh active = active_submesh(mesh, flags);
    CHECK(active.elements.size() > 100);

    // Brute-force oracle: adjacency via shared sorted corner triples.
    std::map<std::array<int, 3>, std::vector<int>> by_face;
    constexpr int kFace[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    for (int e : active.elements)
        for (const auto& fc : kFace) {
            std::array<int, 3> key{mesh.elements[e][fc[0]], mesh.elements[e][fc[1]],
                                   mesh.elements[e][fc[2]]};
            std::sort(key.begin(), key.end());
            by_face[key].push_back(e);
        }
    std::set<int> with_neighbor;
    for (const auto& [key, elems] : by_face)
        if (elems.size() == 2)
            for (int e : elems) with_neighbor.insert(e);
    for (int e : active.elements) CHECK(with_neighbor.count(e) == 1);
    CHECK(active.interior_faces.size() * 2 ==
          [&] {
              std::size_t n = 0;
              for (const auto& [key, elems] : by_face)
                  if (elems.size() == 2) n += 2;
              return n;
          }());
}
