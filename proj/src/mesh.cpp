#include "tracefem/mesh.hpp"

#include <algorithm>
#include <set>

namespace tracefem {

double TetMesh::element_volume(int e) const {
    const auto& el = elements[e];
    const Vec3 a = nodes[el[1]] - nodes[el[0]];
    const Vec3 b = nodes[el[2]] - nodes[el[0]];
    const Vec3 c = nodes[el[3]] - nodes[el[0]];
    return a.cross(b).dot(c) / 6.0;
}

AffineMap TetMesh::affine_map(int e) const {
    const auto& el = elements[e];
    return AffineMap::from_corners(nodes[el[0]], nodes[el[1]], nodes[el[2]],
                                   nodes[el[3]]);
}

double TetMesh::cell_diagonal() const {
    return (box.extent() / static_cast<double>(subdivisions)).norm();
}

int TetMesh::edge_mid(int a, int b) const {
    auto it = edge_midpoint.find({std::min(a, b), std::max(a, b)});
    return it == edge_midpoint.end() ? -1 : it->second;
}

TetMesh build_background_mesh(const Box& box, int n, int order) {
    if (n < 1) throw Error("build_background_mesh: n must be >= 1");
    if (!box.valid()) throw Error("build_background_mesh: degenerate box");
    if (order != 1 && order != 2)
        throw Error("build_background_mesh: order must be 1 or 2");

    TetMesh mesh;
    mesh.order = order;
    mesh.subdivisions = n;
    mesh.box = box;

    const int np = n + 1;
    auto node_id = [np](int i, int j, int k) { return (k * np + j) * np + i; };
    mesh.nodes.reserve(static_cast<std::size_t>(np) * np * np);
    const Vec3 ext = box.extent();
    for (int k = 0; k < np; ++k)
        for (int j = 0; j < np; ++j)
            for (int i = 0; i < np; ++i)
                mesh.nodes.push_back(box.lo + Vec3(ext.x() * i / n, ext.y() * j / n,
                                                   ext.z() * k / n));

    // Kuhn split: one tet per permutation of the axis walk from the cell's
    // low corner to its main diagonal. Odd permutations get two vertices
    // swapped to keep the signed volume positive.
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                             {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    const int parity[6] = {1, -1, -1, 1, 1, -1};
    mesh.elements.reserve(static_cast<std::size_t>(n) * n * n * 6);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                for (int p = 0; p < 6; ++p) {
                    int d[3] = {0, 0, 0};
                    std::array<int, 4> corners{};
                    corners[0] = node_id(i, j, k);
                    for (int s = 0; s < 2; ++s) {
                        d[perms[p][s]] = 1;
                        corners[s + 1] = node_id(i + d[0], j + d[1], k + d[2]);
                    }
                    corners[3] = node_id(i + 1, j + 1, k + 1);
                    if (parity[p] < 0) std::swap(corners[1], corners[2]);
                    std::array<int, 10> el;
                    el.fill(-1);
                    std::copy(corners.begin(), corners.end(), el.begin());
                    mesh.elements.push_back(el);
                }

    if (order == 2) {
        constexpr int kEdge[6][2] = {{0, 1}, {1, 2}, {0, 2},
                                     {0, 3}, {1, 3}, {2, 3}};
        for (auto& el : mesh.elements) {
            for (int m = 0; m < 6; ++m) {
                const int a = el[kEdge[m][0]], b = el[kEdge[m][1]];
                const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
                auto it = mesh.edge_midpoint.find(key);
                int mid;
                if (it == mesh.edge_midpoint.end()) {
                    mid = static_cast<int>(mesh.nodes.size());
                    mesh.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
                    mesh.edge_midpoint.emplace(key, mid);
                } else {
                    mid = it->second;
                }
                el[4 + m] = mid;
            }
        }
    }
    return mesh;
}

FaceSet face_adjacency(const TetMesh& mesh) {
    // Local face f of a tet = the corners opposite corner f.
    constexpr int kFace[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};
    std::map<std::array<int, 3>, std::vector<int>> shared;
    for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e) {
        const auto& el = mesh.elements[e];
        for (const auto& f : kFace) {
            std::array<int, 3> key{el[f[0]], el[f[1]], el[f[2]]};
            std::sort(key.begin(), key.end());
            shared[key].push_back(e);
        }
    }

    FaceSet out;
    for (const auto& [corners, elems] : shared) {
        if (elems.size() > 2)
            throw Error("face_adjacency: non-manifold face shared by " +
                        std::to_string(elems.size()) + " elements");
        if (elems.size() != 2) continue;  // boundary face
        Face face;
        face.left = std::min(elems[0], elems[1]);
        face.right = std::max(elems[0], elems[1]);
        face.corners = corners;
        if (mesh.order == 2) {
            face.mids = {mesh.edge_mid(corners[0], corners[1]),
                         mesh.edge_mid(corners[1], corners[2]),
                         mesh.edge_mid(corners[0], corners[2])};
        }
        const Vec3& a = mesh.nodes[corners[0]];
        Vec3 nrm = (mesh.nodes[corners[1]] - a).cross(mesh.nodes[corners[2]] - a);
        nrm.normalize();
        // Orient from the lower to the higher element index.
        Vec3 cl = Vec3::Zero(), cr = Vec3::Zero();
        for (int i = 0; i < 4; ++i) {
            cl += mesh.nodes[mesh.elements[face.left][i]];
            cr += mesh.nodes[mesh.elements[face.right][i]];
        }
        if (nrm.dot(cr - cl) < 0) nrm = -nrm;
        face.normal = nrm;
        out.faces.push_back(face);
    }
    return out;
}

double ActiveMesh::mesh_parameter() const {
    return std::pow(static_cast<double>(parent->node_count()), -1.0 / 3.0);
}

ActiveMesh active_submesh(const TetMesh& mesh, const std::vector<char>& cut_flags) {
    if (cut_flags.size() != mesh.element_count())
        throw Error("active_submesh: cut_flags size mismatch");

    ActiveMesh active;
    active.parent = &mesh;
    for (int e = 0; e < static_cast<int>(mesh.element_count()); ++e)
        if (cut_flags[e]) active.elements.push_back(e);
    if (active.elements.empty())
        throw Error("active_submesh: surface does not intersect mesh");

    std::set<int> node_set;
    const int npe = mesh.nodes_per_element();
    for (int e : active.elements)
        for (int i = 0; i < npe; ++i) node_set.insert(mesh.elements[e][i]);
    active.nodes.assign(node_set.begin(), node_set.end());
    for (int i = 0; i < static_cast<int>(active.nodes.size()); ++i)
        active.node_local[active.nodes[i]] = i;

    const FaceSet all = face_adjacency(mesh);
    for (const auto& f : all.faces)
        if (cut_flags[f.left] && cut_flags[f.right])
            active.interior_faces.push_back(f);
    return active;
}

}  // namespace tracefem
