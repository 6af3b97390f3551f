#pragma once

#include <array>
#include <map>
#include <unordered_map>
#include <vector>

#include "tracefem/basis.hpp"
#include "tracefem/types.hpp"

namespace tracefem {

// Structured tetrahedral background mesh. Each grid cell is split into the
// same 6 tetrahedra along its main diagonal, so faces match across cells.
// Elements store corner nodes first; order-2 meshes append the 6 edge
// midpoint nodes in the edge order (0,1),(1,2),(0,2),(0,3),(1,3),(2,3).
struct TetMesh {
    int order = 1;       // m_B
    int subdivisions = 0;
    Box box;
    std::vector<Vec3> nodes;
    std::vector<std::array<int, 10>> elements;  // entries 4..9 = -1 for order 1
    std::map<std::pair<int, int>, int> edge_midpoint;  // sorted corner pair -> node

    int nodes_per_element() const { return order == 1 ? 4 : 10; }
    std::size_t node_count() const { return nodes.size(); }
    std::size_t element_count() const { return elements.size(); }

    double element_volume(int e) const;
    AffineMap affine_map(int e) const;
    // Representative element size (cell diagonal of the structured grid).
    double cell_diagonal() const;
    // Mid node of the edge between two corner nodes (order 2), -1 otherwise.
    int edge_mid(int a, int b) const;
};

TetMesh build_background_mesh(const Box& box, int n, int order);

// Oriented interior faces. Corners are stored ascending; the canonical node
// sequence is therefore identical from both adjacent elements, and the face
// normal points from the lower element index to the higher.
struct Face {
    int left = -1;   // lower element index
    int right = -1;  // higher element index
    std::array<int, 3> corners{};  // ascending global node indices
    std::array<int, 3> mids{{-1, -1, -1}};  // (c0,c1),(c1,c2),(c0,c2) for order 2
    Vec3 normal = Vec3::Zero();
};

struct FaceSet {
    std::vector<Face> faces;
};

FaceSet face_adjacency(const TetMesh& mesh);

// Active submesh: elements cut by the surface, their shared interior faces,
// and a displacement DOF map (3 components per active node).
struct ActiveMesh {
    const TetMesh* parent = nullptr;
    std::vector<int> elements;        // K_h, ascending element indices
    std::vector<Face> interior_faces; // F_h
    std::vector<int> nodes;           // ascending global node indices
    std::unordered_map<int, int> node_local;  // global node -> local index

    int dof_count() const { return 3 * static_cast<int>(nodes.size()); }
    int dof(int global_node, int comp) const {
        return 3 * node_local.at(global_node) + comp;
    }
    // h := N^{-1/3} with N the background node count.
    double mesh_parameter() const;
};

ActiveMesh active_submesh(const TetMesh& mesh, const std::vector<char>& cut_flags);

}  // namespace tracefem
