#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "tracefem/levelset.hpp"
#include "tracefem/mesh.hpp"
#include "tracefem/types.hpp"

namespace tracefem {

// Uniform lattice over the reference tetrahedron (principal lattice with
// `points_per_edge` samples along every edge) plus precomputed basis tables,
// reused for every background element.
struct SamplingGrid {
    int points_per_edge = 5;
    std::vector<Vec3> points;                     // reference coordinates
    std::array<std::vector<int>, 6> edge_points;  // ordered along each tet edge
    std::array<std::vector<int>, 4> face_points;  // per face (opposite corner f)

    struct Table {
        std::vector<std::array<double, 10>> values;  // [point][basis]
        std::vector<std::array<Vec3, 10>> grads;     // reference gradients
    };
    Table table[2];  // index order-1

    static SamplingGrid make(int points_per_edge = 5);
};

// Tet edge -> local corner pair and face -> local corners, shared with the
// P2 node numbering.
constexpr int kTetEdgeCorner[6][2] = {{0, 1}, {1, 2}, {0, 2},
                                      {0, 3}, {1, 3}, {2, 3}};
constexpr int kTetFaceCorner[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

// Unified access to the level-set function driving the reconstruction:
// either the analytic field evaluated at mapped physical points or the
// nodal field interpolated with the bulk basis. Edge and face restrictions
// are canonical (keyed by ascending global node ids) so that shared
// entities evaluate identically from both adjacent elements.
class LevelSetProbe {
  public:
    static LevelSetProbe exact(const TetMesh& mesh, const AnalyticField& field);
    static LevelSetProbe discrete(const TetMesh& mesh, const NodalField& nodal);

    bool is_discrete() const { return nodal_ != nullptr; }
    const TetMesh& mesh() const { return *mesh_; }
    const AnalyticField* field() const { return field_; }

    double value(int elem, const Vec3& r) const;
    Vec3 reference_gradient(int elem, const Vec3& r) const;
    Vec3 physical_gradient(int elem, const Vec3& r) const;

    // Level set restricted to the straight segment between two mesh nodes,
    // parameterized by t in [0,1] from the lower to the higher node id.
    struct EdgeFn {
        Vec3 x0, x1;
        const AnalyticField* field = nullptr;
        double v0 = 0, v1 = 0, vm = 0;
        bool quadratic = false;
        Vec3 point(double t) const { return (1.0 - t) * x0 + t * x1; }
        double value(double t) const;
        double deriv(double t) const;
    };
    EdgeFn edge(int na, int nb) const;

    // Level set restricted to the flat triangle spanned by three corner
    // nodes (ascending ids), in face-parametric coordinates (u,v) on the
    // unit triangle: x(u,v) = xa + u (xb - xa) + v (xc - xa).
    struct FaceFn {
        Vec3 xa, xb, xc;
        Eigen::Matrix<double, 3, 2> jac;  // [xb-xa, xc-xa]
        const AnalyticField* field = nullptr;
        std::array<double, 6> vals{};
        int order = 1;
        bool discrete = false;
        Vec3 point(const Vec2& uv) const { return xa + jac * uv; }
        double value(const Vec2& uv) const;
        Vec2 grad_uv(const Vec2& uv) const;
    };
    FaceFn face(std::array<int, 3> corners) const;

    // Grid sampling used by classification (values are sign-safe; gradients
    // are only requested for cut elements).
    void grid_values(const SamplingGrid& grid, int elem,
                     std::vector<double>& out) const;
    void grid_gradients(const SamplingGrid& grid, int elem,
                        std::vector<Vec3>& out) const;

  private:
    const TetMesh* mesh_ = nullptr;
    const AnalyticField* field_ = nullptr;
    const NodalField* nodal_ = nullptr;
};

enum class Verdict { NotCut, ValidCut, Invalid };

struct TopologyReport {
    bool is_cut = false;
    bool high_curvature = false;
    std::array<int, 6> edge_cuts{};       // sign changes along each tet edge
    std::array<int, 4> face_cut_edges{};  // cut edges per face
    std::array<bool, 4> face_cut{};
    int cut_face_count = 0;
    Vec3 mean_gradient = Vec3::Zero();    // physical, for orientation
    Verdict verdict = Verdict::NotCut;
    std::string reason;
};

TopologyReport classify_element(const LevelSetProbe& probe, const SamplingGrid& grid,
                                int elem, double curvature_tol);

// Search direction for the in-face interior root.
enum class FaceSearchStrategy { ChordNormal, GradientProjection };

struct ReconstructConfig {
    int surface_order = 2;  // m_Gamma
    double tol_root = 1e-10;
    int newton_cap = 50;
    FaceSearchStrategy strategy = FaceSearchStrategy::ChordNormal;
    double curvature_tol = 0.0;
    int grid_points_per_edge = 5;
};

// Newton with bisection rescue along the segment [r0, r1] in the reference
// space of `elem`; the endpoint values must have opposite signs.
Vec3 find_root_on_segment(const LevelSetProbe& probe, int elem, const Vec3& r0,
                          const Vec3& r1, double tol = 1e-10, int cap = 50);

// Interior root on a canonical face given the face-parametric chord
// endpoints a, b (roots on the face boundary).
Vec2 find_face_interior_root(const LevelSetProbe::FaceFn& face, const Vec2& a,
                             const Vec2& b, FaceSearchStrategy strategy,
                             double tol = 1e-10, int cap = 50);

enum class SurfaceElemKind { Tri3, Tri6, Quad8 };

inline int surface_elem_nodes(SurfaceElemKind k) {
    switch (k) {
        case SurfaceElemKind::Tri3: return 3;
        case SurfaceElemKind::Tri6: return 6;
        case SurfaceElemKind::Quad8: return 8;
    }
    return 0;
}

struct SurfaceElement {
    SurfaceElemKind kind = SurfaceElemKind::Tri6;
    int parent = -1;  // background element index
    std::array<Vec3, 8> nodes{};       // physical coordinates
    std::array<Vec3, 8> parent_ref{};  // reference coords in the parent tet
    // Provenance of each node: {0, a, b, -1} for the root on tet edge (a,b),
    // {1, a, b, c} for the interior root on face (a,b,c). Used for merging.
    std::array<std::array<int, 4>, 8> node_keys{};
    int node_count() const { return surface_elem_nodes(kind); }
};

enum class SurfaceSource { ExactPhi, DiscretePhi };

struct SurfaceMesh {
    std::vector<SurfaceElement> elements;
    SurfaceSource source = SurfaceSource::DiscretePhi;
    int surface_order = 2;
};

struct ReconstructResult {
    SurfaceMesh surface;
    std::vector<char> cut_flags;
    std::vector<TopologyReport> reports;
    int max_newton_iterations = 0;
};

ReconstructResult reconstruct_surface(const TetMesh& mesh, const LevelSetProbe& probe,
                                      const ReconstructConfig& config);

// Indexed node list and connectivity; nodes on shared tetrahedral entities
// are identified through their provenance keys.
struct MergedSurface {
    std::vector<Vec3> points;
    std::vector<std::pair<int, int>> representative;  // (element, local node)
    std::vector<std::vector<int>> cells;
    std::vector<SurfaceElemKind> cell_kinds;
};

MergedSurface merge_surface_nodes(const SurfaceMesh& surface, const TetMesh& mesh);

}  // namespace tracefem
