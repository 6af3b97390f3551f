#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tracefem/analysis.hpp"
#include "tracefem/membrane.hpp"
#include "tracefem/reconstruct.hpp"

namespace tracefem {

enum class StudyKind { Reconstruct, Solve, Convergence, GammaSweep, GammaOptimize };

struct LevelSpec {
    int k = 1;
    int n = 5;  // subdivisions per axis
    double gamma1 = 0.0;
    double gamma2 = 0.0;
};

struct StudyConfig {
    StudyKind study = StudyKind::Reconstruct;
    int bulk_order = 2;
    int surface_order = 2;
    bool discrete_source = true;  // phi_h; false = exact phi
    Box box{Vec3(0.0, -1.32, -1.32), Vec3(4.0, 1.28, 1.28)};
    std::vector<LevelSpec> levels;
    BenchmarkConfig benchmark;
    ReconstructConfig reconstruct;
    // gamma-sweep: the list of (gamma1, gamma2) pairs to evaluate.
    std::vector<std::pair<double, double>> sweep;
    // gamma-optimize

    enum class OptMode { Golden1D, Simplex2D };
    OptMode opt_mode = OptMode::Golden1D;
    double golden_lo = 0.0, golden_hi = 100.0;
    Vec2 simplex_start{1.0, 1.0};
    std::string csv_path;  // relative to the output directory; empty = skip
    std::string vtk_path;
    unsigned seed = 0;  // reserved for randomized diagnostics

    static StudyConfig from_json_file(const std::string& path);
    static StudyConfig from_json_text(const std::string& text);
};

// One fully reconstructed refinement level of the cylinder benchmark.
struct LevelPipeline {
    std::unique_ptr<TetMesh> mesh;
    std::unique_ptr<AnalyticField> field;
    std::unique_ptr<NodalField> nodal;  // only for the discrete source
    ReconstructResult recon;
    std::unique_ptr<ActiveMesh> active;
    double h = 0.0;
};

LevelPipeline run_level(const Box& box, int n, int bulk_order,
                        const ReconstructConfig& rc, bool discrete_source,
                        const BenchmarkConfig& bench);

struct LevelResult {
    int k = 0;
    int n = 0;
    std::size_t active_nodes = 0;
    double h = 0.0;
    double eps_sigma = std::numeric_limits<double>::quiet_NaN();
    double eps_geom = std::numeric_limits<double>::quiet_NaN();
    double eps_n = std::numeric_limits<double>::quiet_NaN();
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    int evaluations = 0;
};

struct StudyReport {
    StudyKind study;
    std::vector<LevelResult> rows;
    std::vector<double> rate_sigma, rate_geom, rate_n;  // NaN in row 0
    std::vector<std::array<double, 3>> sweep;           // gamma1, gamma2, eps
};

StudyReport run_study(const StudyConfig& config, const std::string& out_dir,
                      bool verbose = false);

// CSV text for a report, mirroring the table layouts (6 significant digits,
// "-" for undefined rates).
std::string report_csv(const StudyReport& report);

// Legacy-VTK unstructured grid writer (quadratic triangles/quads).
void write_vtk_surface(
    const std::string& path, const MergedSurface& merged,
    const std::vector<std::pair<std::string, std::vector<double>>>& point_data);

}  // namespace tracefem
