#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_helpers.hpp"
#include "tracefem/study.hpp"

using namespace tracefem;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct VtkSummary {
    std::size_t points = 0;
    std::size_t cells = 0;
    std::vector<int> types;
    std::vector<std::string> arrays;
};

VtkSummary parse_vtk(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    VtkSummary s;
    std::string tok;
    while (in >> tok) {
        if (tok == "POINTS") {
            in >> s.points;
            std::string type;
            in >> type;
            for (std::size_t i = 0; i < 3 * s.points; ++i) {
                double v;
                in >> v;
            }
        } else if (tok == "CELLS") {
            std::size_t list;
            in >> s.cells >> list;
            for (std::size_t c = 0; c < s.cells; ++c) {
                int n;
                in >> n;
                for (int i = 0; i < n; ++i) {
                    int idx;
                    in >> idx;
                    REQUIRE(idx >= 0);
                    REQUIRE(idx < static_cast<int>(s.points));
                }
            }
        } else if (tok == "CELL_TYPES") {
            std::size_t n;
            in >> n;
            s.types.resize(n);
            for (auto& t : s.types) in >> t;
        } else if (tok == "SCALARS") {
            std::string name;
            in >> name;
            s.arrays.push_back(name);
        }
    }
    return s;
}

const char* kReconstructConfig = R"({
  "study": "reconstruct",
  "bulk_order": 1,
  "surface_order": 2,
  "source": "phi_h",
  "levels": [ {"k": 1, "n": 4}, {"k": 2, "n": 6} ],
  "output": { "csv": "recon.csv", "vtk": "recon.vtk" }
})";

}  // namespace

TEST_CASE("config parsing: round trip of the documented schema") {
    const StudyConfig cfg = StudyConfig::from_json_text(R"({
      "study": "convergence",
      "bulk_order": 2,
      "surface_order": 2,
      "source": "phi",
      "box": { "min": [0, -1.3, -1.3], "max": [4, 1.3, 1.3] },
      "levels": [ {"k": 1, "n": 5, "gamma1": 31.6944, "gamma2": 7.8296} ],
      "benchmark": { "radius": 1.0, "thickness": 0.01, "length": 4.0,
                     "force": 1.0, "youngs_modulus": 100.0, "poisson_ratio": 0.5 },
      "newton": { "tol_root": 1e-11, "max_iterations": 40, "strategy": "gradient" },
      "curvature_tol": -0.1,
      "output": { "csv": "t.csv" },
      "seed": 7
    })");
    CHECK(cfg.study == StudyKind::Convergence);
    CHECK(cfg.bulk_order == 2);
    CHECK(!cfg.discrete_source);
    CHECK(cfg.levels.size() == 1);
    CHECK(cfg.levels[0].gamma1 == doctest::Approx(31.6944));
    CHECK(cfg.reconstruct.tol_root == doctest::Approx(1e-11));
    CHECK(cfg.reconstruct.strategy == FaceSearchStrategy::GradientProjection);
    CHECK(cfg.reconstruct.curvature_tol == doctest::Approx(-0.1));
    CHECK(cfg.csv_path == "t.csv");
    CHECK(cfg.seed == 7);
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
    CHECK_THROWS_WITH_AS(
        StudyConfig::from_json_text(
            R"({"study": "solve", "levels": [{"n": 3}], "typo_key": 1})"),
        doctest::Contains("unknown key"), Error);
    CHECK_THROWS_WITH_AS(
        StudyConfig::from_json_text(
            R"({"study": "solve", "levels": [{"n": 3, "bogus": 2}]})"),
        doctest::Contains("unknown key"), Error);
    CHECK_THROWS_AS(StudyConfig::from_json_text(R"({"study": "nope", "levels": []})"),
                    Error);
    CHECK_THROWS_AS(StudyConfig::from_json_text(R"({"study": "solve"})"), Error);
    CHECK_THROWS_AS(StudyConfig::from_json_text(
                        R"({"study": "solve", "levels": [{"n": 3}], "source": "x"})"),
                    Error);
}

TEST_CASE("run_study is deterministic and rates recompute from the CSV") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "tracefem_test_study";
    fs::remove_all(dir);
    const StudyConfig cfg = StudyConfig::from_json_text(kReconstructConfig);

    run_study(cfg, (dir / "a").string());
    run_study(cfg, (dir / "b").string());
    const std::string csv_a = slurp(dir / "a" / "recon.csv");
    const std::string csv_b = slurp(dir / "b" / "recon.csv");
    CHECK(csv_a == csv_b);
    CHECK(!csv_a.empty());

    // Recompute the rate column from the eps columns.
    std::stringstream ss(csv_a);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "k,h,N,eps_geom,rate_geom,eps_n,rate_n");
    std::vector<double> h, eg, rg;
    while (std::getline(ss, line)) {
        std::stringstream row(ss.str());
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cols.push_back(c);
        REQUIRE(cols.size() == 7);
        h.push_back(std::stod(cols[1]));
        eg.push_back(std::stod(cols[3]));
        rg.push_back(cols[4] == "-" ? std::nan("") : std::stod(cols[4]));
    }
    REQUIRE(h.size() == 2);
    const double expected = std::log(eg[0] / eg[1]) / std::log(h[0] / h[1]);
    CHECK(rg[1] == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("VTK export: single elements and the reconstructed shell") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "tracefem_test_vtk";
    fs::create_directories(dir);

    // Single tri6.
    {
        SurfaceElement tri;
        tri.kind = SurfaceElemKind::Tri6;
        tri.nodes[0] = Vec3(0, 0, 0);
        tri.nodes[1] = Vec3(1, 0, 0);
        tri.nodes[2] = Vec3(0, 1, 0);
        for (int m = 0; m < 3; ++m) {
            tri.nodes[3 + m] = 0.5 * (tri.nodes[m] + tri.nodes[(m + 1) % 3]);
            tri.node_keys[m] = {0, m, m + 10, -1};
            tri.node_keys[3 + m] = {1, m, m + 10, m + 20};
        }
        SurfaceMesh sm;
        sm.elements = {tri};
        TetMesh dummy;
        const MergedSurface merged = merge_surface_nodes(sm, dummy);
        write_vtk_surface((dir / "tri.vtk").string(), merged, {});
        const VtkSummary s = parse_vtk(dir / "tri.vtk");
        CHECK(s.points == 6);
        CHECK(s.cells == 1);
        CHECK(s.types == std::vector<int>{22});
    }

    // Reconstructed cylinder with a solve attached: the merged node count
    // matches the file, quads are type 23.
    const StudyConfig cfg = StudyConfig::from_json_text(R"({
      "study": "solve",
      "bulk_order": 2,
      "surface_order": 2,
      "source": "phi_h",
      "levels": [ {"k": 1, "n": 5, "gamma1": 31.6944, "gamma2": 7.8296} ],
      "output": { "csv": "solve.csv", "vtk": "solve.vtk" }
    })");
    run_study(cfg, dir.string());
    const VtkSummary s = parse_vtk(dir / "solve.vtk");
    CHECK(s.points > 100);
    CHECK(s.cells > 50);
    for (int t : s.types) CHECK((t == 22 || t == 23));
    CHECK(std::count(s.types.begin(), s.types.end(), 23) > 0);
    CHECK(s.arrays ==
          std::vector<std::string>{"displacement_magnitude", "stress_error"});

    const std::string csv = slurp(dir / "solve.csv");
    CHECK(csv.find("eps_sigma") != std::string::npos);
}

TEST_CASE("gamma sweep reuses the assembled system across evaluations") {
    const StudyConfig cfg = StudyConfig::from_json_text(R"({
      "study": "gamma-sweep",
      "bulk_order": 1,
      "surface_order": 2,
      "source": "phi",
      "levels": [ {"k": 1, "n": 4} ],
      "sweep": [ {"gamma1": 0.0}, {"gamma1": 0.1}, {"gamma1": 1.0} ]
    })");
    const StudyReport rep = run_study(cfg, ".");
    REQUIRE(rep.sweep.size() == 3);
    for (const auto& row : rep.sweep) {
        CHECK(std::isfinite(row[2]));
        CHECK(row[2] > 0.0);
    }
    const std::string csv = report_csv(rep);
    CHECK(csv.rfind("gamma1,gamma2,eps_sigma", 0) == 0);
}
