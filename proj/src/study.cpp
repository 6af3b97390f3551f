#include "tracefem/study.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace tracefem {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw Error("config: unknown key \"" + it.key() + "\" in " + ctx);
    }
}

Vec3 vec3_of(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 3)
        throw Error("config: " + ctx + " must be an array of 3 numbers");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

StudyKind study_kind_of(const std::string& s) {
    if (s == "reconstruct") return StudyKind::Reconstruct;
    if (s == "solve") return StudyKind::Solve;
    if (s == "convergence") return StudyKind::Convergence;
    if (s == "gamma-sweep") return StudyKind::GammaSweep;
    if (s == "gamma-optimize") return StudyKind::GammaOptimize;
    throw Error("config: unknown study kind \"" + s + "\"");
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fmt_rate(double v) { return std::isnan(v) ? "-" : fmt(v); }

}  // namespace

StudyConfig StudyConfig::from_json_text(const std::string& text) {
    json j = json::parse(text);
    check_keys(j,
               {"study", "bulk_order", "surface_order", "source", "box", "levels",
                "benchmark", "newton", "curvature_tol", "grid_points_per_edge",
                "sweep", "optimize", "output", "seed"},
               "top level");

    StudyConfig cfg;
    if (!j.contains("study")) throw Error("config: missing \"study\"");
    cfg.study = study_kind_of(j["study"].get<std::string>());
    if (j.contains("bulk_order")) cfg.bulk_order = j["bulk_order"].get<int>();
    if (j.contains("surface_order"))
        cfg.surface_order = j["surface_order"].get<int>();
    if (cfg.bulk_order != 1 && cfg.bulk_order != 2)
        throw Error("config: bulk_order must be 1 or 2");
    if (cfg.surface_order != 1 && cfg.surface_order != 2)
        throw Error("config: surface_order must be 1 or 2");
    if (j.contains("source")) {
        const std::string s = j["source"].get<std::string>();
        if (s == "phi")
            cfg.discrete_source = false;
        else if (s == "phi_h")
            cfg.discrete_source = true;
        else
            throw Error("config: source must be \"phi\" or \"phi_h\"");
    }
    if (j.contains("box")) {
        check_keys(j["box"], {"min", "max"}, "box");
        cfg.box.lo = vec3_of(j["box"]["min"], "box.min");
        cfg.box.hi = vec3_of(j["box"]["max"], "box.max");
        if (!cfg.box.valid()) throw Error("config: box is degenerate");
    }
    if (!j.contains("levels") || !j["levels"].is_array() || j["levels"].empty())
        throw Error("config: \"levels\" must be a non-empty array");
    for (const auto& jl : j["levels"]) {
        check_keys(jl, {"k", "n", "gamma1", "gamma2"}, "levels[]");
        LevelSpec lv;
        lv.k = jl.contains("k") ? jl["k"].get<int>()
                                : static_cast<int>(cfg.levels.size()) + 1;
        if (!jl.contains("n")) throw Error("config: level without \"n\"");
        lv.n = jl["n"].get<int>();
        if (jl.contains("gamma1")) lv.gamma1 = jl["gamma1"].get<double>();
        if (jl.contains("gamma2")) lv.gamma2 = jl["gamma2"].get<double>();
        cfg.levels.push_back(lv);
    }
    if (j.contains("benchmark")) {
        const json& jb = j["benchmark"];
        check_keys(jb,
                   {"radius", "thickness", "length", "force", "youngs_modulus",
                    "poisson_ratio"},
                   "benchmark");
        if (jb.contains("radius")) cfg.benchmark.radius = jb["radius"].get<double>();
        if (jb.contains("thickness"))
            cfg.benchmark.thickness = jb["thickness"].get<double>();
        if (jb.contains("length")) cfg.benchmark.length = jb["length"].get<double>();
        if (jb.contains("force")) cfg.benchmark.force = jb["force"].get<double>();
        if (jb.contains("youngs_modulus"))
            cfg.benchmark.youngs = jb["youngs_modulus"].get<double>();
        if (jb.contains("poisson_ratio"))
            cfg.benchmark.poisson = jb["poisson_ratio"].get<double>();
    }
    cfg.reconstruct.surface_order = cfg.surface_order;
    if (j.contains("newton")) {
        const json& jn = j["newton"];
        check_keys(jn, {"tol_root", "max_iterations", "strategy"}, "newton");
        if (jn.contains("tol_root"))
            cfg.reconstruct.tol_root = jn["tol_root"].get<double>();
        if (jn.contains("max_iterations"))
            cfg.reconstruct.newton_cap = jn["max_iterations"].get<int>();
        if (jn.contains("strategy")) {
            const std::string s = jn["strategy"].get<std::string>();
            if (s == "chord-normal")
                cfg.reconstruct.strategy = FaceSearchStrategy::ChordNormal;
            else if (s == "gradient")
                cfg.reconstruct.strategy = FaceSearchStrategy::GradientProjection;
            else
                throw Error("config: newton.strategy must be \"chord-normal\" or "
                            "\"gradient\"");
        }
    }
    if (j.contains("curvature_tol"))
        cfg.reconstruct.curvature_tol = j["curvature_tol"].get<double>();
    if (j.contains("grid_points_per_edge"))
        cfg.reconstruct.grid_points_per_edge = j["grid_points_per_edge"].get<int>();
    if (j.contains("sweep")) {
        for (const auto& js : j["sweep"]) {
            check_keys(js, {"gamma1", "gamma2"}, "sweep[]");
            cfg.sweep.emplace_back(js.contains("gamma1") ? js["gamma1"].get<double>()
                                                         : 0.0,
                                   js.contains("gamma2") ? js["gamma2"].get<double>()
                                                         : 0.0);
        }
    }
    if (j.contains("optimize")) {
        const json& jo = j["optimize"];
        check_keys(jo, {"mode", "bounds", "start"}, "optimize");
        if (jo.contains("mode")) {
            const std::string m = jo["mode"].get<std::string>();
            if (m == "golden")
                cfg.opt_mode = OptMode::Golden1D;
            else if (m == "simplex")
                cfg.opt_mode = OptMode::Simplex2D;
            else
                throw Error("config: optimize.mode must be \"golden\" or \"simplex\"");
        }
        if (jo.contains("bounds")) {
            cfg.golden_lo = jo["bounds"][0].get<double>();
            cfg.golden_hi = jo["bounds"][1].get<double>();
        }
        if (jo.contains("start")) {
            cfg.simplex_start =
                Vec2(jo["start"][0].get<double>(), jo["start"][1].get<double>());
        }
    }
    if (j.contains("output")) {
        check_keys(j["output"], {"csv", "vtk"}, "output");
        if (j["output"].contains("csv"))
            cfg.csv_path = j["output"]["csv"].get<std::string>();
        if (j["output"].contains("vtk"))
            cfg.vtk_path = j["output"]["vtk"].get<std::string>();
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<unsigned>();
    return cfg;
}

StudyConfig StudyConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

LevelPipeline run_level(const Box& box, int n, int bulk_order,
                        const ReconstructConfig& rc, bool discrete_source,
                        const BenchmarkConfig& bench) {
    LevelPipeline lp;
    lp.mesh = std::make_unique<TetMesh>(build_background_mesh(box, n, bulk_order));
    lp.field = std::make_unique<AnalyticField>(
        AnalyticField::cylinder(Vec3::Zero(), Vec3(1, 0, 0), bench.radius));
    LevelSetProbe probe = discrete_source
                              ? (lp.nodal = std::make_unique<NodalField>(
                                     sample_nodal(*lp.field, *lp.mesh)),
                                 LevelSetProbe::discrete(*lp.mesh, *lp.nodal))
                              : LevelSetProbe::exact(*lp.mesh, *lp.field);
    lp.recon = reconstruct_surface(*lp.mesh, probe, rc);
    lp.active =
        std::make_unique<ActiveMesh>(active_submesh(*lp.mesh, lp.recon.cut_flags));
    lp.h = lp.active->mesh_parameter();
    return lp;
}

namespace {

struct SolveResult {
    DisplacementField field;
    double eps_sigma;
};

SolveResult solve_level(const LevelPipeline& lp, const Material& mat,
                        const StabilizationParams& stab,
                        const BenchmarkConfig& bench, MembraneSystem* keep_system) {
    MembraneSystem sys = assemble_system(*lp.active, lp.recon.surface, mat, stab,
                                         benchmark_load(bench));
    const std::vector<int> bc = benchmark_constraints(*lp.active, bench);
    SolveResult out{apply_constraints_and_solve(sys, *lp.active, bc), 0.0};
    out.eps_sigma = stress_error(out.field, lp.recon.surface, mat, bench);
    if (keep_system) *keep_system = std::move(sys);
    return out;
}

void export_vtk_level(const std::string& path, const LevelPipeline& lp,
                      const DisplacementField* field, const Material& mat,
                      const BenchmarkConfig& bench) {
    const MergedSurface merged = merge_surface_nodes(lp.recon.surface, *lp.mesh);
    std::vector<std::pair<std::string, std::vector<double>>> data;
    if (field) {
        std::vector<double> umag(merged.points.size());
        std::vector<double> serr(merged.points.size());
        for (std::size_t p = 0; p < merged.points.size(); ++p) {
            const auto [ei, ni] = merged.representative[p];
            const SurfaceElement& se = lp.recon.surface.elements[ei];
            umag[p] =
                displacement_at(*field, se.parent, se.parent_ref[ni]).norm();
            const Vec3 rn = surface_reference(se.kind).nodes[ni];
            const Mat3 sigma = evaluate_stress(*field, se, mat,
                                               Vec2(rn.x(), rn.y()));
            const double sigma_a = symmetric_eigenvalues(sigma).norm();
            const double sigma_e =
                exact_benchmark(bench, merged.points[p]).sigma_exact;
            serr[p] = std::abs(sigma_e - sigma_a);
        }
        data.emplace_back("displacement_magnitude", std::move(umag));
        data.emplace_back("stress_error", std::move(serr));
    }
    write_vtk_surface(path, merged, data);
}

}  // namespace

StudyReport run_study(const StudyConfig& cfg, const std::string& out_dir,
                      bool verbose) {
    StudyReport rep;
    rep.study = cfg.study;
    const Material mat =
        lame_plane_stress(cfg.benchmark.youngs, cfg.benchmark.poisson);

    std::vector<LevelPipeline> pipelines;
    for (const LevelSpec& lv : cfg.levels) {
        LevelPipeline lp = run_level(cfg.box, lv.n, cfg.bulk_order, cfg.reconstruct,
                                     cfg.discrete_source, cfg.benchmark);
        LevelResult row;
        row.k = lv.k;
        row.n = lv.n;
        row.active_nodes = lp.active->nodes.size();
        row.h = lp.h;
        row.gamma1 = lv.gamma1;
        row.gamma2 = lv.gamma2;
        if (verbose)
            std::cerr << "level k=" << lv.k << " n=" << lv.n << " N="
                      << row.active_nodes << " h=" << fmt(row.h) << " surface elems="
                      << lp.recon.surface.elements.size() << "\n";
        rep.rows.push_back(row);
        pipelines.push_back(std::move(lp));
    }

    const DisplacementField* vtk_field = nullptr;
    DisplacementField last_field;

    switch (cfg.study) {
        case StudyKind::Reconstruct: {
            for (std::size_t i = 0; i < pipelines.size(); ++i) {
                const GeometryErrors ge = geometric_and_normal_error(
                    pipelines[i].recon.surface, *pipelines[i].field);
                rep.rows[i].eps_geom = ge.geom;
                rep.rows[i].eps_n = ge.normal;
            }
            break;
        }
        case StudyKind::Solve:
        case StudyKind::Convergence: {
            for (std::size_t i = 0; i < pipelines.size(); ++i) {
                const StabilizationParams stab{cfg.levels[i].gamma1,
                                               cfg.levels[i].gamma2};
                SolveResult sr =
                    solve_level(pipelines[i], mat, stab, cfg.benchmark, nullptr);
                rep.rows[i].eps_sigma = sr.eps_sigma;
                last_field = std::move(sr.field);
                vtk_field = &last_field;
            }
            break;
        }
        case StudyKind::GammaSweep: {
            if (cfg.sweep.empty()) throw Error("gamma-sweep: empty sweep list");
            const LevelPipeline& lp = pipelines.front();
            MembraneSystem sys =
                assemble_system(*lp.active, lp.recon.surface, mat,
                                StabilizationParams{}, benchmark_load(cfg.benchmark));
            const std::vector<int> bc = benchmark_constraints(*lp.active,
                                                              cfg.benchmark);
            for (const auto& [g1, g2] : cfg.sweep) {
                sys.stab = StabilizationParams{g1, g2};
                const DisplacementField u =
                    apply_constraints_and_solve(sys, *lp.active, bc);
                const double eps =
                    stress_error(u, lp.recon.surface, mat, cfg.benchmark);
                rep.sweep.push_back({g1, g2, eps});
                if (verbose)
                    std::cerr << "gamma=(" << fmt(g1) << "," << fmt(g2)
                              << ") eps=" << fmt(eps) << "\n";
            }
            break;
        }
        case StudyKind::GammaOptimize: {
            for (std::size_t i = 0; i < pipelines.size(); ++i) {
                const LevelPipeline& lp = pipelines[i];
                MembraneSystem sys = assemble_system(*lp.active, lp.recon.surface,
                                                     mat, StabilizationParams{},
                                                     benchmark_load(cfg.benchmark));
                const std::vector<int> bc =
                    benchmark_constraints(*lp.active, cfg.benchmark);
                auto eps_of = [&](double g1, double g2) {
                    sys.stab = StabilizationParams{g1, g2};
                    const DisplacementField u =
                        apply_constraints_and_solve(sys, *lp.active, bc);
                    return stress_error(u, lp.recon.surface, mat, cfg.benchmark);
                };
                if (cfg.opt_mode == StudyConfig::OptMode::Golden1D) {
                    const GoldenResult gr = golden_section(
                        [&](double g) { return eps_of(g, 0.0); }, cfg.golden_lo,
                        cfg.golden_hi);
                    rep.rows[i].gamma1 = gr.x;
                    rep.rows[i].gamma2 = 0.0;
                    rep.rows[i].eps_sigma = gr.value;
                    rep.rows[i].evaluations = gr.evaluations;
                } else {
                    const SimplexResult sr = nelder_mead2(
                        [&](const Vec2& g) { return eps_of(g.x(), g.y()); },
                        cfg.simplex_start);
                    rep.rows[i].gamma1 = sr.x.x();
                    rep.rows[i].gamma2 = sr.x.y();
                    rep.rows[i].eps_sigma = sr.value;
                    rep.rows[i].evaluations = sr.evaluations;
                }
            }
            break;
        }
    }

    if (rep.rows.size() >= 2) {
        std::vector<double> hs;
        for (const auto& r : rep.rows) hs.push_back(r.h);
        auto maybe_rates = [&](auto getter, std::vector<double>& out) {
            std::vector<double> es;
            for (const auto& r : rep.rows) es.push_back(getter(r));
            bool ok = true;
            for (double e : es)
                if (!(e > 0.0) || std::isnan(e)) ok = false;
            if (ok) out = convergence_rates(es, hs);
        };
        maybe_rates([](const LevelResult& r) { return r.eps_sigma; }, rep.rate_sigma);
        maybe_rates([](const LevelResult& r) { return r.eps_geom; }, rep.rate_geom);
        maybe_rates([](const LevelResult& r) { return r.eps_n; }, rep.rate_n);
    }

    namespace fs = std::filesystem;
    if (!cfg.csv_path.empty()) {
        const fs::path path = fs::path(out_dir) / cfg.csv_path;
        fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
        std::ofstream out(path);
        if (!out) throw Error("cannot write CSV: " + path.string());
        out << report_csv(rep);
    }
    if (!cfg.vtk_path.empty() && !pipelines.empty()) {
        const fs::path path = fs::path(out_dir) / cfg.vtk_path;
        fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
        export_vtk_level(path.string(), pipelines.back(), vtk_field, mat,
                         cfg.benchmark);
    }
    return rep;
}

std::string report_csv(const StudyReport& rep) {
    std::ostringstream out;
    auto rate_at = [](const std::vector<double>& rates, std::size_t i) {
        return i < rates.size() ? rates[i] : std::numeric_limits<double>::quiet_NaN();
    };
    switch (rep.study) {
        case StudyKind::Reconstruct:
            out << "k,h,N,eps_geom,rate_geom,eps_n,rate_n\n";
            for (std::size_t i = 0; i < rep.rows.size(); ++i) {
                const auto& r = rep.rows[i];
                out << r.k << ',' << fmt(r.h) << ',' << r.active_nodes << ','
                    << fmt(r.eps_geom) << ',' << fmt_rate(rate_at(rep.rate_geom, i))
                    << ',' << fmt(r.eps_n) << ','
                    << fmt_rate(rate_at(rep.rate_n, i)) << '\n';
            }
            break;
        case StudyKind::Solve:
        case StudyKind::Convergence:
            out << "k,h,N,eps_sigma,rate,gamma1,gamma2\n";
            for (std::size_t i = 0; i < rep.rows.size(); ++i) {
                const auto& r = rep.rows[i];
                out << r.k << ',' << fmt(r.h) << ',' << r.active_nodes << ','
                    << fmt(r.eps_sigma) << ','
                    << fmt_rate(rate_at(rep.rate_sigma, i)) << ',' << fmt(r.gamma1)
                    << ',' << fmt(r.gamma2) << '\n';
            }
            break;
        case StudyKind::GammaSweep:
            out << "gamma1,gamma2,eps_sigma\n";
            for (const auto& s : rep.sweep)
                out << fmt(s[0]) << ',' << fmt(s[1]) << ',' << fmt(s[2]) << '\n';
            break;
        case StudyKind::GammaOptimize:
            out << "k,h,N,gamma1_opt,gamma2_opt,eps_sigma,evaluations\n";
            for (const auto& r : rep.rows)
                out << r.k << ',' << fmt(r.h) << ',' << r.active_nodes << ','
                    << fmt(r.gamma1) << ',' << fmt(r.gamma2) << ','
                    << fmt(r.eps_sigma) << ',' << r.evaluations << '\n';
            break;
    }
    return out.str();
}

}  // namespace tracefem
