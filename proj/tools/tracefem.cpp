// Batch driver for the membrane studies: surface reconstruction, solves,
// convergence ladders and stabilization-parameter sweeps, configured
// through a JSON file and exported as CSV tables / legacy VTK surfaces.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include <json.hpp>

#include "tracefem/study.hpp"

namespace {

struct CommonArgs {
    std::string config;
    std::string out_dir = ".";
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "JSON study configuration")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_flag("--verbose", args.verbose, "print per-level progress");
}

int run(const CommonArgs& args,
        const std::vector<tracefem::StudyKind>& accepted) {
    using nlohmann::json;
    std::string out_dir = args.out_dir;
    if (const char* env = std::getenv("TRACEFEM_OUT")) out_dir = env;

    try {
        const tracefem::StudyConfig cfg =
            tracefem::StudyConfig::from_json_file(args.config);
        bool ok = false;
        for (auto k : accepted)
            if (cfg.study == k) ok = true;
        if (!ok) throw tracefem::Error("config study kind does not match subcommand");

        const tracefem::StudyReport rep =
            tracefem::run_study(cfg, out_dir, args.verbose);
        std::cout << tracefem::report_csv(rep);
        return 0;
    } catch (const tracefem::InvalidTopology& err) {
        json report{{"error", "invalid-topology"},
                    {"message", err.what()},
                    {"elements", err.elements}};
        std::cerr << report.dump() << "\n";
        return 2;
    } catch (const tracefem::RootNotFound& err) {
        json report{{"error", "root-not-found"}, {"message", err.what()}};
        std::cerr << report.dump() << "\n";
        return 3;
    } catch (const std::exception& err) {
        json report{{"error", "failure"}, {"message", err.what()}};
        std::cerr << report.dump() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace finite element toolkit for membranes on implicit surfaces"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* reconstruct =
        app.add_subcommand("reconstruct", "surface reconstruction study");
    CLI::App* solve = app.add_subcommand("solve", "single membrane solve");
    CLI::App* convergence =
        app.add_subcommand("convergence", "membrane convergence ladder");
    CLI::App* gamma =
        app.add_subcommand("gamma", "stabilization parameter sweep or optimization");
    for (CLI::App* cmd : {reconstruct, solve, convergence, gamma})
        add_common(cmd, args);

    CLI11_PARSE(app, argc, argv);

    using tracefem::StudyKind;
    if (reconstruct->parsed()) return run(args, {StudyKind::Reconstruct});
    if (solve->parsed()) return run(args, {StudyKind::Solve});
    if (convergence->parsed()) return run(args, {StudyKind::Convergence});
    return run(args, {StudyKind::GammaSweep, StudyKind::GammaOptimize});
}
