// ilc: batch front end for design, checks, simulation and plotting.

#include "ilc/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>

#include <cstdlib>

namespace {

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("ilc");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    const char* env = std::getenv("ILC_LOG");
    if (env == nullptr || *env == '\0') return;
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ILC_LOG='{}' not recognized (use error, warn, info or debug)", v);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace ilc;
    namespace fs = std::filesystem;
    configure_logging();

    CLI::App app{"Lyapunov feedback control with an implicit perturbation for degenerate quantum systems"};
    app.require_subcommand(1);

    std::vector<std::string> config_paths;
    std::string out_dir = "out";
    bool plot = false, force = false, sweep = false;
    std::string csv_path, kind = "populations";

    auto* check = app.add_subcommand("check", "evaluate convergence conditions and the theta slope bound");
    check->add_option("--config", config_paths, "run configuration (JSON)")->required()->expected(1);
    auto* check_out = check->add_option("--out", out_dir, "directory for check_report.json");

    auto* design = app.add_subcommand("design", "design eta and the P spectrum, write a completed config");
    design->add_option("--config", config_paths, "run configuration (JSON)")->required()->expected(1);
    design->add_option("--out", out_dir, "output directory")->capture_default_str();

    auto* sim = app.add_subcommand("simulate", "run the closed loop and write trajectory.csv and report.json");
    sim->add_option("--config", config_paths, "run configuration(s) (JSON)")->required();
    sim->add_option("--out", out_dir, "output directory")->capture_default_str();
    sim->add_flag("--plot", plot, "also write SVG plots");
    sim->add_flag("--force", force, "simulate even if convergence conditions fail");
    sim->add_flag("--sweep", sweep, "run several configs concurrently, one subdirectory each");

    auto* plt = app.add_subcommand("plot", "render an SVG chart from a trajectory CSV");
    plt->add_option("--csv", csv_path, "trajectory CSV")->required();
    plt->add_option("--kind", kind, "populations, controls or lyapunov")->capture_default_str();
    auto* plot_out = plt->add_option("--out", out_dir, "output directory (default: the CSV's directory)");

    auto* repro = app.add_subcommand("repro-paper", "run the embedded three-level example and its thresholds");
    repro->add_option("--out", out_dir, "output directory")->capture_default_str();
    repro->add_flag("--plot", plot, "also write SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kUsageError;
    }

    auto& out = std::cout;
    auto& err = std::cerr;
    return cli::guarded(err, [&]() -> int {
        using config::json;
        if (check->parsed()) {
            json report;
            const int code = cli::cmd_check(config::load_config(config_paths.at(0)), report, out);
            if (check_out->count() > 0) io::write_file_atomic(fs::path(out_dir) / "check_report.json", report.dump(2) + "\n");
            return code;
        }
        if (design->parsed()) {
            json report, completed;
            const int code = cli::cmd_design(config::load_config(config_paths.at(0)), report, completed, out);
            io::write_file_atomic(fs::path(out_dir) / "design_report.json", report.dump(2) + "\n");
            if (code == cli::kPass) {
                io::write_file_atomic(fs::path(out_dir) / "completed_config.json", completed.dump(2) + "\n");
                out << "completed config: " << (fs::path(out_dir) / "completed_config.json").string() << "\n";
            }
            return code;
        }
        if (sim->parsed()) {
            const cli::SimulateOptions opt{out_dir, plot, force};
            if (sweep) {
                std::vector<fs::path> paths(config_paths.begin(), config_paths.end());
                return cli::cmd_simulate_sweep(paths, opt, out, err);
            }
            if (config_paths.size() != 1) {
                err << "several --config values need --sweep\n";
                return cli::kUsageError;
            }
            json report;
            return cli::cmd_simulate(config::load_config(config_paths[0]), opt, report, out);
        }
        if (plt->parsed()) {
            const fs::path dir = plot_out->count() > 0 ? fs::path(out_dir) : fs::path(csv_path).parent_path();
            return cli::cmd_plot(csv_path, kind, dir, out, err);
        }
        if (repro->parsed()) return cli::cmd_repro(out_dir, plot, out);
        return cli::kUsageError;
    });
}
