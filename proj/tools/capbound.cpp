// capbound: capacity lower bounds for the Gaussian channel under pointwise
// additive input constraints. Scenario files are JSON; see README.md for the
// schema and the exit-code contract (0 ok, 1 usage/schema, 2 infeasible
// constraints, 3 numerical failure).

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "capbound/scenario.hpp"

namespace {

int run_one(const std::string& path, bool quiet) {
    using namespace capbound;
    try {
        cli::Scenario sc = cli::Scenario::from_file(path);
        cli::RunReport r = cli::run(sc);
        if (!quiet) std::cout << r.to_json() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return capbound::cli::exit_code_for(e);
    }
}

int run_sweep(const std::string& path, const std::string& out_csv) {
    using namespace capbound;
    try {
        cli::Scenario sc = cli::Scenario::from_file(path);
        std::vector<cli::RunReport> rows = cli::run_sweep(sc);
        if (out_csv.empty() || out_csv == "-") {
            cli::write_csv(std::cout, sc, rows);
        } else {
            std::ofstream os(out_csv, std::ios::binary);
            if (!os) {
                std::cerr << "error: cannot open " << out_csv << " for writing\n";
                return 1;
            }
            cli::write_csv(os, sc, rows);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return capbound::cli::exit_code_for(e);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capacity lower bounds for constrained Gaussian channels"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_csv;
    bool quiet = false;

    CLI::App* cmd_run = app.add_subcommand("run", "run one scenario, print a JSON report");
    cmd_run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    cmd_run->add_flag("-q,--quiet", quiet, "suppress the report (exit code only)");

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "run a sweep, write CSV");
    cmd_sweep->add_option("scenario", scenario_path, "scenario JSON file with a sweep block")
        ->required();
    cmd_sweep->add_option("-o,--output", out_csv, "output CSV path (default stdout)");

    CLI::App* cmd_validate =
        app.add_subcommand("validate", "Monte-Carlo volume check of a constraint body");
    cmd_validate->add_option("scenario", scenario_path, "scenario JSON file (bound: validate)")
        ->required();

    CLI::App* cmd_kernel =
        app.add_subcommand("kernel-psi", "spectral-radius estimates for sliding-window kernels");
    cmd_kernel->add_option("scenario", scenario_path, "scenario JSON file (bound: kernel-psi)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (cmd_run->parsed()) return run_one(scenario_path, quiet);
    if (cmd_sweep->parsed()) return run_sweep(scenario_path, out_csv);
    if (cmd_validate->parsed() || cmd_kernel->parsed()) return run_one(scenario_path, false);
    return 1;
}
