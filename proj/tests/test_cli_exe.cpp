// Drives the installed CLI binary end to end: exit codes, report shape, CSV
// output. The binary path and the committed scenario directory come in as
// compile definitions.
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct CmdResult {
    int exit_code;
    std::string out;
};

CmdResult run_cmd(const std::string& cmd) {
    const std::string out_path = std::string(CAPBOUND_TEST_TMP_DIR) + "/cli_out.txt";
    const int rc = std::system((cmd + " > " + out_path + " 2>/dev/null").c_str());
    std::ifstream in(out_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return {WEXITSTATUS(rc), buf.str()};
}

std::string write_scenario(const char* name, const std::string& text) {
    const std::string path = std::string(CAPBOUND_TEST_TMP_DIR) + "/" + name;
    std::ofstream(path) << text;
    return path;
}

const std::string bin = CAPBOUND_BIN;

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("run: committed scenario prints a JSON report and exits 0") {
    const std::string path = std::string(CAPBOUND_SCENARIO_DIR) + "/smith_10db_epi.json";
    auto r = run_cmd(bin + " run " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"bound_value_nats\"") != std::string::npos);
    CHECK(r.out.find("0.8688") != std::string::npos);
}

TEST_CASE("run: repeated invocations agree except for wall time") {
    const std::string path = std::string(CAPBOUND_SCENARIO_DIR) + "/smith_10db_epi.json";
    auto a = run_cmd(bin + " run " + path);
    auto b = run_cmd(bin + " run " + path);
    auto strip = [](std::string s) {
        const auto p = s.find("\"wall_time_s\"");
        if (p != std::string::npos) s.erase(p, s.find('\n', p) - p);
        return s;
    };
    CHECK(strip(a.out) == strip(b.out));
}

TEST_CASE("run: infeasible constraints exit 2") {
    const std::string path = write_scenario("neg_power.json",
                                            R"({"noise_var": 1.0,
        "terms": [{"kind": "power", "limit": -1.0, "mode": "equality"}],
        "bound": {"type": "volume"}})");
    CHECK(run_cmd(bin + " run " + path).exit_code == 2);
}

TEST_CASE("run: malformed scenarios exit 1") {
    const std::string path = write_scenario("broken.json", "{ not json");
    CHECK(run_cmd(bin + " run " + path).exit_code == 1);
    CHECK(run_cmd(bin + " run /nonexistent/file.json").exit_code == 1);
}

TEST_CASE("run: nested wells are legal (exit 0) and shrink the support") {
    const std::string path = write_scenario("nested_wells.json",
                                            R"({"noise_var": 1.0,
        "terms": [{"kind": "peak_well", "params": {"amplitude": 3.0}},
                  {"kind": "peak_well", "params": {"amplitude": 1.0}}],
        "bound": {"type": "volume"}})");
    auto r = run_cmd(bin + " run " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("0.693147") != std::string::npos);  // log 2
}

TEST_CASE("sweep: writes the CSV contract to a file") {
    const std::string out_csv = std::string(CAPBOUND_TEST_TMP_DIR) + "/sweep.csv";
    const std::string path = std::string(CAPBOUND_SCENARIO_DIR) + "/awgn_reference_sweep.json";
    auto r = run_cmd(bin + " sweep " + path + " -o " + out_csv);
    CHECK(r.exit_code == 0);
    std::ifstream in(out_csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "sweep_var,value,bound_nats,v_nats,theta_star_1");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 16);
}

TEST_CASE("validate subcommand runs the oracle") {
    const std::string path = write_scenario("validate_small.json",
                                            R"({"noise_var": 1.0,
        "terms": [{"kind": "power", "limit": 10.0},
                  {"kind": "peak_well", "params": {"amplitude": 5.0}}],
        "bound": {"type": "validate", "n": 8, "samples": 50000, "seed": 3}})");
    auto r = run_cmd(bin + " validate " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"std_err\"") != std::string::npos);
}

TEST_CASE("CAPBOUND_THREADS changes the worker budget, not the numbers") {
    const std::string path = write_scenario("validate_env.json",
                                            R"({"noise_var": 1.0,
        "terms": [{"kind": "power", "limit": 10.0},
                  {"kind": "peak_well", "params": {"amplitude": 5.0}}],
        "bound": {"type": "validate", "n": 8, "samples": 200000, "seed": 12}})");
    auto strip = [](std::string s) {
        const auto p = s.find("\"wall_time_s\"");
        if (p != std::string::npos) s.erase(p, s.find('\n', p) - p);
        return s;
    };
    auto one = run_cmd("CAPBOUND_THREADS=1 " + bin + " validate " + path);
    auto two = run_cmd("CAPBOUND_THREADS=2 " + bin + " validate " + path);
    CHECK(one.exit_code == 0);
    CHECK(two.exit_code == 0);
    CHECK(strip(one.out) == strip(two.out));
}

TEST_CASE("kernel-psi subcommand") {
    const std::string path = std::string(CAPBOUND_SCENARIO_DIR) + "/corr_kernel_psi.json";
    auto r = run_cmd(bin + " kernel-psi " + path);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"bound\": \"kernel-psi\"") != std::string::npos);
}

TEST_SUITE_END();
