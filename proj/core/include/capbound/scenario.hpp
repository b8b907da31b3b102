#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "capbound/constraints.hpp"
#include "capbound/oracle.hpp"
#include "capbound/volume.hpp"

namespace capbound::cli {

// Numerical knobs, all overridable from the scenario's "numerics" block.
struct NumericsConfig {
    numerics::QuadratureSpec quad;  // rel_tol 1e-9, abs_tol 1e-12, 2000 subdivisions
    double opt_tol = 1e-10;
    int nystrom_n = 400;
    int threads = 0;  // 0: hardware, capped by CAPBOUND_THREADS
};

struct BoundRequest {
    enum class Kind { epi, epi_uce, direct, tilted, jensen, volume, kernel_psi, validate };
    Kind kind = Kind::epi;
    double alpha = 0;                                 // tilted / jensen
    double s2 = 0;                                    // jensen; 0 means sigma^2
    std::string kernel_method = "nystrom";            // kernel-psi
    std::optional<std::vector<double>> theta;         // kernel-psi dual values
    oracle::McConfig mc;                              // validate
};

struct SweepSpec {
    std::string variable;
    std::vector<double> grid;
};

struct Scenario {
    constraints::ChannelParams channel;
    std::vector<constraints::CostTerm> terms;
    std::optional<constraints::FinitePointSet> alphabet;
    BoundRequest bound;
    std::optional<SweepSpec> sweep;
    NumericsConfig numerics;

    constraints::ConstraintSet make_constraints() const;

    // Throws ScenarioError with the offending field path in the message.
    static Scenario from_json_text(const std::string& text);
    static Scenario from_file(const std::string& path);
};

struct RunReport {
    std::string bound_kind;
    double bound_value_nats = 0;
    double v_nats = 0;
    std::vector<double> theta_star;        // volume-side dual
    std::vector<double> theta_star_bound;  // second dual, when the bound has one
    std::vector<bool> active;
    double std_err = 0;  // oracle runs only
    double wall_time_s = 0;
    std::string diagnostics_json;  // serialized diagnostics object

    std::string to_json(bool with_wall_time = true) const;
};

// Executes the scenario's bound once (ignoring any sweep block).
RunReport run(const Scenario& sc);

// One run per grid point, computed in parallel, returned in grid order.
std::vector<RunReport> run_sweep(const Scenario& sc);

// CSV contract: header "sweep_var,value,bound_nats,v_nats,theta_star_1,...",
// rows in grid order, 10 significant digits, \n line endings.
void write_csv(std::ostream& os, const Scenario& sc, const std::vector<RunReport>& rows);

// Copy of the scenario with the named sweep variable set to `value`.
// Throws ScenarioError when the variable does not name a parameter present
// in the scenario.
Scenario with_sweep_value(const Scenario& sc, const std::string& variable, double value);

// Process exit code for an error escaping a run: 1 schema/usage, 2 infeasible
// or contradictory constraints, 3 numerical failure.
int exit_code_for(const std::exception& e);

}  // namespace capbound::cli
