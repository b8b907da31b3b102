#include "capbound/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "capbound/direct_mi.hpp"
#include "capbound/epi.hpp"
#include "capbound/parallel.hpp"

namespace capbound::cli {

using constraints::ConstraintSet;
using constraints::CostKind;
using constraints::CostTerm;
using constraints::Mode;
using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ScenarioError(path + ": " + what);
}

double need_number(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) fail(path + "." + key, "missing required number");
    if (!j[key].is_number()) fail(path + "." + key, "expected a number");
    return j[key].get<double>();
}

double opt_number(const json& j, const std::string& path, const char* key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (!j[key].is_number()) fail(path + "." + key, "expected a number");
    return j[key].get<double>();
}

CostTerm parse_term(const json& j, const std::string& path, double noise_var) {
    if (!j.is_object()) fail(path, "expected an object");
    if (!j.contains("kind") || !j["kind"].is_string()) fail(path + ".kind", "missing kind string");
    const std::string kind = j["kind"].get<std::string>();
    Mode mode = Mode::inequality;
    if (j.contains("mode")) {
        const std::string m = j["mode"].get<std::string>();
        if (m == "inequality") mode = Mode::inequality;
        else if (m == "equality") mode = Mode::equality;
        else fail(path + ".mode", "expected \"inequality\" or \"equality\"");
    }
    const json params = j.contains("params") ? j["params"] : json::object();
    auto limit = [&](double dflt = std::nan("")) {
        if (j.contains("snr_db")) {
            if (kind != "power") fail(path + ".snr_db", "snr_db applies to power terms only");
            return noise_var * std::pow(10.0, j["snr_db"].get<double>() / 10.0);
        }
        if (!j.contains("limit")) {
            if (std::isnan(dflt)) fail(path + ".limit", "missing required number");
            return dflt;
        }
        return need_number(j, path, "limit");
    };

    if (kind == "power") return CostTerm::power(limit(), mode);
    if (kind == "abs") return CostTerm::absolute(limit(), mode);
    if (kind == "peak_well") {
        const double a = need_number(params, path + ".params", "amplitude");
        const double lim = limit(0.0);
        if (lim != 0.0) fail(path + ".limit", "peak_well limit must be 0");
        return CostTerm::peak_well(a);
    }
    if (kind == "moment")
        return CostTerm::moment(need_number(params, path + ".params", "exponent"), limit(), mode);
    if (kind == "correlation") {
        if (!params.contains("lag") || !params["lag"].is_number_integer())
            fail(path + ".params.lag", "missing integer lag");
        return CostTerm::correlation(params["lag"].get<int>(), limit(), mode);
    }
    if (kind == "window_avg_power") {
        if (!params.contains("window") || !params["window"].is_number_integer())
            fail(path + ".params.window", "missing integer window");
        return CostTerm::window_avg_power(params["window"].get<int>(), limit(), mode);
    }
    if (kind == "filtered_peak") {
        if (!params.contains("taps") || !params["taps"].is_array())
            fail(path + ".params.taps", "missing tap array");
        std::vector<double> taps;
        for (const auto& t : params["taps"]) taps.push_back(t.get<double>());
        const double a = need_number(params, path + ".params", "amplitude");
        const double lim = limit(0.0);
        if (lim != 0.0) fail(path + ".limit", "filtered_peak limit must be 0");
        return CostTerm::filtered_peak(std::move(taps), a);
    }
    fail(path + ".kind", "unknown cost kind \"" + kind + "\"");
}

BoundRequest parse_bound(const json& j, const std::string& path) {
    BoundRequest b;
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        fail(path, "expected an object with a \"type\" string");
    const std::string type = j["type"].get<std::string>();
    if (type == "epi") b.kind = BoundRequest::Kind::epi;
    else if (type == "epi-uce") b.kind = BoundRequest::Kind::epi_uce;
    else if (type == "direct") b.kind = BoundRequest::Kind::direct;
    else if (type == "tilted") {
        b.kind = BoundRequest::Kind::tilted;
        b.alpha = opt_number(j, path, "alpha", 0.0);
    } else if (type == "jensen") {
        b.kind = BoundRequest::Kind::jensen;
        b.s2 = opt_number(j, path, "s2", 0.0);
        b.alpha = opt_number(j, path, "alpha", 1.0);
    } else if (type == "volume") {
        b.kind = BoundRequest::Kind::volume;
    } else if (type == "kernel-psi") {
        b.kind = BoundRequest::Kind::kernel_psi;
        if (j.contains("method")) b.kernel_method = j["method"].get<std::string>();
        if (j.contains("theta")) {
            std::vector<double> th;
            for (const auto& t : j["theta"]) th.push_back(t.get<double>());
            b.theta = std::move(th);
        }
    } else if (type == "validate") {
        b.kind = BoundRequest::Kind::validate;
        b.mc.n = static_cast<int>(opt_number(j, path, "n", 8));
        b.mc.samples = static_cast<std::int64_t>(opt_number(j, path, "samples", 1e6));
        b.mc.seed = static_cast<std::uint64_t>(opt_number(j, path, "seed", 1));
        b.mc.ball_radius = opt_number(j, path, "radius", 0.0);
        if (j.contains("bounding")) {
            const std::string bx = j["bounding"].get<std::string>();
            if (bx == "well-box") b.mc.bounding = oracle::McConfig::Bounding::well_box;
            else if (bx == "ball-box") b.mc.bounding = oracle::McConfig::Bounding::ball_box;
            else fail(path + ".bounding", "expected \"well-box\" or \"ball-box\"");
        }
    } else {
        fail(path + ".type", "unknown bound type \"" + type + "\"");
    }
    return b;
}

}  // namespace

ConstraintSet Scenario::make_constraints() const {
    if (alphabet) return ConstraintSet(terms, *alphabet);
    return ConstraintSet(terms);
}

Scenario Scenario::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ScenarioError(std::string("$: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) fail("$", "top level must be an object");

    Scenario sc;
    sc.channel.noise_var = need_number(j, "$", "noise_var");
    if (!(sc.channel.noise_var > 0)) fail("$.noise_var", "must be positive");

    if (j.contains("support")) {
        const json& s = j["support"];
        if (!s.is_object() || !s.contains("type")) fail("$.support", "expected {type: ...}");
        const std::string type = s["type"].get<std::string>();
        if (type == "points") {
            if (!s.contains("values") || !s["values"].is_array() || s["values"].empty())
                fail("$.support.values", "need a nonempty array of points");
            constraints::FinitePointSet fps;
            for (const auto& v : s["values"]) fps.points.push_back(v.get<double>());
            sc.alphabet = std::move(fps);
        } else if (type != "real") {
            fail("$.support.type", "expected \"real\" or \"points\"");
        }
    }

    if (!j.contains("terms") || !j["terms"].is_array() || j["terms"].empty())
        fail("$.terms", "need a nonempty array of cost terms");
    for (std::size_t i = 0; i < j["terms"].size(); ++i)
        sc.terms.push_back(
            parse_term(j["terms"][i], "$.terms[" + std::to_string(i) + "]", sc.channel.noise_var));

    if (!j.contains("bound")) fail("$.bound", "missing bound request");
    sc.bound = parse_bound(j["bound"], "$.bound");

    if (j.contains("numerics")) {
        const json& n = j["numerics"];
        sc.numerics.quad.rel_tol = opt_number(n, "$.numerics", "rel_tol", sc.numerics.quad.rel_tol);
        sc.numerics.quad.abs_tol = opt_number(n, "$.numerics", "abs_tol", sc.numerics.quad.abs_tol);
        sc.numerics.quad.max_subdivisions = static_cast<int>(opt_number(
            n, "$.numerics", "max_subdivisions", sc.numerics.quad.max_subdivisions));
        sc.numerics.opt_tol = opt_number(n, "$.numerics", "opt_tol", sc.numerics.opt_tol);
        sc.numerics.nystrom_n =
            static_cast<int>(opt_number(n, "$.numerics", "nystrom_n", sc.numerics.nystrom_n));
        sc.numerics.threads =
            static_cast<int>(opt_number(n, "$.numerics", "threads", sc.numerics.threads));
        if (!(sc.numerics.quad.rel_tol > 0) || !(sc.numerics.quad.abs_tol > 0))
            fail("$.numerics", "tolerances must be positive");
    }

    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        SweepSpec sweep;
        if (!s.is_object() || !s.contains("variable") || !s["variable"].is_string())
            fail("$.sweep.variable", "missing sweep variable name");
        sweep.variable = s["variable"].get<std::string>();
        if (s.contains("grid")) {
            if (!s["grid"].is_array() || s["grid"].empty())
                fail("$.sweep.grid", "need a nonempty value list");
            for (const auto& v : s["grid"]) sweep.grid.push_back(v.get<double>());
        } else if (s.contains("from") && s.contains("to") && s.contains("count")) {
            const double from = s["from"].get<double>();
            const double to = s["to"].get<double>();
            const int count = s["count"].get<int>();
            if (count < 2) fail("$.sweep.count", "need count >= 2");
            for (int i = 0; i < count; ++i)
                sweep.grid.push_back(from + (to - from) * i / (count - 1.0));
        } else {
            fail("$.sweep", "need either \"grid\" or \"from\"/\"to\"/\"count\"");
        }
        // The variable must name a parameter actually present.
        (void)with_sweep_value(sc, sweep.variable, sweep.grid.front());
        sc.sweep = std::move(sweep);
    }
    return sc;
}

Scenario Scenario::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("$: cannot open scenario file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

Scenario with_sweep_value(const Scenario& sc, const std::string& variable, double value) {
    Scenario out = sc;
    auto first_of = [&](std::initializer_list<CostKind> kinds) -> CostTerm* {
        for (auto& t : out.terms)
            for (CostKind k : kinds)
                if (t.kind == k) return &t;
        return nullptr;
    };
    if (variable == "P") {
        CostTerm* t = first_of({CostKind::power, CostKind::window_avg_power});
        if (!t) throw ScenarioError("$.sweep.variable: no power term to sweep");
        t->limit = value;
    } else if (variable == "snr_db") {
        CostTerm* t = first_of({CostKind::power, CostKind::window_avg_power});
        if (!t) throw ScenarioError("$.sweep.variable: no power term to sweep");
        t->limit = out.channel.noise_var * std::pow(10.0, value / 10.0);
    } else if (variable == "A") {
        CostTerm* t = first_of({CostKind::peak_well});
        if (!t) throw ScenarioError("$.sweep.variable: no peak well to sweep");
        t->amplitude = value;
    } else if (variable == "R") {
        CostTerm* t = first_of({CostKind::correlation});
        if (!t) throw ScenarioError("$.sweep.variable: no correlation term to sweep");
        t->limit = value;
    } else if (variable == "noise_var") {
        if (!(value > 0)) throw ScenarioError("$.sweep: noise_var must stay positive");
        out.channel.noise_var = value;
    } else if (variable == "alpha") {
        if (sc.bound.kind != BoundRequest::Kind::tilted &&
            sc.bound.kind != BoundRequest::Kind::jensen)
            throw ScenarioError("$.sweep.variable: alpha applies to tilted/jensen bounds");
        out.bound.alpha = value;
    } else if (variable == "s2") {
        if (sc.bound.kind != BoundRequest::Kind::jensen)
            throw ScenarioError("$.sweep.variable: s2 applies to the jensen bound");
        out.bound.s2 = value;
    } else if (variable.rfind("limit:", 0) == 0) {
        const std::size_t idx = std::stoul(variable.substr(6));
        if (idx >= out.terms.size())
            throw ScenarioError("$.sweep.variable: term index out of range");
        out.terms[idx].limit = value;
    } else {
        throw ScenarioError("$.sweep.variable: unknown variable \"" + variable + "\"");
    }
    return out;
}

namespace {

json dual_to_json(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

RunReport run_impl(const Scenario& sc) {
    const auto t0 = std::chrono::steady_clock::now();
    const double sigma2 = sc.channel.noise_var;
    ConstraintSet cs = sc.make_constraints();

    volume::VolumeOptions vopts;
    vopts.quad = sc.numerics.quad;
    // volume exponents feed every bound, so they run one notch tighter
    vopts.opt_tol = 0.1 * sc.numerics.opt_tol;
    vopts.nystrom_n = sc.numerics.nystrom_n;

    RunReport r;
    json diag = json::object();

    switch (sc.bound.kind) {
        case BoundRequest::Kind::epi: {
            r.bound_kind = "epi";
            volume::VolumeReport vr = volume::volume_exponent(cs, vopts);
            epi::EpiBound b = epi::epi_bound(vr.v, sigma2);
            r.bound_value_nats = b.value;
            r.v_nats = vr.v;
            r.theta_star = vr.theta_star.values;
            r.active = vr.active;
            diag["moment_residual"] = vr.diagnostics.moment_residual;
            diag["objective_evals"] = vr.diagnostics.objective_evals;
            break;
        }
        case BoundRequest::Kind::epi_uce: {
            r.bound_kind = "epi-uce";
            if (cs.dual_size() != 1)
                throw UnsupportedKernel("epi-uce needs exactly one non-well cost term");
            const double gamma = cs.dual_term(0).limit;
            Scenario base = sc;
            auto curve = [&](double g) {
                Scenario s2c = with_sweep_value(
                    base, "limit:" + std::to_string(cs.dual_indices()[0]), g);
                volume::VolumeReport vr = volume::volume_exponent(s2c.make_constraints(), vopts);
                return epi::epi_bound(vr.v, sigma2).value;
            };
            const double hi = std::max(4.0 * gamma, 8.0 * std::sqrt(sigma2));
            epi::PiecewiseBound env = epi::uce_1d(curve, {0.0, hi}, 257);
            volume::VolumeReport vr = volume::volume_exponent(cs, vopts);
            r.bound_value_nats = env(gamma);
            r.v_nats = vr.v;
            r.theta_star = vr.theta_star.values;
            r.active = vr.active;
            diag["tangent_found"] = env.tangent_found;
            diag["breakpoint"] = env.breakpoint;
            diag["slope"] = env.slope;
            break;
        }
        case BoundRequest::Kind::direct: {
            r.bound_kind = "direct";
            direct_mi::DirectBoundOptions dopts;
            dopts.quad = sc.numerics.quad;
            dopts.opt_tol = sc.numerics.opt_tol;
            dopts.volume = vopts;
            direct_mi::DirectBoundReport b = direct_mi::direct_bound(cs, sigma2, dopts);
            r.bound_value_nats = b.value;
            r.v_nats = b.v_used;
            r.theta_star = b.theta_star_volume.values;
            r.theta_star_bound = b.theta_star_bound.values;
            r.active = b.volume_active;
            diag["y_half_width"] = b.diagnostics.y_half_width;
            diag["output_norm_error"] = b.diagnostics.output_norm_error;
            diag["objective_evals"] = b.diagnostics.objective_evals;
            break;
        }
        case BoundRequest::Kind::tilted: {
            r.bound_kind = "tilted";
            double p = -1, a = -1;
            for (const CostTerm& t : cs.terms()) {
                if (t.kind == CostKind::power && p < 0) p = t.limit;
                if (t.kind == CostKind::peak_well && a < 0) a = t.amplitude;
            }
            if (p <= 0 || a <= 0)
                throw UnsupportedKernel("tilted bound needs power and peak_well terms");
            direct_mi::TiltedInputSpec spec;
            spec.alpha = sc.bound.alpha;
            spec.half_width = a;
            spec.power = p;
            direct_mi::DirectBoundOptions dopts;
            dopts.quad = sc.numerics.quad;
            dopts.opt_tol = sc.numerics.opt_tol;
            dopts.volume = vopts;
            direct_mi::DirectBoundReport b = direct_mi::tilted_direct_bound(spec, sigma2, dopts);
            r.bound_value_nats = b.value;
            r.v_nats = b.v_used;
            r.theta_star = b.theta_star_volume.values;
            r.theta_star_bound = b.theta_star_bound.values;
            r.active = b.volume_active;
            diag["alpha"] = sc.bound.alpha;
            diag["theta_star"] = spec.theta_star;
            break;
        }
        case BoundRequest::Kind::jensen: {
            r.bound_kind = "jensen";
            const double s2 = sc.bound.s2 > 0 ? sc.bound.s2 : sigma2;
            direct_mi::DirectBoundOptions dopts;
            dopts.quad = sc.numerics.quad;
            dopts.opt_tol = sc.numerics.opt_tol;
            dopts.volume = vopts;
            direct_mi::DirectBoundReport b =
                direct_mi::jensen_pair_bound(cs, sigma2, s2, sc.bound.alpha, dopts);
            r.bound_value_nats = b.value;
            r.v_nats = b.v_used;
            r.theta_star = b.theta_star_volume.values;
            r.theta_star_bound = b.theta_star_bound.values;
            r.active = b.volume_active;
            diag["s2"] = s2;
            diag["alpha"] = sc.bound.alpha;
            break;
        }
        case BoundRequest::Kind::volume: {
            r.bound_kind = "volume";
            volume::VolumeReport vr = volume::volume_exponent(cs, vopts);
            r.bound_value_nats = vr.v;
            r.v_nats = vr.v;
            r.theta_star = vr.theta_star.values;
            r.active = vr.active;
            diag["moment_residual"] = vr.diagnostics.moment_residual;
            diag["nystrom_n"] = vr.diagnostics.nystrom_n;
            break;
        }
        case BoundRequest::Kind::kernel_psi: {
            r.bound_kind = "kernel-psi";
            volume::DualVector theta = volume::default_dual(cs);
            if (sc.bound.theta) {
                if (sc.bound.theta->size() != theta.values.size())
                    throw ScenarioError("$.bound.theta: expected " +
                                        std::to_string(theta.values.size()) + " values");
                theta.values = *sc.bound.theta;
            }
            volume::KernelSpec k = volume::KernelSpec::from(cs, theta);
            const std::string& m = sc.bound.kernel_method;
            double psi_val;
            if (m == "nystrom") {
                psi_val = volume::kernel_psi_nystrom(k, sc.numerics.nystrom_n);
            } else if (m == "rayleigh") {
                psi_val = volume::kernel_psi_rayleigh(k, volume::RayleighFamily::constant(),
                                                      sc.numerics.quad);
            } else if (m == "rayleigh-exp") {
                std::vector<double> grid;
                for (int i = -20; i <= 20; ++i) grid.push_back(0.1 * i);
                psi_val = volume::kernel_psi_rayleigh(
                    k, volume::RayleighFamily::exponential(grid), sc.numerics.quad);
            } else if (m == "collatz") {
                volume::CwBracket br = volume::kernel_psi_collatz(
                    k, [](double) { return 1.0; }, sc.numerics.quad);
                psi_val = br.lower;
                diag["upper"] = br.upper;
            } else if (m == "donsker-varadhan" || m == "dv") {
                psi_val = volume::donsker_varadhan_psi(k, sc.numerics.nystrom_n);
            } else {
                throw ScenarioError("$.bound.method: unknown kernel method \"" + m + "\"");
            }
            r.bound_value_nats = psi_val;
            r.v_nats = psi_val;
            r.theta_star = theta.values;
            diag["method"] = m;
            break;
        }
        case BoundRequest::Kind::validate: {
            r.bound_kind = "validate";
            oracle::McConfig mc = sc.bound.mc;
            if (mc.threads == 0) mc.threads = sc.numerics.threads;
            oracle::McEstimate est = oracle::mc_log_volume(cs, mc);
            r.bound_value_nats = est.log_volume_per_dim;
            r.std_err = est.std_err;
            volume::VolumeReport vr = volume::volume_exponent(cs, vopts);
            r.v_nats = vr.v;
            r.theta_star = vr.theta_star.values;
            r.active = vr.active;
            diag["hit_fraction"] = est.hit_fraction;
            diag["hits"] = est.hits;
            diag["samples"] = est.samples;
            diag["abs_gap"] = std::abs(est.log_volume_per_dim - vr.v);
            diag["std_err"] = est.std_err;
            break;
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    r.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    r.diagnostics_json = diag.dump();
    return r;
}

}  // namespace

RunReport run(const Scenario& sc) { return run_impl(sc); }

std::vector<RunReport> run_sweep(const Scenario& sc) {
    if (!sc.sweep) throw ScenarioError("$.sweep: scenario has no sweep block");
    const SweepSpec& sw = *sc.sweep;
    std::vector<RunReport> rows(sw.grid.size());
    parallel_for(
        static_cast<std::int64_t>(sw.grid.size()),
        [&](std::int64_t b, std::int64_t e) {
            for (std::int64_t i = b; i < e; ++i) {
                Scenario pt = with_sweep_value(sc, sw.variable, sw.grid[i]);
                pt.sweep.reset();
                rows[i] = run_impl(pt);
            }
        },
        sc.numerics.threads);
    return rows;
}

void write_csv(std::ostream& os, const Scenario& sc, const std::vector<RunReport>& rows) {
    if (!sc.sweep) throw ScenarioError("$.sweep: scenario has no sweep block");
    std::size_t k = 0;
    for (const RunReport& r : rows) k = std::max(k, r.theta_star.size());
    os << "sweep_var,value,bound_nats,v_nats";
    for (std::size_t i = 1; i <= k; ++i) os << ",theta_star_" << i;
    os << "\n";
    char buf[64];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.10g", x);
        os << buf;
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        os << sc.sweep->variable << ",";
        put(sc.sweep->grid[i]);
        os << ",";
        put(rows[i].bound_value_nats);
        os << ",";
        put(rows[i].v_nats);
        for (std::size_t j = 0; j < k; ++j) {
            os << ",";
            put(j < rows[i].theta_star.size() ? rows[i].theta_star[j] : 0.0);
        }
        os << "\n";
    }
}

std::string RunReport::to_json(bool with_wall_time) const {
    json j;
    j["bound"] = bound_kind;
    j["bound_value_nats"] = bound_value_nats;
    j["v_nats"] = v_nats;
    j["theta_star"] = dual_to_json(theta_star);
    if (!theta_star_bound.empty()) j["theta_star_bound"] = dual_to_json(theta_star_bound);
    if (!active.empty()) {
        json a = json::array();
        for (bool b : active) a.push_back(b);
        j["active"] = a;
    }
    if (bound_kind == "validate") j["std_err"] = std_err;
    j["diagnostics"] = json::parse(diagnostics_json.empty() ? "{}" : diagnostics_json);
    if (with_wall_time) j["wall_time_s"] = wall_time_s;
    return j.dump(2);
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ScenarioError*>(&e)) return 1;
    if (dynamic_cast<const UnsupportedKernel*>(&e)) return 1;
    if (dynamic_cast<const Infeasible*>(&e) || dynamic_cast<const Unbounded*>(&e) ||
        dynamic_cast<const EmptySupport*>(&e))
        return 2;
    return 3;
}

}  // namespace capbound::cli
