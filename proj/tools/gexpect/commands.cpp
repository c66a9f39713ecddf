#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "gexp/gexp.hpp"

namespace gexpect {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------- JSON views

json to_json(const gexp::MatrixZ& z) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < z.cols(); ++c) row.push_back(z.matrix()(r, c));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const gexp::Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json to_json(const gexp::RConditionalValue& v) {
    json out{{"deterministic", to_json(v.deterministic)}};
    if (v.has_stochastic() && !v.coefficient.is_zero()) {
        out["stochastic"] = {{"coefficient", to_json(v.coefficient)}, {"from", v.from}, {"to", v.to}};
    } else {
        out["stochastic"] = nullptr;
    }
    return out;
}

json to_json(const gexp::PropertyReport& r) {
    json failures = json::array();
    for (const auto& w : r.failures) {
        json inputs = json::object();
        for (const auto& [k, v] : w.inputs) inputs[k] = v;
        failures.push_back({{"inputs", inputs}, {"lhs", w.lhs}, {"rhs", w.rhs}, {"gap", w.gap}});
    }
    json out{{"id", r.id},
             {"verdict", gexp::to_string(r.verdict)},
             {"samples", r.samples},
             {"failure_count", r.failure_count},
             {"tolerance", r.tolerance},
             {"seed", r.seed},
             {"max_gap", r.max_gap},
             {"note", r.note},
             {"witnesses", failures}};
    if (r.expectation_verdict != gexp::Verdict::skipped)
        out["expectation_verdict"] = gexp::to_string(r.expectation_verdict);
    return out;
}

json to_json(const gexp::SupermartingaleVerdict& v) {
    return {{"pass", v.pass},         {"max_violation", v.max_violation}, {"witness_s", v.witness_s},
            {"witness_t", v.witness_t}, {"pairs", v.pairs},                 {"tolerance", v.tolerance}};
}

// ------------------------------------------------------------ config access

template <class T>
T get(const json& c, const char* key, T fallback) {
    if (!c.contains(key) || c.at(key).is_null()) return fallback;
    try {
        return c.at(key).get<T>();
    } catch (const json::exception& e) {
        throw gexp::Error(gexp::ErrorCode::invalid_argument, std::string("config key '") + key + "': " + e.what());
    }
}

std::uint64_t seed_of(const json& c) { return get<std::uint64_t>(c, "seed", 42); }

gexp::RTerminal parse_terminal(const std::string& text, double T) {
    const auto kv = gexp::parse_key_values(text);
    for (const auto& [k, v] : kv)
        if (k != "y" && k != "z" && k != "u" && k != "v")
            throw gexp::ParseError("unknown terminal parameter '" + k + "'", 1, 1);
    const double y = gexp::key_value_number(kv, "y", 0.0);
    const double z = gexp::key_value_number(kv, "z", 0.0);
    const double u = gexp::key_value_number(kv, "u", 0.0);
    const double v = gexp::key_value_number(kv, "v", T);
    gexp::require(v <= T, gexp::ErrorCode::invalid_argument, "terminal time v exceeds T");
    return gexp::RTerminal::scalar(y, z, u, v);
}

std::shared_ptr<const gexp::ExpectationOracle> make_oracle(const std::string& spec, double T) {
    if (spec.rfind("builtin:", 0) == 0) {
        return std::make_shared<gexp::GExpectationOracle>(gexp::parse_generator(spec.substr(8), T));
    }
    if (spec.rfind("csv:", 0) == 0) {
        return std::make_shared<gexp::TableOracle>(gexp::read_G_csv_file(spec.substr(4)), spec);
    }
    throw gexp::ParseError("oracle must be builtin:<generator> or csv:<path>, got '" + spec + "'", 1, 1);
}

class Stopwatch {
public:
    void lap(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        timings_[name] = std::chrono::duration<double, std::milli>(now - last_).count();
        last_ = now;
    }
    [[nodiscard]] json timings() const { return timings_; }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    json timings_ = json::object();
};

// ------------------------------------------------------------------- solve

CommandResult cmd_solve(const json& c, Stopwatch& clock) {
    const double T = get(c, "T", 1.0);
    const auto N = get<std::size_t>(c, "N", 100);
    const gexp::TimeGrid grid = gexp::make_uniform_grid(T, N);
    const gexp::RTerminal xi = parse_terminal(get<std::string>(c, "terminal", "y=0,z=0"), T);
    const std::string entropic = get<std::string>(c, "entropic", "");
    json results;

    if (!entropic.empty()) {
        const auto kv = gexp::parse_key_values(entropic);
        const double nu = gexp::key_value_number(kv, "nu", 0.0);
        const double gamma = gexp::key_value_number(kv, "gamma", 0.0);
        const gexp::StepProcess gamma_path = gexp::StepProcess::constant(T, gexp::MatrixZ::scalar(gamma));
        const std::string scenario = get<std::string>(c, "scenario", "");
        std::vector<double> payoff;
        if (!scenario.empty()) {
            const gexp::CsvTable csv = gexp::read_csv_file(scenario);
            const std::size_t col = csv.header.size() == 1 ? 0 : csv.column("payoff");
            for (const auto& row : csv.rows) payoff.push_back(row[col]);
            results["payoff_source"] = scenario;
        } else {
            const auto su = gexp::snap_to_grid(grid, xi.u);
            const auto sv = gexp::snap_to_grid(grid, xi.v);
            const gexp::RTerminal snapped(xi.y, xi.z, su.time, sv.time);
            gexp::SimulationOptions sim;
            sim.threads = get<unsigned>(c, "threads", 1);
            const gexp::PathBatch batch =
                gexp::simulate(grid, get<std::size_t>(c, "M", 100000), 1, seed_of(c), sim);
            clock.lap("simulate");
            payoff = gexp::evaluate_scalar_terminal(batch, snapped);
            results["payoff_source"] = "simulated";
            results["snapped_u"] = su.time;
            results["snapped_v"] = sv.time;
            results["snap_error"] = std::max(std::abs(su.rounding_error), std::abs(sv.rounding_error));
        }
        const gexp::EntropicEstimate est = gexp::entropic_value(nu, gamma_path, payoff);
        clock.lap("entropic");
        results["mode"] = "entropic";
        results["value"] = est.value;
        results["std_error"] = est.std_error;
        results["raw_mean"] = est.raw_mean;
        results["raw_std_error"] = est.raw_std_error;
        results["shift"] = est.shift;
        results["drift_integral"] = est.drift_integral;
        results["samples"] = est.samples;
        results["overflow_count"] = est.overflow_count;
        return {ExitCode::ok, {{"results", results}}};
    }

    const gexp::Generator g = gexp::parse_generator(get<std::string>(c, "gen", "zero"), T);
    const double t = get(c, "t", 0.0);
    gexp::require(t >= 0.0 && t <= T, gexp::ErrorCode::invalid_argument, "t must lie in [0, T]");
    const gexp::StepProcess h = gexp::StepProcess::window(T, xi.u, xi.v, xi.z);
    gexp::PhiOptions phi_options;
    phi_options.tolerance = get(c, "tol", 1e-10);
    const gexp::PhiFunction phi = gexp::solve_phi(g, xi.y, h, grid, phi_options);
    clock.lap("solve_phi");

    json table = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) table.push_back({grid[i], phi.at(grid[i])[0]});
    results["phi"] = table;
    results["phi_nodes"] = phi.grid().size();
    results["phi_error_estimate"] = phi.achieved_tolerance();
    results["phi_residual"] = gexp::phi_residual(phi, g, xi.y, h);
    clock.lap("residual");

    results["t"] = t;
    results["generator"] = g.name();
    if (g.closed_form_class()) {
        const gexp::RConditionalValue v = gexp::cond_gexp_R(g, xi, t);
        results["mode"] = "closed_form";
        results["value"] = v.deterministic[0];
        results["conditional"] = to_json(v);
    } else {
        // Explicit solution: Y_t = φ(t) + ∫_0^t h dB.
        results["mode"] = "explicit";
        results["value"] = phi.at(t)[0];
        gexp::RConditionalValue v{xi, t, phi.at(t), xi.z, xi.u, std::clamp(t, xi.u, xi.v)};
        results["conditional"] = to_json(v);
    }
    clock.lap("closed_form");
    return {ExitCode::ok, {{"results", results}}};
}

// ----------------------------------------------------------------- recover

CommandResult cmd_recover(const json& c, Stopwatch& clock) {
    const std::string oracle_spec = get<std::string>(c, "oracle", "builtin:zero");
    double T = get(c, "T", 1.0);
    const auto N = get<std::size_t>(c, "N", 100);
    const double zmax = get(c, "zmax", 5.0);
    const auto oracle = make_oracle(oracle_spec, T);

    gexp::RecoverOptions options;
    options.ends = get<bool>(c, "first_order_ends", false) ? gexp::EndStencil::first_order
                                                           : gexp::EndStencil::second_order;
    std::vector<gexp::MatrixZ> zs;
    gexp::TimeGrid grid = gexp::make_uniform_grid(T, N);
    if (const auto* table = dynamic_cast<const gexp::TableOracle*>(oracle.get())) {
        grid = table->table().grid;
        zs = table->table().z;
        T = grid.horizon();
    } else {
        zs = gexp::z_sample_set(oracle->n(), oracle->d(), zmax, get<std::size_t>(c, "random_z", 4), seed_of(c));
    }
    const gexp::GFunction G = gexp::sample_G(*oracle, grid, zs);
    clock.lap("sample_G");
    const bool richardson = get<bool>(c, "richardson", false);
    const gexp::GeneratorTable table = richardson ? gexp::recover_generator_richardson(*oracle, grid, zs, options)
                                                  : gexp::recover_generator(G, options);
    clock.lap("recover");
    const double tol = get(c, "tol", 1e-8);
    const gexp::RoundtripReport roundtrip = gexp::roundtrip_necessity(G, table, tol);

    json results;
    results["oracle"] = oracle->name();
    results["grid_steps"] = grid.steps();
    results["richardson"] = table.richardson;
    json per_z = json::array();
    for (std::size_t j = 0; j < zs.size(); ++j) {
        double lo = table.g[j][1][0];
        double hi = lo;
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            lo = std::min(lo, table.g[j][i][0]);
            hi = std::max(hi, table.g[j][i][0]);
        }
        per_z.push_back({{"z", to_json(zs[j])},
                         {"interior_min", lo},
                         {"interior_max", hi},
                         {"g_left", to_json(table.g[j].front())},
                         {"g_right", to_json(table.g[j].back())},
                         {"irregular_left", table.endpoint_irregular[j].first},
                         {"irregular_right", table.endpoint_irregular[j].second},
                         {"roundtrip_discrepancy", roundtrip.discrepancy[j]}});
    }
    results["table"] = per_z;
    results["roundtrip"] = {{"verdict", roundtrip.pass() ? "PASS" : "FAIL"},
                            {"max_discrepancy", roundtrip.max_discrepancy},
                            {"tolerance", roundtrip.tolerance},
                            {"endpoint_irregular", roundtrip.endpoint_irregular}};

    const std::string table_path = get<std::string>(c, "table", "");
    if (!table_path.empty()) {
        std::ofstream out(table_path);
        if (!out) throw gexp::Error(gexp::ErrorCode::invalid_argument, "cannot write " + table_path);
        gexp::write_generator_csv(out, table);
        results["table_path"] = table_path;
    }
    clock.lap("roundtrip");

    bool ok = roundtrip.pass();
    if (get<bool>(c, "verify", true) && oracle->n() == 1) {
        const gexp::Generator recovered = gexp::table_generator(table);
        std::mt19937_64 rng(seed_of(c));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, zs.size() - 1);
        std::vector<std::pair<gexp::RTerminal, double>> samples;
        const auto count = get<std::size_t>(c, "verify_samples", 100);
        for (std::size_t i = 0; i < count; ++i) {
            const gexp::MatrixZ& z = zs[pick(rng)];
            const double y = -2.0 + 4.0 * unit(rng);
            const double a = T * unit(rng);
            const double b = T * unit(rng);
            const double t = T * unit(rng);
            samples.emplace_back(gexp::RTerminal(gexp::Vector::Constant(1, y), z, std::min(a, b), std::max(a, b)), t);
        }
        const gexp::RepresentationReport rep =
            gexp::verify_representation_on_R(*oracle, recovered, samples, get(c, "verify_tol", 1e-8));
        json failures = json::array();
        for (std::size_t i = 0; i < rep.failures.size() && i < 20; ++i) {
            const auto& w = rep.failures[i];
            failures.push_back({{"y", w.xi.y[0]},
                                {"z", to_json(w.xi.z)},
                                {"u", w.xi.u},
                                {"v", w.xi.v},
                                {"t", w.t},
                                {"oracle", w.oracle_value[0]},
                                {"model", w.model_value[0]},
                                {"gap", w.gap},
                                {"stochastic_mismatch", w.stochastic_mismatch}});
        }
        results["verify_on_R"] = {{"verdict", rep.pass() ? "PASS" : "FAIL"},
                                  {"samples", rep.samples},
                                  {"max_error", rep.max_error},
                                  {"tolerance", rep.tolerance},
                                  {"failure_count", rep.failures.size()},
                                  {"witnesses", failures}};
        ok = ok && rep.pass();
        clock.lap("verify");
    }
    return {ok ? ExitCode::ok : ExitCode::check_failed, {{"results", results}}};
}

// --------------------------------------------------------------- decompose

CommandResult cmd_decompose(const json& c, Stopwatch& clock) {
    double T = get(c, "T", 1.0);
    const auto N = get<std::size_t>(c, "N", 100);
    const std::string psi_spec = get<std::string>(c, "psi", "drift:c=1");
    const gexp::MatrixZ z = gexp::MatrixZ::scalar(get(c, "z", 0.0));

    std::vector<double> psi;
    gexp::TimeGrid grid = gexp::make_uniform_grid(T, N);
    if (psi_spec.rfind("csv:", 0) == 0) {
        const gexp::CsvTable csv = gexp::read_csv_file(psi_spec.substr(4));
        const std::size_t tc = csv.column("t");
        const std::size_t pc = csv.column("psi");
        std::vector<double> times;
        for (const auto& row : csv.rows) {
            times.push_back(row[tc]);
            psi.push_back(row[pc]);
        }
        grid = gexp::TimeGrid(times);
        T = grid.horizon();
    }
    const gexp::Generator g = gexp::parse_generator(get<std::string>(c, "gen", "zero"), T);
    if (psi.empty()) {
        if (psi_spec.rfind("drift", 0) != 0) {
            throw gexp::ParseError("psi must be drift:c=<value> or csv:<path>, got '" + psi_spec + "'", 1, 1);
        }
        const auto colon = psi_spec.find(':');
        const auto kv = gexp::parse_key_values(colon == std::string::npos ? "" : psi_spec.substr(colon + 1));
        const double drift = gexp::key_value_number(kv, "c", 0.0);
        const std::vector<double> prim = gexp::drift_primitive(g, grid, z);
        for (std::size_t i = 0; i < grid.size(); ++i) psi.push_back(-prim[i] - drift * grid[i]);
    }

    json results;
    const gexp::SupermartingaleVerdict pre = gexp::check_supermartingale(g, grid, psi, z);
    results["precondition"] = to_json(pre);
    if (!pre.pass) return {ExitCode::check_failed, {{"results", results}}};

    gexp::PenalizeOptions options;
    options.tolerance = get(c, "tol", 1e-8);
    options.richardson = get<bool>(c, "richardson", true);
    const int mmax = get(c, "mmax", 20);
    for (int p = 0; p <= mmax; ++p) options.schedule.push_back(std::ldexp(1.0, p));
    const gexp::DecompositionResult res = gexp::penalize_decompose(g, grid, psi, z, options);
    clock.lap("penalize");

    results["t"] = std::vector<double>(grid.points().begin(), grid.points().end());
    results["a"] = res.a;
    json per_m = json::array();
    for (std::size_t k = 0; k < res.history.size(); ++k) {
        json row{{"m", res.history[k].m},
                 {"a_m_T", res.history[k].a_m.back()},
                 {"psi_m_0", res.history[k].psi_m.front()}};
        if (k >= 1) row["raw_gap"] = res.raw_gaps[k - 1];
        if (options.richardson && k >= 2) row["extrapolated_gap"] = res.extrapolated_gaps[k - 2];
        per_m.push_back(row);
    }
    results["per_m"] = per_m;
    results["converged"] = res.converged;
    results["final_gap"] = res.final_gap;
    results["monotonicity_violations"] = res.monotonicity_violations;
    results["reconstruction_residual"] = res.reconstruction_residual;
    results["a_nondecreasing"] = res.a_nondecreasing;
    const bool ok = res.monotonicity_violations == 0 && res.a_nondecreasing;
    return {ok ? ExitCode::ok : ExitCode::check_failed, {{"results", results}}};
}

// ------------------------------------------------------------------- check

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

CommandResult cmd_check(const json& c, Stopwatch& clock) {
    double T = get(c, "T", 1.0);
    gexp::CheckOptions options;
    options.samples = get<std::size_t>(c, "samples", 200);
    options.seed = seed_of(c);
    options.tolerance = get(c, "tol", 1e-10);
    options.radius = get(c, "zmax", 5.0);

    const std::string gen_spec = get<std::string>(c, "gen", "linear:mu=1");
    std::string oracle_spec = get<std::string>(c, "oracle", "");
    if (oracle_spec.empty()) oracle_spec = "builtin:" + gen_spec;

    auto oracle_for_checks = [&]() {
        auto base = make_oracle(oracle_spec, T);
        if (const auto* table = dynamic_cast<const gexp::TableOracle*>(base.get())) T = table->table().grid.horizon();
        const double fault = get(c, "fault", 0.0);
        if (fault != 0.0) {
            const std::string mode = get<std::string>(c, "fault_mode", "all");
            if (mode != "all" && mode != "zero") throw gexp::ParseError("fault_mode must be all or zero", 1, 1);
            base = std::make_shared<gexp::FaultOracle>(base, fault,
                                                       mode == "zero" ? gexp::FaultMode::at_zero
                                                                      : gexp::FaultMode::all_times);
        }
        return base;
    };

    json reports = json::array();
    bool failed = false;
    auto add = [&](const gexp::PropertyReport& r) {
        failed = failed || r.verdict == gexp::Verdict::fail;
        reports.push_back(to_json(r));
    };

    const std::string property = get<std::string>(c, "property", "");
    for (const std::string& suite : split_list(get<std::string>(c, "suite", "axioms"))) {
        if (suite == "axioms" || suite == "translation" || suite == "increments") {
            const auto oracle = oracle_for_checks();
            options.horizon = T;
            if (suite == "axioms") {
                for (const auto& r : gexp::check_axioms(*oracle, options)) add(r);
            } else if (suite == "translation") {
                add(gexp::check_translation(*oracle, options));
            } else {
                add(gexp::check_independent_increments(*oracle, options));
            }
        } else if (suite == "comparison") {
            options.horizon = T;
            add(gexp::check_comparison(gexp::parse_generator(gen_spec, T),
                                       gexp::parse_generator(get<std::string>(c, "f", "zero"), T), options));
        } else if (suite == "convexity") {
            options.horizon = T;
            for (const auto& r : gexp::check_convexity_suite(gexp::parse_generator(gen_spec, T), options))
                if (property.empty() || property == r.id) add(r);
        } else if (suite == "domination") {
            options.horizon = T;
            const gexp::Generator g = gexp::parse_generator(gen_spec, T);
            const double scale = get(c, "rho_scale", 1.0);
            const gexp::Modulus rho = [g, scale](double r) { return scale * g.rho(r); };
            add(gexp::check_domination(g, rho, get(c, "k", 1.0), options));
        } else if (suite == "meanfield") {
            const gexp::Generator g = gexp::parse_generator(get<std::string>(c, "meanfield_gen", "lineary:a=1"), T);
            const gexp::TimeGrid grid = gexp::make_uniform_grid(T, get<std::size_t>(c, "N", 100));
            add(gexp::check_meanfield_comparison(g, get(c, "y1", 2.0), get(c, "y2", 1.0), grid, options));
        } else {
            throw gexp::ParseError("unknown suite '" + suite + "'", 1, 1);
        }
        clock.lap(suite);
    }
    return {failed ? ExitCode::check_failed : ExitCode::ok, {{"results", {{"reports", reports}}}}};
}

}  // namespace

CommandResult run_command(const json& config) {
    const std::string command = get<std::string>(config, "command", "");
    Stopwatch clock;
    CommandResult result;
    if (command == "solve") {
        result = cmd_solve(config, clock);
    } else if (command == "recover") {
        result = cmd_recover(config, clock);
    } else if (command == "decompose") {
        result = cmd_decompose(config, clock);
    } else if (command == "check") {
        result = cmd_check(config, clock);
    } else {
        throw gexp::Error(gexp::ErrorCode::invalid_argument, "unknown command '" + command + "'");
    }
    json report = {{"tool", "gexpect"},
                   {"version", kVersion},
                   {"command", command},
                   {"config", config},
                   {"seed", seed_of(config)},
                   {"sampler", gexp::kNormalSampler},
                   {"exit_code", result.exit_code},
                   {"results", result.report["results"]},
                   {"timings_ms", clock.timings()}};
    result.report = std::move(report);
    return result;
}

CommandResult replay(const json& report) {
    if (!report.contains("config") || !report["config"].is_object()) {
        throw gexp::Error(gexp::ErrorCode::invalid_argument, "report has no embedded config");
    }
    return run_command(report["config"]);
}

json without_timings(json report) {
    report.erase("timings_ms");
    return report;
}

int exit_code_for(gexp::ErrorCode code) noexcept {
    using gexp::ErrorCode;
    switch (code) {
        case ErrorCode::invalid_argument:
        case ErrorCode::parse_error:
        case ErrorCode::unsupported_generator:
        case ErrorCode::off_grid_time:
        case ErrorCode::declared_metadata_violation:
            return ExitCode::usage;
        case ErrorCode::precondition_violation:
        case ErrorCode::metadata_violation:
        case ErrorCode::oracle_contract_violation:
            return ExitCode::check_failed;
        case ErrorCode::resource_limit:
        case ErrorCode::non_finite_sample:
        case ErrorCode::tolerance_not_reached:
        case ErrorCode::grid_too_coarse:
        case ErrorCode::contraction_failure:
        case ErrorCode::slow_convergence:
        case ErrorCode::equivalence_violation:
            return ExitCode::numeric_failure;
    }
    return ExitCode::numeric_failure;
}

namespace {

/// Options shared by the subcommands; unset ones stay out of the config.
struct Cli {
    std::string out;
    std::string replay;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

}  // namespace

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Computes g-expectations on explicitly solvable classes, recovers generators, "
                 "decomposes supermartingales and checks expectation axioms.",
                 "gexpect"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "INI file; [solve], [recover], ... sections feed the subcommands");
    Cli cli;
    app.add_option("--out", cli.out, "write the JSON report here instead of stdout");
    app.add_option("--replay", cli.replay, "re-run the configuration embedded in a report");
    app.require_subcommand(0, 1);

    json config = json::object();
    std::vector<std::pair<CLI::App*, std::function<void()>>> collect;

    auto common = [&](CLI::App* sub, json& c) {
        auto* seed = sub->add_option("--seed", cli.seed, "random seed (default: GEXPECT_SEED or 42)");
        sub->add_option("--threads", cli.threads, "worker threads; affects speed only")->capture_default_str();
        collect.emplace_back(sub, [&c, seed, &cli] {
            c["seed"] = seed->count() > 0 ? cli.seed : gexp::seed_from_env(42);
            c["threads"] = cli.threads;
        });
    };

    // Every option binds into a string or number that is copied to the config after parsing.
    struct Slot {
        std::string key;
        std::function<void(json&)> store;
    };
    std::vector<std::pair<CLI::App*, std::vector<Slot>>> slots;
    auto text = [&](CLI::App* sub, std::vector<Slot>& s, const std::string& flag, const std::string& key,
                    std::string fallback, const std::string& help) {
        auto value = std::make_shared<std::string>(std::move(fallback));
        sub->add_option(flag, *value, help)->capture_default_str();
        s.push_back({key, [value, key](json& c) { c[key] = *value; }});
    };
    auto number = [&](CLI::App* sub, std::vector<Slot>& s, const std::string& flag, const std::string& key,
                      double fallback, const std::string& help) {
        auto value = std::make_shared<double>(fallback);
        sub->add_option(flag, *value, help)->capture_default_str();
        s.push_back({key, [value, key](json& c) { c[key] = *value; }});
    };
    auto count = [&](CLI::App* sub, std::vector<Slot>& s, const std::string& flag, const std::string& key,
                     std::size_t fallback, const std::string& help) {
        auto value = std::make_shared<std::size_t>(fallback);
        sub->add_option(flag, *value, help)->capture_default_str();
        s.push_back({key, [value, key](json& c) { c[key] = *value; }});
    };
    auto flag = [&](CLI::App* sub, std::vector<Slot>& s, const std::string& name, const std::string& key,
                    bool fallback, const std::string& help) {
        auto value = std::make_shared<bool>(fallback);
        sub->add_flag(name, *value, help);
        s.push_back({key, [value, key](json& c) { c[key] = *value; }});
    };

    auto* solve = app.add_subcommand("solve", "closed-form, explicit or entropic g-expectation values");
    {
        std::vector<Slot> s;
        text(solve, s, "--gen", "gen", "zero", "generator spec, e.g. linear:mu=0.5");
        text(solve, s, "--terminal", "terminal", "y=0,z=0", "R-class terminal y=..,z=..,u=..,v=..");
        text(solve, s, "--entropic", "entropic", "", "entropic mode: nu=..[,gamma=..]");
        text(solve, s, "--scenario", "scenario", "", "CSV of payoff samples for the entropic mode");
        number(solve, s, "--T", "T", 1.0, "horizon");
        count(solve, s, "--N", "N", 100, "grid steps");
        number(solve, s, "--t", "t", 0.0, "conditioning time");
        count(solve, s, "--M", "M", 100000, "Monte Carlo paths");
        number(solve, s, "--tol", "tol", 1e-10, "backward ODE tolerance");
        slots.emplace_back(solve, std::move(s));
    }
    auto* recover = app.add_subcommand("recover", "recover a generator from an expectation oracle");
    {
        std::vector<Slot> s;
        text(recover, s, "--oracle", "oracle", "builtin:zero", "builtin:<generator> or csv:<G table>");
        number(recover, s, "--T", "T", 1.0, "horizon");
        count(recover, s, "--N", "N", 100, "grid steps");
        number(recover, s, "--zmax", "zmax", 5.0, "radius of the z sample set");
        count(recover, s, "--random-z", "random_z", 4, "random z directions added to the axis samples");
        text(recover, s, "--table", "table", "", "write the recovered generator table (CSV) here");
        number(recover, s, "--tol", "tol", 1e-8, "round-trip tolerance");
        number(recover, s, "--verify-tol", "verify_tol", 1e-8, "verification tolerance on R");
        count(recover, s, "--verify-samples", "verify_samples", 100, "random (ξ, t) samples for verification");
        flag(recover, s, "--richardson", "richardson", false, "extrapolate over a 2x refined grid");
        flag(recover, s, "--first-order-ends", "first_order_ends", false, "one-sided two-point end stencil");
        flag(recover, s, "!--no-verify", "verify", true, "skip the verification on R");
        slots.emplace_back(recover, std::move(s));
    }
    auto* decompose = app.add_subcommand("decompose", "penalization decomposition of ψ(t) + zB_t");
    {
        std::vector<Slot> s;
        text(decompose, s, "--psi", "psi", "drift:c=1", "drift:c=<excess> or csv:<t,psi table>");
        text(decompose, s, "--gen", "gen", "zero", "generator spec");
        number(decompose, s, "--z", "z", 0.0, "z coefficient");
        number(decompose, s, "--T", "T", 1.0, "horizon");
        count(decompose, s, "--N", "N", 100, "grid steps");
        number(decompose, s, "--tol", "tol", 1e-8, "stopping tolerance on successive a estimates");
        count(decompose, s, "--mmax", "mmax", 20, "largest penalty weight is 2^mmax");
        flag(decompose, s, "!--no-richardson", "richardson", true, "stop on raw a^m instead of extrapolated");
        slots.emplace_back(decompose, std::move(s));
    }
    auto* check = app.add_subcommand("check", "property suites; exit code 1 on any FAIL");
    {
        std::vector<Slot> s;
        text(check, s, "--suite", "suite", "axioms",
             "comma list: axioms, translation, increments, comparison, convexity, domination, meanfield");
        text(check, s, "--gen", "gen", "linear:mu=1", "generator spec");
        text(check, s, "--f", "f", "zero", "second generator for the comparison suite");
        text(check, s, "--oracle", "oracle", "", "oracle for axiom suites (default: builtin:<gen>)");
        text(check, s, "--property", "property", "", "convexity suite: report only this property");
        text(check, s, "--fault-mode", "fault_mode", "all", "all or zero (offset only at t = 0)");
        number(check, s, "--fault", "fault", 0.0, "offset injected into the oracle's values");
        number(check, s, "--k", "k", 1.0, "domination radius");
        number(check, s, "--rho-scale", "rho_scale", 1.0, "multiplies the declared modulus");
        number(check, s, "--T", "T", 1.0, "horizon");
        count(check, s, "--N", "N", 100, "grid steps (meanfield)");
        text(check, s, "--meanfield-gen", "meanfield_gen", "lineary:a=1", "z-independent driver for the meanfield suite");
        number(check, s, "--y1", "y1", 2.0, "meanfield: E[ξ]");
        number(check, s, "--y2", "y2", 1.0, "meanfield: E[η]");
        number(check, s, "--zmax", "zmax", 5.0, "radius for sampled z");
        count(check, s, "--samples", "samples", 200, "samples per property");
        number(check, s, "--tol", "tol", 1e-10, "tolerance for closed-form checks");
        slots.emplace_back(check, std::move(s));
    }
    for (auto* sub : {solve, recover, decompose, check}) common(sub, config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitCode::ok : ExitCode::usage;
    }

    auto emit = [&](const json& report) {
        if (cli.out.empty()) {
            out << report.dump(2) << '\n';
        } else {
            std::ofstream file(cli.out);
            if (!file) throw gexp::Error(gexp::ErrorCode::invalid_argument, "cannot write " + cli.out);
            file << report.dump(2) << '\n';
            out << "wrote " << cli.out << " (exit " << report.value("exit_code", 0) << ")\n";
        }
    };

    try {
        CommandResult result;
        if (!cli.replay.empty()) {
            if (app.get_subcommands().size() > 0) {
                err << "error: --replay takes no subcommand\n";
                return ExitCode::usage;
            }
            std::ifstream in(cli.replay);
            if (!in) throw gexp::Error(gexp::ErrorCode::invalid_argument, "cannot open " + cli.replay);
            json previous;
            try {
                previous = json::parse(in);
            } catch (const json::parse_error& e) {
                throw gexp::ParseError(std::string("report is not valid JSON: ") + e.what(), 1,
                                       static_cast<std::size_t>(e.byte));
            }
            result = replay(previous);
        } else {
            if (app.get_subcommands().empty()) {
                err << app.help();
                return ExitCode::usage;
            }
            CLI::App* chosen = app.get_subcommands().front();
            config["command"] = chosen->get_name();
            for (auto& [sub, list] : slots)
                if (sub == chosen)
                    for (auto& slot : list) slot.store(config);
            for (auto& [sub, f] : collect)
                if (sub == chosen) f();
            result = run_command(config);
        }
        emit(result.report);
        return result.exit_code;
    } catch (const gexp::Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::numeric_failure;
    }
}

}  // namespace gexpect
