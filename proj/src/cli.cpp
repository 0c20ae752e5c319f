#include "delaylyap/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include "delaylyap/error.hpp"
#include "delaylyap/io.hpp"
#include "delaylyap/lyapunov.hpp"
#include "delaylyap/spectrum.hpp"

namespace delaylyap {

namespace {

std::string format(const char* pattern, double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

long long elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
}

/// Oracle block of a JSON report; refinement stalls degrade to UNDECIDED.
nlohmann::json oracle_json(const TimeDelaySystem& sys) {
    try {
        const SpectrumEstimate est = rightmost_roots(sys);
        nlohmann::json o;
        o["verdict"] = to_string(classify_rightmost(est));
        o["rightmost_root"] = {{"re", est.roots.front().real()},
                               {"im", est.roots.front().imag()}};
        o["converged"] = est.converged;
        o["collocation_size"] = est.collocation_size;
        o["residual"] = est.residual;
        return o;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NO_CONVERGENCE) throw;
        return {{"verdict", to_string(OracleVerdict::UNDECIDED)}, {"error", e.what()}};
    }
}

SweepParameter parameter_from_json(const nlohmann::json& j, const nlohmann::json& tmpl) {
    if (!j.is_object() || !j.contains("path") || !j.contains("min") || !j.contains("max") ||
        !j.contains("steps")) {
        throw Error(ErrorCode::IO, "sweep axis needs 'path', 'min', 'max' and 'steps'");
    }
    if (!j["path"].is_string() || !j["min"].is_number() || !j["max"].is_number() ||
        !j["steps"].is_number_integer()) {
        throw Error(ErrorCode::IO, "sweep axis fields have the wrong types");
    }
    SweepParameter p;
    p.path = j["path"].get<std::string>();
    p.min = j["min"].get<double>();
    p.max = j["max"].get<double>();
    p.steps = j["steps"].get<long>();
    if (p.steps < 2) {
        throw Error(ErrorCode::DOMAIN,
                    "sweep axis " + p.path + " needs steps >= 2, got " + std::to_string(p.steps));
    }
    nlohmann::json::json_pointer ptr;
    try {
        ptr = nlohmann::json::json_pointer(p.path);
    } catch (const std::exception& e) {
        throw Error(ErrorCode::IO, "bad parameter path " + p.path + ": " + e.what());
    }
    if (!tmpl.contains(ptr)) {
        throw Error(ErrorCode::DOMAIN,
                    "parameter path " + p.path + " does not resolve in the system template");
    }
    if (!tmpl.at(ptr).is_number()) {
        throw Error(ErrorCode::DOMAIN, "parameter path " + p.path + " must point at a number");
    }
    return p;
}

} // namespace

CriterionChoice parse_criterion(const std::string& text) {
    if (text == "thm7") return {CriterionKind::THM7, std::nullopt};
    if (text == "thm8") return {CriterionKind::THM8, std::nullopt};
    if (text == "necessary") return {CriterionKind::NECESSARY_ONLY, std::nullopt};
    if (text.rfind("necessary:", 0) == 0) {
        const char* first = text.data() + 10;
        const char* last = text.data() + text.size();
        long r = 0;
        const auto [ptr, ec] = std::from_chars(first, last, r);
        if (ec == std::errc() && ptr == last && r >= 1) {
            return {CriterionKind::NECESSARY_ONLY, r};
        }
    }
    throw Error(ErrorCode::DOMAIN,
                "criterion must be necessary[:R], thm7 or thm8, got \"" + text + "\"");
}

SweepSpec sweep_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::IO, "sweep: top level must be an object");
    if (!j.contains("system")) throw Error(ErrorCode::IO, "sweep: missing 'system' template");
    if (!j.contains("parameters") || !j["parameters"].is_array() || j["parameters"].size() != 2) {
        throw Error(ErrorCode::IO, "sweep: 'parameters' must list exactly two axes");
    }
    if (!j.contains("criterion") || !j["criterion"].is_string()) {
        throw Error(ErrorCode::IO, "sweep: missing string field 'criterion'");
    }
    SweepSpec spec;
    spec.system_template = j["system"];
    spec.param1 = parameter_from_json(j["parameters"][0], spec.system_template);
    spec.param2 = parameter_from_json(j["parameters"][1], spec.system_template);
    const CriterionChoice choice = parse_criterion(j["criterion"].get<std::string>());
    spec.criterion = choice.kind;
    spec.overrides.fixed_r = choice.fixed_r;
    if (j.contains("r")) {
        if (!j["r"].is_number_integer()) throw Error(ErrorCode::IO, "sweep: 'r' must be an integer");
        spec.overrides.fixed_r = j["r"].get<long>();
    }
    if (j.contains("a_bound")) {
        if (!j["a_bound"].is_number()) throw Error(ErrorCode::IO, "sweep: 'a_bound' must be a number");
        spec.overrides.a_bound = j["a_bound"].get<double>();
    }
    if (j.contains("alpha0_frac")) {
        if (!j["alpha0_frac"].is_number()) {
            throw Error(ErrorCode::IO, "sweep: 'alpha0_frac' must be a number");
        }
        spec.overrides.alpha0_frac = j["alpha0_frac"].get<double>();
    }
    return spec;
}

SweepSpec load_sweep(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IO, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::IO, std::string("JSON parse failure in ") + path + ": " + e.what());
    }
    return sweep_from_json(j);
}

int exit_code(Verdict v) noexcept {
    switch (v) {
        case Verdict::STABLE: return 0;
        case Verdict::UNSTABLE: return 10;
        case Verdict::LYAPUNOV_CONDITION_FAILS: return 20;
        case Verdict::UNDECIDED_NUMERIC: return 30;
    }
    return 30;
}

nlohmann::json check_report(const TimeDelaySystem& sys, CriterionKind kind,
                            const CriterionOverrides& overrides, bool with_oracle) {
    const auto t0 = std::chrono::steady_clock::now();
    const StabilityReport sr = finite_criterion(sys, kind, overrides);

    nlohmann::json rep;
    rep["verdict"] = to_string(sr.verdict);
    rep["criterion"] = to_string(sr.criterion);
    rep["exit_code"] = exit_code(sr.verdict);
    rep["r_used"] = sr.r_used;
    rep["min_eigenvalue"] = sr.min_eigenvalue;  // NaN serializes as null
    rep["definiteness_tol"] = sr.definiteness_tol;
    rep["boundary"] = {{"sigma_min", sr.sigma_min}, {"sigma_max", sr.sigma_max}};
    if (sr.constants) {
        const CriterionConstants& c = *sr.constants;
        rep["constants"] = {{"M", c.M},
                            {"M1", c.M1},
                            {"nu", c.nu},
                            {"L", c.L},
                            {"rho", c.rho},
                            {"a", c.a},
                            {"b", c.b},
                            {"beta_star", c.beta_star},
                            {"alpha0_star", c.alpha0_star},
                            {"alpha0_used", c.alpha0_used},
                            {"r_thm7", c.r_thm7},
                            {"r_thm8", c.r_thm8}};
    } else {
        rep["constants"] = nullptr;
    }
    if (sr.verdict != Verdict::LYAPUNOV_CONDITION_FAILS) {
        const PropertyReport props = check_properties(build_lyapunov_matrix(sys));
        rep["residuals"] = {{"dynamic", props.dynamic},
                            {"symmetry", props.symmetry},
                            {"algebraic", props.algebraic},
                            {"continuity", props.continuity},
                            {"grid_points", props.grid_points}};
    } else {
        rep["residuals"] = nullptr;
    }
    if (with_oracle) rep["oracle"] = oracle_json(sys);
    rep["timings"] = {{"criterion_ms", sr.wall_seconds * 1e3},
                      {"total_ms", static_cast<double>(elapsed_ms(t0))}};
    return rep;
}

void run_sweep(const SweepSpec& spec, bool with_oracle, long workers, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const nlohmann::json::json_pointer ptr1(spec.param1.path);
    const nlohmann::json::json_pointer ptr2(spec.param2.path);
    const long total = spec.param1.steps * spec.param2.steps;

    struct Row {
        std::string verdict, r_used, min_eig, oracle;
    };
    std::vector<Row> rows(static_cast<size_t>(total));

    const auto axis_value = [](const SweepParameter& p, long i) {
        return p.min + (p.max - p.min) * static_cast<double>(i) / static_cast<double>(p.steps - 1);
    };
    const auto fill = [&](long idx) {
        Row& row = rows[static_cast<size_t>(idx)];
        nlohmann::json point = spec.system_template;
        point[ptr1] = axis_value(spec.param1, idx / spec.param2.steps);
        point[ptr2] = axis_value(spec.param2, idx % spec.param2.steps);
        try {
            const TimeDelaySystem sys = system_from_json(point);
            const StabilityReport sr = finite_criterion(sys, spec.criterion, spec.overrides);
            row.verdict = to_string(sr.verdict);
            row.r_used = std::to_string(sr.r_used);
            row.min_eig = format("%.9e", sr.min_eigenvalue);
        } catch (const std::exception&) {
            row.verdict = "ERROR";
        }
        if (with_oracle) {
            try {
                row.oracle = to_string(oracle_verdict(system_from_json(point)));
            } catch (const std::exception&) {
                row.oracle = "ERROR";
            }
        }
    };

    long pool_size =
        workers > 0 ? workers : static_cast<long>(std::thread::hardware_concurrency());
    pool_size = std::clamp(pool_size, 1L, total);
    std::atomic<long> cursor{0};
    const auto drain = [&] {
        for (long idx = cursor.fetch_add(1); idx < total; idx = cursor.fetch_add(1)) fill(idx);
    };
    if (pool_size == 1) {
        drain();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(pool_size));
        for (long i = 0; i < pool_size; ++i) pool.emplace_back(drain);
        for (auto& worker : pool) worker.join();
    }

    out << "param1,param2,verdict,r_used,min_eig";
    if (with_oracle) out << ",oracle_verdict";
    out << '\n';
    for (long idx = 0; idx < total; ++idx) {
        const Row& row = rows[static_cast<size_t>(idx)];
        out << format("%.10g", axis_value(spec.param1, idx / spec.param2.steps)) << ','
            << format("%.10g", axis_value(spec.param2, idx % spec.param2.steps)) << ','
            << row.verdict << ',' << row.r_used << ',' << row.min_eig;
        if (with_oracle) out << ',' << row.oracle;
        out << '\n';
    }
    out << "# wall_ms," << elapsed_ms(t0) << '\n';
}

void write_lyapmat_csv(const TimeDelaySystem& sys, long tau_samples, std::ostream& out) {
    if (tau_samples < 1) {
        throw Error(ErrorCode::DOMAIN,
                    "lyapmat: tau_samples must be >= 1, got " + std::to_string(tau_samples));
    }
    const auto t0 = std::chrono::steady_clock::now();
    validate(sys);
    const LyapunovMatrix u = build_lyapunov_matrix(sys);
    const Eigen::Index n = u.dim();

    out << "tau";
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out << ",u_" << i << '_' << j;
    out << ",sym_residual,dyn_residual\n";

    for (long s = 0; s < tau_samples; ++s) {
        const double tau = tau_samples == 1 ? 0.0
                                            : u.horizon() * static_cast<double>(s) /
                                                  static_cast<double>(tau_samples - 1);
        const Matrix val = u.at(tau);
        Matrix dyn = u.derivative_at(tau);
        for (const Term& term : sys.terms) dyn -= u.at(tau - term.delay) * term.A;
        const double sym = (u.at(-tau) - val.transpose()).cwiseAbs().maxCoeff();
        out << format("%.10g", tau);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) out << ',' << format("%.17g", val(i, j));
        out << ',' << format("%.3e", sym) << ',' << format("%.3e", dyn.cwiseAbs().maxCoeff())
            << '\n';
    }

    const PropertyReport props = check_properties(u);
    out << "# dynamic_residual," << format("%.3e", props.dynamic) << '\n';
    out << "# symmetry_residual," << format("%.3e", props.symmetry) << '\n';
    out << "# algebraic_residual," << format("%.3e", props.algebraic) << '\n';
    out << "# continuity_residual," << format("%.3e", props.continuity) << '\n';
    out << "# wall_ms," << elapsed_ms(t0) << '\n';
}

void write_fundamental_csv(const TimeDelaySystem& sys, double step, std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    validate(sys);
    const FundamentalMatrix k = build_fundamental(sys, sys.H, step);
    const Eigen::Index n = k.dim();

    out << "t";
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) out << ",k_" << i << '_' << j;
    out << '\n';

    const auto& grid = k.grid();
    for (size_t idx = 0; idx < grid.value.size(); ++idx) {
        out << format("%.10g", grid.dt * static_cast<double>(idx));
        const Matrix& val = grid.value[idx];
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) out << ',' << format("%.17g", val(i, j));
        out << '\n';
    }
    out << "# wall_ms," << elapsed_ms(t0) << '\n';
}

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"exponential stability of linear time-delay systems via the delay Lyapunov matrix"};
    app.require_subcommand(1);

    std::string input;
    std::string criterion_text = "thm8";
    std::string out_path;
    long flag_r = 0;
    double a_bound = 0.0;
    double alpha0_frac = 0.5;
    bool with_oracle = false;
    long workers = 0;
    long tau_samples = 129;
    bool dump_fundamental = false;
    double step = -1.0;

    CLI::App* check = app.add_subcommand("check", "decide stability of one system (JSON report)");
    check->add_option("input", input, "system description (JSON file)")->required();
    check->add_option("--criterion", criterion_text, "necessary[:R] | thm7 | thm8 (default thm8)");
    check->add_option("--r", flag_r, "fix the number of grid points r")
        ->check(CLI::PositiveNumber);
    check->add_option("--a-bound", a_bound, "decay-rate bound a (default: the norm constant M)");
    check->add_option("--alpha0-frac", alpha0_frac, "fraction of alpha0* used by thm8, in (0,1)");
    check->add_flag("--oracle", with_oracle, "attach the characteristic-root verdict");
    check->add_option("--out", out_path, "write the report to this file instead of stdout");

    CLI::App* sweep = app.add_subcommand("sweep", "two-parameter stability map (CSV)");
    sweep->add_option("input", input, "sweep description (JSON file)")->required();
    sweep->add_option("--criterion", criterion_text, "override the file's criterion");
    sweep->add_option("--r", flag_r, "override the fixed r")->check(CLI::PositiveNumber);
    sweep->add_option("--a-bound", a_bound, "override the decay-rate bound");
    sweep->add_option("--alpha0-frac", alpha0_frac, "override the alpha0 fraction");
    sweep->add_flag("--oracle", with_oracle, "append an oracle_verdict column");
    sweep->add_option("--workers", workers, "parallel grid jobs (default: hardware concurrency)")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--out", out_path, "write the CSV to this file instead of stdout");

    CLI::App* lyapmat = app.add_subcommand("lyapmat", "dump the delay Lyapunov matrix (CSV)");
    lyapmat->add_option("input", input, "system description (JSON file)")->required();
    lyapmat->add_option("--tau-samples", tau_samples, "equidistant rows over [0, H] (default 129)")
        ->check(CLI::PositiveNumber);
    lyapmat->add_flag("--fundamental", dump_fundamental,
                      "dump the fundamental matrix K instead of U");
    lyapmat->add_option("--step", step, "grid step for --fundamental (default H/2048)");
    lyapmat->add_option("--out", out_path, "write the CSV to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
            std::cerr << "error: cannot write " << out_path << '\n';
            return 1;
        }
        out = &file;
    }

    try {
        if (check->parsed()) {
            const TimeDelaySystem sys = load_system(input);
            const CriterionChoice choice = parse_criterion(criterion_text);
            CriterionOverrides overrides;
            overrides.fixed_r = choice.fixed_r;
            if (check->count("--r") > 0) overrides.fixed_r = flag_r;
            if (check->count("--a-bound") > 0) overrides.a_bound = a_bound;
            if (check->count("--alpha0-frac") > 0) overrides.alpha0_frac = alpha0_frac;
            const nlohmann::json rep = check_report(sys, choice.kind, overrides, with_oracle);
            *out << rep.dump(2) << '\n';
            return rep["exit_code"].get<int>();
        }
        if (sweep->parsed()) {
            SweepSpec spec = load_sweep(input);
            if (sweep->count("--criterion") > 0) {
                const CriterionChoice choice = parse_criterion(criterion_text);
                spec.criterion = choice.kind;
                spec.overrides.fixed_r = choice.fixed_r;
            }
            if (sweep->count("--r") > 0) spec.overrides.fixed_r = flag_r;
            if (sweep->count("--a-bound") > 0) spec.overrides.a_bound = a_bound;
            if (sweep->count("--alpha0-frac") > 0) spec.overrides.alpha0_frac = alpha0_frac;
            run_sweep(spec, with_oracle, workers, *out);
            return 0;
        }
        const TimeDelaySystem sys = load_system(input);
        if (dump_fundamental) {
            write_fundamental_csv(sys, step, *out);
        } else {
            write_lyapmat_csv(sys, tau_samples, *out);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::LYAPUNOV_CONDITION_FAILS ? 20 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace delaylyap
