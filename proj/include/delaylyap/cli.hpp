#pragma once

// ---------------------------------------------------------------------------
// Command-line front end.
//
// Three subcommands wrap the library for batch use:
//
//   check    one system -> JSON report + verdict exit code
//            (0 STABLE, 10 UNSTABLE, 20 LYAPUNOV_CONDITION_FAILS,
//             30 UNDECIDED_NUMERIC, 1 input error)
//   sweep    two-parameter grid -> CSV stability map; grid points run as
//            independent jobs, rows emitted in deterministic order
//   lyapmat  dump U(tau) (or the fundamental matrix) as CSV for inspection
//
// Reports are byte-deterministic for fixed inputs and flags; wall-clock
// timings only appear in '#'-prefixed CSV footer lines or the JSON timings
// object. The functions below carry all the logic so tests can call them
// in-process; `cli_main` only adds flag parsing on top.
// ---------------------------------------------------------------------------

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "delaylyap/criteria.hpp"
#include "delaylyap/system.hpp"

namespace delaylyap {

/// Parsed `--criterion` text: "necessary[:R]", "thm7" or "thm8".
struct CriterionChoice {
    CriterionKind kind{CriterionKind::NECESSARY_ONLY};
    std::optional<long> fixed_r;  ///< the R of "necessary:R"
};

/// Parse a criterion selector. Throws DOMAIN on anything else.
[[nodiscard]] CriterionChoice parse_criterion(const std::string& text);

/// One linearly spaced sweep axis bound to a JSON-pointer path in the
/// system template (e.g. "/terms/1/A/0/0" or "/terms/1/delay").
struct SweepParameter {
    std::string path;
    double min{0.0};
    double max{0.0};
    long steps{0};  ///< >= 2
};

/// Two-parameter sweep description:
///   { "system": {...}, "parameters": [ {path,min,max,steps}, {...} ],
///     "criterion": "necessary:6" | "thm7" | "thm8",
///     "r": 4, "a_bound": 0.5, "alpha0_frac": 0.5 }   // optional tuning
/// `overrides.fixed_r` carries both the fixed-r policy and necessary-mode r.
struct SweepSpec {
    nlohmann::json system_template;
    SweepParameter param1;  ///< outer loop
    SweepParameter param2;  ///< inner loop
    CriterionKind criterion{CriterionKind::NECESSARY_ONLY};
    CriterionOverrides overrides;
};

/// Parse and validate a sweep description (axis invariants, paths resolve
/// to numbers in the template). Throws IO / DOMAIN with diagnostics.
[[nodiscard]] SweepSpec sweep_from_json(const nlohmann::json& j);

/// Read a sweep description from a JSON file. Throws IO on unreadable files.
[[nodiscard]] SweepSpec load_sweep(const std::string& path);

/// Verdict-to-exit-code mapping shared by `check` and scripts.
[[nodiscard]] int exit_code(Verdict v) noexcept;

/// Full JSON report for one system: verdict, exit_code, r_used, constants,
/// Lyapunov-matrix property residuals, boundary conditioning, timings, and
/// (optionally) the characteristic-root oracle's view.
[[nodiscard]] nlohmann::json check_report(const TimeDelaySystem& sys, CriterionKind kind,
                                          const CriterionOverrides& overrides, bool with_oracle);

/// Run the sweep and write the CSV (header, steps1*steps2 rows, '#' footer).
/// Row order: param1 outer, param2 inner. Per-point failures become
/// verdict=ERROR rows; the sweep always completes. `workers` <= 0 means
/// hardware concurrency.
void run_sweep(const SweepSpec& spec, bool with_oracle, long workers, std::ostream& out);

/// CSV dump of U on `tau_samples` equidistant points of [0, H] (one row
/// tau = 0 when tau_samples is 1) with per-row symmetry/dynamics residuals
/// and a footer carrying the global property residuals. Throws DOMAIN for
/// tau_samples < 1 and LYAPUNOV_CONDITION_FAILS when U does not exist.
void write_lyapmat_csv(const TimeDelaySystem& sys, long tau_samples, std::ostream& out);

/// CSV dump of the fundamental matrix K on its [0, H] grid; `step` <= 0
/// picks the default (H/2048, refined to divide every delay).
void write_fundamental_csv(const TimeDelaySystem& sys, double step, std::ostream& out);

/// Flag parsing + dispatch; returns the process exit code.
[[nodiscard]] int cli_main(int argc, const char* const* argv);

} // namespace delaylyap
