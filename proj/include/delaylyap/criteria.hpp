#pragma once

// ---------------------------------------------------------------------------
// Finite-dimensional stability criteria.
//
// The decision pipeline turns the delay Lyapunov matrix U into verdicts:
//
//   * necessary tests: the block matrix [U(tau_j - tau_i)] over points of
//     [0, H] must be positive definite whenever the system is exponentially
//     stable, as must U(0) alone, and ||U(tau)|| < ||U(0)|| on (0, H];
//   * the finite criterion: positive definiteness of the equidistant block
//     matrix K_r at one explicitly computable r is *equivalent* to
//     exponential stability (given the Lyapunov condition);
//   * the shifted variant subtracts alpha0 P_r^T P_r, where P_r stacks
//     fundamental-matrix blocks, and reaches a smaller r.
//
// The explicit r depends on a handful of constants: coefficient norms M and
// M1, a bound L on ||K'||, the sup nu of ||U|| over [0, H], a decay-rate
// bound a for the stable candidates, and derived quantities beta*, alpha0*.
// All of them live in CriterionConstants so reports stay reproducible.
// ---------------------------------------------------------------------------

#include <optional>
#include <vector>

#include "delaylyap/fundamental.hpp"
#include "delaylyap/lyapunov.hpp"
#include "delaylyap/matrix.hpp"
#include "delaylyap/system.hpp"

namespace delaylyap {

// ---------------------------------------------------------------------------
// Verdicts and report types
// ---------------------------------------------------------------------------

enum class Verdict {
    STABLE,                    ///< tested matrix positive definite
    UNSTABLE,                  ///< tested matrix not positive semidefinite
    UNDECIDED_NUMERIC,         ///< smallest eigenvalue inside the float band
    LYAPUNOV_CONDITION_FAILS,  ///< boundary system singular; U undefined
};

[[nodiscard]] constexpr const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::STABLE: return "STABLE";
        case Verdict::UNSTABLE: return "UNSTABLE";
        case Verdict::UNDECIDED_NUMERIC: return "UNDECIDED_NUMERIC";
        case Verdict::LYAPUNOV_CONDITION_FAILS: return "LYAPUNOV_CONDITION_FAILS";
    }
    return "UNKNOWN";
}

/// Which test produced a report.
enum class CriterionKind {
    NECESSARY_ONLY,  ///< K_r at a user-chosen r: UNSTABLE is certain, STABLE is
                     ///< "necessary condition passed at this r"
    THM7,            ///< K_r > 0 at the computed r (exact criterion)
    THM8,            ///< K_r - alpha0 P_r^T P_r > 0 at its (smaller) computed r
};

[[nodiscard]] constexpr const char* to_string(CriterionKind c) noexcept {
    switch (c) {
        case CriterionKind::NECESSARY_ONLY: return "NECESSARY_ONLY_r";
        case CriterionKind::THM7: return "THM7";
        case CriterionKind::THM8: return "THM8";
    }
    return "UNKNOWN";
}

/// Every constant entering the explicit r, plus both resulting r values.
struct CriterionConstants {
    double M{0.0};            ///< sum of coefficient spectral norms
    double M1{0.0};           ///< sum of h_j * ||A_j||
    double nu{0.0};           ///< sampled sup of ||U|| over [0, H], with margin
    double L{0.0};            ///< bound on ||K'|| over [0, H]
    double rho{0.0};          ///< quadratic-functional bound nu(1+M1)^2 + H ||W||
    double a{0.0};            ///< decay-rate bound used by beta*
    double b{0.0};            ///< root in (0, pi/2) of ((aH)^2+b^2) sin^4 b = (aH)^2
    double beta_star{0.0};    ///< lambda_min(W)/(4a) e^{-2aH} cos^2 b
    double alpha0_star{0.0};  ///< -1 / ((m+1) lambda_min(P))
    double alpha0_used{0.0};  ///< fraction of alpha0_star applied by the shifted test
    long r_thm7{0};
    long r_thm8{0};
};

/// Outcome of a full criterion run.
struct StabilityReport {
    Verdict verdict{Verdict::UNDECIDED_NUMERIC};
    CriterionKind criterion{CriterionKind::NECESSARY_ONLY};
    long r_used{0};
    double min_eigenvalue{0.0};  ///< of the tested matrix; NaN when U undefined
    double definiteness_tol{0.0};
    double sigma_min{0.0};  ///< boundary-system conditioning diagnostics
    double sigma_max{0.0};
    std::optional<CriterionConstants> constants;  ///< absent in necessary-only mode
    double wall_seconds{0.0};
};

/// Tuning knobs; defaults follow the documented rough estimates.
struct CriterionOverrides {
    std::optional<double> a_bound;  ///< sharper decay-rate bound; default M
    double alpha0_frac{0.5};        ///< alpha0 = frac * alpha0*, frac in (0,1)
    std::optional<long> fixed_r;    ///< skip the r formula (necessary-only mode)
    std::optional<long> memory_cap; ///< max n*r; default env DELAYLYAP_MEM_CAP or 20000
    DerivativeBound l_mode{DerivativeBound::RIGOROUS_GRONWALL};
    long nu_samples{4096};          ///< grid for the sup of ||U||
};

/// Effective n*r cap: DELAYLYAP_MEM_CAP when set to a positive integer,
/// otherwise 20000.
[[nodiscard]] long memory_cap_default();

// ---------------------------------------------------------------------------
// Building blocks
// ---------------------------------------------------------------------------

/// Equidistant block matrix K_r with (i,j) block U((j-i) H/(r-1)), symmetrized;
/// r = 1 gives the symmetrized U(0). Throws DOMAIN for r < 1.
[[nodiscard]] Matrix assemble_Kr(const LyapunovMatrix& u, long r);

/// Definiteness of [U(tau_j - tau_i)] over arbitrary strictly increasing
/// points of [0, H]. Positive definiteness is necessary for exponential
/// stability; failure certifies instability. Throws DOMAIN for an empty,
/// unsorted, or out-of-range point list.
[[nodiscard]] Definiteness necessary_test(const LyapunovMatrix& u,
                                          const std::vector<double>& taus);

/// Coarse screen: true iff max ||U(tau)|| < ||U(0)|| over a grid of (0, H].
/// Necessary for stability; true proves nothing.
[[nodiscard]] bool rough_test(const LyapunovMatrix& u, long grid = 512);

/// Lower-bound constant alpha0* = -1 / ((m+1) lambda_min(P)) where P stacks
/// the coefficient blocks against W^{-1}; lambda_min(P) < 0 for every valid
/// system, so alpha0* > 0. Throws NUMERIC if the eigenvalue is not clearly
/// negative (indicates an assembly bug, not a property of the system).
[[nodiscard]] double compute_alpha0_star(const TimeDelaySystem& sys);

/// Root b of ((aH)^2 + b^2) sin^4(b) = (aH)^2 on (0, pi/2) and the resulting
/// beta* = lambda_min(W)/(4a) e^{-2aH} cos^2(b). The root is unique; bisection
/// runs until the residual is at most 1e-13 (aH)^2. Throws DOMAIN for a <= 0.
struct BetaStar {
    double b{0.0};
    double beta_star{0.0};
};
[[nodiscard]] BetaStar compute_beta_star(const TimeDelaySystem& sys, double a);

/// The explicit block count r = 1 + ceil(H e^{LH} (M+L)(alpha +
/// sqrt(alpha(alpha+1))) - H L), clamped to at least 2 and saturated at 2^62
/// when the formula overflows. Monotone increasing in alpha.
[[nodiscard]] long criterion_r(double M, double L, double H, double alpha);

/// All criterion constants for a built U and fundamental matrix, including
/// both r values (alpha = rho/beta* and rho/(beta* + alpha0)).
[[nodiscard]] CriterionConstants compute_r(const TimeDelaySystem& sys, const LyapunovMatrix& u,
                                           const FundamentalMatrix& k,
                                           const CriterionOverrides& overrides = {});

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

/// Validate, check the Lyapunov condition, build U (and K when needed),
/// compute constants and r (or accept overrides.fixed_r), and classify the
/// tested matrix. NECESSARY_ONLY requires fixed_r (defaults to 6 when unset).
/// Throws MEMORY_BUDGET when n*r exceeds the cap, INCOMMENSURATE for
/// incommensurate delays, and validation errors for malformed systems.
[[nodiscard]] StabilityReport finite_criterion(const TimeDelaySystem& sys, CriterionKind which,
                                               const CriterionOverrides& overrides = {});

} // namespace delaylyap
