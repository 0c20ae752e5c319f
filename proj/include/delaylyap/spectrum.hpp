#pragma once

// ---------------------------------------------------------------------------
// Characteristic-root estimation.
//
// Exponential stability of the delay system is equivalent to every root of
// det(s I - sum_j A_j e^{-s h_j}) lying strictly in the open left half-plane.
// This module estimates the rightmost roots independently of the Lyapunov
// machinery so criterion verdicts can be cross-validated:
//
//   1. discretize the generator on [-H, 0] with a Chebyshev collocation grid
//      (derivative rows inside, the delayed splicing row at theta = 0);
//   2. take the rightmost matrix eigenvalues as starting points;
//   3. polish each with Newton's method on the characteristic determinant,
//      using d/ds log det = tr(G^{-1} G');
//   4. double the grid until two successive refined estimates agree.
//
// Collocation alone converges spectrally; with the Newton polish the grid
// only has to be fine enough to *find* each rightmost root, not to resolve
// it, so the doubling loop normally exits after one round.
// ---------------------------------------------------------------------------

#include <complex>
#include <vector>

#include "delaylyap/system.hpp"

namespace delaylyap {

/// Rightmost characteristic roots with convergence diagnostics.
struct SpectrumEstimate {
    std::vector<std::complex<double>> roots;  ///< sorted by real part, descending
    long collocation_size{0};                 ///< final grid parameter N
    bool converged{false};  ///< successive grids agreed within 1e-8 on the rightmost root
    double residual{0.0};   ///< |det(s I - sum A_j e^{-s h_j})| at the rightmost root
};

/// Estimate the `count` rightmost characteristic roots starting from an
/// N-point grid (one extra root may be returned so a conjugate pair is never
/// split). The grid doubles (cap 512) until two successive refined rightmost
/// roots agree within 1e-8; agreement within 1e-6 returns an unconverged
/// estimate, anything worse throws NO_CONVERGENCE. Accepts any structurally
/// valid system with H > 0 (zero delayed coefficients allowed).
/// Throws DOMAIN for N < 2, count < 1, or H <= 0.
[[nodiscard]] SpectrumEstimate rightmost_roots(const TimeDelaySystem& sys, long n_start = 64,
                                               long count = 8);

/// Three-valued stability call for sweep consumers.
enum class OracleVerdict { STABLE, UNSTABLE, UNDECIDED };

[[nodiscard]] constexpr const char* to_string(OracleVerdict v) noexcept {
    switch (v) {
        case OracleVerdict::STABLE: return "STABLE";
        case OracleVerdict::UNSTABLE: return "UNSTABLE";
        case OracleVerdict::UNDECIDED: return "UNDECIDED";
    }
    return "UNKNOWN";
}

/// Band classification of an estimate: STABLE / UNSTABLE when the estimate
/// converged and the rightmost real part clears the +-1e-8 band, UNDECIDED
/// otherwise.
[[nodiscard]] OracleVerdict classify_rightmost(const SpectrumEstimate& est) noexcept;

/// `classify_rightmost` applied to a fresh 64-point estimate; a refinement
/// that fails to settle counts as UNDECIDED rather than an error.
[[nodiscard]] OracleVerdict oracle_verdict(const TimeDelaySystem& sys);

/// Boolean form of `oracle_verdict`; throws UNDECIDED inside the band.
[[nodiscard]] bool is_stable_oracle(const TimeDelaySystem& sys);

} // namespace delaylyap
