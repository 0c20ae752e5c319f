#pragma once

#include <map>
#include <memory>

#include "delaylyap/system.hpp"

namespace delaylyap {

// ============================================================================
// Delay Lyapunov matrix U(tau), defined by four properties:
//   continuity on [-H, H],
//   dynamics   U'(tau) = sum_j U(tau - h_j) A_j          (tau > 0),
//   symmetry   U(-tau) = U(tau)^T,
//   algebraic  sum_j [ U(-h_j) A_j + A_j^T U(h_j) ] = -W.
//
// With commensurate delays h_j = k_j h the restrictions Y_j(s) = U(jh + s)
// and their reflections Z_j(s) = Y_j(h - s)^T satisfy one linear ODE
// xi' = Lambda xi on [0, h]; the four properties become a square linear
// boundary-value system for xi(0). That system is singular exactly when the
// Lyapunov condition fails (a characteristic root pairs with its negative).
// ============================================================================

/// Dense samples of U and U' on a uniform lattice over [0, H].
struct LyapunovSamples {
    double ds{0.0};                ///< lattice spacing (basic delay / per_segment)
    std::vector<Matrix> value;     ///< U(i * ds)
    std::vector<Matrix> derivative;///< right-sided U'(i * ds)
};

class LyapunovMatrix {
public:
    /// Internal representation: stacked-segment ODE matrix and its solved
    /// initial stack. Exposed so tests can build perturbed copies.
    LyapunovMatrix(std::shared_ptr<const TimeDelaySystem> sys, double basic_delay, long segments,
                   Matrix ode_matrix, Vector initial_stack, double sigma_min, double sigma_max);

    /// Exact evaluation for |tau| <= H (propagates e^{Lambda s}); negative
    /// arguments return the transpose of the positive side bit-for-bit.
    [[nodiscard]] Matrix at(double tau) const;

    /// One-sided derivative (from above for tau >= 0, mirrored below).
    [[nodiscard]] Matrix derivative_at(double tau) const;

    /// Cached uniform samples with `per_segment` intervals per basic delay.
    [[nodiscard]] const LyapunovSamples& samples(int per_segment) const;

    [[nodiscard]] double basic_delay() const { return h_; }
    [[nodiscard]] long segments() const { return segments_; }
    [[nodiscard]] double horizon() const { return h_ * static_cast<double>(segments_); }
    [[nodiscard]] Eigen::Index dim() const { return sys_->n; }
    [[nodiscard]] const TimeDelaySystem& system() const { return *sys_; }

    /// Extremal singular values of the boundary system (conditioning report).
    [[nodiscard]] double boundary_sigma_min() const { return sigma_min_; }
    [[nodiscard]] double boundary_sigma_max() const { return sigma_max_; }

    /// Internal stacked representation (diagnostics, perturbation tests).
    [[nodiscard]] const Matrix& ode_matrix() const { return lambda_; }
    [[nodiscard]] const Vector& initial_stack() const { return stack0_; }

private:
    [[nodiscard]] Vector stack_at(double s) const;

    std::shared_ptr<const TimeDelaySystem> sys_;
    double h_{0.0};
    long segments_{0};
    Matrix lambda_;
    Vector stack0_;
    double sigma_min_{0.0}, sigma_max_{0.0};
    mutable std::map<int, LyapunovSamples> cache_;
};

/// Verdict on unique solvability of the boundary system.
struct LyapunovCondition {
    bool holds{false};
    double sigma_min{0.0};
    double sigma_max{0.0};
};

/// Single-delay closed form: with L and M assembled from A_0, A_1 and
/// E = e^{L h}, U(tau) = unvec([I 0] e^{L tau} M^{-1} [0; -vec W]).
/// Requires exactly one positive delay. Throws LYAPUNOV_CONDITION_FAILS when
/// M is singular.
[[nodiscard]] LyapunovMatrix build_single_delay(const TimeDelaySystem& sys);

/// General commensurate construction described above.
[[nodiscard]] LyapunovMatrix build_commensurate(const TimeDelaySystem& sys,
                                                const Commensuration& comm);

/// Convenience: single-delay form when m = 1, otherwise commensurate.
[[nodiscard]] LyapunovMatrix build_lyapunov_matrix(const TimeDelaySystem& sys,
                                                   double rel_tol = 1e-9);

/// Assemble the boundary system and report its conditioning without solving.
[[nodiscard]] LyapunovCondition check_lyapunov_condition(const TimeDelaySystem& sys,
                                                         double rel_tol = 1e-9);

/// Max-norm residuals of the four defining properties over a verification
/// grid of roughly `grid_points` samples of [0, H].
struct PropertyReport {
    double dynamic{0.0};
    double symmetry{0.0};
    double algebraic{0.0};
    double continuity{0.0};
    int grid_points{0};

    [[nodiscard]] double worst() const;
};

[[nodiscard]] PropertyReport check_properties(const LyapunovMatrix& u, int grid_points = 512);

} // namespace delaylyap
