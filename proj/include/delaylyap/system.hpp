#pragma once

#include <vector>

#include "delaylyap/matrix.hpp"

namespace delaylyap {

// ============================================================================
// Linear time-delay system  x'(t) = sum_j A_j x(t - h_j),  0 = h_0 < ... < h_m
// ============================================================================

/// One coefficient matrix with its delay.
struct Term {
    double delay{0.0};
    Matrix A;
};

/// System description plus the weight matrix W of the quadratic functional.
/// `create` normalizes raw input (sorts delays, merges exact duplicates,
/// inserts a zero A_0 when absent) and checks structure; semantic rules that
/// only matter for the stability machinery live in `validate`.
struct TimeDelaySystem {
    Eigen::Index n{0};        ///< state dimension
    std::vector<Term> terms;  ///< sorted by delay, first entry has delay 0
    Matrix W;                 ///< symmetric positive definite weight
    double H{0.0};            ///< largest delay

    [[nodiscard]] static TimeDelaySystem create(std::vector<Term> terms, Matrix W = Matrix());

    /// Number of positive-delay terms (the m in the equation above).
    [[nodiscard]] Eigen::Index delayed_term_count() const {
        return static_cast<Eigen::Index>(terms.size()) - 1;
    }
};

/// Full semantic check: square shapes, strictly increasing delays starting at
/// zero, at least one nonzero positive-delay coefficient, W symmetric PD.
/// Throws NON_SQUARE / DUPLICATE_DELAY / NO_NONTRIVIAL_DELAYED_MATRIX /
/// W_NOT_PD / DOMAIN.
void validate(const TimeDelaySystem& sys);

/// Aggregate coefficient norms used by the criteria bounds:
/// M = sum ||A_j||, M1 = sum h_j ||A_j|| (spectral norms).
struct NormConstants {
    double M{0.0};
    double M1{0.0};
};

[[nodiscard]] NormConstants norm_constants(const TimeDelaySystem& sys);

/// Common basic delay: h_j = multiplier_j * basic_delay for every term.
struct Commensuration {
    double basic_delay{0.0};
    std::vector<long> multipliers;  ///< one per term, multipliers[0] == 0
    long max_multiplier{0};
    double max_residual{0.0};  ///< worst |h_j - k_j * basic_delay|
};

/// Find the largest basic delay reproducing every delay within
/// rel_tol * H (so the multipliers are as small as possible, with gcd 1).
/// Throws INCOMMENSURATE when no such delay exists and DOMAIN when the
/// system has no positive delay.
[[nodiscard]] Commensuration commensurate(const TimeDelaySystem& sys, double rel_tol = 1e-9);

} // namespace delaylyap
