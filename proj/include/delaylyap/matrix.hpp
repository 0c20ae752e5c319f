#pragma once

#include <Eigen/Dense>

#include "delaylyap/error.hpp"

namespace delaylyap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ============================================================================
// Dense kernels shared by every other module. All matrices are real doubles.
// ============================================================================

/// Kronecker product a ⊗ b.
[[nodiscard]] Matrix kron(const Matrix& a, const Matrix& b);

/// Column-stacking vectorization: vec([[1,2],[3,4]]) = (1,3,2,4)^T.
[[nodiscard]] Vector vec(const Matrix& a);

/// Inverse of vec for the given shape. Throws DOMAIN if sizes disagree.
[[nodiscard]] Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

/// Matrix exponential e^a (scaling-and-squaring with Pade approximant).
/// Throws DOMAIN for non-square input and NUMERIC if the result overflows.
[[nodiscard]] Matrix expm(const Matrix& a);

enum class DefinitenessClass {
    POSITIVE_DEFINITE,          ///< smallest eigenvalue above +tolerance
    NOT_POSITIVE_SEMIDEFINITE,  ///< smallest eigenvalue below -tolerance
    SINGULAR_BAND,              ///< smallest eigenvalue within the tolerance band
};

[[nodiscard]] constexpr const char* to_string(DefinitenessClass c) noexcept {
    switch (c) {
        case DefinitenessClass::POSITIVE_DEFINITE: return "POSITIVE_DEFINITE";
        case DefinitenessClass::NOT_POSITIVE_SEMIDEFINITE: return "NOT_POSITIVE_SEMIDEFINITE";
        case DefinitenessClass::SINGULAR_BAND: return "SINGULAR_BAND";
    }
    return "UNKNOWN";
}

/// Outcome of a symmetric definiteness test.
struct Definiteness {
    DefinitenessClass classification{DefinitenessClass::SINGULAR_BAND};
    double min_eigenvalue{0.0};
    double tolerance{0.0};  ///< band half-width actually used
};

/// Classify a symmetric matrix by its smallest eigenvalue. A negative `tol`
/// requests the default band 1e-9 * max(1, ||a||_2). Inputs are symmetrized;
/// a relative asymmetry above 1e-8 raises NUMERIC.
[[nodiscard]] Definiteness classify_definiteness(const Matrix& a, double tol = -1.0);

/// Largest singular value.
[[nodiscard]] double spectral_norm(const Matrix& a);

/// Solve a x = b for square a (one or many right-hand sides). Throws SINGULAR
/// when a pivot falls below the rank tolerance.
[[nodiscard]] Matrix solve_linear(const Matrix& a, const Matrix& b);

} // namespace delaylyap
