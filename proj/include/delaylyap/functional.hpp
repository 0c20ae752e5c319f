#pragma once

#include <memory>
#include <random>
#include <vector>

#include "delaylyap/fundamental.hpp"
#include "delaylyap/lyapunov.hpp"

namespace delaylyap {

// ============================================================================
// Quadratic and bilinear functionals built on the delay Lyapunov matrix.
//
// v0 is the quadratic functional whose derivative along solutions equals
// -x^T(t) W x(t). v1 adds the W integral over the initial segment; for stable
// systems it equals the total cost integral of x^T W x from -H to infinity.
// z is the bilinear form polarizing v1:
//   z(phi, psi) = (v1(phi + psi) - v1(phi - psi)) / 4.
//
// Quadrature: composite Simpson per smooth piece, pieces split at declared
// jump points of the initial functions. Lyapunov-matrix arguments that land
// on the shared sample lattice are read from the table; off-lattice arguments
// fall back to the exact propagated evaluation (memoized per call).
// ============================================================================

/// Finite combination psi(theta) = sum_i K(theta + tau_i) gamma_i with
/// 0 <= tau_1 < ... < tau_r <= H. Quadratic functionals restricted to this
/// span collapse to quadratic forms in finitely many values of U, which is
/// what the positivity criteria exploit. The function jumps at each -tau_i
/// (K jumps at zero), so its InitialFunction adapter declares those points.
class PsiFunction {
public:
    PsiFunction(std::shared_ptr<const FundamentalMatrix> k, std::vector<double> taus,
                std::vector<Vector> gammas);

    /// Right-continuous value at theta in [-H, 0].
    [[nodiscard]] Vector at(double theta) const;
    /// Limit from below; differs from at() exactly at the jump points.
    [[nodiscard]] Vector left_at(double theta) const;
    /// Right-sided derivative between jumps.
    [[nodiscard]] Vector derivative_at(double theta) const;

    /// Adapter for the quadrature evaluators; shares the backing K.
    [[nodiscard]] InitialFunction as_initial() const;

    [[nodiscard]] const std::vector<double>& taus() const { return taus_; }
    [[nodiscard]] const std::vector<Vector>& gammas() const { return gammas_; }
    [[nodiscard]] const FundamentalMatrix& fundamental() const { return *k_; }
    [[nodiscard]] Eigen::Index dim() const { return k_->dim(); }

private:
    std::shared_ptr<const FundamentalMatrix> k_;
    std::vector<double> taus_;
    std::vector<Vector> gammas_;
};

/// Validates shapes and monotonicity of taus. Throws DOMAIN on violation.
[[nodiscard]] PsiFunction build_psi(std::shared_ptr<const FundamentalMatrix> k,
                                    std::vector<double> taus, std::vector<Vector> gammas);

/// tau_i = (i-1) * horizon / (r-1); just {0} for r = 1. Throws DOMAIN for
/// r < 1.
[[nodiscard]] std::vector<double> equidistant_taus(double horizon, long r);

/// v0(phi) = phi(0)^T U(0) phi(0)
///         + 2 phi(0)^T sum_j int_{-h_j}^0 U(-t-h_j) A_j phi(t) dt
///         + double integral of phi^T A_i^T U(t1+h_i-t2-h_j) A_j phi.
/// `quad_points` is the Simpson subinterval target across a span of length H;
/// shorter pieces get proportionally fewer nodes (never below two).
[[nodiscard]] double eval_v0(const LyapunovMatrix& u, const InitialFunction& phi,
                             int quad_points = 512);

/// v1(phi) = v0(phi) + int_{-H}^0 phi^T W phi.
[[nodiscard]] double eval_v1(const LyapunovMatrix& u, const InitialFunction& phi,
                             int quad_points = 512);

/// Explicit five-term bilinear form (assembled independently of eval_v0, so
/// the polarization identity is a meaningful cross-check between the two).
[[nodiscard]] double eval_z(const LyapunovMatrix& u, const InitialFunction& phi,
                            const InitialFunction& psi, int quad_points = 512);

/// Uniform approximation error bound for replacing a normalized C1 initial
/// function by an r-point combination of fundamental-matrix columns:
///   eps_r = (M + L) e^{L H} / (1/delta_r + L),  delta_r = H / (r-1),
/// where M bounds the coefficient norms' sum and L bounds ||K'|| on [0, H].
/// Throws DOMAIN for r < 2.
[[nodiscard]] double approx_error_bound(double coeff_bound, double deriv_bound, double horizon,
                                        long r);

/// Draws a random C1 initial function with ||phi(theta)|| <= ||phi(0)|| = 1
/// on [-H, 0] and ||phi'|| bounded by sum_j ||A_j||. Tries windows of system
/// trajectories around a norm peak first (decaying solutions rarely peak at
/// the window's right end, so those draws are discarded); falls back to
/// decaying spirals, which satisfy the bounds by construction. Every
/// candidate is verified on a grid before being returned.
[[nodiscard]] InitialFunction sample_normalized_initial(const TimeDelaySystem& sys,
                                                        std::mt19937& gen);

/// Grid check of the normalization and derivative bounds above.
[[nodiscard]] bool verify_normalized_initial(const InitialFunction& phi, double horizon,
                                             double deriv_bound, int grid_points = 512);

} // namespace delaylyap
