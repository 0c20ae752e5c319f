#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "delaylyap/system.hpp"

namespace delaylyap {

// ============================================================================
// Fundamental matrix K(t) and initial-value trajectories, method of steps.
// ============================================================================

/// Initial segment phi: [-H, 0] -> R^n for an initial-value problem.
/// `eval` supplies the right-continuous values used inside integrals; a jump
/// at the right endpoint (a "point mass" at zero) is expressed by setting
/// `value_at_zero`, which overrides eval(0) wherever phi(0) enters
/// algebraically. `deriv` is optional and only consulted by callers that need
/// derivative information (C1 membership checks).
///
/// Discontinuities anywhere in [-H, 0) must be declared in `jump_points`
/// (sorted); quadrature code splits integration intervals there and samples
/// the left side through `eval_left` (defaulting to `eval` when empty).
/// Integration of undeclared jumps silently degrades to first order.
struct InitialFunction {
    std::function<Vector(double)> eval;
    std::function<Vector(double)> deriv;       ///< may be empty
    Vector value_at_zero;                      ///< size 0 means "use eval(0)"
    std::vector<double> jump_points;           ///< sorted, in [-H, 0)
    std::function<Vector(double)> eval_left;   ///< left limits; may be empty

    [[nodiscard]] Vector at_zero() const { return value_at_zero.size() ? value_at_zero : eval(0.0); }
    [[nodiscard]] Vector left_limit(double theta) const {
        return eval_left ? eval_left(theta) : eval(theta);
    }
};

namespace detail {

/// Uniform-grid samples plus one-sided derivatives; cubic Hermite in between.
/// One-sided derivatives differ only at nodes where a delayed argument
/// crosses zero (the solution kinks there).
template <class State>
struct DenseGrid {
    double dt{0.0};
    std::vector<State> value;        ///< node values, value[i] at t = i*dt
    std::vector<State> deriv_right;  ///< derivative limits from above
    std::vector<State> deriv_left;   ///< derivative limits from below

    [[nodiscard]] double t_end() const { return dt * static_cast<double>(value.size() - 1); }
    [[nodiscard]] State at(double t) const;
    [[nodiscard]] State derivative_at(double t) const;
};

} // namespace detail

/// Fundamental matrix with dense output on [0, t_end]; zero for t < 0,
/// identity at t = 0.
class FundamentalMatrix {
public:
    [[nodiscard]] Matrix at(double t) const;
    /// One-sided derivative (from above, except at t_end). Zero for t < 0.
    [[nodiscard]] Matrix derivative_at(double t) const;

    [[nodiscard]] double step() const { return grid_.dt; }
    [[nodiscard]] double t_end() const { return grid_.t_end(); }
    [[nodiscard]] Eigen::Index dim() const { return sys_->n; }
    [[nodiscard]] const TimeDelaySystem& system() const { return *sys_; }
    [[nodiscard]] const detail::DenseGrid<Matrix>& grid() const { return grid_; }

private:
    friend FundamentalMatrix build_fundamental(const TimeDelaySystem&, double, double);
    std::shared_ptr<const TimeDelaySystem> sys_;
    detail::DenseGrid<Matrix> grid_;
};

/// Integrate K by steps with a fixed RK4 grid whose step divides every delay
/// (the requested step is refined until it does; default H/2048). Throws
/// INCOMPATIBLE_STEP when no such refinement exists or the grid would not fit
/// the memory budget.
[[nodiscard]] FundamentalMatrix build_fundamental(const TimeDelaySystem& sys, double t_end,
                                                  double step = -1.0);

/// How to bound ||K'|| on [0, H].
enum class DerivativeBound {
    RIGOROUS_GRONWALL,  ///< L = M e^{M H}, valid unconditionally
    EMPIRICAL_GRID,     ///< max ||sum_j A_j K(t-h_j)|| over the sample grid
};

/// Bound L on the derivative of the fundamental matrix over [0, H].
/// The empirical mode needs `k` built out to at least H. Throws DOMAIN when
/// the system has no positive delay (H = 0).
[[nodiscard]] double derivative_bound(const TimeDelaySystem& sys, const FundamentalMatrix& k,
                                      DerivativeBound mode);

/// Block row (I, K(d), K(2d), ..., K((r-1)d)) with d = H/(r-1); just (I) for
/// r = 1. Shape n x (n*r).
[[nodiscard]] Matrix build_Pr(const FundamentalMatrix& k, long r);

/// Solution x(t, phi) with dense output on [0, t_end]; evaluates phi for
/// t < 0.
class Trajectory {
public:
    [[nodiscard]] Vector at(double t) const;
    [[nodiscard]] Vector derivative_at(double t) const;
    [[nodiscard]] double step() const { return grid_.dt; }
    [[nodiscard]] double t_end() const { return grid_.t_end(); }

private:
    friend Trajectory solve_ivp(const TimeDelaySystem&, const InitialFunction&, double, double);
    std::shared_ptr<const TimeDelaySystem> sys_;
    InitialFunction phi_;
    detail::DenseGrid<Vector> grid_;
};

/// Integrate the initial-value problem on [0, t_end] with the same stepping
/// rules as build_fundamental.
[[nodiscard]] Trajectory solve_ivp(const TimeDelaySystem& sys, const InitialFunction& phi,
                                   double t_end, double step = -1.0);

} // namespace delaylyap
