#include "delaylyap/fundamental.hpp"

#include <cmath>

namespace delaylyap {

namespace detail {

namespace {

// Cubic Hermite basis on a unit cell.
template <class State>
State hermite(const State& y0, const State& d0, const State& y1, const State& d1, double dt,
              double s) {
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + dt * (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 +
           dt * (s3 - s2) * d1;
}

template <class State>
State hermite_deriv(const State& y0, const State& d0, const State& y1, const State& d1, double dt,
                    double s) {
    const double s2 = s * s;
    return ((6 * s2 - 6 * s) / dt) * y0 + (3 * s2 - 4 * s + 1) * d0 + ((6 * s - 6 * s2) / dt) * y1 +
           (3 * s2 - 2 * s) * d1;
}

} // namespace

template <class State>
State DenseGrid<State>::at(double t) const {
    const auto last = static_cast<long>(value.size()) - 1;
    const double ratio = t / dt;
    const long nearest = std::lround(ratio);
    if (std::abs(t - static_cast<double>(nearest) * dt) <= 1e-9 * dt && nearest >= 0 &&
        nearest <= last) {
        return value[static_cast<size_t>(nearest)];
    }
    const long cell = static_cast<long>(std::floor(ratio));
    if (cell < 0 || cell >= last) {
        throw Error(ErrorCode::DOMAIN, "dense grid evaluated outside [0, t_end] at t=" +
                                           std::to_string(t));
    }
    const auto c = static_cast<size_t>(cell);
    const double s = ratio - static_cast<double>(cell);
    return hermite(value[c], deriv_right[c], value[c + 1], deriv_left[c + 1], dt, s);
}

template <class State>
State DenseGrid<State>::derivative_at(double t) const {
    const auto last = static_cast<long>(value.size()) - 1;
    const double ratio = t / dt;
    const long nearest = std::lround(ratio);
    if (std::abs(t - static_cast<double>(nearest) * dt) <= 1e-9 * dt && nearest >= 0 &&
        nearest <= last) {
        return nearest == last ? deriv_left[static_cast<size_t>(nearest)]
                               : deriv_right[static_cast<size_t>(nearest)];
    }
    const long cell = static_cast<long>(std::floor(ratio));
    if (cell < 0 || cell >= last) {
        throw Error(ErrorCode::DOMAIN, "dense grid derivative outside [0, t_end]");
    }
    const auto c = static_cast<size_t>(cell);
    const double s = ratio - static_cast<double>(cell);
    return hermite_deriv(value[c], deriv_right[c], value[c + 1], deriv_left[c + 1], dt, s);
}

template struct DenseGrid<Matrix>;
template struct DenseGrid<Vector>;

} // namespace detail

namespace {

constexpr size_t kMaxSteps = 8'000'000;

// Fixed step that lands every delay on the node lattice.
double choose_step(const TimeDelaySystem& sys, double t_end, double requested) {
    if (!(t_end > 0.0)) throw Error(ErrorCode::DOMAIN, "t_end must be positive");
    std::vector<double> delays;
    for (const auto& t : sys.terms)
        if (t.delay > 0.0) delays.push_back(t.delay);

    double base = requested > 0.0 ? requested : (sys.H > 0.0 ? sys.H : t_end) / 2048.0;
    if (delays.empty()) return base;

    double g = delays.front();
    const double tol = 1e-12 * sys.H;
    for (size_t i = 1; i < delays.size(); ++i) {
        double a = std::max(g, delays[i]), b = std::min(g, delays[i]);
        while (b > tol) {
            double r = std::fmod(a, b);
            if (r > b - tol || r < tol) r = 0.0;
            a = b;
            b = r;
        }
        g = a;
    }
    if (!(g > tol)) {
        throw Error(ErrorCode::INCOMPATIBLE_STEP, "no step divides every delay");
    }
    base = std::min(base, g);
    const double dt = g / std::ceil(g / base - 1e-12);
    for (double h : delays) {
        const double m = std::round(h / dt);
        if (std::abs(h - m * dt) > 1e-9 * dt) {
            throw Error(ErrorCode::INCOMPATIBLE_STEP,
                        "step " + std::to_string(dt) + " does not divide delay " + std::to_string(h));
        }
    }
    if (t_end / dt > static_cast<double>(kMaxSteps)) {
        throw Error(ErrorCode::INCOMPATIBLE_STEP, "grid of " + std::to_string(t_end / dt) +
                                                      " steps exceeds the memory budget");
    }
    return dt;
}

template <class State>
detail::DenseGrid<State> integrate_dde(const TimeDelaySystem& sys, double dt, size_t nsteps,
                                       const State& x0, const State& zero,
                                       const std::function<State(double)>& pre,
                                       const State& pre_at_zero) {
    struct Delayed {
        long offset;  // delay in whole nodes
        Matrix A;
    };
    const Matrix& a0 = sys.terms.front().A;
    std::vector<Delayed> delayed;
    for (size_t j = 1; j < sys.terms.size(); ++j) {
        delayed.push_back({std::lround(sys.terms[j].delay / dt), sys.terms[j].A});
    }

    detail::DenseGrid<State> g;
    g.dt = dt;
    g.value.reserve(nsteps + 1);
    g.deriv_right.reserve(nsteps + 1);
    g.deriv_left.reserve(nsteps + 1);
    g.value.push_back(x0);

    // Node lookup; `from_left` picks the lower limit when the argument is 0.
    auto node = [&](long idx, bool from_left) -> State {
        if (idx > 0) return g.value[static_cast<size_t>(idx)];
        if (idx == 0) return from_left ? pre_at_zero : x0;
        return pre(static_cast<double>(idx) * dt);
    };
    // Value midway through cell `c` (only ever a fully built cell).
    auto mid = [&](long c) -> State {
        if (c < 0) return pre((static_cast<double>(c) + 0.5) * dt);
        return detail::hermite(g.value[static_cast<size_t>(c)], g.deriv_right[static_cast<size_t>(c)],
                               g.value[static_cast<size_t>(c + 1)],
                               g.deriv_left[static_cast<size_t>(c + 1)], dt, 0.5);
    };
    auto node_sum = [&](long i, const State& y, bool from_left) -> State {
        State f = a0 * y;
        for (const auto& d : delayed) f += d.A * node(i - d.offset, from_left);
        return f;
    };
    auto mid_sum = [&](long i, const State& y) -> State {
        State f = a0 * y;
        for (const auto& d : delayed) f += d.A * mid(i - d.offset);
        return f;
    };

    g.deriv_right.push_back(node_sum(0, x0, false));
    // The lower limit at t=0 belongs to the prehistory; store the upper limit
    // as a sentinel (never consulted by interpolation or bounds).
    g.deriv_left.push_back(g.deriv_right.front());

    for (size_t i = 0; i < nsteps; ++i) {
        const long li = static_cast<long>(i);
        const State& y = g.value[i];
        const State k1 = node_sum(li, y, false);
        const State k2 = mid_sum(li, State(y + 0.5 * dt * k1));
        const State k3 = mid_sum(li, State(y + 0.5 * dt * k2));
        const State k4 = node_sum(li + 1, State(y + dt * k3), true);
        g.value.push_back(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        g.deriv_right.push_back(node_sum(li + 1, g.value.back(), false));
        g.deriv_left.push_back(node_sum(li + 1, g.value.back(), true));
    }
    (void)zero;
    return g;
}

} // namespace

Matrix FundamentalMatrix::at(double t) const {
    if (t < 0.0) return Matrix::Zero(sys_->n, sys_->n);
    return grid_.at(t);
}

Matrix FundamentalMatrix::derivative_at(double t) const {
    if (t < 0.0) return Matrix::Zero(sys_->n, sys_->n);
    return grid_.derivative_at(t);
}

FundamentalMatrix build_fundamental(const TimeDelaySystem& sys, double t_end, double step) {
    const double dt = choose_step(sys, t_end, step);
    const auto nsteps = static_cast<size_t>(std::ceil(t_end / dt - 1e-9));
    const Eigen::Index n = sys.n;
    const Matrix eye = Matrix::Identity(n, n);
    const Matrix zero = Matrix::Zero(n, n);
    FundamentalMatrix k;
    k.sys_ = std::make_shared<TimeDelaySystem>(sys);
    k.grid_ = integrate_dde<Matrix>(sys, dt, nsteps, eye, zero,
                                    [&zero](double) { return zero; }, zero);
    return k;
}

double derivative_bound(const TimeDelaySystem& sys, const FundamentalMatrix& k,
                        DerivativeBound mode) {
    if (!(sys.H > 0.0)) {
        throw Error(ErrorCode::DOMAIN, "derivative bound needs a positive largest delay H");
    }
    const auto c = norm_constants(sys);
    if (mode == DerivativeBound::RIGOROUS_GRONWALL) {
        return c.M * std::exp(c.M * sys.H);
    }
    if (k.t_end() + 1e-9 * k.step() < sys.H) {
        throw Error(ErrorCode::DOMAIN, "fundamental matrix not built out to H");
    }
    const auto& g = k.grid();
    double best = 0.0;
    const auto limit = static_cast<size_t>(std::llround(sys.H / g.dt));
    for (size_t i = 0; i <= limit && i < g.value.size(); ++i) {
        best = std::max(best, spectral_norm(g.deriv_right[i]));
        if (i > 0) best = std::max(best, spectral_norm(g.deriv_left[i]));
    }
    return best;
}

Matrix build_Pr(const FundamentalMatrix& k, long r) {
    if (r < 1) throw Error(ErrorCode::DOMAIN, "r must be at least 1");
    const Eigen::Index n = k.dim();
    const double bigh = k.system().H;
    Matrix p(n, n * r);
    p.leftCols(n) = Matrix::Identity(n, n);
    if (r == 1) return p;
    const double delta = bigh / static_cast<double>(r - 1);
    for (long i = 1; i < r; ++i) {
        p.middleCols(n * i, n) = k.at(static_cast<double>(i) * delta);
    }
    return p;
}

Vector Trajectory::at(double t) const {
    if (t < 0.0) return phi_.eval(t);
    return grid_.at(t);
}

Vector Trajectory::derivative_at(double t) const {
    if (t < 0.0) {
        if (!phi_.deriv) throw Error(ErrorCode::DOMAIN, "initial function has no derivative");
        return phi_.deriv(t);
    }
    return grid_.derivative_at(t);
}

Trajectory solve_ivp(const TimeDelaySystem& sys, const InitialFunction& phi, double t_end,
                     double step) {
    if (!phi.eval) throw Error(ErrorCode::DOMAIN, "initial function has no evaluator");
    const double dt = choose_step(sys, t_end, step);
    const auto nsteps = static_cast<size_t>(std::ceil(t_end / dt - 1e-9));
    Trajectory tr;
    tr.sys_ = std::make_shared<TimeDelaySystem>(sys);
    tr.phi_ = phi;
    const Vector zero = Vector::Zero(sys.n);
    tr.grid_ = integrate_dde<Vector>(sys, dt, nsteps, phi.at_zero(), zero, phi.eval, phi.eval(0.0));
    return tr;
}

} // namespace delaylyap
