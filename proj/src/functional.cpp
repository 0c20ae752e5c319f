#include "delaylyap/functional.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace delaylyap {

namespace {

// ---------------------------------------------------------------------------
// Piecewise Simpson machinery
// ---------------------------------------------------------------------------

struct Piece {
    double a{0.0}, b{0.0};
    long n{0};  ///< even subinterval count
};

long even_count(double len, double target_ds) {
    auto n = static_cast<long>(std::ceil(len / target_ds - 1e-9));
    n = std::max<long>(2, n);
    if (n % 2) ++n;
    return n;
}

/// Split [a, b] at declared jump positions strictly inside it.
std::vector<Piece> split_pieces(double a, double b, const std::vector<double>& jumps,
                                double target_ds) {
    std::vector<double> cuts{a};
    for (double j : jumps) {
        if (j > a + 1e-13 && j < b - 1e-13) cuts.push_back(j);
    }
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    std::vector<Piece> out;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double len = cuts[i + 1] - cuts[i];
        if (len <= 1e-13) continue;
        out.push_back({cuts[i], cuts[i + 1], even_count(len, target_ds)});
    }
    return out;
}

double simpson_c(long s, long n) { return (s == 0 || s == n) ? 1.0 : ((s % 2) ? 4.0 : 2.0); }

/// Node position: endpoints exact so jump-side evaluation sees the stored
/// jump coordinate bit for bit.
double node_pos(const Piece& p, long s) {
    if (s == 0) return p.a;
    if (s == p.n) return p.b;
    return p.a + (p.b - p.a) * (static_cast<double>(s) / static_cast<double>(p.n));
}

/// Value at a node with the correct one-sided limit: piece ends are left
/// limits, piece starts and interiors the right-continuous values.
Vector node_value(const InitialFunction& f, const Piece& p, long s) {
    const double theta = node_pos(p, s);
    return (s == p.n) ? f.left_limit(theta) : f.eval(theta);
}

/// U lookup that prefers the shared sample lattice and falls back to the
/// exact propagated evaluation, memoized per evaluator call.
class UCache {
public:
    UCache(const LyapunovMatrix& u, const LyapunovSamples& table)
        : u_(&u), table_(&table), max_idx_(static_cast<long>(table.value.size()) - 1) {}

    Matrix operator()(double tau) const {
        const double q = tau / table_->ds;
        const double r = std::round(q);
        if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(r)) &&
            std::abs(r) <= static_cast<double>(max_idx_)) {
            const long idx = std::lround(r);
            if (idx >= 0) return table_->value[static_cast<size_t>(idx)];
            return table_->value[static_cast<size_t>(-idx)].transpose();
        }
        auto found = memo_.find(tau);
        if (found != memo_.end()) return found->second;
        return memo_.emplace(tau, u_->at(tau)).first->second;
    }

private:
    const LyapunovMatrix* u_;
    const LyapunovSamples* table_;
    long max_idx_;
    mutable std::map<double, Matrix> memo_;
};

/// Weighted source nodes of the convolution terms: each entry carries
/// xi = theta + h_j in [0, h_j] and the vector w * A_j * phi(theta), so that
///   sum_j int_{-h_j}^0 U(x - theta - h_j) A_j phi(theta) dtheta
///     ~ sum_entries U(x - xi_e) v_e.
struct SourceEntry {
    double xi{0.0};
    Vector v;
};

std::vector<SourceEntry> build_sources(const TimeDelaySystem& sys, const InitialFunction& f,
                                       double target_ds) {
    std::vector<SourceEntry> out;
    for (size_t j = 1; j < sys.terms.size(); ++j) {
        const double hj = sys.terms[j].delay;
        const Matrix& aj = sys.terms[j].A;
        for (const Piece& p : split_pieces(-hj, 0.0, f.jump_points, target_ds)) {
            const double w0 = (p.b - p.a) / (3.0 * static_cast<double>(p.n));
            for (long s = 0; s <= p.n; ++s) {
                out.push_back({node_pos(p, s) + hj,
                               Vector(w0 * simpson_c(s, p.n) * (aj * node_value(f, p, s)))});
            }
        }
    }
    return out;
}

std::vector<double> merged_jumps(const InitialFunction& a, const InitialFunction& b) {
    std::vector<double> out = a.jump_points;
    out.insert(out.end(), b.jump_points.begin(), b.jump_points.end());
    std::sort(out.begin(), out.end());
    return out;
}

/// int_{-H}^0 phi^T W psi, split at the jumps of both functions.
double cost_term(const TimeDelaySystem& sys, const InitialFunction& phi,
                 const InitialFunction& psi, double horizon, double target_ds) {
    double acc = 0.0;
    for (const Piece& p : split_pieces(-horizon, 0.0, merged_jumps(phi, psi), target_ds)) {
        const double w0 = (p.b - p.a) / (3.0 * static_cast<double>(p.n));
        for (long s = 0; s <= p.n; ++s) {
            acc += w0 * simpson_c(s, p.n) *
                   node_value(phi, p, s).dot(sys.W * node_value(psi, p, s));
        }
    }
    return acc;
}

/// Per-segment Simpson interval count for quad_points across [-H, 0], chosen
/// so jump-free quadrature nodes land exactly on the U sample lattice.
int per_segment(const LyapunovMatrix& u, int quad_points) {
    const long segs = u.segments();
    long per = (std::max(8, quad_points) + segs - 1) / segs;
    per = std::max<long>(2, per);
    if (per % 2) ++per;
    return static_cast<int>(per);
}

} // namespace

// ---------------------------------------------------------------------------
// PsiFunction
// ---------------------------------------------------------------------------

PsiFunction::PsiFunction(std::shared_ptr<const FundamentalMatrix> k, std::vector<double> taus,
                         std::vector<Vector> gammas)
    : k_(std::move(k)), taus_(std::move(taus)), gammas_(std::move(gammas)) {}

Vector PsiFunction::at(double theta) const {
    Vector acc = Vector::Zero(k_->dim());
    for (size_t i = 0; i < taus_.size(); ++i) {
        const double arg = theta + taus_[i];
        if (arg >= 0.0) acc += k_->at(arg) * gammas_[i];
    }
    return acc;
}

Vector PsiFunction::left_at(double theta) const {
    Vector acc = Vector::Zero(k_->dim());
    for (size_t i = 0; i < taus_.size(); ++i) {
        const double arg = theta + taus_[i];
        if (arg > 0.0) acc += k_->at(arg) * gammas_[i];
    }
    return acc;
}

Vector PsiFunction::derivative_at(double theta) const {
    Vector acc = Vector::Zero(k_->dim());
    for (size_t i = 0; i < taus_.size(); ++i) {
        const double arg = theta + taus_[i];
        if (arg >= 0.0) acc += k_->derivative_at(arg) * gammas_[i];
    }
    return acc;
}

InitialFunction PsiFunction::as_initial() const {
    auto self = std::make_shared<PsiFunction>(*this);
    InitialFunction f;
    f.eval = [self](double theta) { return self->at(theta); };
    f.deriv = [self](double theta) { return self->derivative_at(theta); };
    f.eval_left = [self](double theta) { return self->left_at(theta); };
    for (auto it = taus_.rbegin(); it != taus_.rend(); ++it) {
        if (*it > 0.0) f.jump_points.push_back(-*it);
    }
    return f;
}

PsiFunction build_psi(std::shared_ptr<const FundamentalMatrix> k, std::vector<double> taus,
                      std::vector<Vector> gammas) {
    if (!k) throw Error(ErrorCode::DOMAIN, "build_psi: missing fundamental matrix");
    if (taus.empty() || taus.size() != gammas.size()) {
        throw Error(ErrorCode::DOMAIN, "build_psi: need matching nonempty taus and gammas");
    }
    const double horizon = k->system().H;
    for (size_t i = 0; i < taus.size(); ++i) {
        if (i > 0 && !(taus[i] > taus[i - 1])) {
            throw Error(ErrorCode::DOMAIN, "build_psi: taus must be strictly increasing");
        }
        if (taus[i] < 0.0 || taus[i] > horizon * (1.0 + 1e-12)) {
            throw Error(ErrorCode::DOMAIN, "build_psi: taus must lie in [0, H]");
        }
        if (taus[i] > k->t_end() * (1.0 + 1e-12)) {
            throw Error(ErrorCode::DOMAIN, "build_psi: fundamental matrix not built far enough");
        }
        if (gammas[i].size() != k->dim()) {
            throw Error(ErrorCode::DOMAIN, "build_psi: coefficient dimension mismatch");
        }
    }
    return {std::move(k), std::move(taus), std::move(gammas)};
}

std::vector<double> equidistant_taus(double horizon, long r) {
    if (r < 1 || !(horizon > 0.0)) {
        throw Error(ErrorCode::DOMAIN, "equidistant_taus: need r >= 1 and a positive horizon");
    }
    if (r == 1) return {0.0};
    std::vector<double> taus(static_cast<size_t>(r));
    const double delta = horizon / static_cast<double>(r - 1);
    for (long i = 0; i < r; ++i) taus[static_cast<size_t>(i)] = delta * static_cast<double>(i);
    taus.back() = horizon;
    return taus;
}

// ---------------------------------------------------------------------------
// Functional evaluation
// ---------------------------------------------------------------------------

double eval_v0(const LyapunovMatrix& u, const InitialFunction& phi, int quad_points) {
    const TimeDelaySystem& sys = u.system();
    const int per = per_segment(u, quad_points);
    const double target_ds = u.basic_delay() / per;
    const UCache uc(u, u.samples(per));

    const Vector phi0 = phi.at_zero();
    const auto sources = build_sources(sys, phi, target_ds);

    double quadratic = phi0.dot(uc(0.0) * phi0);
    double cross = 0.0;
    for (const auto& e : sources) cross += phi0.dot(uc(-e.xi) * e.v);
    double doubled = 0.0;
    for (const auto& ep : sources) {
        Vector inner = Vector::Zero(sys.n);
        for (const auto& eq : sources) inner.noalias() += uc(ep.xi - eq.xi) * eq.v;
        doubled += ep.v.dot(inner);
    }
    return quadratic + 2.0 * cross + doubled;
}

double eval_v1(const LyapunovMatrix& u, const InitialFunction& phi, int quad_points) {
    const int per = per_segment(u, quad_points);
    return eval_v0(u, phi, quad_points) +
           cost_term(u.system(), phi, phi, u.horizon(), u.basic_delay() / per);
}

double eval_z(const LyapunovMatrix& u, const InitialFunction& phi, const InitialFunction& psi,
              int quad_points) {
    const TimeDelaySystem& sys = u.system();
    const int per = per_segment(u, quad_points);
    const double target_ds = u.basic_delay() / per;
    const UCache uc(u, u.samples(per));

    const Vector phi0 = phi.at_zero();
    const Vector psi0 = psi.at_zero();
    const auto sp = build_sources(sys, phi, target_ds);
    const auto sq = build_sources(sys, psi, target_ds);

    double acc = phi0.dot(uc(0.0) * psi0);
    for (const auto& e : sq) acc += phi0.dot(uc(-e.xi) * e.v);
    for (const auto& e : sp) acc += e.v.dot(uc(e.xi) * psi0);
    for (const auto& ep : sp) {
        Vector inner = Vector::Zero(sys.n);
        for (const auto& eq : sq) inner.noalias() += uc(ep.xi - eq.xi) * eq.v;
        acc += ep.v.dot(inner);
    }
    return acc + cost_term(sys, phi, psi, u.horizon(), target_ds);
}

double approx_error_bound(double coeff_bound, double deriv_bound, double horizon, long r) {
    if (r < 2) throw Error(ErrorCode::DOMAIN, "approx_error_bound: needs r >= 2");
    if (!(horizon > 0.0) || coeff_bound < 0.0 || deriv_bound < 0.0) {
        throw Error(ErrorCode::DOMAIN, "approx_error_bound: invalid constants");
    }
    const double delta = horizon / static_cast<double>(r - 1);
    return (coeff_bound + deriv_bound) * std::exp(deriv_bound * horizon) /
           (1.0 / delta + deriv_bound);
}

// ---------------------------------------------------------------------------
// Normalized initial-function sampling
// ---------------------------------------------------------------------------

namespace {

/// Decaying spiral e^{rho theta}(cos(omega theta) v1 + sin(omega theta) v2)
/// with rho^2 + omega^2 < M^2: sup norm 1 attained at 0, derivative below M.
InitialFunction spiral_initial(Eigen::Index n, double deriv_bound, std::mt19937& gen) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double omega = 0.95 * deriv_bound * unit(gen);
    const double rho =
        std::sqrt(std::max(0.0, 0.998 * deriv_bound * deriv_bound - omega * omega)) * unit(gen);

    Vector v1(n), v2(n);
    if (n == 1) {
        v1 << (unit(gen) < 0.5 ? -1.0 : 1.0);
        v2 << 0.0;
    } else {
        do {
            for (Eigen::Index i = 0; i < n; ++i) v1(i) = gauss(gen);
        } while (v1.norm() < 1e-6);
        v1.normalize();
        do {
            for (Eigen::Index i = 0; i < n; ++i) v2(i) = gauss(gen);
            v2 -= v1 * v1.dot(v2);
        } while (v2.norm() < 1e-6);
        v2.normalize();
    }

    InitialFunction f;
    f.eval = [=](double theta) {
        return Vector(std::exp(rho * theta) *
                      (std::cos(omega * theta) * v1 + std::sin(omega * theta) * v2));
    };
    f.deriv = [=](double theta) {
        const double c = std::cos(omega * theta), s = std::sin(omega * theta);
        return Vector(std::exp(rho * theta) *
                      ((rho * c - omega * s) * v1 + (rho * s + omega * c) * v2));
    };
    return f;
}

/// Window of a system trajectory around a norm peak, normalized. The window
/// sits past 2H so the solution is C1 on it regardless of the seed segment.
std::optional<InitialFunction> trajectory_window(const TimeDelaySystem& sys, double deriv_bound,
                                                 std::mt19937& gen) {
    const double horizon = sys.H;
    const auto seed = spiral_initial(sys.n, deriv_bound, gen);
    auto x = std::make_shared<Trajectory>(solve_ivp(sys, seed, 4.0 * horizon));

    double best_t = -1.0, best_norm = 0.0;
    for (int i = 0; i <= 512; ++i) {
        const double t = 2.2 * horizon + (4.0 * horizon - 2.2 * horizon) * i / 512.0;
        const double nrm = x->at(t).norm();
        if (nrm > best_norm) {
            best_norm = nrm;
            best_t = t;
        }
    }
    if (best_norm < 1e-12) return std::nullopt;

    InitialFunction f;
    f.eval = [x, best_t, best_norm](double theta) {
        return Vector(x->at(best_t + theta) / best_norm);
    };
    f.deriv = [x, best_t, best_norm](double theta) {
        return Vector(x->derivative_at(best_t + theta) / best_norm);
    };
    return f;
}

} // namespace

bool verify_normalized_initial(const InitialFunction& phi, double horizon, double deriv_bound,
                               int grid_points) {
    if (!phi.eval || !phi.deriv) return false;
    if (std::abs(phi.at_zero().norm() - 1.0) > 1e-9) return false;
    for (int i = 0; i <= grid_points; ++i) {
        const double theta = -horizon * static_cast<double>(i) / grid_points;
        if (phi.eval(theta).norm() > 1.0 + 1e-9) return false;
        if (phi.deriv(theta).norm() > deriv_bound * (1.0 + 1e-9)) return false;
    }
    return true;
}

InitialFunction sample_normalized_initial(const TimeDelaySystem& sys, std::mt19937& gen) {
    const double bound = norm_constants(sys).M;
    if (!(bound > 0.0) || !(sys.H > 0.0)) {
        throw Error(ErrorCode::DOMAIN,
                    "sample_normalized_initial: system has no dynamics to bound");
    }
    for (int attempt = 0; attempt < 4; ++attempt) {
        auto candidate = trajectory_window(sys, bound, gen);
        if (candidate && verify_normalized_initial(*candidate, sys.H, bound)) return *candidate;
    }
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto candidate = spiral_initial(sys.n, bound, gen);
        if (verify_normalized_initial(candidate, sys.H, bound)) return candidate;
    }
    throw Error(ErrorCode::NO_CONVERGENCE,
                "sample_normalized_initial: no candidate passed verification");
}

} // namespace delaylyap
