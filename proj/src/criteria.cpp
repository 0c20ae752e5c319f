#include "delaylyap/criteria.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "delaylyap/error.hpp"

namespace delaylyap {

namespace {

constexpr long kRSaturated = 1L << 62;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double lambda_min_sym(const Matrix& a) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()),
                                                   Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace

long memory_cap_default() {
    if (const char* env = std::getenv("DELAYLYAP_MEM_CAP")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap > 0) return cap;
    }
    return 20000;
}

// ---------------------------------------------------------------------------
// Block-matrix assembly and necessary tests
// ---------------------------------------------------------------------------

Matrix assemble_Kr(const LyapunovMatrix& u, long r) {
    if (r < 1) throw Error(ErrorCode::DOMAIN, "assemble_Kr: r must be at least 1");
    const Eigen::Index n = u.dim();
    if (r == 1) {
        const Matrix u0 = u.at(0.0);
        return 0.5 * (u0 + u0.transpose());
    }
    const double delta = u.horizon() / static_cast<double>(r - 1);
    std::vector<Matrix> blocks(static_cast<size_t>(r));
    for (long d = 0; d < r; ++d)
        blocks[static_cast<size_t>(d)] = u.at(d == r - 1 ? u.horizon() : d * delta);

    Matrix t(n * r, n * r);
    for (long i = 0; i < r; ++i)
        for (long j = 0; j < r; ++j) {
            const long d = j - i;
            if (d >= 0)
                t.block(n * i, n * j, n, n) = blocks[static_cast<size_t>(d)];
            else
                t.block(n * i, n * j, n, n) = blocks[static_cast<size_t>(-d)].transpose();
        }
    return 0.5 * (t + t.transpose()).eval();
}

Definiteness necessary_test(const LyapunovMatrix& u, const std::vector<double>& taus) {
    if (taus.empty()) throw Error(ErrorCode::DOMAIN, "necessary_test: empty point list");
    const double hi = u.horizon() * (1.0 + 1e-12);
    for (size_t i = 0; i < taus.size(); ++i) {
        if (taus[i] < 0.0 || taus[i] > hi)
            throw Error(ErrorCode::DOMAIN, "necessary_test: point outside [0, H]");
        if (i > 0 && !(taus[i] > taus[i - 1]))
            throw Error(ErrorCode::DOMAIN, "necessary_test: points must be strictly increasing");
    }
    const Eigen::Index n = u.dim();
    const long r = static_cast<long>(taus.size());
    Matrix g(n * r, n * r);
    for (long i = 0; i < r; ++i)
        for (long j = i; j < r; ++j) {
            const Matrix b = u.at(taus[static_cast<size_t>(j)] - taus[static_cast<size_t>(i)]);
            g.block(n * i, n * j, n, n) = b;
            g.block(n * j, n * i, n, n) = b.transpose();
        }
    return classify_definiteness(0.5 * (g + g.transpose()));
}

bool rough_test(const LyapunovMatrix& u, long grid) {
    if (grid < 1) throw Error(ErrorCode::DOMAIN, "rough_test: grid must be positive");
    const long per = std::max(1L, (grid + u.segments() - 1) / u.segments());
    const auto& table = u.samples(static_cast<int>(per));
    const double at_zero = spectral_norm(table.value.front());
    for (size_t i = 1; i < table.value.size(); ++i)
        if (spectral_norm(table.value[i]) >= at_zero) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Criterion constants
// ---------------------------------------------------------------------------

double compute_alpha0_star(const TimeDelaySystem& sys) {
    validate(sys);
    const Eigen::Index n = sys.n;
    const long m = sys.delayed_term_count();

    // First block row carries (A_0 ... A_m); adding the transpose symmetrizes.
    Matrix b = Matrix::Zero(n * (m + 1), n * (m + 1));
    for (long j = 0; j <= m; ++j) b.block(0, n * j, n, n) = sys.terms[static_cast<size_t>(j)].A;
    b += b.transpose().eval();

    // Conjugating by I (x) W^{-1/2} keeps the spectrum of the W^{-1}-weighted
    // matrix while staying symmetric for the eigensolver.
    const Eigen::SelfAdjointEigenSolver<Matrix> wroot(sys.W);
    const Matrix scale =
        Eigen::kroneckerProduct(Matrix::Identity(m + 1, m + 1), wroot.operatorInverseSqrt());
    const double lam = lambda_min_sym(scale * b * scale);
    if (lam >= -1e-14)
        throw Error(ErrorCode::NUMERIC,
                    "compute_alpha0_star: smallest eigenvalue not negative; "
                    "the weighted coefficient matrix is always indefinite");
    return -1.0 / (static_cast<double>(m + 1) * lam);
}

BetaStar compute_beta_star(const TimeDelaySystem& sys, double a) {
    if (!(a > 0.0)) throw Error(ErrorCode::DOMAIN, "compute_beta_star: a must be positive");
    if (!(sys.H > 0.0)) throw Error(ErrorCode::DOMAIN, "compute_beta_star: system has no delay");
    const double x = a * sys.H;
    const double x2 = x * x;
    const auto g = [x2](double bb) {
        const double s = std::sin(bb);
        return (x2 + bb * bb) * s * s * s * s - x2;
    };
    const double tol = 1e-13 * x2;
    double lo = 0.0, hi = std::asin(1.0) /* pi/2 */, mid = 0.5 * hi;
    for (int iter = 0; iter < 500; ++iter) {
        mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (std::abs(gm) <= tol) {
            const double c = std::cos(mid);
            const double beta =
                lambda_min_sym(sys.W) / (4.0 * a) * std::exp(-2.0 * x) * c * c;
            return {mid, beta};
        }
        (gm < 0.0 ? lo : hi) = mid;
    }
    throw Error(ErrorCode::NUMERIC, "compute_beta_star: bisection stalled above tolerance");
}

long criterion_r(double M, double L, double H, double alpha) {
    if (!(M > 0.0) || !(L > 0.0) || !(H > 0.0) || !(alpha >= 0.0))
        throw Error(ErrorCode::DOMAIN, "criterion_r: constants must be positive");
    const double raw =
        H * std::exp(L * H) * (M + L) * (alpha + std::sqrt(alpha * (alpha + 1.0))) - H * L;
    if (!std::isfinite(raw) || raw >= 4.0e18) return kRSaturated;
    const long r = 1 + static_cast<long>(std::ceil(raw));
    return std::max(2L, r);
}

CriterionConstants compute_r(const TimeDelaySystem& sys, const LyapunovMatrix& u,
                             const FundamentalMatrix& k, const CriterionOverrides& overrides) {
    if (!(overrides.alpha0_frac > 0.0 && overrides.alpha0_frac < 1.0))
        throw Error(ErrorCode::DOMAIN, "compute_r: alpha0_frac must lie in (0, 1)");
    if (overrides.nu_samples < 1)
        throw Error(ErrorCode::DOMAIN, "compute_r: nu_samples must be positive");

    CriterionConstants c;
    const auto norms = norm_constants(sys);
    c.M = norms.M;
    c.M1 = norms.M1;
    c.L = derivative_bound(sys, k, overrides.l_mode);

    const long per =
        std::max(1L, (overrides.nu_samples + u.segments() - 1) / u.segments());
    const auto& table = u.samples(static_cast<int>(per));
    double peak = 0.0;
    for (const auto& m : table.value) peak = std::max(peak, spectral_norm(m));
    c.nu = 1.01 * peak;  // sampled sup plus margin; U is smooth between nodes

    c.a = overrides.a_bound.value_or(c.M);
    const auto bs = compute_beta_star(sys, c.a);
    c.b = bs.b;
    c.beta_star = bs.beta_star;

    c.rho = c.nu * (1.0 + c.M1) * (1.0 + c.M1) + sys.H * spectral_norm(sys.W);
    c.alpha0_star = compute_alpha0_star(sys);
    c.alpha0_used = overrides.alpha0_frac * c.alpha0_star;

    c.r_thm7 = criterion_r(c.M, c.L, sys.H, c.rho / c.beta_star);
    c.r_thm8 = criterion_r(c.M, c.L, sys.H, c.rho / (c.beta_star + c.alpha0_used));
    return c;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

StabilityReport finite_criterion(const TimeDelaySystem& sys, CriterionKind which,
                                 const CriterionOverrides& overrides) {
    const auto t0 = Clock::now();
    validate(sys);

    StabilityReport report;
    report.criterion = which;

    const auto cond = check_lyapunov_condition(sys);
    report.sigma_min = cond.sigma_min;
    report.sigma_max = cond.sigma_max;
    if (!cond.holds) {
        // A singular boundary system means characteristic roots symmetric
        // about the origin, which already rules out exponential stability.
        report.verdict = Verdict::LYAPUNOV_CONDITION_FAILS;
        report.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
        report.wall_seconds = seconds_since(t0);
        return report;
    }

    const auto u = build_lyapunov_matrix(sys);
    long r = 0;
    std::optional<FundamentalMatrix> k;
    if (which == CriterionKind::NECESSARY_ONLY) {
        r = overrides.fixed_r.value_or(6);
        if (r < 1) throw Error(ErrorCode::DOMAIN, "finite_criterion: fixed_r must be positive");
    } else {
        k.emplace(build_fundamental(sys, sys.H));
        report.constants = compute_r(sys, u, *k, overrides);
        r = overrides.fixed_r.value_or(which == CriterionKind::THM7 ? report.constants->r_thm7
                                                                    : report.constants->r_thm8);
        if (r < 1) throw Error(ErrorCode::DOMAIN, "finite_criterion: fixed_r must be positive");
    }
    report.r_used = r;

    const long cap = overrides.memory_cap.value_or(memory_cap_default());
    if (r > cap / static_cast<long>(sys.n))  // n*r > cap, without overflow
        throw Error(ErrorCode::MEMORY_BUDGET,
                    "finite_criterion: n*r = " + std::to_string(sys.n) + "*" +
                        std::to_string(r) + " exceeds the cap " + std::to_string(cap));

    Matrix tested = assemble_Kr(u, r);
    if (which == CriterionKind::THM8) {
        const Matrix pr = build_Pr(*k, r);
        tested -= report.constants->alpha0_used * (pr.transpose() * pr);
        tested = 0.5 * (tested + tested.transpose()).eval();
    }

    const auto def = classify_definiteness(tested);
    report.min_eigenvalue = def.min_eigenvalue;
    report.definiteness_tol = def.tolerance;
    switch (def.classification) {
        case DefinitenessClass::POSITIVE_DEFINITE: report.verdict = Verdict::STABLE; break;
        case DefinitenessClass::NOT_POSITIVE_SEMIDEFINITE:
            report.verdict = Verdict::UNSTABLE;
            break;
        case DefinitenessClass::SINGULAR_BAND:
            report.verdict = Verdict::UNDECIDED_NUMERIC;
            break;
    }
    report.wall_seconds = seconds_since(t0);
    return report;
}

} // namespace delaylyap
