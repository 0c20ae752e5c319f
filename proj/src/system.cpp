#include "delaylyap/system.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace delaylyap {

namespace {

void check_square(const Matrix& a, Eigen::Index n, const char* what) {
    if (a.rows() != n || a.cols() != n) {
        throw Error(ErrorCode::NON_SQUARE, std::string(what) + " must be " + std::to_string(n) +
                                               "x" + std::to_string(n) + ", got " +
                                               std::to_string(a.rows()) + "x" +
                                               std::to_string(a.cols()));
    }
}

// Euclid on reals; a tolerance turns "divides" into "divides up to tol".
double real_gcd(double a, double b, double tol) {
    while (b > tol) {
        double r = std::fmod(a, b);
        if (r > b - tol) r = 0.0;  // remainder indistinguishable from a full b
        if (r < tol) r = 0.0;
        a = b;
        b = r;
    }
    return a;
}

} // namespace

TimeDelaySystem TimeDelaySystem::create(std::vector<Term> terms, Matrix W) {
    if (terms.empty()) throw Error(ErrorCode::DOMAIN, "system needs at least one term");
    const Eigen::Index n = terms.front().A.rows();
    if (n < 1) throw Error(ErrorCode::DOMAIN, "state dimension must be positive");
    for (const auto& t : terms) {
        check_square(t.A, n, "coefficient matrix");
        if (!(t.delay >= 0.0) || !std::isfinite(t.delay)) {
            throw Error(ErrorCode::DOMAIN, "delays must be finite and non-negative");
        }
        if (!t.A.allFinite()) throw Error(ErrorCode::NUMERIC, "coefficient matrix has non-finite entries");
    }

    std::stable_sort(terms.begin(), terms.end(),
                     [](const Term& a, const Term& b) { return a.delay < b.delay; });

    // Merge exact duplicates by summing their coefficients.
    std::vector<Term> merged;
    for (auto& t : terms) {
        if (!merged.empty() && merged.back().delay == t.delay) {
            merged.back().A += t.A;
        } else {
            merged.push_back(std::move(t));
        }
    }
    if (merged.front().delay != 0.0) {
        merged.insert(merged.begin(), Term{0.0, Matrix::Zero(n, n)});
    }

    TimeDelaySystem sys;
    sys.n = n;
    sys.terms = std::move(merged);
    sys.H = sys.terms.back().delay;
    sys.W = W.size() == 0 ? Matrix::Identity(n, n) : std::move(W);
    check_square(sys.W, n, "weight matrix W");
    const auto wd = classify_definiteness(sys.W);
    if (wd.classification != DefinitenessClass::POSITIVE_DEFINITE) {
        throw Error(ErrorCode::W_NOT_PD,
                    "weight matrix must be positive definite (min eigenvalue " +
                        std::to_string(wd.min_eigenvalue) + ")");
    }
    return sys;
}

void validate(const TimeDelaySystem& sys) {
    if (sys.terms.empty() || sys.n < 1) throw Error(ErrorCode::DOMAIN, "empty system");
    for (const auto& t : sys.terms) check_square(t.A, sys.n, "coefficient matrix");
    check_square(sys.W, sys.n, "weight matrix W");
    if (sys.terms.front().delay != 0.0) {
        throw Error(ErrorCode::DOMAIN, "first term must carry delay 0");
    }
    for (size_t j = 1; j < sys.terms.size(); ++j) {
        const double prev = sys.terms[j - 1].delay, cur = sys.terms[j].delay;
        if (cur == prev) throw Error(ErrorCode::DUPLICATE_DELAY, "repeated delay " + std::to_string(cur));
        if (cur < prev) throw Error(ErrorCode::DOMAIN, "delays must be sorted increasingly");
    }
    bool any_delayed = false;
    for (size_t j = 1; j < sys.terms.size(); ++j) {
        if (sys.terms[j].A.cwiseAbs().maxCoeff() > 0.0) any_delayed = true;
    }
    if (!any_delayed) {
        throw Error(ErrorCode::NO_NONTRIVIAL_DELAYED_MATRIX,
                    "every positive-delay coefficient is zero");
    }
    const auto wd = classify_definiteness(sys.W);
    if (wd.classification != DefinitenessClass::POSITIVE_DEFINITE) {
        throw Error(ErrorCode::W_NOT_PD, "weight matrix must be positive definite");
    }
}

NormConstants norm_constants(const TimeDelaySystem& sys) {
    NormConstants c;
    for (const auto& t : sys.terms) {
        const double nrm = spectral_norm(t.A);
        c.M += nrm;
        c.M1 += t.delay * nrm;
    }
    return c;
}

Commensuration commensurate(const TimeDelaySystem& sys, double rel_tol) {
    std::vector<double> delays;
    for (const auto& t : sys.terms)
        if (t.delay > 0.0) delays.push_back(t.delay);
    if (delays.empty()) throw Error(ErrorCode::DOMAIN, "system has no positive delay");

    // Irrational ratios drive Euclid's remainders toward the tolerance floor,
    // which would "succeed" with astronomically large multipliers (continued
    // fraction convergents). The cap keeps the result physically meaningful.
    constexpr long kMaxMultiplier = 4096;

    const double abs_tol = rel_tol * sys.H;
    double g = delays.front();
    for (size_t i = 1; i < delays.size(); ++i) g = real_gcd(g, delays[i], abs_tol);
    if (!(g > abs_tol) || sys.H / g > static_cast<double>(kMaxMultiplier)) {
        throw Error(ErrorCode::INCOMMENSURATE,
                    "no usable common basic delay within tolerance " + std::to_string(abs_tol));
    }

    // Least-squares refinement of g over the integer multipliers, then verify.
    auto multipliers_for = [&](double basic) {
        std::vector<long> k;
        for (double h : delays) k.push_back(std::lround(h / basic));
        return k;
    };
    std::vector<long> k = multipliers_for(g);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < delays.size(); ++i) {
        num += static_cast<double>(k[i]) * delays[i];
        den += static_cast<double>(k[i]) * static_cast<double>(k[i]);
    }
    g = num / den;
    k = multipliers_for(g);

    long kg = 0;
    for (long v : k) kg = std::gcd(kg, v);
    if (kg > 1) {
        g *= static_cast<double>(kg);
        k = multipliers_for(g);
    }

    Commensuration c;
    c.basic_delay = g;
    c.multipliers.assign(sys.terms.size(), 0);
    size_t pos = 0;
    for (size_t j = 0; j < sys.terms.size(); ++j) {
        if (sys.terms[j].delay > 0.0) {
            const long kj = k[pos++];
            if (kj < 1) throw Error(ErrorCode::INCOMMENSURATE, "degenerate multiplier");
            c.multipliers[j] = kj;
            const double res = std::abs(sys.terms[j].delay - static_cast<double>(kj) * g);
            c.max_residual = std::max(c.max_residual, res);
            c.max_multiplier = std::max(c.max_multiplier, kj);
        }
    }
    if (c.max_residual > abs_tol) {
        throw Error(ErrorCode::INCOMMENSURATE,
                    "residual " + std::to_string(c.max_residual) + " exceeds tolerance " +
                        std::to_string(abs_tol));
    }
    return c;
}

} // namespace delaylyap
