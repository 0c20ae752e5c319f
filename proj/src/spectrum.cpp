#include "delaylyap/spectrum.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "delaylyap/error.hpp"
#include "delaylyap/matrix.hpp"

namespace delaylyap {

namespace {

constexpr long kGridCap = 512;
constexpr double kAgreeTol = 1e-8;
constexpr double kGiveUpTol = 1e-6;

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

// Chebyshev-Lobatto nodes mapped to [-H, 0]; node 0 sits at theta = 0.
std::vector<double> lobatto_nodes(long n, double horizon) {
    std::vector<double> t(static_cast<size_t>(n) + 1);
    for (long k = 0; k <= n; ++k)
        t[static_cast<size_t>(k)] =
            0.5 * horizon * (std::cos(M_PI * static_cast<double>(k) / n) - 1.0);
    return t;
}

// Barycentric cardinal values l_j(x) on the Lobatto grid.
Vector cardinal_row(const std::vector<double>& nodes, double x) {
    const long n = static_cast<long>(nodes.size()) - 1;
    Vector row = Vector::Zero(n + 1);
    for (long j = 0; j <= n; ++j)
        if (x == nodes[static_cast<size_t>(j)]) {
            row(j) = 1.0;
            return row;
        }
    double denom = 0.0;
    for (long j = 0; j <= n; ++j) {
        double w = (j % 2 == 0) ? 1.0 : -1.0;
        if (j == 0 || j == n) w *= 0.5;
        row(j) = w / (x - nodes[static_cast<size_t>(j)]);
        denom += row(j);
    }
    row /= denom;
    return row;
}

// First-derivative collocation matrix on the mapped grid (row sums vanish).
Matrix differentiation_matrix(const std::vector<double>& nodes) {
    const long n = static_cast<long>(nodes.size()) - 1;
    Matrix d = Matrix::Zero(n + 1, n + 1);
    const auto weight = [n](long j) {
        double w = (j % 2 == 0) ? 1.0 : -1.0;
        if (j == 0 || j == n) w *= 0.5;
        return w;
    };
    for (long i = 0; i <= n; ++i) {
        double diag = 0.0;
        for (long j = 0; j <= n; ++j) {
            if (i == j) continue;
            d(i, j) = (weight(j) / weight(i)) /
                      (nodes[static_cast<size_t>(i)] - nodes[static_cast<size_t>(j)]);
            diag -= d(i, j);
        }
        d(i, i) = diag;
    }
    return d;
}

// Generator discretization: derivative rows inside, delayed splice at row 0.
Matrix collocation_matrix(const TimeDelaySystem& sys, long n_grid) {
    const Eigen::Index n = sys.n;
    const auto nodes = lobatto_nodes(n_grid, sys.H);
    const Matrix d = differentiation_matrix(nodes);

    Matrix a = Matrix::Zero((n_grid + 1) * n, (n_grid + 1) * n);
    for (long i = 1; i <= n_grid; ++i)
        for (long j = 0; j <= n_grid; ++j)
            a.block(i * n, j * n, n, n) = d(i, j) * Matrix::Identity(n, n);
    for (const auto& term : sys.terms) {
        const Vector card = cardinal_row(nodes, -term.delay);
        for (long j = 0; j <= n_grid; ++j)
            if (card(j) != 0.0) a.block(0, j * n, n, n) += card(j) * term.A;
    }
    return a;
}

CMatrix characteristic(const TimeDelaySystem& sys, Complex s) {
    const Eigen::Index n = sys.n;
    CMatrix g = s * CMatrix::Identity(n, n);
    for (const auto& term : sys.terms)
        g -= std::exp(-s * term.delay) * term.A.cast<Complex>();
    return g;
}

CMatrix characteristic_derivative(const TimeDelaySystem& sys, Complex s) {
    const Eigen::Index n = sys.n;
    CMatrix g = CMatrix::Identity(n, n);
    for (const auto& term : sys.terms)
        g += term.delay * std::exp(-s * term.delay) * term.A.cast<Complex>();
    return g;
}

// Newton polish on det(G(s)); returns true when the step sizes settled.
bool refine_root(const TimeDelaySystem& sys, Complex& s) {
    for (int iter = 0; iter < 60; ++iter) {
        const CMatrix g = characteristic(sys, s);
        if (!g.allFinite()) return false;
        const Eigen::PartialPivLU<CMatrix> lu(g);
        const Complex slope = lu.solve(characteristic_derivative(sys, s)).trace();
        // A singular LU on a finite matrix means det G(s) = 0 to machine
        // precision, i.e. s already sits on a root.
        if (!std::isfinite(slope.real()) || !std::isfinite(slope.imag())) return true;
        if (std::abs(slope) < 1e-300) return false;
        const Complex step = 1.0 / slope;
        s -= step;
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) return false;
        if (std::abs(step) <= 1e-12 * (1.0 + std::abs(s))) return true;
    }
    return false;
}

Complex canonical(Complex s) { return s.imag() < 0.0 ? std::conj(s) : s; }

// One grid level: eigenvalues as seeds, Newton-refined, deduplicated,
// sorted by real part descending (ties by ascending imaginary part).
std::vector<Complex> refined_level(const TimeDelaySystem& sys, long n_grid, long count) {
    const Matrix a = collocation_matrix(sys, n_grid);
    const Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    std::vector<Complex> seeds(es.eigenvalues().data(),
                               es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(seeds.begin(), seeds.end(),
              [](Complex x, Complex y) { return x.real() > y.real(); });
    const size_t take = std::min(seeds.size(), static_cast<size_t>(2 * count + 8));

    std::vector<Complex> roots;
    for (size_t i = 0; i < take; ++i) {
        Complex s = seeds[i];
        if (!refine_root(sys, s)) continue;
        bool duplicate = false;
        for (const Complex& r : roots)
            if (std::abs(r - s) <= 1e-7 * (1.0 + std::abs(r))) {
                duplicate = true;
                break;
            }
        if (!duplicate) roots.push_back(s);
    }
    if (roots.empty())  // Newton never settles only for degenerate systems;
        roots.assign(seeds.begin(), seeds.begin() + take);  // keep raw seeds
    std::sort(roots.begin(), roots.end(), [](Complex x, Complex y) {
        if (x.real() != y.real()) return x.real() > y.real();
        return x.imag() < y.imag();
    });
    // Truncate to the requested count, but never split a conjugate pair at
    // the cut: keep one extra root when the boundary falls inside a pair.
    size_t keep = static_cast<size_t>(count);
    if (roots.size() > keep) {
        const Complex last = roots[keep - 1];
        const Complex next = roots[keep];
        if (std::abs(std::conj(last) - next) <= 1e-7 * (1.0 + std::abs(last)) &&
            std::abs(last.imag()) > 1e-7 * (1.0 + std::abs(last)))
            ++keep;
    }
    if (roots.size() > keep) roots.resize(keep);
    return roots;
}

} // namespace

SpectrumEstimate rightmost_roots(const TimeDelaySystem& sys, long n_start, long count) {
    if (n_start < 2) throw Error(ErrorCode::DOMAIN, "rightmost_roots: grid must have N >= 2");
    if (count < 1) throw Error(ErrorCode::DOMAIN, "rightmost_roots: count must be positive");
    if (!(sys.H > 0.0)) throw Error(ErrorCode::DOMAIN, "rightmost_roots: system has no delay");

    SpectrumEstimate est;
    long n_grid = std::min(n_start, kGridCap);
    std::vector<Complex> current = refined_level(sys, n_grid, count);
    while (n_grid < kGridCap) {
        const long next = std::min(2 * n_grid, kGridCap);
        std::vector<Complex> refined = refined_level(sys, next, count);
        const double move = std::abs(canonical(refined.front()) - canonical(current.front()));
        current = std::move(refined);
        n_grid = next;
        if (move <= kAgreeTol) {
            est.converged = true;
            break;
        }
        if (n_grid >= kGridCap) {
            if (move > kGiveUpTol)
                throw Error(ErrorCode::NO_CONVERGENCE,
                            "rightmost_roots: rightmost root still moved " +
                                std::to_string(move) + " at the grid cap");
            break;  // inside the soft band: report unconverged
        }
    }
    est.roots = std::move(current);
    est.collocation_size = n_grid;
    est.residual = std::abs(Eigen::PartialPivLU<CMatrix>(characteristic(sys, est.roots.front()))
                                .determinant());
    return est;
}

OracleVerdict classify_rightmost(const SpectrumEstimate& est) noexcept {
    if (!est.converged || est.roots.empty()) return OracleVerdict::UNDECIDED;
    const double re = est.roots.front().real();
    if (re < -kAgreeTol) return OracleVerdict::STABLE;
    if (re > kAgreeTol) return OracleVerdict::UNSTABLE;
    return OracleVerdict::UNDECIDED;
}

OracleVerdict oracle_verdict(const TimeDelaySystem& sys) {
    try {
        return classify_rightmost(rightmost_roots(sys, 64, 4));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NO_CONVERGENCE) return OracleVerdict::UNDECIDED;
        throw;
    }
}

bool is_stable_oracle(const TimeDelaySystem& sys) {
    switch (oracle_verdict(sys)) {
        case OracleVerdict::STABLE: return true;
        case OracleVerdict::UNSTABLE: return false;
        case OracleVerdict::UNDECIDED: break;
    }
    throw Error(ErrorCode::UNDECIDED,
                "is_stable_oracle: rightmost real part inside the +-1e-8 band");
}

} // namespace delaylyap
