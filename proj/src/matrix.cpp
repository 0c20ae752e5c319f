#include "delaylyap/matrix.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <vector>

// Eigenvalues-only divide-and-conquer solver from LAPACK (via OpenBLAS).
// Eigen's own tridiagonalization is unblocked and too slow for the block
// matrices this library assembles (dimension up to ~2e4).
extern "C" void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a,
                        const int* lda, double* w, double* work, const int* lwork,
                        int* iwork, const int* liwork, int* info);

namespace delaylyap {

namespace {

// Below this dimension Eigen's SelfAdjointEigenSolver wins on overhead.
constexpr Eigen::Index kLapackThreshold = 256;

// Smallest and largest eigenvalue of a symmetric matrix.
std::pair<double, double> symmetric_eig_range(const Matrix& s) {
    const Eigen::Index n = s.rows();
    if (n < kLapackThreshold) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) {
            throw Error(ErrorCode::NUMERIC, "symmetric eigensolver failed to converge");
        }
        return {es.eigenvalues()(0), es.eigenvalues()(n - 1)};
    }
    Matrix a = s;  // dsyevd destroys its input
    const int ni = static_cast<int>(n);
    std::vector<double> w(static_cast<size_t>(n));
    int info = 0;
    double wkopt = 0.0;
    int iwkopt = 0;
    const int query = -1;
    dsyevd_("N", "L", &ni, a.data(), &ni, w.data(), &wkopt, &query, &iwkopt, &query, &info);
    if (info != 0) throw Error(ErrorCode::NUMERIC, "dsyevd workspace query failed");
    const int lwork = static_cast<int>(wkopt);
    const int liwork = iwkopt;
    std::vector<double> work(static_cast<size_t>(lwork));
    std::vector<int> iwork(static_cast<size_t>(liwork));
    dsyevd_("N", "L", &ni, a.data(), &ni, w.data(), work.data(), &lwork, iwork.data(), &liwork,
            &info);
    if (info != 0) throw Error(ErrorCode::NUMERIC, "dsyevd failed, info=" + std::to_string(info));
    return {w.front(), w.back()};
}

} // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(a, b);
}

Vector vec(const Matrix& a) {
    return Eigen::Map<const Vector>(a.data(), a.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) {
        throw Error(ErrorCode::DOMAIN, "unvec: vector length " + std::to_string(v.size()) +
                                           " does not match " + std::to_string(rows) + "x" +
                                           std::to_string(cols));
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorCode::DOMAIN, "expm: matrix must be square");
    }
    Matrix e = a.exp();
    if (!e.allFinite()) {
        throw Error(ErrorCode::NUMERIC, "expm: result overflowed (||a|| too large)");
    }
    return e;
}

Definiteness classify_definiteness(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorCode::DOMAIN, "classify_definiteness: matrix must be square");
    }
    const double scale = a.cwiseAbs().maxCoeff();
    const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * std::max(1.0, scale)) {
        throw Error(ErrorCode::NUMERIC, "classify_definiteness: input is not symmetric");
    }
    const Matrix s = 0.5 * (a + a.transpose());
    const auto [lo, hi] = symmetric_eig_range(s);
    Definiteness d;
    d.min_eigenvalue = lo;
    const double norm2 = std::max(std::abs(lo), std::abs(hi));
    d.tolerance = tol >= 0.0 ? tol : 1e-9 * std::max(1.0, norm2);
    if (lo > d.tolerance) {
        d.classification = DefinitenessClass::POSITIVE_DEFINITE;
    } else if (lo < -d.tolerance) {
        d.classification = DefinitenessClass::NOT_POSITIVE_SEMIDEFINITE;
    } else {
        d.classification = DefinitenessClass::SINGULAR_BAND;
    }
    return d;
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorCode::DOMAIN, "solve_linear: matrix must be square");
    }
    if (a.rows() != b.rows()) {
        throw Error(ErrorCode::DOMAIN, "solve_linear: dimension mismatch");
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    if (!qr.isInvertible()) {
        throw Error(ErrorCode::SINGULAR, "solve_linear: matrix is numerically singular");
    }
    return qr.solve(b);
}

} // namespace delaylyap
