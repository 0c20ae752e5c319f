#pragma once

#include <random>

#include "delaylyap/matrix.hpp"

namespace delaylyap::testing {

/// Deterministic RNG for property tests; every test pins its own seed.
inline std::mt19937& rng(uint32_t seed) {
    static thread_local std::mt19937 gen;
    gen.seed(seed);
    return gen;
}

inline double uniform(std::mt19937& gen, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen);
}

inline Matrix random_matrix(std::mt19937& gen, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
    Matrix m(rows, cols);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(gen);
    return m;
}

inline Matrix random_symmetric(std::mt19937& gen, Eigen::Index n, double scale = 1.0) {
    Matrix m = random_matrix(gen, n, n, scale);
    return 0.5 * (m + m.transpose());
}

/// Random orthogonal matrix via QR of a Gaussian sample.
inline Matrix random_orthogonal(std::mt19937& gen, Eigen::Index n) {
    Matrix m(n, n);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = dist(gen);
    Eigen::HouseholderQR<Matrix> qr(m);
    return qr.householderQ() * Matrix::Identity(n, n);
}

} // namespace delaylyap::testing
