#include <catch2/catch_amalgamated.hpp>

#include "delaylyap/matrix.hpp"
#include "support.hpp"

using namespace delaylyap;
using namespace delaylyap::testing;

namespace {

// Reference Kronecker product, written as the four nested loops of the definition.
Matrix kron_reference(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

} // namespace

TEST_CASE("kron matches the definition on random inputs", "[matrix][kron]") {
    auto& gen = rng(101);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r1 = static_cast<Eigen::Index>(1 + gen() % 4);
        const auto c1 = static_cast<Eigen::Index>(1 + gen() % 4);
        const auto r2 = static_cast<Eigen::Index>(1 + gen() % 4);
        const auto c2 = static_cast<Eigen::Index>(1 + gen() % 4);
        const Matrix a = random_matrix(gen, r1, c1, 3.0);
        const Matrix b = random_matrix(gen, r2, c2, 3.0);
        const Matrix got = kron(a, b);
        REQUIRE((got - kron_reference(a, b)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("kron mixed-product identity", "[matrix][kron][property]") {
    auto& gen = rng(102);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(gen, 3, 2), b = random_matrix(gen, 2, 4);
        const Matrix c = random_matrix(gen, 2, 3), d = random_matrix(gen, 4, 2);
        const Matrix lhs = kron(a, b) * kron(c, d);
        const Matrix rhs = kron(Matrix(a * c), Matrix(b * d));
        const double scale = lhs.cwiseAbs().maxCoeff() + 1.0;
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
}

TEST_CASE("vec stacks columns", "[matrix][vec]") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    const Vector v = vec(a);
    REQUIRE(v.size() == 4);
    CHECK(v(0) == 1.0);
    CHECK(v(1) == 3.0);
    CHECK(v(2) == 2.0);
    CHECK(v(3) == 4.0);
    CHECK((unvec(v, 2, 2) - a).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unvec rejects mismatched shapes", "[matrix][vec]") {
    const Vector v = Vector::Zero(5);
    REQUIRE_THROWS_MATCHES(unvec(v, 2, 2), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == ErrorCode::DOMAIN;
                           }));
}

TEST_CASE("vec intertwines multiplication with kron", "[matrix][vec][property]") {
    auto& gen = rng(103);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(gen, 3, 3), x = random_matrix(gen, 3, 2),
                     b = random_matrix(gen, 2, 4);
        const Vector lhs = vec(Matrix(a * x * b));
        const Vector rhs = kron(Matrix(b.transpose()), a) * vec(x);
        REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (lhs.cwiseAbs().maxCoeff() + 1.0));
    }
}

TEST_CASE("expm on closed-form cases", "[matrix][expm]") {
    SECTION("zero matrix") {
        const Matrix e = expm(Matrix::Zero(3, 3));
        CHECK((e - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SECTION("nilpotent") {
        Matrix a(2, 2);
        a << 0, 1, 0, 0;
        Matrix want(2, 2);
        want << 1, 1, 0, 1;
        CHECK((expm(a) - want).cwiseAbs().maxCoeff() <= 1e-15);
    }
    SECTION("diagonal") {
        Matrix a = Matrix::Zero(2, 2);
        a(0, 0) = 1.0;
        a(1, 1) = -2.0;
        const Matrix e = expm(a);
        CHECK(e(0, 0) == Catch::Approx(std::exp(1.0)).epsilon(1e-14));
        CHECK(e(1, 1) == Catch::Approx(std::exp(-2.0)).epsilon(1e-14));
        CHECK(std::abs(e(0, 1)) + std::abs(e(1, 0)) == 0.0);
    }
    SECTION("planar rotation") {
        const double th = 0.7;
        Matrix a(2, 2);
        a << 0, -th, th, 0;
        const Matrix e = expm(a);
        CHECK(e(0, 0) == Catch::Approx(std::cos(th)).epsilon(1e-14));
        CHECK(e(1, 0) == Catch::Approx(std::sin(th)).epsilon(1e-14));
    }
}

TEST_CASE("expm inverse identity", "[matrix][expm][property]") {
    auto& gen = rng(104);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix a = random_matrix(gen, 4, 4, 2.0);
        a *= uniform(gen, 0.1, 12.0) / a.norm();  // keep ||a|| in a sane range
        const Matrix prod = expm(a) * expm(Matrix(-a));
        REQUIRE((prod - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("expm diagnostics", "[matrix][expm]") {
    REQUIRE_THROWS_AS(expm(Matrix::Zero(2, 3)), Error);
    Matrix big = Matrix::Identity(2, 2) * 1e6;  // e^{1e6} overflows double
    try {
        (void)expm(big);
        FAIL("expected overflow report");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NUMERIC);
    }
}

TEST_CASE("definiteness classification on known spectra", "[matrix][definiteness]") {
    SECTION("identity is positive definite") {
        const auto d = classify_definiteness(Matrix::Identity(3, 3));
        CHECK(d.classification == DefinitenessClass::POSITIVE_DEFINITE);
        CHECK(d.min_eigenvalue == Catch::Approx(1.0).epsilon(1e-12));
    }
    SECTION("indefinite diagonal") {
        Matrix a = Matrix::Identity(2, 2);
        a(1, 1) = -1.0;
        const auto d = classify_definiteness(a);
        CHECK(d.classification == DefinitenessClass::NOT_POSITIVE_SEMIDEFINITE);
        CHECK(d.min_eigenvalue == Catch::Approx(-1.0).epsilon(1e-12));
    }
    SECTION("tiny negative eigenvalue lands in the band") {
        Matrix a = Matrix::Identity(2, 2);
        a(1, 1) = -1e-12;
        const auto d = classify_definiteness(a);
        CHECK(d.classification == DefinitenessClass::SINGULAR_BAND);
    }
    SECTION("asymmetric input is rejected") {
        Matrix a(2, 2);
        a << 1, 1, 0, 1;
        REQUIRE_THROWS_AS(classify_definiteness(a), Error);
    }
}

TEST_CASE("definiteness is invariant under orthogonal similarity", "[matrix][definiteness][property]") {
    auto& gen = rng(105);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix s = random_symmetric(gen, 5, 2.0);
        const Matrix q = random_orthogonal(gen, 5);
        const auto d1 = classify_definiteness(s);
        const auto d2 = classify_definiteness(Matrix(q * s * q.transpose()));
        CHECK(d1.classification == d2.classification);
        CHECK(d1.min_eigenvalue == Catch::Approx(d2.min_eigenvalue).margin(1e-10));
    }
}

TEST_CASE("definiteness agrees with a planted spectrum at LAPACK sizes", "[matrix][definiteness]") {
    auto& gen = rng(106);
    const Eigen::Index n = 300;  // above the internal Eigen/LAPACK switch
    Vector eigs(n);
    for (Eigen::Index i = 0; i < n; ++i) eigs(i) = uniform(gen, 0.5, 4.0);
    eigs(7) = 0.037;  // known smallest
    const Matrix q = random_orthogonal(gen, n);
    const Matrix s = q * eigs.asDiagonal() * q.transpose();
    const auto d = classify_definiteness(0.5 * (s + s.transpose()));
    CHECK(d.classification == DefinitenessClass::POSITIVE_DEFINITE);
    CHECK(d.min_eigenvalue == Catch::Approx(0.037).margin(1e-9));
}

TEST_CASE("spectral norm", "[matrix][norm]") {
    CHECK(spectral_norm(Matrix::Identity(4, 4)) == Catch::Approx(1.0));
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = -5.0;
    CHECK(spectral_norm(d) == Catch::Approx(5.0));

    // Triangular 2x2 checked against the closed form: the largest eigenvalue
    // of a^T a solves l^2 - tr l + det = 0.
    Matrix a(2, 2);
    a << -1.0, 0.5, 0.0, -1.25;
    const Matrix g = a.transpose() * a;
    const double tr = g.trace(), det = g.determinant();
    const double lmax = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
    CHECK(spectral_norm(a) == Catch::Approx(std::sqrt(lmax)).epsilon(1e-12));
    CHECK(spectral_norm(a) == Catch::Approx(1.432).margin(5e-4));
}

TEST_CASE("spectral norm bounded by Frobenius norm", "[matrix][norm][property]") {
    auto& gen = rng(107);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(gen, 4, 6, 3.0);
        CHECK(spectral_norm(a) <= a.norm() + 1e-13);
        CHECK(spectral_norm(a) >= a.cwiseAbs().maxCoeff() - 1e-13);
    }
}

TEST_CASE("solve_linear residuals and singularity", "[matrix][solve]") {
    auto& gen = rng(108);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = random_matrix(gen, 6, 6, 2.0) + 6.0 * Matrix::Identity(6, 6);
        const Matrix b = random_matrix(gen, 6, 2, 2.0);
        const Matrix x = solve_linear(a, b);
        const double res = (a * x - b).cwiseAbs().maxCoeff();
        REQUIRE(res <= 1e-10 * (spectral_norm(a) * x.cwiseAbs().maxCoeff() + 1.0));
    }

    Matrix sing(2, 2);
    sing << 1, 2, 2, 4;
    try {
        (void)solve_linear(sing, Matrix::Identity(2, 2));
        FAIL("expected SINGULAR");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SINGULAR);
    }
}
