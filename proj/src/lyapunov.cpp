#include "delaylyap/lyapunov.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace delaylyap {

namespace {

// Largest stacked-ODE dimension (2 K n^2) the builders will attempt.
constexpr Eigen::Index kMaxStackDim = 2048;

struct BoundarySystem {
    double h{0.0};
    long segments{0};
    Matrix lambda;  ///< stacked-segment ODE matrix, size 2 K n^2
    Matrix b;       ///< boundary condition matrix, same size
    Vector rhs;     ///< zeros except -vec(W) in the algebraic block
};

// Stack layout: blocks 0..K-1 hold vec(Y_j), blocks K..2K-1 hold vec(Z_j).
BoundarySystem assemble_commensurate(const TimeDelaySystem& sys, const Commensuration& comm) {
    const Eigen::Index n = sys.n;
    const Eigen::Index nn = n * n;
    const long segs = comm.max_multiplier;
    const Eigen::Index dim = 2 * segs * nn;
    if (dim > kMaxStackDim) {
        throw Error(ErrorCode::MEMORY_BUDGET, "stacked ODE dimension " + std::to_string(dim) +
                                                  " exceeds the builder cap");
    }

    const Matrix eye = Matrix::Identity(n, n);
    auto ybase = [&](long j) { return j * nn; };
    auto zbase = [&](long j) { return (segs + j) * nn; };

    BoundarySystem bs;
    bs.h = comm.basic_delay;
    bs.segments = segs;
    bs.lambda = Matrix::Zero(dim, dim);
    for (long j = 0; j < segs; ++j) {
        for (size_t i = 0; i < sys.terms.size(); ++i) {
            const Matrix& a = sys.terms[i].A;
            const long k = comm.multipliers[i];
            const Matrix right = kron(Matrix(a.transpose()), eye);   // vec(X a)
            const Matrix left = kron(eye, Matrix(a.transpose()));    // vec(a^T X)
            if (k <= j) {
                bs.lambda.block(ybase(j), ybase(j - k), nn, nn) += right;
                bs.lambda.block(zbase(j), zbase(j - k), nn, nn) -= left;
            } else {
                bs.lambda.block(ybase(j), zbase(k - j - 1), nn, nn) += right;
                bs.lambda.block(zbase(j), ybase(k - j - 1), nn, nn) -= left;
            }
        }
    }

    const Matrix e = expm(Matrix(bs.lambda * bs.h));
    bs.b = Matrix::Zero(dim, dim);
    bs.rhs = Vector::Zero(dim);
    Eigen::Index row = 0;
    // Y-continuity: Y_j(h) = Y_{j+1}(0).
    for (long j = 0; j + 1 < segs; ++j, row += nn) {
        bs.b.middleRows(row, nn) = e.middleRows(ybase(j), nn);
        bs.b.block(row, ybase(j + 1), nn, nn) -= Matrix::Identity(nn, nn);
    }
    // Z-continuity: Z_j(0) = Z_{j+1}(h).
    for (long j = 0; j + 1 < segs; ++j, row += nn) {
        bs.b.block(row, zbase(j), nn, nn) = Matrix::Identity(nn, nn);
        bs.b.middleRows(row, nn) -= e.middleRows(zbase(j + 1), nn);
    }
    // Symmetry: Y_0(0) = Z_0(h), i.e. U(0) = U(0)^T.
    bs.b.block(row, ybase(0), nn, nn) = Matrix::Identity(nn, nn);
    bs.b.middleRows(row, nn) -= e.middleRows(zbase(0), nn);
    row += nn;
    // Algebraic: sum_j [ U(-h_j) A_j + A_j^T U(h_j) ] = -W.
    for (size_t i = 0; i < sys.terms.size(); ++i) {
        const Matrix& a = sys.terms[i].A;
        const long k = comm.multipliers[i];
        if (k == 0) {
            bs.b.block(row, ybase(0), nn, nn) +=
                kron(Matrix(a.transpose()), eye) + kron(eye, Matrix(a.transpose()));
        } else {
            bs.b.block(row, zbase(k - 1), nn, nn) += kron(Matrix(a.transpose()), eye);
            bs.b.middleRows(row, nn) += kron(eye, Matrix(a.transpose())) * e.middleRows(ybase(k - 1), nn);
        }
    }
    bs.rhs.segment(row, nn) = -vec(sys.W);
    return bs;
}

// The printed single-delay form, assembled verbatim as an independent path.
BoundarySystem assemble_single_delay(const TimeDelaySystem& sys) {
    std::vector<const Term*> delayed;
    for (size_t j = 1; j < sys.terms.size(); ++j) delayed.push_back(&sys.terms[j]);
    if (delayed.size() != 1) {
        throw Error(ErrorCode::DOMAIN, "single-delay form needs exactly one positive delay");
    }
    const Eigen::Index n = sys.n;
    const Eigen::Index nn = n * n;
    const Matrix eye = Matrix::Identity(n, n);
    const Matrix& a0 = sys.terms.front().A;
    const Matrix& a1 = delayed.front()->A;
    const double h = delayed.front()->delay;

    BoundarySystem bs;
    bs.h = h;
    bs.segments = 1;
    bs.lambda = Matrix::Zero(2 * nn, 2 * nn);
    bs.lambda.block(0, 0, nn, nn) = kron(Matrix(a0.transpose()), eye);
    bs.lambda.block(0, nn, nn, nn) = kron(Matrix(a1.transpose()), eye);
    bs.lambda.block(nn, 0, nn, nn) = -kron(eye, Matrix(a1.transpose()));
    bs.lambda.block(nn, nn, nn, nn) = -kron(eye, Matrix(a0.transpose()));

    const Matrix e = expm(Matrix(bs.lambda * h));
    bs.b = Matrix::Zero(2 * nn, 2 * nn);
    bs.b.block(0, 0, nn, nn) = Matrix::Identity(nn, nn);
    bs.b.middleRows(0, nn) -= e.middleRows(nn, nn);
    bs.b.block(nn, 0, nn, nn) =
        kron(Matrix(a0.transpose()), eye) + kron(eye, Matrix(a0.transpose()));
    bs.b.block(nn, nn, nn, nn) = kron(Matrix(a1.transpose()), eye);
    bs.b.middleRows(nn, nn) += kron(eye, Matrix(a1.transpose())) * e.middleRows(0, nn);
    bs.rhs = Vector::Zero(2 * nn);
    bs.rhs.tail(nn) = -vec(sys.W);
    return bs;
}

LyapunovMatrix solve_boundary(const TimeDelaySystem& sys, BoundarySystem bs) {
    Eigen::JacobiSVD<Matrix> svd(bs.b, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 1e-10 * smax)) {
        throw Error(ErrorCode::LYAPUNOV_CONDITION_FAILS,
                    "boundary system singular (sigma_min/sigma_max = " +
                        std::to_string(smin / smax) + ")");
    }
    const Vector xi0 = svd.solve(bs.rhs);
    return LyapunovMatrix(std::make_shared<TimeDelaySystem>(sys), bs.h, bs.segments,
                          std::move(bs.lambda), xi0, smin, smax);
}

} // namespace

LyapunovMatrix::LyapunovMatrix(std::shared_ptr<const TimeDelaySystem> sys, double basic_delay,
                               long segments, Matrix ode_matrix, Vector initial_stack,
                               double sigma_min, double sigma_max)
    : sys_(std::move(sys)),
      h_(basic_delay),
      segments_(segments),
      lambda_(std::move(ode_matrix)),
      stack0_(std::move(initial_stack)),
      sigma_min_(sigma_min),
      sigma_max_(sigma_max) {}

Vector LyapunovMatrix::stack_at(double s) const {
    if (s == 0.0) return stack0_;
    return expm(Matrix(lambda_ * s)) * stack0_;
}

Matrix LyapunovMatrix::at(double tau) const {
    if (tau < 0.0) return at(-tau).transpose();
    const double big_h = horizon();
    if (tau > big_h * (1.0 + 1e-12) + 1e-300) {
        throw Error(ErrorCode::DOMAIN,
                    "U evaluated outside [-H, H] at tau=" + std::to_string(tau));
    }
    long j = static_cast<long>(std::floor(tau / h_ + 1e-12));
    j = std::min(j, segments_ - 1);
    const double s = std::min(std::max(tau - static_cast<double>(j) * h_, 0.0), h_);
    const Eigen::Index nn = sys_->n * sys_->n;
    const Vector xi = stack_at(s);
    return unvec(xi.segment(j * nn, nn), sys_->n, sys_->n);
}

Matrix LyapunovMatrix::derivative_at(double tau) const {
    if (tau < 0.0) return Matrix(-derivative_at(-tau).transpose());
    const double big_h = horizon();
    if (tau > big_h * (1.0 + 1e-12) + 1e-300) {
        throw Error(ErrorCode::DOMAIN, "U' evaluated outside [-H, H]");
    }
    long j = static_cast<long>(std::floor(tau / h_ + 1e-12));
    j = std::min(j, segments_ - 1);
    const double s = std::min(std::max(tau - static_cast<double>(j) * h_, 0.0), h_);
    const Eigen::Index nn = sys_->n * sys_->n;
    const Vector dxi = lambda_ * stack_at(s);
    return unvec(dxi.segment(j * nn, nn), sys_->n, sys_->n);
}

const LyapunovSamples& LyapunovMatrix::samples(int per_segment) const {
    if (per_segment < 1) throw Error(ErrorCode::DOMAIN, "per_segment must be positive");
    auto found = cache_.find(per_segment);
    if (found != cache_.end()) return found->second;

    LyapunovSamples table;
    table.ds = h_ / static_cast<double>(per_segment);
    const Eigen::Index n = sys_->n, nn = n * n;
    const size_t total = static_cast<size_t>(segments_) * static_cast<size_t>(per_segment) + 1;
    table.value.reserve(total);
    table.derivative.reserve(total);

    const Matrix phi = expm(Matrix(lambda_ * table.ds));
    Vector xi = stack0_;
    // One pass over s in [0, h] fills every segment simultaneously.
    std::vector<Vector> stacks(static_cast<size_t>(per_segment) + 1);
    for (int l = 0; l <= per_segment; ++l) {
        stacks[static_cast<size_t>(l)] = xi;
        if (l < per_segment) xi = phi * xi;
    }
    for (long j = 0; j < segments_; ++j) {
        const int upto = (j + 1 == segments_) ? per_segment : per_segment - 1;
        for (int l = 0; l <= upto; ++l) {
            const Vector& st = stacks[static_cast<size_t>(l)];
            table.value.push_back(unvec(st.segment(j * nn, nn), n, n));
            table.derivative.push_back(
                unvec(Vector(lambda_ * st).segment(j * nn, nn), n, n));
        }
    }
    return cache_.emplace(per_segment, std::move(table)).first->second;
}

LyapunovMatrix build_single_delay(const TimeDelaySystem& sys) {
    return solve_boundary(sys, assemble_single_delay(sys));
}

LyapunovMatrix build_commensurate(const TimeDelaySystem& sys, const Commensuration& comm) {
    return solve_boundary(sys, assemble_commensurate(sys, comm));
}

LyapunovMatrix build_lyapunov_matrix(const TimeDelaySystem& sys, double rel_tol) {
    if (sys.delayed_term_count() == 1) return build_single_delay(sys);
    return build_commensurate(sys, commensurate(sys, rel_tol));
}

LyapunovCondition check_lyapunov_condition(const TimeDelaySystem& sys, double rel_tol) {
    BoundarySystem bs = sys.delayed_term_count() == 1
                            ? assemble_single_delay(sys)
                            : assemble_commensurate(sys, commensurate(sys, rel_tol));
    Eigen::JacobiSVD<Matrix> svd(bs.b);
    LyapunovCondition c;
    c.sigma_max = svd.singularValues()(0);
    c.sigma_min = svd.singularValues()(svd.singularValues().size() - 1);
    c.holds = c.sigma_min > 1e-10 * c.sigma_max;
    return c;
}

double PropertyReport::worst() const {
    return std::max(std::max(dynamic, symmetry), std::max(algebraic, continuity));
}

PropertyReport check_properties(const LyapunovMatrix& u, int grid_points) {
    const TimeDelaySystem& sys = u.system();
    const long segs = u.segments();
    const int per_seg =
        std::max(2, static_cast<int>(std::lround(static_cast<double>(grid_points) / segs)));
    const auto& table = u.samples(per_seg);
    const long total = static_cast<long>(table.value.size()) - 1;

    // Delay offsets in lattice units (exact: delays are multiples of h).
    std::vector<long> offsets;
    for (const auto& t : sys.terms) {
        offsets.push_back(std::lround(t.delay / table.ds));
    }

    auto lookup = [&](long idx) -> Matrix {
        if (idx >= 0) return table.value[static_cast<size_t>(idx)];
        return table.value[static_cast<size_t>(-idx)].transpose();
    };

    PropertyReport rep;
    rep.grid_points = static_cast<int>(total + 1);
    for (long i = 1; i <= total; ++i) {
        Matrix rhs = Matrix::Zero(sys.n, sys.n);
        for (size_t j = 0; j < sys.terms.size(); ++j) rhs += lookup(i - offsets[j]) * sys.terms[j].A;
        rep.dynamic = std::max(rep.dynamic,
                               (table.derivative[static_cast<size_t>(i)] - rhs).cwiseAbs().maxCoeff());
    }

    rep.symmetry = (u.at(0.0) - u.at(0.0).transpose()).cwiseAbs().maxCoeff();

    Matrix alg = sys.W;
    for (const auto& t : sys.terms) {
        alg += u.at(-t.delay) * t.A + t.A.transpose() * u.at(t.delay);
    }
    rep.algebraic = alg.cwiseAbs().maxCoeff();

    // Continuity across segment joins: the table stores the incoming segment's
    // right-limit start; compare against the previous segment's endpoint.
    for (long j = 0; j + 1 < segs; ++j) {
        const double tau = u.basic_delay() * static_cast<double>(j + 1);
        const long idx = (j + 1) * per_seg;
        const Matrix incoming = table.value[static_cast<size_t>(idx)];
        // Endpoint of segment j at s = h, reached by exact propagation.
        const Matrix outgoing = u.at(tau * (1.0 - 1e-15));
        rep.continuity = std::max(rep.continuity, (incoming - outgoing).cwiseAbs().maxCoeff());
    }
    return rep;
}

} // namespace delaylyap
