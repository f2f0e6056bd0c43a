#ifndef MDFUSE_LINALG_HPP
#define MDFUSE_LINALG_HPP

#include "mdfuse/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace mdfuse {

/// Solves (A + ridge*I) X = B for symmetric positive definite A.
/// Throws NumericError when the regularized matrix is not positive definite.
template <typename Scalar, typename DerivedB>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_spd(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& a,
    const Eigen::MatrixBase<DerivedB>& b, Scalar ridge, const char* what) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> reg = a;
    reg.diagonal().array() += ridge;
    Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> llt(reg);
    if (llt.info() != Eigen::Success) throw NumericError(std::string(what) + " is not positive definite");
    return llt.solve(b);
}

/// Ridge least squares for a fixed design X: returns argmin ||X B - Y||^2 + ridge ||B||^2.
/// When X has more columns than rows and ridge > 0 the dual identity
/// (X'X + rI)^-1 X' = X'(XX' + rI)^-1 is used; both give the same solution.
class RidgeSolver {
public:
    RidgeSolver() = default;
    RidgeSolver(const Matrix& x, double ridge);

    Matrix solve(const Matrix& y) const;
    Eigen::Index cols() const { return x_.cols(); }

private:
    Matrix x_;
    bool dual_ = false;
    Eigen::LLT<Matrix> llt_;
};

/// Symmetric positive definite band matrix stored by lower diagonals:
/// band(j, i) = A(i + j, i) for 0 <= j <= bandwidth.
template <typename Scalar>
class BandedSpdMatrix {
public:
    using Storage = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    BandedSpdMatrix(Eigen::Index n, Eigen::Index bandwidth)
        : n_(n), bw_(bandwidth), band_(Storage::Zero(bandwidth + 1, n)) {}

    Eigen::Index size() const { return n_; }
    Eigen::Index bandwidth() const { return bw_; }

    /// Adds v to A(i, j) for |i - j| <= bandwidth; only the lower triangle is stored.
    void add(Eigen::Index i, Eigen::Index j, Scalar v) {
        if (i < j) std::swap(i, j);
        band_(i - j, j) += v;
    }
    Scalar operator()(Eigen::Index i, Eigen::Index j) const {
        if (i < j) std::swap(i, j);
        return i - j > bw_ ? Scalar(0) : band_(i - j, j);
    }
    void add_to_diagonal(Scalar v) { band_.row(0).array() += v; }

    Vec multiply(const Vec& x) const {
        Vec y = Vec::Zero(n_);
        for (Eigen::Index j = 0; j < n_; ++j) {
            y(j) += band_(0, j) * x(j);
            const Eigen::Index last = std::min(bw_, n_ - 1 - j);
            for (Eigen::Index o = 1; o <= last; ++o) {
                y(j + o) += band_(o, j) * x(j);
                y(j) += band_(o, j) * x(j + o);
            }
        }
        return y;
    }

    Storage dense() const {
        Storage a = Storage::Zero(n_, n_);
        for (Eigen::Index j = 0; j < n_; ++j)
            for (Eigen::Index o = 0; o <= std::min(bw_, n_ - 1 - j); ++o) {
                a(j + o, j) = band_(o, j);
                a(j, j + o) = band_(o, j);
            }
        return a;
    }

    /// In-place band Cholesky (A = L L^T); returns false if A is not positive definite.
    bool factorize() {
        for (Eigen::Index j = 0; j < n_; ++j) {
            Scalar d = band_(0, j);
            if (!(d > Scalar(0)) || !std::isfinite(d)) return false;
            d = std::sqrt(d);
            band_(0, j) = d;
            const Eigen::Index last = std::min(bw_, n_ - 1 - j);
            for (Eigen::Index o = 1; o <= last; ++o) band_(o, j) /= d;
            for (Eigen::Index o1 = 1; o1 <= last; ++o1) {
                const Scalar l1 = band_(o1, j);
                for (Eigen::Index o2 = o1; o2 <= last; ++o2)
                    band_(o2 - o1, j + o1) -= band_(o2, j) * l1;
            }
        }
        factored_ = true;
        return true;
    }

    /// Solves with the factor computed by factorize().
    Vec solve(Vec b) const {
        for (Eigen::Index j = 0; j < n_; ++j) {
            b(j) /= band_(0, j);
            const Eigen::Index last = std::min(bw_, n_ - 1 - j);
            for (Eigen::Index o = 1; o <= last; ++o) b(j + o) -= band_(o, j) * b(j);
        }
        for (Eigen::Index j = n_ - 1; j >= 0; --j) {
            const Eigen::Index last = std::min(bw_, n_ - 1 - j);
            for (Eigen::Index o = 1; o <= last; ++o) b(j) -= band_(o, j) * b(j + o);
            b(j) /= band_(0, j);
        }
        return b;
    }

    bool factored() const { return factored_; }

private:
    Eigen::Index n_;
    Eigen::Index bw_;
    Storage band_;
    bool factored_ = false;
};

}  // namespace mdfuse

#endif  // MDFUSE_LINALG_HPP
