#include "mdfuse/linalg.hpp"

namespace mdfuse {

RidgeSolver::RidgeSolver(const Matrix& x, double ridge) : x_(x), dual_(ridge > 0.0 && x.cols() > x.rows()) {
    Matrix gram = dual_ ? Matrix(x * x.transpose()) : Matrix(x.transpose() * x);
    gram.diagonal().array() += ridge;
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success)
        throw NumericError("feature Gram matrix is singular; increase ridge");
}

Matrix RidgeSolver::solve(const Matrix& y) const {
    if (dual_) return x_.transpose() * llt_.solve(y);
    return llt_.solve(x_.transpose() * y);
}

}  // namespace mdfuse
