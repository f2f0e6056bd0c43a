#ifndef MDFUSE_METRICS_HPP
#define MDFUSE_METRICS_HPP

#include "mdfuse/types.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace mdfuse {

enum class Metric { ccc, pearson };

std::string to_string(Metric metric);

namespace detail {

template <typename DX, typename DY>
void check_pair(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
    if (x.size() != y.size())
        throw ValidationError("metric inputs differ in length (" + std::to_string(x.size()) + " vs " +
                              std::to_string(y.size()) + ")");
    if (x.size() < 2) throw ValidationError("metric inputs need at least two samples");
}

}  // namespace detail

/// Concordance correlation 2 s_xy / (s_x^2 + s_y^2 + (mean_x - mean_y)^2) with
/// 1/n moments. Two identical constant inputs give 1.
template <typename DX, typename DY>
double ccc(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
    detail::check_pair(x, y);
    const auto n = static_cast<double>(x.size());
    const auto xa = x.derived().template cast<double>().array();
    const auto ya = y.derived().template cast<double>().array();
    const double mx = xa.sum() / n;
    const double my = ya.sum() / n;
    const double sxy = ((xa - mx) * (ya - my)).sum() / n;
    const double sxx = (xa - mx).square().sum() / n;
    const double syy = (ya - my).square().sum() / n;
    const double denom = sxx + syy + (mx - my) * (mx - my);
    if (denom == 0.0) return 1.0;
    return 2.0 * sxy / denom;
}

/// Sample Pearson correlation; NaN when either input is constant.
template <typename DX, typename DY>
double pearson(const Eigen::DenseBase<DX>& x, const Eigen::DenseBase<DY>& y) {
    detail::check_pair(x, y);
    const auto n = static_cast<double>(x.size());
    const auto xa = x.derived().template cast<double>().array();
    const auto ya = y.derived().template cast<double>().array();
    const double mx = xa.sum() / n;
    const double my = ya.sum() / n;
    const double sxx = (xa - mx).square().sum();
    const double syy = (ya - my).square().sum();
    if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double r = ((xa - mx) * (ya - my)).sum() / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double metric_value(Metric metric, const Vector& x, const Vector& y);

/// Column permutation applied to estimates: aligned.col(d) = estimates.col(perm[d]).
struct Alignment {
    std::vector<int> perm;
    Matrix aligned;
};

/// Permutation maximizing sum_d corr(perm[d], d) over all D! candidates, where
/// corr(i, j) scores estimate column i against reference column j. Near-ties
/// go to the permutation displacing the fewest columns, then lexicographic order.
std::vector<int> best_permutation(const Matrix& corr);

/// Label-switching fix: reorders estimate columns to best match the reference by Pearson.
Alignment align_dimensions(const Matrix& estimates, const Matrix& reference);

/// Applies a column permutation.
Matrix permute_columns(const Matrix& m, const std::vector<int>& perm);

enum class Winner { none, a, b };

struct BootstrapVerdict {
    double frac_a_higher = 0.0;
    double frac_b_higher = 0.0;
    int completed = 0;  // resamples that produced a metric for both models
    int skipped = 0;    // resamples abandoned after repeated degenerate draws
    Winner winner = Winner::none;
    bool significant() const { return winner != Winner::none; }
};

/// Resamples (pred_a, pred_b, truth) jointly with replacement. A model is
/// significant when its metric is strictly higher in at least (1 - alpha) of
/// completed resamples. Degenerate draws are redrawn up to 10 times.
BootstrapVerdict bootstrap_significance(const Vector& pred_a, const Vector& pred_b, const Vector& truth,
                                        Metric metric, int n_boot = 1000, double alpha = 0.05,
                                        std::uint64_t seed = 0);

struct PairedTTest {
    double t = 0.0;
    double p_value = 1.0;
    int df = 0;
    Winner winner = Winner::none;
    bool significant() const { return winner != Winner::none; }
};

/// Two-sided paired t-test on per-fold metrics a - b. With zero variance the
/// verdict follows the common sign of the differences (p = 0), or is not
/// significant when all differences are zero.
PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b, double alpha = 0.05);

}  // namespace mdfuse

#endif  // MDFUSE_METRICS_HPP
