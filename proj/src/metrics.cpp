#include "mdfuse/metrics.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <numeric>
#include <random>

namespace mdfuse {

std::string to_string(Metric metric) { return metric == Metric::ccc ? "ccc" : "pearson"; }

double metric_value(Metric metric, const Vector& x, const Vector& y) {
    return metric == Metric::ccc ? ccc(x, y) : pearson(x, y);
}

std::vector<int> best_permutation(const Matrix& corr) {
    if (corr.rows() != corr.cols()) throw ValidationError("correlation matrix must be square");
    const int D = static_cast<int>(corr.rows());
    if (D > 8) throw ValidationError("exhaustive alignment supports at most 8 dimensions");
    constexpr double tie_tol = 1e-12;

    std::vector<int> perm(static_cast<std::size_t>(D));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_score = -std::numeric_limits<double>::infinity();
    int best_moved = D + 1;
    do {
        double score = 0.0;
        int moved = 0;
        for (int d = 0; d < D; ++d) {
            const double c = corr(perm[static_cast<std::size_t>(d)], d);
            score += std::isnan(c) ? 0.0 : c;
            moved += perm[static_cast<std::size_t>(d)] != d;
        }
        // std::next_permutation visits in lexicographic order, so keeping the
        // first of equal candidates implements the lexicographic tie-break.
        if (score > best_score + tie_tol || (std::abs(score - best_score) <= tie_tol && moved < best_moved)) {
            best_score = score;
            best_moved = moved;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

Matrix permute_columns(const Matrix& m, const std::vector<int>& perm) {
    if (static_cast<Eigen::Index>(perm.size()) != m.cols()) throw ValidationError("permutation size mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t d = 0; d < perm.size(); ++d) out.col(static_cast<Eigen::Index>(d)) = m.col(perm[d]);
    return out;
}

Alignment align_dimensions(const Matrix& estimates, const Matrix& reference) {
    if (estimates.rows() != reference.rows() || estimates.cols() != reference.cols())
        throw ValidationError("estimates and reference differ in shape");
    const auto D = estimates.cols();
    Matrix corr(D, D);
    for (Eigen::Index i = 0; i < D; ++i)
        for (Eigen::Index j = 0; j < D; ++j) corr(i, j) = pearson(estimates.col(i), reference.col(j));
    Alignment out;
    out.perm = best_permutation(corr);
    out.aligned = permute_columns(estimates, out.perm);
    return out;
}

BootstrapVerdict bootstrap_significance(const Vector& pred_a, const Vector& pred_b, const Vector& truth,
                                        Metric metric, int n_boot, double alpha, std::uint64_t seed) {
    if (pred_a.size() != truth.size() || pred_b.size() != truth.size())
        throw ValidationError("bootstrap inputs differ in length");
    if (truth.size() < 2) throw ValidationError("bootstrap needs at least two samples");
    if (n_boot < 1 || !(alpha > 0.0 && alpha < 1.0)) throw ValidationError("invalid bootstrap settings");

    std::mt19937_64 rng(seed);
    const auto n = truth.size();
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    Vector ra(n), rb(n), rt(n);
    int a_higher = 0;
    int b_higher = 0;
    BootstrapVerdict v;
    for (int b = 0; b < n_boot; ++b) {
        bool ok = false;
        for (int attempt = 0; attempt <= 10 && !ok; ++attempt) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto j = pick(rng);
                ra(i) = pred_a(j);
                rb(i) = pred_b(j);
                rt(i) = truth(j);
            }
            const double ma = metric_value(metric, ra, rt);
            const double mb = metric_value(metric, rb, rt);
            // Constant truth makes every metric meaningless for the draw.
            const bool truth_constant = (rt.array() == rt(0)).all();
            if (std::isnan(ma) || std::isnan(mb) || truth_constant) continue;
            ok = true;
            a_higher += ma > mb;
            b_higher += mb > ma;
        }
        if (ok)
            ++v.completed;
        else
            ++v.skipped;
    }
    if (v.completed > 0) {
        v.frac_a_higher = static_cast<double>(a_higher) / v.completed;
        v.frac_b_higher = static_cast<double>(b_higher) / v.completed;
        if (v.frac_a_higher >= 1.0 - alpha)
            v.winner = Winner::a;
        else if (v.frac_b_higher >= 1.0 - alpha)
            v.winner = Winner::b;
    }
    return v;
}

PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b, double alpha) {
    if (a.size() != b.size()) throw ValidationError("paired samples differ in length");
    if (a.size() < 2) throw ValidationError("paired t-test needs at least two folds");
    const auto n = static_cast<double>(a.size());
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
    const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : diff) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / (n - 1.0));

    PairedTTest out;
    out.df = static_cast<int>(a.size()) - 1;
    if (sd == 0.0) {
        const bool all_pos = std::all_of(diff.begin(), diff.end(), [](double d) { return d > 0.0; });
        const bool all_neg = std::all_of(diff.begin(), diff.end(), [](double d) { return d < 0.0; });
        if (all_pos || all_neg) {
            out.t = all_pos ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            out.p_value = 0.0;
            out.winner = all_pos ? Winner::a : Winner::b;
        }
        return out;
    }
    out.t = mean / (sd / std::sqrt(n));
    const boost::math::students_t dist(static_cast<double>(out.df));
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
    if (out.p_value < alpha) out.winner = out.t > 0 ? Winner::a : Winner::b;
    return out;
}

}  // namespace mdfuse
