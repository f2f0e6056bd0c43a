#ifndef MDFUSE_TYPES_HPP
#define MDFUSE_TYPES_HPP

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdfuse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using AnnotatorId = int;

/// Raised when a dataset, parameter set or file violates its invariants.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a linear solve or decomposition fails on degenerate parameters.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One annotator's rating of one instance. For global data `values` is 1xD,
/// for time series it is TxD.
struct Annotation {
    AnnotatorId annotator = 0;
    Matrix values;
};

struct GlobalInstance {
    std::string id;
    Vector features;                      // length P
    std::vector<Annotation> annotations;  // sorted by annotator id, values 1xD
};

struct GlobalDataset {
    int D = 0;
    int P = 0;
    int K = 0;
    std::vector<GlobalInstance> instances;

    int M() const { return static_cast<int>(instances.size()); }
    /// Feature matrix with one row per instance.
    Matrix feature_matrix() const;
    /// Number of instances each annotator labelled (M_k).
    std::vector<int> annotator_counts() const;
    void validate() const;
};

struct TimeSeriesInstance {
    std::string id;
    Matrix features;                      // T x P
    std::vector<Annotation> annotations;  // sorted by annotator id, values T x D

    int T() const { return static_cast<int>(features.rows()); }
};

struct TimeSeriesDataset {
    int D = 0;
    int P = 0;
    int K = 0;
    std::vector<TimeSeriesInstance> instances;

    int M() const { return static_cast<int>(instances.size()); }
    int min_length() const;
    std::vector<int> annotator_counts() const;
    void validate() const;
};

struct GlobalModelParams {
    Matrix theta;            // P x D
    std::vector<Matrix> f;   // K matrices, each D x D
    double sigma2 = 1.0;
    Vector tau2;             // K

    int P() const { return static_cast<int>(theta.rows()); }
    int D() const { return static_cast<int>(theta.cols()); }
    int K() const { return static_cast<int>(f.size()); }
    void validate() const;
};

/// Per-annotator causal filter coefficients. coeffs[k] is (W*D) x D: column d
/// holds f^d_k, whose block [d'*W, d'*W + W) is the sub-filter applied to
/// ground-truth dimension d' (tap 0 first).
struct FilterBank {
    int W = 1;
    int D = 1;
    std::vector<Matrix> coeffs;

    int K() const { return static_cast<int>(coeffs.size()); }
    /// Tap l of the sub-filter from ground-truth dimension `from` to output `to`.
    double tap(int k, int to, int from, int l) const { return coeffs[k](from * W + l, to); }
    void validate() const;
};

struct TimeSeriesModelParams {
    Matrix theta;  // P x D
    FilterBank filters;
    double sigma2 = 1.0;
    Vector tau2;   // K

    int W() const { return filters.W; }
    int P() const { return static_cast<int>(theta.rows()); }
    int D() const { return static_cast<int>(theta.cols()); }
    int K() const { return filters.K(); }
    void validate() const;
};

enum class EstimateKind { global, timeseries };

/// Ground-truth estimate for one instance: mean is 1xD (global) or TxD
/// (time series); cov is the DxD posterior covariance for soft-EM estimates.
struct PosteriorEstimate {
    std::string id;
    EstimateKind kind = EstimateKind::global;
    Matrix mean;
    std::optional<Matrix> cov;
};

/// Stacks per-instance estimate means vertically (M x D, or sum(T_m) x D).
Matrix stack_means(const std::vector<PosteriorEstimate>& estimates);

}  // namespace mdfuse

#endif  // MDFUSE_TYPES_HPP
