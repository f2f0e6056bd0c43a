#include "mdfuse/types.hpp"

#include <string>

namespace mdfuse {

namespace {

std::string where(const std::string& id, int m) {
    return "instance " + std::to_string(m) + " ('" + id + "')";
}

template <typename Instance>
void check_annotations(const Instance& inst, int m, int K, Eigen::Index rows, int D) {
    if (inst.annotations.empty())
        throw ValidationError(where(inst.id, m) + ": has no annotations");
    AnnotatorId prev = -1;
    for (const auto& a : inst.annotations) {
        if (a.annotator < 0 || a.annotator >= K)
            throw ValidationError(where(inst.id, m) + ": annotator " + std::to_string(a.annotator) +
                                  " outside pool of size " + std::to_string(K));
        if (a.annotator == prev)
            throw ValidationError(where(inst.id, m) + ": annotator " + std::to_string(a.annotator) +
                                  " appears more than once");
        if (a.annotator < prev)
            throw ValidationError(where(inst.id, m) + ": annotations not sorted by annotator id");
        prev = a.annotator;
        if (a.values.rows() != rows || a.values.cols() != D)
            throw ValidationError(where(inst.id, m) + ": annotator " + std::to_string(a.annotator) +
                                  " has " + std::to_string(a.values.rows()) + "x" +
                                  std::to_string(a.values.cols()) + " values, expected " +
                                  std::to_string(rows) + "x" + std::to_string(D));
        if (!a.values.allFinite())
            throw ValidationError(where(inst.id, m) + ": annotator " + std::to_string(a.annotator) +
                                  " has non-finite values");
    }
}

void check_counts(int D, int P, int K) {
    if (D < 1 || P < 1 || K < 1)
        throw ValidationError("dataset dimensions must be positive (D=" + std::to_string(D) +
                              ", P=" + std::to_string(P) + ", K=" + std::to_string(K) + ")");
}

template <typename Dataset>
std::vector<int> count_annotators(const Dataset& ds) {
    std::vector<int> counts(static_cast<std::size_t>(ds.K), 0);
    for (const auto& inst : ds.instances)
        for (const auto& a : inst.annotations) ++counts[static_cast<std::size_t>(a.annotator)];
    return counts;
}

}  // namespace

Matrix GlobalDataset::feature_matrix() const {
    Matrix x(M(), P);
    for (int m = 0; m < M(); ++m) x.row(m) = instances[m].features.transpose();
    return x;
}

std::vector<int> GlobalDataset::annotator_counts() const { return count_annotators(*this); }

void GlobalDataset::validate() const {
    check_counts(D, P, K);
    if (instances.empty()) throw ValidationError("dataset has no instances");
    for (int m = 0; m < M(); ++m) {
        const auto& inst = instances[m];
        if (inst.features.size() != P)
            throw ValidationError(where(inst.id, m) + ": feature length " +
                                  std::to_string(inst.features.size()) + ", expected " +
                                  std::to_string(P));
        if (!inst.features.allFinite())
            throw ValidationError(where(inst.id, m) + ": non-finite feature value");
        check_annotations(inst, m, K, 1, D);
    }
}

int TimeSeriesDataset::min_length() const {
    int t = 0;
    for (std::size_t m = 0; m < instances.size(); ++m)
        t = m == 0 ? instances[m].T() : std::min(t, instances[m].T());
    return t;
}

std::vector<int> TimeSeriesDataset::annotator_counts() const { return count_annotators(*this); }

void TimeSeriesDataset::validate() const {
    check_counts(D, P, K);
    if (instances.empty()) throw ValidationError("dataset has no instances");
    for (int m = 0; m < M(); ++m) {
        const auto& inst = instances[m];
        if (inst.T() < 1)
            throw ValidationError(where(inst.id, m) + ": has no frames");
        if (inst.features.cols() != P)
            throw ValidationError(where(inst.id, m) + ": feature width " +
                                  std::to_string(inst.features.cols()) + ", expected " +
                                  std::to_string(P));
        if (!inst.features.allFinite())
            throw ValidationError(where(inst.id, m) + ": non-finite feature value");
        check_annotations(inst, m, K, inst.T(), D);
    }
}

void GlobalModelParams::validate() const {
    if (theta.size() == 0) throw ValidationError("theta is empty");
    if (tau2.size() != K()) throw ValidationError("tau2 length does not match annotator count");
    for (const auto& fk : f)
        if (fk.rows() != D() || fk.cols() != D())
            throw ValidationError("annotator matrix is not DxD");
    if (!(sigma2 > 0.0) || !(tau2.array() > 0.0).all())
        throw ValidationError("noise variances must be positive");
}

void FilterBank::validate() const {
    if (W < 1 || D < 1) throw ValidationError("filter width and dimension must be positive");
    for (const auto& c : coeffs) {
        if (c.rows() != W * D || c.cols() != D)
            throw ValidationError("filter coefficient block is not (W*D)xD");
        if (!c.allFinite()) throw ValidationError("non-finite filter coefficient");
    }
}

void TimeSeriesModelParams::validate() const {
    filters.validate();
    if (filters.D != D()) throw ValidationError("filter bank dimension does not match theta");
    if (tau2.size() != K()) throw ValidationError("tau2 length does not match annotator count");
    if (!(sigma2 > 0.0) || !(tau2.array() > 0.0).all())
        throw ValidationError("noise variances must be positive");
}

Matrix stack_means(const std::vector<PosteriorEstimate>& estimates) {
    Eigen::Index rows = 0;
    Eigen::Index cols = estimates.empty() ? 0 : estimates.front().mean.cols();
    for (const auto& e : estimates) rows += e.mean.rows();
    Matrix out(rows, cols);
    Eigen::Index r = 0;
    for (const auto& e : estimates) {
        out.middleRows(r, e.mean.rows()) = e.mean;
        r += e.mean.rows();
    }
    return out;
}

}  // namespace mdfuse
