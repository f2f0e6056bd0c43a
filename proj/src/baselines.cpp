#include "mdfuse/baselines.hpp"

#include "mdfuse/parallel.hpp"

#include <cmath>
#include <map>
#include <string>

namespace mdfuse {

namespace {

template <typename Dataset>
std::vector<PosteriorEstimate> mean_fuse_impl(const Dataset& ds, EstimateKind kind) {
    std::vector<PosteriorEstimate> out;
    out.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) {
        if (inst.annotations.empty()) throw ValidationError("instance '" + inst.id + "' has no annotations");
        Matrix sum = Matrix::Zero(inst.annotations.front().values.rows(), ds.D);
        for (const auto& a : inst.annotations) sum += a.values;
        out.push_back({inst.id, kind, sum / static_cast<double>(inst.annotations.size()), std::nullopt});
    }
    return out;
}

template <typename Dataset>
std::vector<PosteriorEstimate> majority_impl(const Dataset& ds, EstimateKind kind) {
    std::vector<PosteriorEstimate> out;
    out.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) {
        if (inst.annotations.empty()) throw ValidationError("instance '" + inst.id + "' has no annotations");
        for (const auto& a : inst.annotations)
            if (!(a.values.array() == a.values.array().round()).all())
                throw ValidationError("instance '" + inst.id + "': majority vote needs integer labels (annotator " +
                                      std::to_string(a.annotator) + ")");
        const auto rows = inst.annotations.front().values.rows();
        Matrix labels(rows, ds.D);
        for (Eigen::Index t = 0; t < rows; ++t)
            for (int d = 0; d < ds.D; ++d) {
                std::map<long long, int> votes;  // ordered, so ties resolve to the smallest label
                for (const auto& a : inst.annotations) ++votes[std::llround(a.values(t, d))];
                long long best = votes.begin()->first;
                int best_n = 0;
                for (const auto& [label, n] : votes)
                    if (n > best_n) {
                        best = label;
                        best_n = n;
                    }
                labels(t, d) = static_cast<double>(best);
            }
        out.push_back({inst.id, kind, labels, std::nullopt});
    }
    return out;
}

template <typename Dataset>
Dataset slice_impl(const Dataset& ds, int d) {
    if (d < 0 || d >= ds.D) throw ValidationError("dimension index out of range");
    Dataset out = ds;
    out.D = 1;
    for (auto& inst : out.instances)
        for (auto& a : inst.annotations) a.values = Matrix(a.values.col(d));
    return out;
}

}  // namespace

std::vector<PosteriorEstimate> mean_fuse(const GlobalDataset& ds) { return mean_fuse_impl(ds, EstimateKind::global); }
std::vector<PosteriorEstimate> mean_fuse(const TimeSeriesDataset& ds) {
    return mean_fuse_impl(ds, EstimateKind::timeseries);
}

std::vector<PosteriorEstimate> majority_vote(const GlobalDataset& ds) { return majority_impl(ds, EstimateKind::global); }
std::vector<PosteriorEstimate> majority_vote(const TimeSeriesDataset& ds) {
    return majority_impl(ds, EstimateKind::timeseries);
}

GlobalDataset slice_dimension(const GlobalDataset& ds, int d) { return slice_impl(ds, d); }
TimeSeriesDataset slice_dimension(const TimeSeriesDataset& ds, int d) { return slice_impl(ds, d); }

std::vector<PosteriorEstimate> concat_dimensions(const std::vector<std::vector<PosteriorEstimate>>& per_dim) {
    if (per_dim.empty()) throw ValidationError("no dimensions to concatenate");
    const auto D = static_cast<Eigen::Index>(per_dim.size());
    std::vector<PosteriorEstimate> out;
    for (std::size_t m = 0; m < per_dim.front().size(); ++m) {
        const auto& first = per_dim.front()[m];
        PosteriorEstimate e{first.id, first.kind, Matrix(first.mean.rows(), D), std::nullopt};
        bool all_cov = true;
        for (Eigen::Index d = 0; d < D; ++d) {
            const auto& src = per_dim[static_cast<std::size_t>(d)].at(m);
            if (src.mean.cols() != 1 || src.mean.rows() != first.mean.rows())
                throw ValidationError("per-dimension estimates have inconsistent shapes");
            e.mean.col(d) = src.mean.col(0);
            all_cov = all_cov && src.cov.has_value();
        }
        if (all_cov) {
            Matrix cov = Matrix::Zero(D, D);
            for (Eigen::Index d = 0; d < D; ++d) cov(d, d) = (*per_dim[static_cast<std::size_t>(d)][m].cov)(0, 0);
            e.cov = cov;
        }
        out.push_back(std::move(e));
    }
    return out;
}

IndependentGlobalFit independent_fit(const GlobalDataset& ds, const GlobalFitConfig& config, int jobs) {
    IndependentGlobalFit out;
    out.per_dim.resize(static_cast<std::size_t>(ds.D));
    std::vector<std::vector<PosteriorEstimate>> est(static_cast<std::size_t>(ds.D));
    parallel_for(out.per_dim.size(), jobs, [&](std::size_t d) {
        const GlobalDataset slice = slice_dimension(ds, static_cast<int>(d));
        out.per_dim[d] = fit(slice, config);
        est[d] = e_step(out.per_dim[d].params, slice, config.ridge);
    });
    out.estimates = concat_dimensions(est);
    return out;
}

int best_restart_by_objective(const TimeSeriesFitResult& fit) {
    int best = 0;
    for (std::size_t r = 1; r < fit.restarts.size(); ++r)
        if (fit.restarts[r].objective.back() > fit.restarts[static_cast<std::size_t>(best)].objective.back())
            best = static_cast<int>(r);
    return best;
}

IndependentTimeSeriesFit independent_fit(const TimeSeriesDataset& ds, const TimeSeriesFitConfig& config) {
    IndependentTimeSeriesFit out;
    out.per_dim.resize(static_cast<std::size_t>(ds.D));
    out.chosen_restart.resize(static_cast<std::size_t>(ds.D));
    std::vector<std::vector<PosteriorEstimate>> est(static_cast<std::size_t>(ds.D));
    for (int d = 0; d < ds.D; ++d) {
        const TimeSeriesDataset slice = slice_dimension(ds, d);
        auto& res = out.per_dim[static_cast<std::size_t>(d)];
        res = fit(slice, config);
        const int r = best_restart_by_objective(res);
        out.chosen_restart[static_cast<std::size_t>(d)] = r;
        const auto& modes = res.restarts[static_cast<std::size_t>(r)].modes;
        for (std::size_t m = 0; m < modes.size(); ++m)
            est[static_cast<std::size_t>(d)].push_back(
                {ds.instances[m].id, EstimateKind::timeseries, modes[m], std::nullopt});
    }
    out.estimates = concat_dimensions(est);
    return out;
}

}  // namespace mdfuse
