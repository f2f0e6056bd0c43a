#ifndef MDFUSE_BASELINES_HPP
#define MDFUSE_BASELINES_HPP

#include "mdfuse/global_model.hpp"
#include "mdfuse/timeseries_model.hpp"
#include "mdfuse/types.hpp"

#include <vector>

namespace mdfuse {

enum class BaselineKind { mean_fusion, majority_vote, independent_global, independent_timeseries };

/// Unweighted per-dimension (and per-frame) mean over the annotators present.
std::vector<PosteriorEstimate> mean_fuse(const GlobalDataset& ds);
std::vector<PosteriorEstimate> mean_fuse(const TimeSeriesDataset& ds);

/// Modal label per instance/frame/dimension; ties go to the smallest label.
/// Throws ValidationError when any annotation is not integer valued.
std::vector<PosteriorEstimate> majority_vote(const GlobalDataset& ds);
std::vector<PosteriorEstimate> majority_vote(const TimeSeriesDataset& ds);

/// The dataset restricted to annotation dimension d (D = 1).
GlobalDataset slice_dimension(const GlobalDataset& ds, int d);
TimeSeriesDataset slice_dimension(const TimeSeriesDataset& ds, int d);

/// Per-dimension models: dimension d is the joint model fit on slice_dimension(ds, d).
struct IndependentGlobalFit {
    std::vector<GlobalFitResult> per_dim;
    std::vector<PosteriorEstimate> estimates;  // posterior means concatenated column-wise
};

struct IndependentTimeSeriesFit {
    std::vector<TimeSeriesFitResult> per_dim;
    std::vector<int> chosen_restart;           // per dimension, highest final objective
    std::vector<PosteriorEstimate> estimates;  // modes of the chosen restarts
};

IndependentGlobalFit independent_fit(const GlobalDataset& ds, const GlobalFitConfig& config, int jobs = 1);
IndependentTimeSeriesFit independent_fit(const TimeSeriesDataset& ds, const TimeSeriesFitConfig& config);

/// Index of the restart whose objective trace ends highest.
int best_restart_by_objective(const TimeSeriesFitResult& fit);

/// Concatenates D single-dimension estimate lists column-wise. Covariances,
/// when present in every input, are placed on the block diagonal.
std::vector<PosteriorEstimate> concat_dimensions(const std::vector<std::vector<PosteriorEstimate>>& per_dim);

}  // namespace mdfuse

#endif  // MDFUSE_BASELINES_HPP
