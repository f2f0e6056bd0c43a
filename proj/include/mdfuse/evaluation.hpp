#ifndef MDFUSE_EVALUATION_HPP
#define MDFUSE_EVALUATION_HPP

#include "mdfuse/global_model.hpp"
#include "mdfuse/io.hpp"
#include "mdfuse/metrics.hpp"
#include "mdfuse/timeseries_model.hpp"
#include "mdfuse/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mdfuse {

enum class ModelKind { joint, independent, mean };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct CvPlan {
    int C = 5;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
    int n_boot = 1000;
    double alpha = 0.05;

    void validate() const;
};

/// Instance indices of one fold. `fit` and `validation` partition the
/// training portion; `test` is the held-out fold.
struct Fold {
    std::vector<int> fit;
    std::vector<int> validation;
    std::vector<int> test;
};

/// Shuffles [0, M) with the plan seed, cuts C contiguous test folds and holds
/// out the last validation_fraction of each fold's shuffled training set.
std::vector<Fold> make_folds(int M, const CvPlan& plan);

GlobalDataset subset(const GlobalDataset& ds, const std::vector<int>& idx);
TimeSeriesDataset subset(const TimeSeriesDataset& ds, const std::vector<int>& idx);

/// Gives annotators absent from `fitted_on` the pool-mean diagonal of the
/// seen F_k (as a scaled identity) and the pool-mean tau2. Returns the ids filled.
std::vector<int> fill_unseen_annotators(GlobalModelParams& params, const std::vector<int>& counts);
std::vector<int> fill_unseen_annotators(TimeSeriesModelParams& params, const std::vector<int>& counts);

/// Mean over dimensions of CCC after aligning estimate columns to the truth.
double aligned_mean_ccc(const Matrix& estimates, const Matrix& truth);

/// Average F_k over annotators with a nonzero count.
Matrix mean_distortion(const GlobalModelParams& params, const std::vector<int>& counts);

/// Cosine similarity of two matrices flattened to vectors.
double matrix_cosine(const Matrix& a, const Matrix& b);

struct MetricRow {
    std::string model;
    int fold = 0;
    int dim = 0;
    Metric metric = Metric::ccc;
    double value = 0.0;
};

struct Selection {
    std::string model;
    int fold = 0;
    int dim = -1;  // -1 for joint models, otherwise the dimension of an independent fit
    int W = 0;     // time series only
    int restart = -1;
    int iteration = 0;
    double validation_ccc = 0.0;
    std::vector<int> test_permutation;
};

struct Significance {
    std::string method;  // bootstrap | paired_t
    std::string model_a;
    std::string model_b;
    Metric metric = Metric::ccc;
    int dim = 0;
    Winner winner = Winner::none;
    double statistic = 0.0;  // fraction of resamples won by a, or t
    double p_value = 0.0;    // paired_t only
    int skipped = 0;         // bootstrap only
};

struct EvalReport {
    std::string setting;
    std::vector<std::string> models;
    int C = 0;
    int D = 0;
    std::vector<MetricRow> rows;             // test metrics of fused estimates
    std::vector<MetricRow> prediction_rows;  // test metrics of the feature-only prediction
    std::vector<Selection> selections;
    std::vector<Significance> significance;
    std::vector<std::string> warnings;

    /// Mean over folds of the test metric for one model and dimension.
    double mean(const std::string& model, int dim, Metric metric) const;
    std::vector<double> per_fold(const std::string& model, int dim, Metric metric) const;
};

/// Soft-EM evaluation. Each fold fits on its fit split, picks the EM
/// iteration with the best validation CCC and fuses the test split with it.
EvalReport run_cv_global(const GlobalDataset& ds, const Matrix& truth, const std::vector<ModelKind>& models,
                         const CvPlan& plan, const GlobalFitConfig& config, int jobs = 1);

/// Hard-EM evaluation over a grid of filter widths; (W, restart, iteration)
/// is selected by validation CCC on concatenated series.
EvalReport run_cv_timeseries(const TimeSeriesDataset& ds, const std::vector<Matrix>& truth,
                             const std::vector<ModelKind>& models, const CvPlan& plan,
                             const TimeSeriesFitConfig& config, const std::vector<int>& w_grid, int jobs = 1);

/// Report JSON: rows, per-model aggregates, predictions, selections, significance, warnings.
Json report_to_json(const EvalReport& report);
/// Flat `model,fold,dim,metric,value` table of the fused-estimate test metrics.
std::string report_to_csv(const EvalReport& report);

}  // namespace mdfuse

#endif  // MDFUSE_EVALUATION_HPP
