#include "mdfuse/evaluation.hpp"

#include "mdfuse/baselines.hpp"
#include "mdfuse/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace mdfuse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <typename Dataset>
Dataset subset_impl(const Dataset& ds, const std::vector<int>& idx) {
    Dataset out;
    out.D = ds.D;
    out.P = ds.P;
    out.K = ds.K;
    out.instances.reserve(idx.size());
    for (int i : idx) {
        if (i < 0 || i >= ds.M()) throw ValidationError("instance index out of range");
        out.instances.push_back(ds.instances[static_cast<std::size_t>(i)]);
    }
    return out;
}

Matrix rows_of(const Matrix& m, const std::vector<int>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

Matrix stack_series(const std::vector<Matrix>& series, const std::vector<int>& idx) {
    Eigen::Index rows = 0;
    for (int i : idx) rows += series[static_cast<std::size_t>(i)].rows();
    const auto cols = series.empty() ? 0 : series.front().cols();
    Matrix out(rows, cols);
    Eigen::Index r = 0;
    for (int i : idx) {
        const Matrix& s = series[static_cast<std::size_t>(i)];
        out.middleRows(r, s.rows()) = s;
        r += s.rows();
    }
    return out;
}

Matrix stack_series(const std::vector<Matrix>& series) {
    std::vector<int> all(series.size());
    std::iota(all.begin(), all.end(), 0);
    return stack_series(series, all);
}

std::string unseen_warning(int fold, const std::string& model, const std::vector<int>& ids) {
    std::ostringstream os;
    os << "fold " << fold << ", " << model << ": annotators";
    for (int k : ids) os << ' ' << k;
    os << " have no training instances; using pool-mean parameters";
    return os.str();
}

// Everything one fold contributes to the report. Test estimates are kept so
// that bootstrap tests can run on predictions pooled over folds.
struct FoldOutput {
    std::vector<MetricRow> rows;
    std::vector<MetricRow> prediction_rows;
    std::vector<Selection> selections;
    std::vector<std::string> warnings;
    std::vector<Matrix> test_estimates;  // per model, aligned to truth
    Matrix test_truth;
};

void add_metric_rows(std::vector<MetricRow>& rows, const std::string& model, int fold, const Matrix& est,
                     const Matrix& truth) {
    for (Eigen::Index d = 0; d < truth.cols(); ++d)
        for (Metric metric : {Metric::ccc, Metric::pearson})
            rows.push_back({model, fold, static_cast<int>(d), metric,
                            metric_value(metric, est.col(d), truth.col(d))});
}

// Aligns joint estimates to the truth; per-dimension models keep their order.
Matrix align_for_model(ModelKind kind, const Matrix& est, const Matrix& truth, std::vector<int>* perm) {
    if (kind == ModelKind::joint && est.cols() > 1) {
        Alignment a = align_dimensions(est, truth);
        if (perm) *perm = a.perm;
        return a.aligned;
    }
    if (perm) {
        perm->resize(static_cast<std::size_t>(est.cols()));
        std::iota(perm->begin(), perm->end(), 0);
    }
    return est;
}

struct GlobalChoice {
    GlobalModelParams params;
    int iteration = 0;
    double score = kNegInf;
    std::vector<int> unseen;
};

GlobalChoice select_global(const GlobalDataset& fit_set, const GlobalDataset& val_set, const Matrix& val_truth,
                           const GlobalFitConfig& config) {
    GlobalFitConfig cfg = config;
    cfg.keep_snapshots = true;
    const GlobalFitResult res = fit(fit_set, cfg);
    const std::vector<int> counts = fit_set.annotator_counts();
    GlobalChoice best;
    for (std::size_t i = 0; i < res.trace.snapshots.size(); ++i) {
        GlobalModelParams p = res.trace.snapshots[i];
        std::vector<int> unseen = fill_unseen_annotators(p, counts);
        const double score = aligned_mean_ccc(stack_means(e_step(p, val_set, config.ridge)), val_truth);
        if (score > best.score) {
            best = {std::move(p), static_cast<int>(i), score, std::move(unseen)};
        }
    }
    return best;
}

struct TimeSeriesChoice {
    TimeSeriesModelParams params;
    int W = 0;
    int restart = -1;
    int iteration = 0;
    double score = kNegInf;
    std::vector<int> unseen;
};

Matrix fuse_series(const TimeSeriesModelParams& params, const TimeSeriesDataset& ds,
                   const TimeSeriesFitConfig& config) {
    std::vector<Matrix> modes;
    modes.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) modes.push_back(e_step_mode(params, inst, config));
    return stack_series(modes);
}

Matrix predict_series(const TimeSeriesModelParams& params, const TimeSeriesDataset& ds) {
    std::vector<Matrix> out;
    out.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) out.push_back(predict(params, inst.features));
    return stack_series(out);
}

TimeSeriesChoice select_timeseries(const TimeSeriesDataset& fit_set, const TimeSeriesDataset& val_set,
                                   const Matrix& val_truth, const TimeSeriesFitConfig& config,
                                   const std::vector<int>& w_grid) {
    const std::vector<int> counts = fit_set.annotator_counts();
    TimeSeriesChoice best;
    for (int W : w_grid) {
        TimeSeriesFitConfig cfg = config;
        cfg.W = W;
        cfg.keep_snapshots = true;
        const TimeSeriesFitResult res = fit(fit_set, cfg);
        for (std::size_t r = 0; r < res.restarts.size(); ++r) {
            const auto& restart = res.restarts[r];
            for (std::size_t i = 0; i < restart.snapshots.size(); ++i) {
                TimeSeriesModelParams p = restart.snapshots[i];
                std::vector<int> unseen = fill_unseen_annotators(p, counts);
                const double score = aligned_mean_ccc(fuse_series(p, val_set, cfg), val_truth);
                if (score > best.score)
                    best = {std::move(p), W, static_cast<int>(r), static_cast<int>(i), score, std::move(unseen)};
            }
        }
    }
    return best;
}

template <typename Dataset>
void check_models(const Dataset& ds, const std::vector<ModelKind>& models, const CvPlan& plan) {
    plan.validate();
    ds.validate();
    if (models.empty()) throw ValidationError("no models to evaluate");
    if (plan.C > ds.M()) throw ValidationError("fold count exceeds the number of instances");
    for (std::size_t i = 0; i < models.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (models[i] == models[j]) throw ValidationError("model listed twice: " + to_string(models[i]));
}

std::uint64_t task_seed(std::uint64_t seed, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), a, b, c};
    std::uint32_t w[2];
    seq.generate(w, w + 2);
    return (static_cast<std::uint64_t>(w[0]) << 32) | w[1];
}

EvalReport assemble(std::string setting, const std::vector<ModelKind>& models, const CvPlan& plan, int D,
                    std::vector<FoldOutput>& folds) {
    EvalReport report;
    report.setting = std::move(setting);
    for (ModelKind m : models) report.models.push_back(to_string(m));
    report.C = plan.C;
    report.D = D;
    for (auto& f : folds) {
        report.rows.insert(report.rows.end(), f.rows.begin(), f.rows.end());
        report.prediction_rows.insert(report.prediction_rows.end(), f.prediction_rows.begin(),
                                      f.prediction_rows.end());
        report.selections.insert(report.selections.end(), f.selections.begin(), f.selections.end());
        report.warnings.insert(report.warnings.end(), f.warnings.begin(), f.warnings.end());
    }

    // Pooled test predictions for the bootstrap.
    std::vector<Matrix> pooled(models.size());
    Matrix truth;
    {
        Eigen::Index rows = 0;
        for (const auto& f : folds) rows += f.test_truth.rows();
        truth.resize(rows, D);
        for (auto& p : pooled) p.resize(rows, D);
        Eigen::Index r = 0;
        for (const auto& f : folds) {
            truth.middleRows(r, f.test_truth.rows()) = f.test_truth;
            for (std::size_t m = 0; m < models.size(); ++m)
                pooled[m].middleRows(r, f.test_truth.rows()) = f.test_estimates[m];
            r += f.test_truth.rows();
        }
    }

    for (std::size_t b = 1; b < models.size(); ++b)
        for (int d = 0; d < D; ++d)
            for (Metric metric : {Metric::ccc, Metric::pearson}) {
                const auto mi = static_cast<std::uint32_t>(metric);
                const BootstrapVerdict v =
                    bootstrap_significance(pooled[0].col(d), pooled[b].col(d), truth.col(d), metric, plan.n_boot,
                                           plan.alpha, task_seed(plan.seed, static_cast<std::uint32_t>(b),
                                                                 static_cast<std::uint32_t>(d), mi));
                report.significance.push_back({"bootstrap", report.models[0], report.models[b], metric, d, v.winner,
                                               v.frac_a_higher, 0.0, v.skipped});
                const PairedTTest t = paired_t_test(report.per_fold(report.models[0], d, metric),
                                                    report.per_fold(report.models[b], d, metric), plan.alpha);
                report.significance.push_back({"paired_t", report.models[0], report.models[b], metric, d, t.winner,
                                               t.t, t.p_value, 0});
            }
    return report;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::joint: return "joint";
        case ModelKind::independent: return "independent";
        case ModelKind::mean: return "mean";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "joint") return ModelKind::joint;
    if (name == "independent") return ModelKind::independent;
    if (name == "mean") return ModelKind::mean;
    throw ValidationError("unknown model '" + name + "' (expected joint, independent or mean)");
}

void CvPlan::validate() const {
    if (C < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
        throw ValidationError("validation_fraction must lie in (0, 1)");
    if (n_boot < 1) throw ValidationError("n_boot must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

std::vector<Fold> make_folds(int M, const CvPlan& plan) {
    plan.validate();
    if (M < plan.C) throw ValidationError("fold count exceeds the number of instances");
    std::vector<int> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(plan.seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Fold> folds(static_cast<std::size_t>(plan.C));
    for (int c = 0; c < plan.C; ++c) {
        const auto lo = static_cast<std::size_t>(static_cast<long long>(M) * c / plan.C);
        const auto hi = static_cast<std::size_t>(static_cast<long long>(M) * (c + 1) / plan.C);
        Fold& f = folds[static_cast<std::size_t>(c)];
        std::vector<int> train;
        for (std::size_t i = 0; i < order.size(); ++i) (i >= lo && i < hi ? f.test : train).push_back(order[i]);
        if (train.size() < 2) throw ValidationError("training portion too small to hold out a validation set");
        const auto n_val = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(plan.validation_fraction * static_cast<double>(train.size()))), 1,
            train.size() - 1);
        f.fit.assign(train.begin(), train.end() - static_cast<std::ptrdiff_t>(n_val));
        f.validation.assign(train.end() - static_cast<std::ptrdiff_t>(n_val), train.end());
    }
    return folds;
}

GlobalDataset subset(const GlobalDataset& ds, const std::vector<int>& idx) { return subset_impl(ds, idx); }
TimeSeriesDataset subset(const TimeSeriesDataset& ds, const std::vector<int>& idx) { return subset_impl(ds, idx); }

std::vector<int> fill_unseen_annotators(GlobalModelParams& params, const std::vector<int>& counts) {
    std::vector<int> unseen;
    double diag = 0.0;
    double tau2 = 0.0;
    int seen = 0;
    for (int k = 0; k < params.K(); ++k) {
        if (counts[static_cast<std::size_t>(k)] == 0) {
            unseen.push_back(k);
            continue;
        }
        diag += params.f[static_cast<std::size_t>(k)].diagonal().mean();
        tau2 += params.tau2(k);
        ++seen;
    }
    if (unseen.empty() || seen == 0) return unseen;
    for (int k : unseen) {
        params.f[static_cast<std::size_t>(k)] = (diag / seen) * Matrix::Identity(params.D(), params.D());
        params.tau2(k) = tau2 / seen;
    }
    return unseen;
}

std::vector<int> fill_unseen_annotators(TimeSeriesModelParams& params, const std::vector<int>& counts) {
    std::vector<int> unseen;
    auto& coeffs = params.filters.coeffs;
    Matrix mean = Matrix::Zero(params.W() * params.D(), params.D());
    double tau2 = 0.0;
    int seen = 0;
    for (int k = 0; k < params.K(); ++k) {
        if (counts[static_cast<std::size_t>(k)] == 0) {
            unseen.push_back(k);
            continue;
        }
        mean += coeffs[static_cast<std::size_t>(k)];
        tau2 += params.tau2(k);
        ++seen;
    }
    if (unseen.empty() || seen == 0) return unseen;
    for (int k : unseen) {
        coeffs[static_cast<std::size_t>(k)] = mean / seen;
        params.tau2(k) = tau2 / seen;
    }
    return unseen;
}

double aligned_mean_ccc(const Matrix& estimates, const Matrix& truth) {
    const Matrix aligned = align_dimensions(estimates, truth).aligned;
    double s = 0.0;
    for (Eigen::Index d = 0; d < truth.cols(); ++d) s += ccc(aligned.col(d), truth.col(d));
    return s / static_cast<double>(truth.cols());
}

Matrix mean_distortion(const GlobalModelParams& params, const std::vector<int>& counts) {
    if (counts.size() != params.f.size()) throw ValidationError("annotator counts do not match parameters");
    Matrix mean = Matrix::Zero(params.D(), params.D());
    int seen = 0;
    for (int k = 0; k < params.K(); ++k)
        if (counts[static_cast<std::size_t>(k)] > 0) {
            mean += params.f[static_cast<std::size_t>(k)];
            ++seen;
        }
    if (seen == 0) throw ValidationError("no annotator has instances");
    return mean / seen;
}

double matrix_cosine(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ValidationError("matrix shapes differ");
    return a.cwiseProduct(b).sum() / (a.norm() * b.norm());
}

double EvalReport::mean(const std::string& model, int dim, Metric metric) const {
    const std::vector<double> v = per_fold(model, dim, metric);
    if (v.empty()) throw ValidationError("no rows for model '" + model + "'");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> EvalReport::per_fold(const std::string& model, int dim, Metric metric) const {
    std::vector<double> out;
    for (const auto& r : rows)
        if (r.model == model && r.dim == dim && r.metric == metric) out.push_back(r.value);
    return out;
}

EvalReport run_cv_global(const GlobalDataset& ds, const Matrix& truth, const std::vector<ModelKind>& models,
                         const CvPlan& plan, const GlobalFitConfig& config, int jobs) {
    check_models(ds, models, plan);
    config.validate();
    if (truth.rows() != ds.M() || truth.cols() != ds.D) throw ValidationError("truth shape does not match dataset");
    const std::vector<Fold> folds = make_folds(ds.M(), plan);
    std::vector<FoldOutput> out(folds.size());

    parallel_for(folds.size(), jobs, [&](std::size_t c) {
        const Fold& fold = folds[c];
        const int fi = static_cast<int>(c);
        FoldOutput& o = out[c];
        const GlobalDataset fit_set = subset(ds, fold.fit);
        const GlobalDataset val_set = subset(ds, fold.validation);
        const GlobalDataset test_set = subset(ds, fold.test);
        const Matrix val_truth = rows_of(truth, fold.validation);
        o.test_truth = rows_of(truth, fold.test);

        for (ModelKind kind : models) {
            const std::string name = to_string(kind);
            Matrix est;
            Matrix pred;
            if (kind == ModelKind::mean) {
                est = stack_means(mean_fuse(test_set));
            } else if (kind == ModelKind::joint) {
                GlobalChoice ch = select_global(fit_set, val_set, val_truth, config);
                if (!ch.unseen.empty()) o.warnings.push_back(unseen_warning(fi, name, ch.unseen));
                est = stack_means(e_step(ch.params, test_set, config.ridge));
                pred = predict(ch.params, test_set.feature_matrix());
                o.selections.push_back({name, fi, -1, 0, -1, ch.iteration, ch.score, {}});
            } else {
                est.resize(test_set.M(), ds.D);
                pred.resize(test_set.M(), ds.D);
                for (int d = 0; d < ds.D; ++d) {
                    GlobalChoice ch = select_global(slice_dimension(fit_set, d), slice_dimension(val_set, d),
                                                    val_truth.col(d), config);
                    if (!ch.unseen.empty()) o.warnings.push_back(unseen_warning(fi, name, ch.unseen));
                    est.col(d) = stack_means(e_step(ch.params, slice_dimension(test_set, d), config.ridge)).col(0);
                    pred.col(d) = predict(ch.params, test_set.feature_matrix()).col(0);
                    o.selections.push_back({name, fi, d, 0, -1, ch.iteration, ch.score, {}});
                }
            }
            std::vector<int> perm;
            Matrix aligned = align_for_model(kind, est, o.test_truth, &perm);
            if (kind == ModelKind::joint) o.selections.back().test_permutation = perm;
            add_metric_rows(o.rows, name, fi, aligned, o.test_truth);
            if (pred.size() > 0)
                add_metric_rows(o.prediction_rows, name, fi, align_for_model(kind, pred, o.test_truth, nullptr),
                                o.test_truth);
            o.test_estimates.push_back(std::move(aligned));
        }
    });
    return assemble("global", models, plan, ds.D, out);
}

EvalReport run_cv_timeseries(const TimeSeriesDataset& ds, const std::vector<Matrix>& truth,
                             const std::vector<ModelKind>& models, const CvPlan& plan,
                             const TimeSeriesFitConfig& config, const std::vector<int>& w_grid, int jobs) {
    check_models(ds, models, plan);
    config.validate();
    if (w_grid.empty()) throw ValidationError("W grid is empty");
    for (int W : w_grid)
        if (W < 1 || W > ds.min_length())
            throw ValidationError("W=" + std::to_string(W) + " is outside [1, shortest series length " +
                                  std::to_string(ds.min_length()) + "]");
    if (truth.size() != ds.instances.size()) throw ValidationError("truth count does not match dataset");
    for (std::size_t m = 0; m < truth.size(); ++m)
        if (truth[m].rows() != ds.instances[m].T() || truth[m].cols() != ds.D)
            throw ValidationError("truth shape does not match instance '" + ds.instances[m].id + "'");

    const std::vector<Fold> folds = make_folds(ds.M(), plan);
    std::vector<FoldOutput> out(folds.size());
    TimeSeriesFitConfig cfg = config;
    cfg.jobs = 1;

    parallel_for(folds.size(), jobs, [&](std::size_t c) {
        const Fold& fold = folds[c];
        const int fi = static_cast<int>(c);
        FoldOutput& o = out[c];
        const TimeSeriesDataset fit_set = subset(ds, fold.fit);
        const TimeSeriesDataset val_set = subset(ds, fold.validation);
        const TimeSeriesDataset test_set = subset(ds, fold.test);
        const Matrix val_truth = stack_series(truth, fold.validation);
        o.test_truth = stack_series(truth, fold.test);

        for (ModelKind kind : models) {
            const std::string name = to_string(kind);
            Matrix est;
            Matrix pred;
            if (kind == ModelKind::mean) {
                est = stack_means(mean_fuse(test_set));
            } else if (kind == ModelKind::joint) {
                TimeSeriesChoice ch = select_timeseries(fit_set, val_set, val_truth, cfg, w_grid);
                if (!ch.unseen.empty()) o.warnings.push_back(unseen_warning(fi, name, ch.unseen));
                est = fuse_series(ch.params, test_set, cfg);
                pred = predict_series(ch.params, test_set);
                o.selections.push_back({name, fi, -1, ch.W, ch.restart, ch.iteration, ch.score, {}});
            } else {
                est.resize(o.test_truth.rows(), ds.D);
                pred.resize(o.test_truth.rows(), ds.D);
                for (int d = 0; d < ds.D; ++d) {
                    const TimeSeriesDataset test_d = slice_dimension(test_set, d);
                    TimeSeriesChoice ch = select_timeseries(slice_dimension(fit_set, d), slice_dimension(val_set, d),
                                                            val_truth.col(d), cfg, w_grid);
                    if (!ch.unseen.empty()) o.warnings.push_back(unseen_warning(fi, name, ch.unseen));
                    est.col(d) = fuse_series(ch.params, test_d, cfg).col(0);
                    pred.col(d) = predict_series(ch.params, test_d).col(0);
                    o.selections.push_back({name, fi, d, ch.W, ch.restart, ch.iteration, ch.score, {}});
                }
            }
            std::vector<int> perm;
            Matrix aligned = align_for_model(kind, est, o.test_truth, &perm);
            if (kind == ModelKind::joint) o.selections.back().test_permutation = perm;
            add_metric_rows(o.rows, name, fi, aligned, o.test_truth);
            if (pred.size() > 0)
                add_metric_rows(o.prediction_rows, name, fi, align_for_model(kind, pred, o.test_truth, nullptr),
                                o.test_truth);
            o.test_estimates.push_back(std::move(aligned));
        }
    });
    return assemble("timeseries", models, plan, ds.D, out);
}

Json report_to_json(const EvalReport& report) {
    auto row_json = [](const MetricRow& r) {
        return Json{{"model", r.model}, {"fold", r.fold}, {"dim", r.dim}, {"metric", to_string(r.metric)},
                    {"value", r.value}};
    };
    Json doc;
    doc["setting"] = report.setting;
    doc["models"] = report.models;
    doc["folds"] = report.C;
    doc["D"] = report.D;
    doc["rows"] = Json::array();
    for (const auto& r : report.rows) doc["rows"].push_back(row_json(r));
    doc["aggregate"] = Json::array();
    for (const auto& m : report.models)
        for (int d = 0; d < report.D; ++d)
            for (Metric metric : {Metric::ccc, Metric::pearson})
                doc["aggregate"].push_back(
                    {{"model", m}, {"dim", d}, {"metric", to_string(metric)}, {"mean", report.mean(m, d, metric)}});
    doc["prediction"] = Json::array();
    for (const auto& r : report.prediction_rows) doc["prediction"].push_back(row_json(r));
    doc["selections"] = Json::array();
    for (const auto& s : report.selections) {
        Json j{{"model", s.model}, {"fold", s.fold}};
        if (s.dim >= 0) j["dim"] = s.dim;
        if (s.W > 0) j["W"] = s.W;
        if (s.restart >= 0) j["restart"] = s.restart;
        j["iteration"] = s.iteration;
        j["validation_ccc"] = s.validation_ccc;
        if (!s.test_permutation.empty()) j["test_permutation"] = s.test_permutation;
        doc["selections"].push_back(std::move(j));
    }
    doc["significance"] = Json::array();
    for (const auto& s : report.significance) {
        const char* winner = s.winner == Winner::a ? "a" : s.winner == Winner::b ? "b" : "none";
        Json j{{"method", s.method}, {"model_a", s.model_a}, {"model_b", s.model_b},
               {"metric", to_string(s.metric)}, {"dim", s.dim}, {"winner", winner}};
        if (s.method == "bootstrap") {
            j["frac_a_higher"] = s.statistic;
            j["skipped"] = s.skipped;
        } else {
            j["t"] = std::isfinite(s.statistic) ? Json(s.statistic) : Json(s.statistic > 0 ? "Inf" : "-Inf");
            j["p_value"] = s.p_value;
        }
        doc["significance"].push_back(std::move(j));
    }
    doc["warnings"] = report.warnings;
    return doc;
}

std::string report_to_csv(const EvalReport& report) {
    std::string out = "model,fold,dim,metric,value\n";
    for (const auto& r : report.rows)
        out += r.model + ',' + std::to_string(r.fold) + ',' + std::to_string(r.dim) + ',' + to_string(r.metric) + ',' +
               format_double(r.value) + '\n';
    return out;
}

}  // namespace mdfuse
