#include "mdfuse/evaluation.hpp"

#include "mdfuse/synthetic.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace mdfuse;

namespace {

GlobalSynthData small_global(std::uint64_t seed) {
    GlobalSynthSpec spec;
    spec.M = 40;
    spec.P = 8;
    spec.K = 4;
    spec.seed = seed;
    return gen_global(spec);
}

TimeSeriesSynthData small_series(std::uint64_t seed) {
    TimeSeriesSynthSpec spec;
    spec.M = 6;
    spec.P = 4;
    spec.T = 30;
    spec.K = 3;
    spec.W_true = 2;
    spec.seed = seed;
    return gen_timeseries(spec);
}

}  // namespace

TEST(Folds, DisjointAndCovering) {
    for (int M : {5, 17, 100}) {
        CvPlan plan;
        plan.seed = static_cast<std::uint64_t>(M);
        const auto folds = make_folds(M, plan);
        ASSERT_EQ(folds.size(), 5u);
        std::multiset<int> tested;
        for (const auto& f : folds) {
            tested.insert(f.test.begin(), f.test.end());
            std::set<int> all(f.fit.begin(), f.fit.end());
            EXPECT_EQ(all.size(), f.fit.size());
            for (int v : f.validation) EXPECT_TRUE(all.insert(v).second);
            for (int t : f.test) EXPECT_TRUE(all.insert(t).second);
            EXPECT_EQ(static_cast<int>(all.size()), M);
            EXPECT_FALSE(f.fit.empty());
            EXPECT_FALSE(f.validation.empty());
        }
        EXPECT_EQ(static_cast<int>(tested.size()), M);
        EXPECT_EQ(std::set<int>(tested.begin(), tested.end()).size(), tested.size());
    }
}

TEST(Folds, RejectTooFewInstances) {
    CvPlan plan;
    EXPECT_THROW(make_folds(4, plan), ValidationError);
    plan.C = 1;
    EXPECT_THROW(make_folds(10, plan), ValidationError);
}

TEST(Unseen, FilledWithPoolMeans) {
    GlobalModelParams p;
    p.theta = Matrix::Zero(1, 2);
    p.f = {Matrix::Identity(2, 2) * 2.0, Matrix::Identity(2, 2) * 4.0, Matrix::Ones(2, 2) * 9.0};
    p.tau2 = (Vector(3) << 1.0, 3.0, 50.0).finished();
    const auto unseen = fill_unseen_annotators(p, {2, 1, 0});
    EXPECT_EQ(unseen, std::vector<int>{2});
    EXPECT_EQ(p.f[2], Matrix::Identity(2, 2) * 3.0);
    EXPECT_EQ(p.tau2(2), 2.0);
}

TEST(Recovery, MeanDistortionSkipsUnseen) {
    GlobalModelParams p;
    p.theta = Matrix::Zero(1, 2);
    p.f = {Matrix::Identity(2, 2), Matrix::Ones(2, 2) * 3.0, Matrix::Ones(2, 2) * 100.0};
    p.tau2 = Vector::Ones(3);
    const Matrix expected = (Matrix(2, 2) << 2.0, 1.5, 1.5, 2.0).finished();
    EXPECT_EQ(mean_distortion(p, {1, 4, 0}), expected);
    EXPECT_THROW(mean_distortion(p, {0, 0, 0}), ValidationError);
}

TEST(Recovery, CosineIgnoresPositiveScale) {
    const Matrix a = (Matrix(2, 2) << 1.0, 0.3, 0.3, 1.0).finished();
    EXPECT_NEAR(matrix_cosine(a, 0.2 * a), 1.0, 1e-15);
    EXPECT_NEAR(matrix_cosine(a, -a), -1.0, 1e-15);
    EXPECT_NEAR(matrix_cosine(Matrix::Identity(2, 2), (Matrix(2, 2) << 0, 1, 1, 0).finished()), 0.0, 1e-15);
}

TEST(GlobalCv, RowsPerModelFoldAndDimension) {
    const auto data = small_global(1);
    CvPlan plan;
    plan.n_boot = 50;
    const auto rep = run_cv_global(data.dataset, data.truth, {ModelKind::joint, ModelKind::independent, ModelKind::mean},
                                   plan, GlobalFitConfig{});
    EXPECT_EQ(rep.rows.size(), 3u * 5u * 2u * 2u);
    for (const auto& r : rep.rows) EXPECT_TRUE(std::isfinite(r.value));
    EXPECT_EQ(rep.per_fold("joint", 1, Metric::ccc).size(), 5u);
    EXPECT_FALSE(rep.significance.empty());
}

TEST(GlobalCv, ReproducibleAndIndependentOfJobs) {
    const auto data = small_global(2);
    CvPlan plan;
    plan.n_boot = 50;
    plan.seed = 9;
    const auto a = run_cv_global(data.dataset, data.truth, {ModelKind::joint, ModelKind::independent}, plan,
                                 GlobalFitConfig{}, 1);
    const auto b = run_cv_global(data.dataset, data.truth, {ModelKind::joint, ModelKind::independent}, plan,
                                 GlobalFitConfig{}, 3);
    EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
    EXPECT_EQ(report_to_csv(a), report_to_csv(b));
}

TEST(GlobalCv, SelectionTracksBestValidationSnapshot) {
    const auto data = small_global(3);
    CvPlan plan;
    plan.n_boot = 10;
    const auto rep = run_cv_global(data.dataset, data.truth, {ModelKind::joint}, plan, GlobalFitConfig{});
    GlobalFitConfig capped;
    capped.max_iters = 1;
    const auto one = run_cv_global(data.dataset, data.truth, {ModelKind::joint}, plan, capped);
    ASSERT_EQ(rep.selections.size(), one.selections.size());
    for (std::size_t i = 0; i < rep.selections.size(); ++i) {
        EXPECT_GE(rep.selections[i].validation_ccc, one.selections[i].validation_ccc);
        EXPECT_EQ(one.selections[i].iteration, 0);
    }
}

TEST(GlobalCv, RequiresDistinctModelsAndMatchingTruth) {
    const auto data = small_global(4);
    CvPlan plan;
    EXPECT_THROW(run_cv_global(data.dataset, data.truth, {ModelKind::joint, ModelKind::joint}, plan, {}),
                 ValidationError);
    EXPECT_THROW(run_cv_global(data.dataset, data.truth.topRows(10), {ModelKind::joint}, plan, {}), ValidationError);
}

TEST(GlobalCv, WarnsAboutUnseenAnnotators) {
    auto data = small_global(5);
    // Annotator 3 labels one instance only, so at least one fold never trains on it.
    for (int m = 1; m < data.dataset.M(); ++m) data.dataset.instances[m].annotations.pop_back();
    CvPlan plan;
    plan.n_boot = 10;
    const auto rep = run_cv_global(data.dataset, data.truth, {ModelKind::joint}, plan, GlobalFitConfig{});
    EXPECT_FALSE(rep.warnings.empty());
}

TEST(SeriesCv, RowsAndSelectionMonotonicity) {
    const auto data = small_series(1);
    CvPlan plan;
    plan.C = 3;
    plan.n_boot = 10;
    TimeSeriesFitConfig cfg;
    cfg.restarts = 1;
    cfg.max_iters = 10;
    const auto small = run_cv_timeseries(data.dataset, data.truth, {ModelKind::joint, ModelKind::independent}, plan,
                                         cfg, {2});
    EXPECT_EQ(small.rows.size(), 2u * 3u * 2u * 2u);
    cfg.restarts = 2;
    const auto large = run_cv_timeseries(data.dataset, data.truth, {ModelKind::joint, ModelKind::independent}, plan,
                                         cfg, {2, 3});
    ASSERT_EQ(small.selections.size(), large.selections.size());
    for (std::size_t i = 0; i < small.selections.size(); ++i)
        EXPECT_GE(large.selections[i].validation_ccc, small.selections[i].validation_ccc);
}

TEST(SeriesCv, RejectsWidthAboveShortestSeries) {
    const auto data = small_series(2);
    CvPlan plan;
    plan.C = 3;
    EXPECT_THROW(run_cv_timeseries(data.dataset, data.truth, {ModelKind::joint}, plan, {}, {31}), ValidationError);
}

TEST(Report, CsvHasHeaderAndOneLinePerRow) {
    const auto data = small_global(6);
    CvPlan plan;
    plan.n_boot = 10;
    const auto rep = run_cv_global(data.dataset, data.truth, {ModelKind::joint}, plan, GlobalFitConfig{});
    const std::string csv = report_to_csv(rep);
    EXPECT_EQ(csv.rfind("model,fold,dim,metric,value\n", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), rep.rows.size() + 1);
}
