#include "mdfuse/io.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace mdfuse;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("mdfuse_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

GlobalDataset small_global() {
    std::mt19937_64 rng(1);
    return oracle::random_global_dataset(6, 3, 2, 3, rng);
}

TimeSeriesDataset small_series() {
    std::mt19937_64 rng(2);
    const auto p = oracle::random_ts_params(2, 2, 2, 2, rng);
    TimeSeriesDataset ds;
    ds.D = 2;
    ds.P = 2;
    ds.K = 2;
    for (int m = 0; m < 3; ++m) ds.instances.push_back(oracle::random_ts_instance(p, 5 + m, rng, "s" + std::to_string(m)));
    return ds;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST(Validation, RejectsUnsortedAnnotators) {
    GlobalDataset ds = small_global();
    ds.instances[0].annotations = {{1, Matrix::Ones(1, 2)}, {0, Matrix::Ones(1, 2)}};
    EXPECT_THROW(ds.validate(), ValidationError);
}

TEST(Validation, RejectsDuplicateAndUnknownAnnotators) {
    GlobalDataset ds = small_global();
    ds.instances[0].annotations = {{0, Matrix::Ones(1, 2)}, {0, Matrix::Ones(1, 2)}};
    EXPECT_THROW(ds.validate(), ValidationError);
    ds.instances[0].annotations = {{7, Matrix::Ones(1, 2)}};
    EXPECT_THROW(ds.validate(), ValidationError);
}

TEST(Validation, RejectsShapeMismatchAndNonFinite) {
    GlobalDataset ds = small_global();
    ds.instances[1].annotations[0].values = Matrix::Ones(1, 3);
    EXPECT_THROW(ds.validate(), ValidationError);
    ds = small_global();
    ds.instances[1].features(0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(ds.validate(), ValidationError);
    ds = small_global();
    ds.instances[2].annotations.clear();
    EXPECT_THROW(ds.validate(), ValidationError);
}

TEST(Validation, RejectsBadParameters) {
    std::mt19937_64 rng(3);
    auto p = oracle::random_global_params(2, 2, 2, rng);
    p.tau2(1) = 0.0;
    EXPECT_THROW(p.validate(), ValidationError);
    auto q = oracle::random_ts_params(2, 2, 2, 3, rng);
    q.filters.coeffs[0] = Matrix::Zero(2, 2);
    EXPECT_THROW(q.validate(), ValidationError);
}

TEST(Json, GlobalDatasetRoundTrip) {
    const GlobalDataset ds = small_global();
    const fs::path dir = scratch_dir("global");
    save_dataset(ds, dir / "d.json");
    const GlobalDataset back = load_global_dataset(dir / "d.json");
    ASSERT_EQ(back.M(), ds.M());
    for (int m = 0; m < ds.M(); ++m) {
        EXPECT_EQ(back.instances[m].id, ds.instances[m].id);
        EXPECT_EQ(back.instances[m].features, ds.instances[m].features);
        ASSERT_EQ(back.instances[m].annotations.size(), ds.instances[m].annotations.size());
        for (std::size_t i = 0; i < ds.instances[m].annotations.size(); ++i)
            EXPECT_EQ(back.instances[m].annotations[i].values, ds.instances[m].annotations[i].values);
    }
}

TEST(Json, TimeSeriesDatasetRoundTrip) {
    const TimeSeriesDataset ds = small_series();
    const fs::path dir = scratch_dir("series");
    save_dataset(ds, dir / "d.json");
    const TimeSeriesDataset back = load_timeseries_dataset(dir / "d.json");
    ASSERT_EQ(back.M(), ds.M());
    for (int m = 0; m < ds.M(); ++m) {
        EXPECT_EQ(back.instances[m].features, ds.instances[m].features);
        EXPECT_EQ(back.instances[m].annotations[1].values, ds.instances[m].annotations[1].values);
    }
}

TEST(Json, NonFiniteValuesAreReportedOnLoad) {
    const GlobalDataset ds = small_global();
    Json doc = to_json(ds);
    doc["instances"][0]["features"][0] = nullptr;
    EXPECT_THROW(global_dataset_from_json(doc), ValidationError);
    doc = to_json(ds);
    doc["instances"][0]["annotations"][0]["values"][0] = "NaN";
    EXPECT_THROW(global_dataset_from_json(doc), ValidationError);
}

TEST(Json, MalformedInputIsParseError) {
    const fs::path dir = scratch_dir("bad");
    write_file(dir / "d.json", "{\"kind\": \"global\", \"D\": 2,");
    EXPECT_THROW(load_global_dataset(dir / "d.json"), ParseError);
    write_file(dir / "e.json", "{\"kind\": \"global\", \"D\": 2, \"P\": 1}");
    EXPECT_THROW(load_global_dataset(dir / "e.json"), ParseError);
}

TEST(Json, DoublesRoundTripBitExactly) {
    const fs::path dir = scratch_dir("doubles");
    Matrix m(1, 3);
    m << 0.1, 1.0 / 3.0, -2.5e-300;
    write_json(matrix_to_json(m), dir / "m.json");
    EXPECT_EQ(matrix_from_json(read_json(dir / "m.json")), m);
}

TEST(Estimates, JsonRoundTripKeepsCovariance) {
    std::vector<PosteriorEstimate> est;
    est.push_back({"a", EstimateKind::global, (Matrix(1, 2) << 0.5, -1.0).finished(),
                   Matrix(Matrix::Identity(2, 2) * 0.25)});
    est.push_back({"b", EstimateKind::global, (Matrix(1, 2) << 2.0, 3.0).finished(), std::nullopt});
    const auto back = estimates_from_json(estimates_to_json(est));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].mean, est[0].mean);
    ASSERT_TRUE(back[0].cov.has_value());
    EXPECT_EQ(*back[0].cov, *est[0].cov);
    EXPECT_FALSE(back[1].cov.has_value());
}

TEST(Csv, GlobalIngestionMatchesJson) {
    const fs::path dir = scratch_dir("csv");
    write_file(dir / "ann.csv",
               "instance,annotator,frame,dim,value\n"
               "x,1,0,0,0.5\nx,1,0,1,1.5\nx,0,0,0,2\nx,0,0,1,3\ny,0,0,0,-1\ny,0,0,1,-2\n");
    write_file(dir / "feat.csv", "instance,frame,feature,value\nx,0,0,1\nx,0,1,2\ny,0,0,3\ny,0,1,4\n");
    const auto any = load_dataset_csv(dir / "ann.csv", dir / "feat.csv", DatasetKind::global);
    const auto& ds = std::get<GlobalDataset>(any);
    EXPECT_EQ(ds.M(), 2);
    EXPECT_EQ(ds.D, 2);
    EXPECT_EQ(ds.P, 2);
    EXPECT_EQ(ds.instances[0].id, "x");
    ASSERT_EQ(ds.instances[0].annotations.size(), 2u);
    EXPECT_EQ(ds.instances[0].annotations[0].annotator, 0);
    EXPECT_EQ(ds.instances[0].annotations[1].values, (Matrix(1, 2) << 0.5, 1.5).finished());
    EXPECT_EQ(ds.instances[1].features, (Vector(2) << 3, 4).finished());
}

TEST(Csv, MissingCellIsValidationError) {
    const fs::path dir = scratch_dir("csv_missing");
    write_file(dir / "ann.csv", "instance,annotator,frame,dim,value\nx,0,0,0,1\nx,0,0,1,2\nx,0,1,0,3\n");
    write_file(dir / "feat.csv", "instance,frame,feature,value\nx,0,0,1\nx,1,0,2\n");
    EXPECT_THROW(load_dataset_csv(dir / "ann.csv", dir / "feat.csv", DatasetKind::timeseries), ValidationError);
}

TEST(Csv, MalformedRowIsParseError) {
    const fs::path dir = scratch_dir("csv_bad");
    write_file(dir / "ann.csv", "instance,annotator,frame,dim,value\nx,0,0,zero,1\n");
    write_file(dir / "feat.csv", "instance,frame,feature,value\nx,0,0,1\n");
    EXPECT_THROW(load_dataset_csv(dir / "ann.csv", dir / "feat.csv", DatasetKind::global), ParseError);
}

TEST(Format, SeventeenSignificantDigits) {
    EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
