#include "mdfuse/timeseries_model.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mdfuse;

namespace {

FilterBank scalar_bank(const std::vector<double>& taps) {
    FilterBank bank;
    bank.W = static_cast<int>(taps.size());
    bank.D = 1;
    Matrix c(bank.W, 1);
    for (int l = 0; l < bank.W; ++l) c(l, 0) = taps[static_cast<std::size_t>(l)];
    bank.coeffs.push_back(c);
    return bank;
}

TimeSeriesModelParams scalar_params(const std::vector<double>& taps, double sigma2, double tau2) {
    TimeSeriesModelParams p;
    p.theta = Matrix::Ones(1, 1);
    p.filters = scalar_bank(taps);
    p.sigma2 = sigma2;
    p.tau2 = Vector::Constant(1, tau2);
    return p;
}

}  // namespace

TEST(Filter, TwoTapThreeFrameExample) {
    // Lower-triangular Toeplitz matrix [[b0 0 0] [b1 b0 0] [0 b1 b0]].
    const FilterBank bank = scalar_bank({0.5, 2.0});
    Matrix truth(3, 1);
    truth << 1.0, -1.0, 3.0;
    Vector expected(3);
    expected << 0.5 * 1.0, 2.0 * 1.0 + 0.5 * -1.0, 2.0 * -1.0 + 0.5 * 3.0;
    EXPECT_TRUE(apply_filter(bank, 0, 0, truth).isApprox(expected, 1e-15));
}

TEST(Filter, IdentityFilterReturnsInput) {
    FilterBank bank;
    bank.W = 3;
    bank.D = 2;
    Matrix c = Matrix::Zero(6, 2);
    c(0, 0) = 1.0;
    c(3, 1) = 1.0;
    bank.coeffs.push_back(c);
    std::mt19937_64 rng(1);
    const Matrix truth = oracle::randn(10, 2, rng);
    EXPECT_EQ(apply_filter(bank, 0, 0, truth), Vector(truth.col(0)));
    EXPECT_EQ(apply_filter(bank, 0, 1, truth), Vector(truth.col(1)));
}

TEST(Filter, MatchesDenseToeplitzOnRandomBanks) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const int D = 1 + trial % 3;
        const int W = 1 + trial % 5;
        const int T = W + 3 + trial % 7;
        const auto p = oracle::random_ts_params(2, D, 2, W, rng);
        const Matrix truth = oracle::randn(T, D, rng);
        for (int k = 0; k < 2; ++k)
            for (int d = 0; d < D; ++d) {
                const Vector dense = oracle::dense_filter_matrix(p.filters, k, d, T) * oracle::vec(truth);
                EXPECT_TRUE(apply_filter(p.filters, k, d, truth).isApprox(dense, 1e-12));
            }
    }
}

TEST(Filter, DesignMatrixReproducesFilterOutput) {
    std::mt19937_64 rng(3);
    const auto p = oracle::random_ts_params(2, 3, 2, 4, rng);
    const Matrix truth = oracle::randn(12, 3, rng);
    const Matrix a = filter_design_matrix(truth, 4);
    for (int k = 0; k < 2; ++k)
        for (int d = 0; d < 3; ++d)
            EXPECT_TRUE((a * p.filters.coeffs[k].col(d)).isApprox(apply_filter(p.filters, k, d, truth), 1e-12));
}

TEST(Filter, RejectsShortSeries) {
    const FilterBank bank = scalar_bank({1.0, 1.0, 1.0});
    EXPECT_THROW(apply_filter(bank, 0, 0, Matrix::Ones(2, 1)), ValidationError);
}

TEST(Mode, MatchesDenseNormalEquations) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const int D = 1 + trial % 3;
        const int W = 1 + trial % 4;
        const int T = W + (trial * 7) % 45;
        const auto p = oracle::random_ts_params(3, D, 3, W, rng);
        const auto inst = oracle::random_ts_instance(p, T, rng, "x");
        for (const bool unit : {false, true}) {
            TimeSeriesFitConfig cfg;
            cfg.weighting = unit ? ModeWeighting::unit : ModeWeighting::variance;
            const Matrix got = e_step_mode(p, inst, cfg);
            const Matrix want = oracle::dense_mode(p, inst, unit);
            EXPECT_LE((got - want).norm(), 1e-8 * std::max(1.0, want.norm()));
        }
    }
}

TEST(Mode, IsStationaryPointOfObjective) {
    std::mt19937_64 rng(5);
    const auto p = oracle::random_ts_params(2, 2, 3, 3, rng);
    const auto inst = oracle::random_ts_instance(p, 20, rng, "x");
    TimeSeriesDataset ds;
    ds.D = 2;
    ds.P = 2;
    ds.K = 3;
    ds.instances.push_back(inst);
    const Matrix mode = e_step_mode(p, inst, TimeSeriesFitConfig{});
    const double at = joint_objective(p, ds, {mode});
    std::normal_distribution<double> n(0.0, 1e-3);
    for (int i = 0; i < 20; ++i) {
        Matrix moved = mode;
        for (Eigen::Index j = 0; j < moved.size(); ++j) moved.data()[j] += n(rng);
        EXPECT_LT(joint_objective(p, ds, {moved}), at);
    }
}

TEST(Mode, SingleTapUnitWeightsAverageObservationAndPrior) {
    const auto p = scalar_params({1.0}, 0.3, 7.0);
    TimeSeriesInstance inst;
    inst.id = "x";
    inst.features = (Matrix(4, 1) << 1, 2, 3, 4).finished();
    inst.annotations.push_back({0, (Matrix(4, 1) << 3, 0, 1, -4).finished()});
    TimeSeriesFitConfig cfg;
    cfg.weighting = ModeWeighting::unit;
    const Matrix mode = e_step_mode(p, inst, cfg);
    const Matrix expected = (inst.annotations[0].values + inst.features) / 2.0;
    EXPECT_TRUE(mode.isApprox(expected, 1e-12));
}

TEST(Mode, ZeroFiltersGivePriorMean) {
    auto p = scalar_params({0.0, 0.0}, 1.0, 1.0);
    TimeSeriesInstance inst;
    inst.id = "x";
    inst.features = (Matrix(5, 1) << 1, -2, 3, 0.5, 4).finished();
    inst.annotations.push_back({0, Matrix::Constant(5, 1, 9.0)});
    EXPECT_TRUE(e_step_mode(p, inst, TimeSeriesFitConfig{}).isApprox(inst.features, 1e-12));
}

TEST(Mode, RejectsMissingAnnotations) {
    const auto p = scalar_params({1.0}, 1.0, 1.0);
    TimeSeriesInstance inst;
    inst.id = "x";
    inst.features = Matrix::Ones(3, 1);
    EXPECT_THROW(e_step_mode(p, inst, TimeSeriesFitConfig{}), ValidationError);
}

TEST(MStep, RecoversScalarGain) {
    std::mt19937_64 rng(6);
    TimeSeriesDataset ds;
    ds.D = 1;
    ds.P = 1;
    ds.K = 1;
    std::vector<Matrix> modes;
    for (int m = 0; m < 3; ++m) {
        TimeSeriesInstance inst;
        inst.id = "i" + std::to_string(m);
        inst.features = oracle::randn(15, 1, rng);
        const Matrix truth = oracle::randn(15, 1, rng);
        inst.annotations.push_back({0, 2.0 * truth});
        ds.instances.push_back(inst);
        modes.push_back(truth);
    }
    TimeSeriesFitConfig cfg;
    cfg.ridge = 0.0;
    const auto next = m_step(ds, modes, nullptr, 1, cfg);
    EXPECT_NEAR(next.filters.coeffs[0](0, 0), 2.0, 1e-12);
    EXPECT_EQ(next.tau2(0), cfg.tau2_floor);
}

TEST(MStep, VariancesAreMeanSquaredResiduals) {
    std::mt19937_64 rng(7);
    const auto p = oracle::random_ts_params(3, 2, 2, 2, rng);
    TimeSeriesDataset ds;
    ds.D = 2;
    ds.P = 3;
    ds.K = 2;
    std::vector<Matrix> modes;
    for (int m = 0; m < 4; ++m) {
        ds.instances.push_back(oracle::random_ts_instance(p, 10 + m, rng, "i" + std::to_string(m)));
        modes.push_back(oracle::randn(10 + m, 2, rng));
    }
    const TimeSeriesFitConfig cfg;
    const auto next = m_step(ds, modes, nullptr, 2, cfg);
    double s = 0, n = 0;
    std::vector<double> t(2, 0.0), nt(2, 0.0);
    for (int m = 0; m < 4; ++m) {
        s += (modes[m] - ds.instances[m].features * next.theta).squaredNorm();
        n += static_cast<double>(modes[m].size());
        for (const auto& a : ds.instances[m].annotations)
            for (int d = 0; d < 2; ++d) {
                t[a.annotator] += (a.values.col(d) - apply_filter(next.filters, a.annotator, d, modes[m])).squaredNorm();
                nt[a.annotator] += static_cast<double>(a.values.rows());
            }
    }
    EXPECT_NEAR(next.sigma2, s / n, 1e-12);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(next.tau2(k), t[k] / nt[k], 1e-12);
}

TEST(Objective, NonDecreasingAcrossIterations) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        const auto p = oracle::random_ts_params(3, 2, 3, 3, rng);
        TimeSeriesDataset ds;
        ds.D = 2;
        ds.P = 3;
        ds.K = 3;
        for (int m = 0; m < 6; ++m) ds.instances.push_back(oracle::random_ts_instance(p, 25, rng, "i" + std::to_string(m)));
        TimeSeriesFitConfig cfg;
        cfg.W = 3;
        cfg.restarts = 1;
        cfg.max_iters = 30;
        cfg.rel_ll_tol = 1e-12;
        cfg.rng_seed = seed;
        const auto res = fit(ds, cfg).restarts[0];
        for (std::size_t i = 1; i < res.objective.size(); ++i)
            EXPECT_GE(res.objective[i], res.objective[i - 1] - 1e-8 * std::abs(res.objective[i - 1]));
    }
}

TEST(Fit, RestartsAreDeterministicAndDistinct) {
    std::mt19937_64 rng(8);
    const auto p = oracle::random_ts_params(2, 2, 2, 2, rng);
    TimeSeriesDataset ds;
    ds.D = 2;
    ds.P = 2;
    ds.K = 2;
    for (int m = 0; m < 3; ++m) ds.instances.push_back(oracle::random_ts_instance(p, 12, rng, "i" + std::to_string(m)));
    TimeSeriesFitConfig cfg;
    cfg.W = 2;
    cfg.restarts = 3;
    cfg.max_iters = 5;
    cfg.rng_seed = 99;
    const auto a = fit(ds, cfg);
    const auto b = fit(ds, cfg);
    for (int r = 0; r < 3; ++r) {
        EXPECT_EQ(a.restarts[r].seed, restart_seed(99, r));
        EXPECT_EQ(a.restarts[r].objective, b.restarts[r].objective);
        EXPECT_EQ(a.restarts[r].params.theta, b.restarts[r].params.theta);
    }
    EXPECT_NE(a.restarts[0].seed, a.restarts[1].seed);
    EXPECT_NE(a.restarts[0].objective.front(), a.restarts[1].objective.front());
}

TEST(Fit, RejectsWidthAboveShortestSeries) {
    std::mt19937_64 rng(9);
    const auto p = oracle::random_ts_params(2, 1, 1, 1, rng);
    TimeSeriesDataset ds;
    ds.D = 1;
    ds.P = 2;
    ds.K = 1;
    ds.instances.push_back(oracle::random_ts_instance(p, 4, rng, "a"));
    TimeSeriesFitConfig cfg;
    cfg.W = 5;
    EXPECT_THROW(fit(ds, cfg), ValidationError);
}

TEST(Config, RejectsInvalidValues) {
    TimeSeriesFitConfig cfg;
    cfg.W = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.restarts = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg = {};
    cfg.solver_tol = 0.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}
