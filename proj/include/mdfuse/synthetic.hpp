#ifndef MDFUSE_SYNTHETIC_HPP
#define MDFUSE_SYNTHETIC_HPP

#include "mdfuse/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mdfuse {

enum class FkMode { uniform_random, fixed_offdiag };

struct GlobalSynthSpec {
    int M = 100;
    int P = 500;
    int D = 2;
    int K = 10;
    int annotators_per_instance = 0;  // 0: every annotator labels every instance
    double sigma2 = 0.1;              // recorded in the true params; truth itself is U(-1, 1)
    double tau2 = 0.1;
    FkMode fk_mode = FkMode::uniform_random;
    double offdiag_step = 0.0;
    double theta_ridge = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TimeSeriesSynthSpec {
    int M = 18;
    int P = 500;
    int T = 350;
    int D = 2;
    int K = 6;
    int W_true = 5;
    double sigma2 = 0.1;
    double tau2 = 0.1;
    int hold_min = 2;
    int hold_max = 4;
    double theta_ridge = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GlobalSynthData {
    GlobalDataset dataset;
    Matrix truth;  // M x D
    GlobalModelParams params;
};

struct TimeSeriesSynthData {
    TimeSeriesDataset dataset;
    std::vector<Matrix> truth;  // T x D per instance
    TimeSeriesModelParams params;
};

GlobalSynthData gen_global(const GlobalSynthSpec& spec);
TimeSeriesSynthData gen_timeseries(const TimeSeriesSynthSpec& spec);

struct SweepStep {
    double step = 0.0;
    GlobalSynthData data;
};

/// One dataset per off-diagonal step, all annotators sharing F = [1 on the
/// diagonal, step elsewhere]. Features, truth, annotator subsets and noise
/// draws are identical across steps so only the coupling changes.
std::vector<SweepStep> gen_dependency_sweep(const GlobalSynthSpec& base, const std::vector<double>& steps);

/// Random-walk feature series (T x P): each walk value is held for a period
/// drawn from [hold_min, hold_max] and consecutive holds are joined by a
/// single linearly interpolated frame.
Matrix random_walk_features(int T, int P, int hold_min, int hold_max, std::uint64_t seed);

// Named configurations used by the CLI.
GlobalSynthSpec global_recipe_full(std::uint64_t seed);
GlobalSynthSpec dependency_sweep_base(std::uint64_t seed);
TimeSeriesSynthSpec timeseries_recipe_full(std::uint64_t seed);
TimeSeriesSynthSpec timeseries_recipe_reduced(std::uint64_t seed);

}  // namespace mdfuse

#endif  // MDFUSE_SYNTHETIC_HPP
