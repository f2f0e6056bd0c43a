#ifndef MDFUSE_TIMESERIES_MODEL_HPP
#define MDFUSE_TIMESERIES_MODEL_HPP

// Time-series joint annotation model. Each annotator output dimension d is a
// sum of causal FIR filters applied to every ground-truth dimension:
//
//   vec(a*_m)  = vec(X_m Theta) + eps_m,          eps_m ~ N(0, sigma2 I)
//   a^{m,d}_k  = sum_d' B^{d,d'}_k a*_m(:, d') + eta_k,  eta_k ~ N(0, tau2_k I)
//
// fit by hard EM: the E-step replaces a*_m by its conditional mode.

#include "mdfuse/types.hpp"

#include <cstdint>
#include <vector>

namespace mdfuse {

/// How the E-step weighs annotation residuals against the prior residual.
///  - variance: weights 1/tau2_k and 1/sigma2 (the exact conditional mode).
///  - unit: all weights 1, i.e. (sum F'F + I) v = sum F'a + y.
enum class ModeWeighting { variance, unit };

struct TimeSeriesFitConfig {
    int W = 5;
    int max_iters = 100;
    double rel_ll_tol = 5e-3;  // 0.5 % relative change in the complete-data objective
    int restarts = 20;
    double solver_tol = 1e-8;
    double ridge = 1e-8;
    double sigma2_floor = 1e-8;
    double tau2_floor = 1e-8;
    std::uint64_t rng_seed = 0;
    ModeWeighting weighting = ModeWeighting::variance;
    bool keep_snapshots = false;
    int jobs = 1;

    void validate() const;
};

/// F^d_k vec(truth): causal convolution of every column of `truth` (T x D) with
/// the matching sub-filter, zero-padded before the first frame, summed over columns.
Vector apply_filter(const FilterBank& bank, int k, int d, const Matrix& truth);

/// T x (W*D) matrix A with A * f^d_k == F^d_k vec(truth) for any coefficient vector.
Matrix filter_design_matrix(const Matrix& truth, int W);

/// Conditional mode of a*_m (T x D) given the instance's annotations.
Matrix e_step_mode(const TimeSeriesModelParams& params, const TimeSeriesInstance& inst,
                   const TimeSeriesFitConfig& config);

/// Closed-form parameter updates given point estimates of a*_m. Annotators
/// without instances keep `prev` values (or a unit-gain filter when there is none).
TimeSeriesModelParams m_step(const TimeSeriesDataset& ds, const std::vector<Matrix>& modes,
                             const TimeSeriesModelParams* prev, int W, const TimeSeriesFitConfig& config);

/// Complete-data log-likelihood at the given modes and parameters.
double joint_objective(const TimeSeriesModelParams& params, const TimeSeriesDataset& ds,
                       const std::vector<Matrix>& modes);

struct RestartResult {
    std::uint64_t seed = 0;
    TimeSeriesModelParams params;
    std::vector<Matrix> modes;                     // training-set modes at termination
    std::vector<double> objective;                 // one entry per iteration
    std::vector<TimeSeriesModelParams> snapshots;  // per iteration, if requested
    bool converged = false;
};

struct TimeSeriesFitResult {
    std::vector<RestartResult> restarts;
};

/// Seed of restart r: a deterministic mix of (rng_seed, r).
std::uint64_t restart_seed(std::uint64_t rng_seed, int restart);

RestartResult fit_restart(const TimeSeriesDataset& ds, const TimeSeriesFitConfig& config, int restart);

/// Runs every restart; selection across restarts is left to the caller.
TimeSeriesFitResult fit(const TimeSeriesDataset& ds, const TimeSeriesFitConfig& config);

/// Prior-mean prediction X_m Theta for one instance.
Matrix predict(const TimeSeriesModelParams& params, const Matrix& features);

}  // namespace mdfuse

#endif  // MDFUSE_TIMESERIES_MODEL_HPP
