#ifndef MDFUSE_GLOBAL_MODEL_HPP
#define MDFUSE_GLOBAL_MODEL_HPP

// Global (per-instance vector) joint annotation model:
//
//   a*_m  = Theta^T x_m + eps_m,   eps_m ~ N(0, sigma2 I)
//   a^m_k = F_k a*_m + eta_k,      eta_k ~ N(0, tau2_k I)
//
// fit by soft EM with closed-form Gaussian posteriors over a*_m.

#include "mdfuse/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mdfuse {

enum class GlobalInit { sample_moment, provided };

struct GlobalFitConfig {
    int max_iters = 200;
    double rel_ll_tol = 1e-5;  // 0.001 % relative change in log-likelihood
    double sigma2_floor = 1e-8;
    double tau2_floor = 1e-8;
    double ridge = 1e-8;
    GlobalInit init = GlobalInit::sample_moment;
    bool keep_snapshots = false;

    void validate() const;
};

enum class Termination { converged, max_iters };

struct GlobalFitTrace {
    std::vector<double> log_likelihood;          // one entry per iteration
    std::vector<GlobalModelParams> snapshots;    // params after each iteration, if requested
    int iterations = 0;
    Termination reason = Termination::max_iters;
};

struct GlobalFitResult {
    GlobalModelParams params;
    GlobalFitTrace trace;
};

/// Mean and covariance of the stacked vector (a*, a_{k1}, ..., a_{kn}).
struct JointMoments {
    Vector mean;
    Matrix cov;
};

JointMoments joint_moments(const GlobalModelParams& params, const Vector& x,
                           std::span<const AnnotatorId> annotators);

/// Posterior of a* for every instance: mean (1xD) and covariance (DxD).
/// `ridge` is added to the posterior precision before inversion.
std::vector<PosteriorEstimate> e_step(const GlobalModelParams& params, const GlobalDataset& ds,
                                      double ridge = 0.0);

/// Posterior for a single instance.
PosteriorEstimate posterior(const GlobalModelParams& params, const GlobalInstance& inst,
                            double ridge = 0.0);

/// M-step updates. sigma2 and tau2 are computed with the theta and F of `prev`;
/// when `prev` is empty (first step from initial moments) the fresh theta and F = I are used.
/// Annotators with no instances keep their previous F and tau2.
GlobalModelParams m_step(const GlobalDataset& ds, const std::vector<PosteriorEstimate>& posteriors,
                         const std::optional<GlobalModelParams>& prev, const GlobalFitConfig& config);

/// Marginal log-likelihood sum_m log N(a^m; mu_A, Sigma_AA).
double log_likelihood(const GlobalModelParams& params, const GlobalDataset& ds, double ridge = 0.0);

/// Posterior moments used to initialise EM: annotation mean and sample covariance.
std::vector<PosteriorEstimate> sample_moment_posteriors(const GlobalDataset& ds);

GlobalFitResult fit(const GlobalDataset& ds, const GlobalFitConfig& config,
                    const std::optional<GlobalModelParams>& init_params = std::nullopt);

/// Prior-mean prediction X Theta (M x D).
Matrix predict(const GlobalModelParams& params, const Matrix& features);

}  // namespace mdfuse

#endif  // MDFUSE_GLOBAL_MODEL_HPP
