#include "mdfuse/global_model.hpp"

#include "mdfuse/linalg.hpp"

#include <cmath>
#include <string>

namespace mdfuse {

void GlobalFitConfig::validate() const {
    if (max_iters < 1) throw ValidationError("max_iters must be positive");
    if (!(rel_ll_tol > 0.0)) throw ValidationError("rel_ll_tol must be positive");
    if (!(sigma2_floor > 0.0) || !(tau2_floor > 0.0)) throw ValidationError("variance floors must be positive");
    if (!(ridge >= 0.0)) throw ValidationError("ridge must be non-negative");
}

JointMoments joint_moments(const GlobalModelParams& params, const Vector& x,
                           std::span<const AnnotatorId> annotators) {
    const int D = params.D();
    const auto n = static_cast<int>(annotators.size());
    for (AnnotatorId k : annotators)
        if (k < 0 || k >= params.K()) throw ValidationError("unknown annotator id " + std::to_string(k));

    const Vector prior = params.theta.transpose() * x;
    JointMoments jm;
    jm.mean.resize(D * (1 + n));
    jm.cov.resize(D * (1 + n), D * (1 + n));
    jm.mean.head(D) = prior;
    jm.cov.topLeftCorner(D, D) = params.sigma2 * Matrix::Identity(D, D);
    for (int i = 0; i < n; ++i) {
        const Matrix& fi = params.f[annotators[i]];
        jm.mean.segment(D * (1 + i), D) = fi * prior;
        jm.cov.block(D * (1 + i), 0, D, D) = params.sigma2 * fi;
        jm.cov.block(0, D * (1 + i), D, D) = params.sigma2 * fi.transpose();
        for (int j = 0; j < n; ++j) {
            const Matrix& fj = params.f[annotators[j]];
            Matrix blk = params.sigma2 * fi * fj.transpose();
            if (i == j) blk.diagonal().array() += params.tau2(annotators[i]);
            jm.cov.block(D * (1 + i), D * (1 + j), D, D) = blk;
        }
    }
    return jm;
}

PosteriorEstimate posterior(const GlobalModelParams& params, const GlobalInstance& inst, double ridge) {
    // Information form of the conditional Gaussian:
    //   Lambda = I / sigma2 + sum_k F_k' F_k / tau2_k
    //   mean   = Lambda^-1 (Theta' x / sigma2 + sum_k F_k' a_k / tau2_k)
    const int D = params.D();
    Matrix precision = Matrix::Identity(D, D) / params.sigma2;
    Vector h = params.theta.transpose() * inst.features / params.sigma2;
    for (const auto& a : inst.annotations) {
        if (a.annotator < 0 || a.annotator >= params.K())
            throw ValidationError("unknown annotator id " + std::to_string(a.annotator));
        const Matrix& fk = params.f[a.annotator];
        const double w = 1.0 / params.tau2(a.annotator);
        precision.noalias() += w * fk.transpose() * fk;
        h.noalias() += w * fk.transpose() * a.values.row(0).transpose();
    }
    precision.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success)
        throw NumericError("posterior precision for instance '" + inst.id + "' is not positive definite");

    PosteriorEstimate est;
    est.id = inst.id;
    est.kind = EstimateKind::global;
    Matrix cov = llt.solve(Matrix::Identity(D, D));
    est.mean = (cov * h).transpose();
    est.cov = 0.5 * (cov + cov.transpose());
    return est;
}

std::vector<PosteriorEstimate> e_step(const GlobalModelParams& params, const GlobalDataset& ds, double ridge) {
    std::vector<PosteriorEstimate> out;
    out.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) out.push_back(posterior(params, inst, ridge));
    return out;
}

GlobalModelParams m_step(const GlobalDataset& ds, const std::vector<PosteriorEstimate>& posteriors,
                         const std::optional<GlobalModelParams>& prev, const GlobalFitConfig& config) {
    if (posteriors.size() != ds.instances.size())
        throw ValidationError("posteriors are not aligned with dataset instances");
    const RidgeSolver solver(ds.feature_matrix(), config.ridge);
    const int D = ds.D;
    const int M = ds.M();

    Matrix mean(M, D);
    for (int m = 0; m < M; ++m) mean.row(m) = posteriors[m].mean.row(0);

    std::vector<Matrix> cross(ds.K, Matrix::Zero(D, D));   // sum a_k E[a*]'
    std::vector<Matrix> second(ds.K, Matrix::Zero(D, D));  // sum E[a* a*']
    std::vector<int> count(ds.K, 0);
    for (int m = 0; m < M; ++m) {
        const Vector mu = mean.row(m).transpose();
        const Matrix ss = *posteriors[m].cov + mu * mu.transpose();
        for (const auto& a : ds.instances[m].annotations) {
            cross[a.annotator].noalias() += a.values.row(0).transpose() * mu.transpose();
            second[a.annotator] += ss;
            ++count[a.annotator];
        }
    }

    GlobalModelParams next;
    next.theta = solver.solve(mean);
    next.f.resize(ds.K);
    next.tau2.resize(ds.K);
    for (int k = 0; k < ds.K; ++k) {
        if (count[k] == 0) {
            next.f[k] = prev ? prev->f[k] : Matrix(Matrix::Identity(D, D));
            next.tau2(k) = prev ? prev->tau2(k) : 1.0;
            continue;
        }
        // F_k = cross * second^-1, solved through the symmetric system second * F' = cross'.
        next.f[k] = solve_spd<double>(second[k], cross[k].transpose(), config.ridge,
                                      "annotator second-moment matrix")
                        .transpose();
    }

    const Matrix& theta_prev = prev ? prev->theta : next.theta;
    double s = 0.0;
    for (int m = 0; m < M; ++m) {
        const Vector resid = mean.row(m).transpose() - theta_prev.transpose() * ds.instances[m].features;
        s += posteriors[m].cov->trace() + resid.squaredNorm();
    }
    next.sigma2 = std::max(s / (static_cast<double>(M) * D), config.sigma2_floor);

    // The sample-moment start treats every annotator as an identity channel.
    const Matrix identity = Matrix::Identity(D, D);
    std::vector<double> t(ds.K, 0.0);
    for (int m = 0; m < M; ++m) {
        const Vector mu = mean.row(m).transpose();
        const Matrix& cov = *posteriors[m].cov;
        for (const auto& a : ds.instances[m].annotations) {
            const Matrix& fk = prev ? prev->f[a.annotator] : identity;
            const Vector resid = a.values.row(0).transpose() - fk * mu;
            t[a.annotator] += resid.squaredNorm() + (fk * cov * fk.transpose()).trace();
        }
    }
    for (int k = 0; k < ds.K; ++k)
        if (count[k] > 0)
            next.tau2(k) = std::max(t[k] / (static_cast<double>(count[k]) * D), config.tau2_floor);
    return next;
}

double log_likelihood(const GlobalModelParams& params, const GlobalDataset& ds, double ridge) {
    constexpr double log_2pi = 1.8378770664093454836;  // log(2 pi)
    double ll = 0.0;
    std::vector<AnnotatorId> ids;
    for (const auto& inst : ds.instances) {
        ids.clear();
        for (const auto& a : inst.annotations) ids.push_back(a.annotator);
        const JointMoments jm = joint_moments(params, inst.features, ids);
        const int D = params.D();
        const auto n = static_cast<Eigen::Index>(D * ids.size());
        Matrix cov = jm.cov.bottomRightCorner(n, n);
        cov.diagonal().array() += ridge;
        Vector resid(n);
        for (std::size_t i = 0; i < ids.size(); ++i)
            resid.segment(D * static_cast<Eigen::Index>(i), D) = inst.annotations[i].values.row(0).transpose();
        resid -= jm.mean.tail(n);
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() != Eigen::Success)
            throw NumericError("marginal annotation covariance for instance '" + inst.id +
                               "' is not positive definite");
        const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        const Vector z = llt.matrixL().solve(resid);
        ll += -0.5 * (static_cast<double>(n) * log_2pi + logdet + z.squaredNorm());
    }
    return ll;
}

std::vector<PosteriorEstimate> sample_moment_posteriors(const GlobalDataset& ds) {
    const int D = ds.D;
    // Instances with a single annotation get an isotropic covariance scaled by
    // the pooled per-dimension sample variance of multiply-annotated instances.
    double pooled = 0.0;
    int pooled_n = 0;
    std::vector<PosteriorEstimate> out;
    out.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) {
        const auto n = static_cast<Eigen::Index>(inst.annotations.size());
        Matrix a(n, D);
        for (Eigen::Index i = 0; i < n; ++i) a.row(i) = inst.annotations[i].values.row(0);
        PosteriorEstimate est;
        est.id = inst.id;
        est.kind = EstimateKind::global;
        est.mean = a.colwise().mean();
        if (n > 1) {
            const Matrix centered = a.rowwise() - est.mean.row(0);
            est.cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
            pooled += est.cov->trace() / D;
            ++pooled_n;
        }
        out.push_back(std::move(est));
    }
    const double fallback = pooled_n > 0 ? pooled / pooled_n : 1.0;
    for (auto& est : out)
        if (!est.cov) est.cov = fallback * Matrix::Identity(D, D);
    return out;
}

GlobalFitResult fit(const GlobalDataset& ds, const GlobalFitConfig& config,
                    const std::optional<GlobalModelParams>& init_params) {
    config.validate();
    ds.validate();

    GlobalFitResult result;
    auto& trace = result.trace;
    GlobalModelParams params;
    if (config.init == GlobalInit::provided) {
        if (!init_params) throw ValidationError("init=provided requires initial parameters");
        init_params->validate();
        if (init_params->P() != ds.P || init_params->D() != ds.D || init_params->K() != ds.K)
            throw ValidationError("initial parameters do not match dataset shape");
        params = m_step(ds, e_step(*init_params, ds, config.ridge), init_params, config);
    } else {
        params = m_step(ds, sample_moment_posteriors(ds), std::nullopt, config);
    }

    double prev_ll = log_likelihood(params, ds, config.ridge);
    trace.log_likelihood.push_back(prev_ll);
    if (config.keep_snapshots) trace.snapshots.push_back(params);
    trace.iterations = 1;

    while (trace.iterations < config.max_iters) {
        GlobalModelParams next = m_step(ds, e_step(params, ds, config.ridge), params, config);
        const double ll = log_likelihood(next, ds, config.ridge);
        params = std::move(next);
        trace.log_likelihood.push_back(ll);
        if (config.keep_snapshots) trace.snapshots.push_back(params);
        ++trace.iterations;
        if (std::abs(ll - prev_ll) < config.rel_ll_tol * std::abs(prev_ll)) {
            trace.reason = Termination::converged;
            break;
        }
        prev_ll = ll;
    }
    result.params = std::move(params);
    return result;
}

Matrix predict(const GlobalModelParams& params, const Matrix& features) {
    if (features.cols() != params.P())
        throw ValidationError("feature width " + std::to_string(features.cols()) + " does not match P=" +
                              std::to_string(params.P()));
    return features * params.theta;
}

}  // namespace mdfuse
