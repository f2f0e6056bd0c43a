#include "mdfuse/timeseries_model.hpp"

#include "mdfuse/linalg.hpp"
#include "mdfuse/parallel.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mdfuse {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void check_instance(const TimeSeriesModelParams& params, const TimeSeriesInstance& inst) {
    if (inst.T() < params.W())
        throw ValidationError("instance '" + inst.id + "' has T=" + std::to_string(inst.T()) +
                              " frames, fewer than filter width W=" + std::to_string(params.W()));
    if (inst.features.cols() != params.P())
        throw ValidationError("instance '" + inst.id + "' feature width does not match theta");
    for (const auto& a : inst.annotations)
        if (a.annotator < 0 || a.annotator >= params.K())
            throw ValidationError("unknown annotator id " + std::to_string(a.annotator));
}

// Normal equations of the mode objective in time-major order (index t*D + d),
// which makes the matrix banded with bandwidth W*D - 1.
struct ModeSystem {
    BandedSpdMatrix<double> normal;
    Vector rhs;
};

ModeSystem build_mode_system(const TimeSeriesModelParams& params, const TimeSeriesInstance& inst,
                             const TimeSeriesFitConfig& config) {
    const int T = inst.T();
    const int D = params.D();
    const int W = params.W();
    const bool unit = config.weighting == ModeWeighting::unit;
    const double prior_w = unit ? 1.0 : 1.0 / params.sigma2;

    ModeSystem sys{BandedSpdMatrix<double>(static_cast<Eigen::Index>(T) * D, W * D - 1),
                   Vector::Zero(static_cast<Eigen::Index>(T) * D)};
    sys.normal.add_to_diagonal(prior_w);
    const Matrix y = inst.features * params.theta;
    for (int t = 0; t < T; ++t)
        for (int d = 0; d < D; ++d) sys.rhs(t * D + d) += prior_w * y(t, d);

    std::vector<Eigen::Index> idx;
    std::vector<double> val;
    for (const auto& a : inst.annotations) {
        const int k = a.annotator;
        const double w = unit ? 1.0 : 1.0 / params.tau2(k);
        for (int d = 0; d < D; ++d) {
            for (int t = 0; t < T; ++t) {
                // Non-zeros of row t of F^d_k.
                idx.clear();
                val.clear();
                for (int l = 0; l < W && l <= t; ++l)
                    for (int dp = 0; dp < D; ++dp) {
                        const double b = params.filters.tap(k, d, dp, l);
                        if (b == 0.0) continue;
                        idx.push_back(static_cast<Eigen::Index>(t - l) * D + dp);
                        val.push_back(b);
                    }
                const double obs = a.values(t, d);
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    sys.rhs(idx[i]) += w * val[i] * obs;
                    // Indices within a row are distinct; add() stores the lower triangle only.
                    for (std::size_t j = 0; j <= i; ++j) sys.normal.add(idx[i], idx[j], w * val[i] * val[j]);
                }
            }
        }
    }
    return sys;
}

}  // namespace

void TimeSeriesFitConfig::validate() const {
    if (W < 1) throw ValidationError("filter width W must be at least 1");
    if (restarts < 1) throw ValidationError("restarts must be at least 1");
    if (max_iters < 1) throw ValidationError("max_iters must be positive");
    if (!(rel_ll_tol > 0.0)) throw ValidationError("rel_ll_tol must be positive");
    if (!(solver_tol > 0.0)) throw ValidationError("solver_tol must be positive");
    if (!(ridge >= 0.0)) throw ValidationError("ridge must be non-negative");
    if (!(sigma2_floor > 0.0) || !(tau2_floor > 0.0)) throw ValidationError("variance floors must be positive");
}

Vector apply_filter(const FilterBank& bank, int k, int d, const Matrix& truth) {
    if (truth.cols() != bank.D)
        throw ValidationError("ground truth has " + std::to_string(truth.cols()) + " columns, filter bank expects " +
                              std::to_string(bank.D));
    if (truth.rows() < bank.W)
        throw ValidationError("series length " + std::to_string(truth.rows()) + " is shorter than W=" +
                              std::to_string(bank.W));
    if (k < 0 || k >= bank.K() || d < 0 || d >= bank.D) throw ValidationError("filter index out of range");
    const auto T = truth.rows();
    Vector out = Vector::Zero(T);
    for (int dp = 0; dp < bank.D; ++dp)
        for (int l = 0; l < bank.W; ++l) {
            const double b = bank.tap(k, d, dp, l);
            out.tail(T - l) += b * truth.col(dp).head(T - l);
        }
    return out;
}

Matrix filter_design_matrix(const Matrix& truth, int W) {
    const auto T = truth.rows();
    const auto D = truth.cols();
    Matrix a = Matrix::Zero(T, W * D);
    for (Eigen::Index dp = 0; dp < D; ++dp)
        for (int l = 0; l < W && l < T; ++l) a.col(dp * W + l).tail(T - l) = truth.col(dp).head(T - l);
    return a;
}

Matrix e_step_mode(const TimeSeriesModelParams& params, const TimeSeriesInstance& inst,
                   const TimeSeriesFitConfig& config) {
    check_instance(params, inst);
    if (inst.annotations.empty()) throw ValidationError("instance '" + inst.id + "' has no annotations");
    ModeSystem sys = build_mode_system(params, inst, config);
    const BandedSpdMatrix<double> original = sys.normal;
    if (!sys.normal.factorize())
        throw NumericError("mode system for instance '" + inst.id + "' is not positive definite");

    Vector v = sys.normal.solve(sys.rhs);
    const double target = config.solver_tol * std::max(sys.rhs.norm(), 1e-300);
    Vector resid = sys.rhs - original.multiply(v);
    for (int refine = 0; refine < 3 && resid.norm() > target; ++refine) {
        v += sys.normal.solve(resid);
        resid = sys.rhs - original.multiply(v);
    }
    if (resid.norm() > target)
        throw NumericError("mode solve for instance '" + inst.id + "' did not reach residual tolerance");

    const int T = inst.T();
    const int D = params.D();
    Matrix out(T, D);
    for (int t = 0; t < T; ++t)
        for (int d = 0; d < D; ++d) out(t, d) = v(t * D + d);
    return out;
}

TimeSeriesModelParams m_step(const TimeSeriesDataset& ds, const std::vector<Matrix>& modes,
                             const TimeSeriesModelParams* prev, int W, const TimeSeriesFitConfig& config) {
    if (modes.size() != ds.instances.size()) throw ValidationError("modes are not aligned with dataset instances");
    const int D = ds.D;
    const int P = ds.P;
    const int K = ds.K;

    Matrix xtx = Matrix::Zero(P, P);
    Matrix xta = Matrix::Zero(P, D);
    std::vector<Matrix> ata(K, Matrix::Zero(W * D, W * D));
    std::vector<Matrix> atb(K, Matrix::Zero(W * D, D));
    std::vector<int> count(K, 0);
    for (int m = 0; m < ds.M(); ++m) {
        const auto& inst = ds.instances[m];
        if (modes[m].rows() != inst.T() || modes[m].cols() != D)
            throw ValidationError("mode for instance '" + inst.id + "' has wrong shape");
        if (inst.T() < W)
            throw ValidationError("instance '" + inst.id + "' is shorter than filter width W=" + std::to_string(W));
        xtx.noalias() += inst.features.transpose() * inst.features;
        xta.noalias() += inst.features.transpose() * modes[m];
        const Matrix a = filter_design_matrix(modes[m], W);
        const Matrix gram = a.transpose() * a;
        for (const auto& ann : inst.annotations) {
            ata[ann.annotator] += gram;
            atb[ann.annotator].noalias() += a.transpose() * ann.values;
            ++count[ann.annotator];
        }
    }

    TimeSeriesModelParams next;
    next.theta = solve_spd<double>(xtx, xta, config.ridge, "feature Gram matrix");
    next.filters.W = W;
    next.filters.D = D;
    next.filters.coeffs.resize(K);
    next.tau2.resize(K);
    for (int k = 0; k < K; ++k) {
        if (count[k] == 0) {
            if (prev && prev->W() == W) {
                next.filters.coeffs[k] = prev->filters.coeffs[k];
                next.tau2(k) = prev->tau2(k);
            } else {
                Matrix c = Matrix::Zero(W * D, D);
                for (int d = 0; d < D; ++d) c(d * W, d) = 1.0;
                next.filters.coeffs[k] = c;
                next.tau2(k) = 1.0;
            }
            continue;
        }
        next.filters.coeffs[k] = solve_spd<double>(ata[k], atb[k], config.ridge, "filter design Gram matrix");
    }

    double s = 0.0;
    double total = 0.0;
    std::vector<double> t(K, 0.0);
    for (int m = 0; m < ds.M(); ++m) {
        const auto& inst = ds.instances[m];
        s += (modes[m] - inst.features * next.theta).squaredNorm();
        total += static_cast<double>(inst.T()) * D;
        const Matrix a = filter_design_matrix(modes[m], W);
        for (const auto& ann : inst.annotations)
            t[ann.annotator] += (ann.values - a * next.filters.coeffs[ann.annotator]).squaredNorm();
    }
    next.sigma2 = std::max(s / total, config.sigma2_floor);

    // tau2_k divides by M_k * T * D; with variable lengths T is the frame count
    // of each instance annotated by k.
    std::vector<double> frames(K, 0.0);
    for (const auto& inst : ds.instances)
        for (const auto& ann : inst.annotations) frames[ann.annotator] += static_cast<double>(inst.T()) * D;
    for (int k = 0; k < K; ++k)
        if (count[k] > 0) next.tau2(k) = std::max(t[k] / frames[k], config.tau2_floor);
    return next;
}

double joint_objective(const TimeSeriesModelParams& params, const TimeSeriesDataset& ds,
                       const std::vector<Matrix>& modes) {
    if (modes.size() != ds.instances.size()) throw ValidationError("modes are not aligned with dataset instances");
    const int D = params.D();
    double obj = 0.0;
    for (int m = 0; m < ds.M(); ++m) {
        const auto& inst = ds.instances[m];
        check_instance(params, inst);
        if (modes[m].rows() != inst.T() || modes[m].cols() != D)
            throw ValidationError("mode for instance '" + inst.id + "' has wrong shape");
        const double n = static_cast<double>(inst.T()) * D;
        const double prior_sq = (modes[m] - inst.features * params.theta).squaredNorm();
        obj += -0.5 * (n * (kLog2Pi + std::log(params.sigma2)) + prior_sq / params.sigma2);
        const Matrix a = filter_design_matrix(modes[m], params.W());
        for (const auto& ann : inst.annotations) {
            const double tau2 = params.tau2(ann.annotator);
            const double sq = (ann.values - a * params.filters.coeffs[ann.annotator]).squaredNorm();
            obj += -0.5 * (n * (kLog2Pi + std::log(tau2)) + sq / tau2);
        }
    }
    return obj;
}

std::uint64_t restart_seed(std::uint64_t rng_seed, int restart) {
    std::seed_seq seq{static_cast<std::uint32_t>(rng_seed), static_cast<std::uint32_t>(rng_seed >> 32),
                      static_cast<std::uint32_t>(restart)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

RestartResult fit_restart(const TimeSeriesDataset& ds, const TimeSeriesFitConfig& config, int restart) {
    RestartResult res;
    res.seed = restart_seed(config.rng_seed, restart);
    std::mt19937_64 rng(res.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<Matrix> modes(ds.instances.size());
    for (std::size_t m = 0; m < modes.size(); ++m) {
        modes[m].resize(ds.instances[m].T(), ds.D);
        for (Eigen::Index j = 0; j < modes[m].cols(); ++j)
            for (Eigen::Index i = 0; i < modes[m].rows(); ++i) modes[m](i, j) = normal(rng);
    }

    TimeSeriesModelParams params = m_step(ds, modes, nullptr, config.W, config);
    double prev_obj = 0.0;
    for (int it = 0; it < config.max_iters; ++it) {
        if (it > 0) params = m_step(ds, modes, &params, config.W, config);
        for (std::size_t m = 0; m < modes.size(); ++m) modes[m] = e_step_mode(params, ds.instances[m], config);
        const double obj = joint_objective(params, ds, modes);
        res.objective.push_back(obj);
        if (config.keep_snapshots) res.snapshots.push_back(params);
        if (it > 0 && std::abs(obj - prev_obj) < config.rel_ll_tol * std::abs(prev_obj)) {
            res.converged = true;
            break;
        }
        prev_obj = obj;
    }
    res.params = std::move(params);
    res.modes = std::move(modes);
    return res;
}

TimeSeriesFitResult fit(const TimeSeriesDataset& ds, const TimeSeriesFitConfig& config) {
    config.validate();
    ds.validate();
    if (config.W > ds.min_length())
        throw ValidationError("filter width W=" + std::to_string(config.W) + " exceeds shortest series (" +
                              std::to_string(ds.min_length()) + " frames)");
    TimeSeriesFitResult out;
    out.restarts.resize(static_cast<std::size_t>(config.restarts));
    parallel_for(out.restarts.size(), config.jobs,
                 [&](std::size_t r) { out.restarts[r] = fit_restart(ds, config, static_cast<int>(r)); });
    return out;
}

Matrix predict(const TimeSeriesModelParams& params, const Matrix& features) {
    if (features.cols() != params.P())
        throw ValidationError("feature width " + std::to_string(features.cols()) + " does not match P=" +
                              std::to_string(params.P()));
    return features * params.theta;
}

}  // namespace mdfuse
