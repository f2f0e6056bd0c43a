#include "mdfuse/synthetic.hpp"

#include "mdfuse/linalg.hpp"
#include "mdfuse/timeseries_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace mdfuse {

namespace {

// Independent stream per (seed, purpose, index) so that changing one
// component of a spec leaves the draws of the others untouched.
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose, std::uint32_t index = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), purpose, index};
    return std::mt19937_64(seq);
}

enum Purpose : std::uint32_t { kFeatures = 1, kTruth, kDistortion, kCoverage, kNoise };

std::string instance_id(int m) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%04d", m);
    return buf;
}

Matrix fixed_offdiag(int D, double step) {
    Matrix f = Matrix::Constant(D, D, step);
    f.diagonal().setOnes();
    return f;
}

}  // namespace

void GlobalSynthSpec::validate() const {
    if (M < 1 || P < 1 || D < 1 || K < 1) throw ValidationError("synthetic counts M, P, D, K must be positive");
    if (annotators_per_instance < 0 || annotators_per_instance > K)
        throw ValidationError("annotators_per_instance must lie in [0, K]");
    if (!(sigma2 >= 0.0) || !(tau2 >= 0.0)) throw ValidationError("noise levels must be non-negative");
    if (fk_mode == FkMode::fixed_offdiag && !(offdiag_step >= 0.0 && offdiag_step <= 1.0))
        throw ValidationError("off-diagonal step must lie in [0, 1]");
    if (!(theta_ridge >= 0.0)) throw ValidationError("theta_ridge must be non-negative");
}

void TimeSeriesSynthSpec::validate() const {
    if (M < 1 || P < 1 || T < 1 || D < 1 || K < 1) throw ValidationError("synthetic counts must be positive");
    if (W_true < 1) throw ValidationError("W_true must be at least 1");
    if (T < W_true) throw ValidationError("series length T is shorter than W_true");
    if (hold_min < 1 || hold_max < hold_min) throw ValidationError("hold range must satisfy 1 <= min <= max");
    if (!(sigma2 >= 0.0) || !(tau2 >= 0.0)) throw ValidationError("noise levels must be non-negative");
    if (!(theta_ridge >= 0.0)) throw ValidationError("theta_ridge must be non-negative");
}

GlobalSynthData gen_global(const GlobalSynthSpec& spec) {
    spec.validate();
    const int M = spec.M;
    const int P = spec.P;
    const int D = spec.D;
    const int K = spec.K;
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix x(M, P);
    {
        auto rng = stream(spec.seed, kFeatures);
        for (int m = 0; m < M; ++m)
            for (int p = 0; p < P; ++p) x(m, p) = normal(rng);
    }

    Matrix truth(M, D);
    {
        auto rng = stream(spec.seed, kTruth);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int m = 0; m < M; ++m)
            for (int d = 0; d < D; ++d) truth(m, d) = u(rng);
    }

    GlobalSynthData out;
    auto& params = out.params;
    params.f.resize(K);
    {
        auto rng = stream(spec.seed, kDistortion);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int k = 0; k < K; ++k) {
            if (spec.fk_mode == FkMode::fixed_offdiag) {
                params.f[k] = fixed_offdiag(D, spec.offdiag_step);
                continue;
            }
            params.f[k].resize(D, D);
            for (int i = 0; i < D; ++i)
                for (int j = 0; j < D; ++j) params.f[k](i, j) = u(rng);
        }
    }
    params.theta = RidgeSolver(x, spec.theta_ridge).solve(truth);
    params.sigma2 = spec.sigma2;
    params.tau2 = Vector::Constant(K, spec.tau2);

    std::vector<std::vector<int>> who(M);
    {
        auto rng = stream(spec.seed, kCoverage);
        std::vector<int> all(K);
        for (int m = 0; m < M; ++m) {
            std::iota(all.begin(), all.end(), 0);
            if (spec.annotators_per_instance > 0) {
                std::shuffle(all.begin(), all.end(), rng);
                all.resize(spec.annotators_per_instance);
                std::sort(all.begin(), all.end());
            }
            who[m] = all;
            all.resize(K);
        }
    }

    auto& ds = out.dataset;
    ds.D = D;
    ds.P = P;
    ds.K = K;
    ds.instances.resize(M);
    const double tau = std::sqrt(spec.tau2);
    auto rng = stream(spec.seed, kNoise);
    for (int m = 0; m < M; ++m) {
        auto& inst = ds.instances[m];
        inst.id = instance_id(m);
        inst.features = x.row(m).transpose();
        const Vector a_star = truth.row(m).transpose();
        for (int k : who[m]) {
            Vector a = params.f[k] * a_star;
            for (int d = 0; d < D; ++d) a(d) += tau * normal(rng);
            inst.annotations.push_back({k, a.transpose()});
        }
    }
    out.truth = std::move(truth);
    return out;
}

Matrix random_walk_features(int T, int P, int hold_min, int hold_max, std::uint64_t seed) {
    if (T < 1 || P < 1 || hold_min < 1 || hold_max < hold_min) throw ValidationError("invalid random-walk settings");
    auto rng = stream(seed, kFeatures);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> hold(hold_min, hold_max);
    Matrix out(T, P);
    for (int p = 0; p < P; ++p) {
        double v = normal(rng);
        int t = 0;
        while (t < T) {
            const int h = hold(rng);
            for (int i = 0; i < h && t < T; ++i) out(t++, p) = v;
            const double next = v + normal(rng);
            if (t < T) out(t++, p) = 0.5 * (v + next);
            v = next;
        }
    }
    return out;
}

TimeSeriesSynthData gen_timeseries(const TimeSeriesSynthSpec& spec) {
    spec.validate();
    const int M = spec.M;
    const int D = spec.D;
    const int K = spec.K;
    const int W = spec.W_true;

    TimeSeriesSynthData out;
    auto& ds = out.dataset;
    ds.D = D;
    ds.P = spec.P;
    ds.K = K;
    ds.instances.resize(M);
    out.truth.resize(M);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto truth_rng = stream(spec.seed, kTruth);
    for (int m = 0; m < M; ++m) {
        auto seeds = stream(spec.seed, kFeatures, static_cast<std::uint32_t>(m));
        ds.instances[m].id = instance_id(m);
        ds.instances[m].features = random_walk_features(spec.T, spec.P, spec.hold_min, spec.hold_max, seeds());
        out.truth[m].resize(spec.T, D);
        for (int t = 0; t < spec.T; ++t)
            for (int d = 0; d < D; ++d) out.truth[m](t, d) = u(truth_rng);
    }

    auto& params = out.params;
    params.filters.W = W;
    params.filters.D = D;
    params.filters.coeffs.resize(K);
    {
        auto rng = stream(spec.seed, kDistortion);
        for (int k = 0; k < K; ++k) {
            params.filters.coeffs[k].resize(W * D, D);
            for (int d = 0; d < D; ++d)
                for (int i = 0; i < W * D; ++i) params.filters.coeffs[k](i, d) = u(rng);
        }
    }

    Matrix x(static_cast<Eigen::Index>(M) * spec.T, spec.P);
    Matrix y(static_cast<Eigen::Index>(M) * spec.T, D);
    for (int m = 0; m < M; ++m) {
        x.middleRows(static_cast<Eigen::Index>(m) * spec.T, spec.T) = ds.instances[m].features;
        y.middleRows(static_cast<Eigen::Index>(m) * spec.T, spec.T) = out.truth[m];
    }
    params.theta = RidgeSolver(x, spec.theta_ridge).solve(y);
    params.sigma2 = spec.sigma2;
    params.tau2 = Vector::Constant(K, spec.tau2);

    const double tau = std::sqrt(spec.tau2);
    auto rng = stream(spec.seed, kNoise);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int m = 0; m < M; ++m) {
        auto& inst = ds.instances[m];
        for (int k = 0; k < K; ++k) {
            Matrix a(spec.T, D);
            for (int d = 0; d < D; ++d) {
                a.col(d) = apply_filter(params.filters, k, d, out.truth[m]);
                for (int t = 0; t < spec.T; ++t) a(t, d) += tau * normal(rng);
            }
            inst.annotations.push_back({k, std::move(a)});
        }
    }
    return out;
}

std::vector<SweepStep> gen_dependency_sweep(const GlobalSynthSpec& base, const std::vector<double>& steps) {
    std::vector<SweepStep> out;
    out.reserve(steps.size());
    for (double s : steps) {
        GlobalSynthSpec spec = base;
        spec.fk_mode = FkMode::fixed_offdiag;
        spec.offdiag_step = s;
        out.push_back({s, gen_global(spec)});
    }
    return out;
}

GlobalSynthSpec global_recipe_full(std::uint64_t seed) {
    GlobalSynthSpec s;
    s.M = 100;
    s.P = 500;
    s.D = 2;
    s.K = 10;
    s.seed = seed;
    return s;
}

GlobalSynthSpec dependency_sweep_base(std::uint64_t seed) {
    GlobalSynthSpec s;
    s.M = 100;
    s.P = 20;
    s.D = 2;
    s.K = 100;
    s.annotators_per_instance = 10;
    s.fk_mode = FkMode::fixed_offdiag;
    s.seed = seed;
    return s;
}

TimeSeriesSynthSpec timeseries_recipe_full(std::uint64_t seed) {
    TimeSeriesSynthSpec s;
    s.seed = seed;
    return s;
}

TimeSeriesSynthSpec timeseries_recipe_reduced(std::uint64_t seed) {
    TimeSeriesSynthSpec s;
    s.M = 10;
    s.P = 20;
    s.T = 120;
    s.D = 2;
    s.K = 4;
    s.seed = seed;
    return s;
}

}  // namespace mdfuse
