#include "mdfuse/cli.hpp"

#include "mdfuse/baselines.hpp"
#include "mdfuse/evaluation.hpp"
#include "mdfuse/synthetic.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace mdfuse {

namespace fs = std::filesystem;

namespace {

enum class FlagType { str, integer, real, int_list, real_list, str_list };

struct FlagSpec {
    std::string name;  // without the leading dashes
    std::string key;   // key in the resolved configuration
    FlagType type;
    std::string help;
};

Json parse_flag(const FlagSpec& spec, const std::vector<std::string>& raw) {
    auto number = [&](const std::string& s, bool integral) -> Json {
        try {
            std::size_t pos = 0;
            Json v;
            if (integral) {
                const long long n = std::stoll(s, &pos);
                v = n;
            } else {
                v = std::stod(s, &pos);
            }
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ValidationError("--" + spec.name + ": '" + s + "' is not a valid number");
        }
    };
    switch (spec.type) {
        case FlagType::str: return raw.back();
        case FlagType::integer: return number(raw.back(), true);
        case FlagType::real: return number(raw.back(), false);
        case FlagType::int_list:
        case FlagType::real_list: {
            Json arr = Json::array();
            for (const auto& s : raw) arr.push_back(number(s, spec.type == FlagType::int_list));
            return arr;
        }
        case FlagType::str_list: return Json(raw);
    }
    return nullptr;
}

// Merges `section` into `resolved`, rejecting keys that have no default.
void merge_section(Json& resolved, const Json& section, const std::string& where) {
    if (!section.is_object()) throw ValidationError(where + " must be a JSON object");
    for (const auto& [key, value] : section.items()) {
        if (!resolved.contains(key)) throw ValidationError(where + ": unknown key '" + key + "'");
        resolved[key] = value;
    }
}

template <typename T>
T get(const Json& cfg, const std::string& key) {
    try {
        return cfg.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError("configuration key '" + key + "' is missing or has the wrong type");
    }
}

template <typename T>
std::optional<T> get_opt(const Json& cfg, const std::string& key) {
    if (!cfg.contains(key) || cfg.at(key).is_null()) return std::nullopt;
    return get<T>(cfg, key);
}

fs::path require_path(const Json& cfg, const std::string& key) {
    const auto p = get_opt<std::string>(cfg, key);
    if (!p || p->empty()) throw ValidationError("'" + key + "' is required (flag --" + key + " or config key)");
    return *p;
}

fs::path existing_file(const Json& cfg, const std::string& key) {
    const fs::path p = require_path(cfg, key);
    if (!fs::is_regular_file(p)) throw ValidationError(key + " file '" + p.string() + "' does not exist");
    return p;
}

DatasetKind setting_of(const Json& cfg) {
    const auto s = get<std::string>(cfg, "setting");
    if (s == "global") return DatasetKind::global;
    if (s == "timeseries") return DatasetKind::timeseries;
    throw ValidationError("unknown setting '" + s + "' (expected global or timeseries)");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Writes `doc` and records its digest in the manifest file table.
void emit(Json& manifest, const fs::path& dir, const std::string& name, const Json& doc) {
    const std::string text = doc.dump(1) + "\n";
    write_text(text, dir / name);
    manifest["files"][name] = content_hash(text);
}

void emit_text(Json& manifest, const fs::path& dir, const std::string& name, const std::string& text) {
    write_text(text, dir / name);
    manifest["files"][name] = content_hash(text);
}

// Digest of the settings that determine results; output location and
// worker count are excluded.
std::string settings_hash(const Json& resolved) {
    Json s = resolved;
    s.erase("out");
    s.erase("jobs");
    return content_hash(s.dump());
}

Json base_manifest(const std::string& command, const Json& resolved) {
    Json m;
    m["command"] = command;
    m["seed"] = resolved.at("seed");
    m["config_hash"] = settings_hash(resolved);
    m["files"] = Json::object();
    return m;
}

// --- model configuration -------------------------------------------------

Json fit_defaults() {
    return Json{{"max_iters", nullptr}, {"rel_ll_tol", nullptr}, {"ridge", 1e-8},  {"sigma2_floor", 1e-8},
                {"tau2_floor", 1e-8},   {"W", 5},                {"restarts", 20}, {"solver_tol", 1e-8},
                {"weighting", "variance"}};
}

GlobalFitConfig global_config(Json& cfg) {
    GlobalFitConfig c;
    if (auto v = get_opt<int>(cfg, "max_iters")) c.max_iters = *v;
    if (auto v = get_opt<double>(cfg, "rel_ll_tol")) c.rel_ll_tol = *v;
    c.ridge = get<double>(cfg, "ridge");
    c.sigma2_floor = get<double>(cfg, "sigma2_floor");
    c.tau2_floor = get<double>(cfg, "tau2_floor");
    c.validate();
    cfg["max_iters"] = c.max_iters;
    cfg["rel_ll_tol"] = c.rel_ll_tol;
    return c;
}

TimeSeriesFitConfig timeseries_config(Json& cfg) {
    TimeSeriesFitConfig c;
    if (auto v = get_opt<int>(cfg, "max_iters")) c.max_iters = *v;
    if (auto v = get_opt<double>(cfg, "rel_ll_tol")) c.rel_ll_tol = *v;
    c.ridge = get<double>(cfg, "ridge");
    c.sigma2_floor = get<double>(cfg, "sigma2_floor");
    c.tau2_floor = get<double>(cfg, "tau2_floor");
    c.W = get<int>(cfg, "W");
    c.restarts = get<int>(cfg, "restarts");
    c.solver_tol = get<double>(cfg, "solver_tol");
    const auto w = get<std::string>(cfg, "weighting");
    if (w == "variance")
        c.weighting = ModeWeighting::variance;
    else if (w == "unit")
        c.weighting = ModeWeighting::unit;
    else
        throw ValidationError("unknown weighting '" + w + "' (expected variance or unit)");
    c.rng_seed = get<std::uint64_t>(cfg, "seed");
    c.jobs = get<int>(cfg, "jobs");
    c.validate();
    cfg["max_iters"] = c.max_iters;
    cfg["rel_ll_tol"] = c.rel_ll_tol;
    return c;
}

Json trace_to_json(const GlobalFitTrace& trace) {
    return Json{{"ll", trace.log_likelihood},
                {"iterations", trace.iterations},
                {"reason", trace.reason == Termination::converged ? "converged" : "max_iters"}};
}

Json restarts_to_json(const TimeSeriesFitResult& res, int selected) {
    Json j{{"selected_restart", selected}, {"restarts", Json::array()}};
    for (const auto& r : res.restarts)
        j["restarts"].push_back({{"seed", r.seed}, {"objective_trace", r.objective}, {"converged", r.converged}});
    return j;
}

// --- truth files ---------------------------------------------------------

template <typename Dataset>
std::vector<PosteriorEstimate> load_truth(const fs::path& path, const Dataset& ds, EstimateKind kind) {
    std::vector<PosteriorEstimate> truth = load_estimates(path);
    if (truth.size() != ds.instances.size())
        throw ValidationError("truth file lists " + std::to_string(truth.size()) + " instances, dataset has " +
                              std::to_string(ds.instances.size()));
    for (std::size_t m = 0; m < truth.size(); ++m) {
        if (truth[m].kind != kind) throw ValidationError("truth file setting does not match the dataset");
        if (truth[m].id != ds.instances[m].id)
            throw ValidationError("truth instance '" + truth[m].id + "' does not match dataset instance '" +
                                  ds.instances[m].id + "'");
        if (truth[m].mean.cols() != ds.D) throw ValidationError("truth for '" + truth[m].id + "' has wrong width");
    }
    return truth;
}

std::vector<PosteriorEstimate> truth_estimates(const GlobalDataset& ds, const Matrix& truth) {
    std::vector<PosteriorEstimate> out;
    for (int m = 0; m < ds.M(); ++m)
        out.push_back({ds.instances[m].id, EstimateKind::global, truth.row(m), std::nullopt});
    return out;
}

std::vector<PosteriorEstimate> truth_estimates(const TimeSeriesDataset& ds, const std::vector<Matrix>& truth) {
    std::vector<PosteriorEstimate> out;
    for (int m = 0; m < ds.M(); ++m)
        out.push_back({ds.instances[m].id, EstimateKind::timeseries, truth[m], std::nullopt});
    return out;
}

// --- commands ------------------------------------------------------------

Json generate_defaults() {
    return Json{{"recipe", "global-full"},
                {"seed", 0},
                {"jobs", 0},
                {"out", nullptr},
                {"M", nullptr},
                {"P", nullptr},
                {"T", nullptr},
                {"D", nullptr},
                {"K", nullptr},
                {"W_true", nullptr},
                {"annotators_per_instance", nullptr},
                {"sigma2", nullptr},
                {"tau2", nullptr},
                {"fk_mode", nullptr},
                {"offdiag_step", nullptr}};
}

template <typename T>
void override_field(Json& cfg, const std::string& key, T& field) {
    if (auto v = get_opt<T>(cfg, key)) field = *v;
    cfg[key] = field;
}

int cmd_generate(Json& cfg, std::ostream& out) {
    const fs::path dir = require_path(cfg, "out");
    const auto recipe = get<std::string>(cfg, "recipe");
    const auto seed = get<std::uint64_t>(cfg, "seed");
    Json manifest;
    Json spec_json;

    auto global_spec = [&](GlobalSynthSpec s) {
        override_field(cfg, "M", s.M);
        override_field(cfg, "P", s.P);
        override_field(cfg, "D", s.D);
        override_field(cfg, "K", s.K);
        override_field(cfg, "annotators_per_instance", s.annotators_per_instance);
        override_field(cfg, "sigma2", s.sigma2);
        override_field(cfg, "tau2", s.tau2);
        override_field(cfg, "offdiag_step", s.offdiag_step);
        std::string mode = s.fk_mode == FkMode::fixed_offdiag ? "fixed_offdiag" : "uniform_random";
        override_field(cfg, "fk_mode", mode);
        if (mode == "fixed_offdiag")
            s.fk_mode = FkMode::fixed_offdiag;
        else if (mode == "uniform_random")
            s.fk_mode = FkMode::uniform_random;
        else
            throw ValidationError("unknown fk_mode '" + mode + "'");
        cfg.erase("T");
        cfg.erase("W_true");
        return s;
    };
    auto ts_spec = [&](TimeSeriesSynthSpec s) {
        override_field(cfg, "M", s.M);
        override_field(cfg, "P", s.P);
        override_field(cfg, "T", s.T);
        override_field(cfg, "D", s.D);
        override_field(cfg, "K", s.K);
        override_field(cfg, "W_true", s.W_true);
        override_field(cfg, "sigma2", s.sigma2);
        override_field(cfg, "tau2", s.tau2);
        for (const char* k : {"annotators_per_instance", "fk_mode", "offdiag_step"}) {
            if (!cfg.at(k).is_null()) throw ValidationError(std::string(k) + " does not apply to time-series recipes");
            cfg.erase(k);
        }
        return s;
    };

    if (recipe == "global-full" || recipe == "sweep-base") {
        const GlobalSynthSpec s = global_spec(recipe == "global-full" ? global_recipe_full(seed)
                                                                       : dependency_sweep_base(seed));
        const GlobalSynthData data = gen_global(s);
        manifest = base_manifest("generate", cfg);
        manifest["spec_hash"] = settings_hash(cfg);
        emit(manifest, dir, "dataset.json", to_json(data.dataset));
        emit(manifest, dir, "truth.json", estimates_to_json(truth_estimates(data.dataset, data.truth)));
        emit(manifest, dir, "true_params.json", params_to_json(data.params));
    } else if (recipe == "timeseries-full" || recipe == "timeseries-reduced") {
        const TimeSeriesSynthSpec s = ts_spec(recipe == "timeseries-full" ? timeseries_recipe_full(seed)
                                                                          : timeseries_recipe_reduced(seed));
        const TimeSeriesSynthData data = gen_timeseries(s);
        manifest = base_manifest("generate", cfg);
        manifest["spec_hash"] = settings_hash(cfg);
        emit(manifest, dir, "dataset.json", to_json(data.dataset));
        emit(manifest, dir, "truth.json", estimates_to_json(truth_estimates(data.dataset, data.truth)));
        emit(manifest, dir, "true_params.json", params_to_json(data.params));
    } else {
        throw ValidationError("unknown recipe '" + recipe +
                              "' (expected global-full, sweep-base, timeseries-full or timeseries-reduced)");
    }
    emit(manifest, dir, "resolved_config.json", cfg);
    write_json(manifest, dir / "manifest.json");
    out << "wrote " << (dir / "dataset.json").string() << "\n";
    return kExitOk;
}

Json fit_command_defaults() {
    Json d{{"data", nullptr}, {"setting", "global"}, {"model", "joint"}, {"seed", 0}, {"jobs", 0}, {"out", nullptr}};
    d.update(fit_defaults());
    return d;
}

int cmd_fit(Json& cfg, std::ostream& out) {
    const fs::path dir = require_path(cfg, "out");
    const fs::path data = existing_file(cfg, "data");
    const ModelKind model = model_kind_from_string(get<std::string>(cfg, "model"));
    const DatasetKind setting = setting_of(cfg);
    const int jobs = get<int>(cfg, "jobs");

    Json params;
    std::vector<PosteriorEstimate> estimates;
    if (setting == DatasetKind::global) {
        const GlobalDataset ds = load_global_dataset(data);
        const GlobalFitConfig c = global_config(cfg);
        if (model == ModelKind::joint) {
            const GlobalFitResult res = fit(ds, c);
            params = params_to_json(res.params);
            params["config"] = config_to_json(c);
            params["trace"] = trace_to_json(res.trace);
            estimates = e_step(res.params, ds, c.ridge);
        } else if (model == ModelKind::independent) {
            const IndependentGlobalFit res = independent_fit(ds, c, jobs);
            params["model"] = "independent";
            params["config"] = config_to_json(c);
            params["dims"] = Json::array();
            for (std::size_t d = 0; d < res.per_dim.size(); ++d) {
                Json p = params_to_json(res.per_dim[d].params);
                p["trace"] = trace_to_json(res.per_dim[d].trace);
                params["dims"].push_back(std::move(p));
            }
            estimates = res.estimates;
        } else {
            ds.validate();
            params["model"] = "mean";
            estimates = mean_fuse(ds);
        }
    } else {
        const TimeSeriesDataset ds = load_timeseries_dataset(data);
        const TimeSeriesFitConfig c = timeseries_config(cfg);
        if (model == ModelKind::joint) {
            const TimeSeriesFitResult res = fit(ds, c);
            const int best = best_restart_by_objective(res);
            const RestartResult& r = res.restarts[static_cast<std::size_t>(best)];
            params = params_to_json(r.params);
            params["config"] = config_to_json(c);
            params.update(restarts_to_json(res, best));
            for (int m = 0; m < ds.M(); ++m)
                estimates.push_back({ds.instances[m].id, EstimateKind::timeseries, r.modes[m], std::nullopt});
        } else if (model == ModelKind::independent) {
            const IndependentTimeSeriesFit res = independent_fit(ds, c);
            params["model"] = "independent";
            params["config"] = config_to_json(c);
            params["dims"] = Json::array();
            for (std::size_t d = 0; d < res.per_dim.size(); ++d) {
                const int best = res.chosen_restart[d];
                Json p = params_to_json(res.per_dim[d].restarts[static_cast<std::size_t>(best)].params);
                p.update(restarts_to_json(res.per_dim[d], best));
                params["dims"].push_back(std::move(p));
            }
            estimates = res.estimates;
        } else {
            ds.validate();
            params["model"] = "mean";
            estimates = mean_fuse(ds);
        }
    }

    Json manifest = base_manifest("fit", cfg);
    manifest["inputs"] = {{"data", file_hash(data)}};
    emit(manifest, dir, "params.json", params);
    emit(manifest, dir, "estimates.json", estimates_to_json(estimates));
    emit(manifest, dir, "resolved_config.json", cfg);
    write_json(manifest, dir / "manifest.json");
    out << "wrote " << (dir / "params.json").string() << "\n";
    return kExitOk;
}

Json evaluate_defaults() {
    Json d{{"data", nullptr},
           {"truth", nullptr},
           {"setting", "global"},
           {"models", {"joint", "independent"}},
           {"seed", 0},
           {"jobs", 0},
           {"out", nullptr},
           {"folds", 5},
           {"validation_fraction", 0.2},
           {"n_boot", 1000},
           {"alpha", 0.05},
           {"w_grid", {5, 10, 20, 50}}};
    d.update(fit_defaults());
    return d;
}

CvPlan plan_from(const Json& cfg) {
    CvPlan plan;
    plan.C = get<int>(cfg, "folds");
    plan.validation_fraction = get<double>(cfg, "validation_fraction");
    plan.seed = get<std::uint64_t>(cfg, "seed");
    plan.n_boot = get<int>(cfg, "n_boot");
    plan.alpha = get<double>(cfg, "alpha");
    plan.validate();
    return plan;
}

std::vector<ModelKind> models_from(const Json& cfg) {
    std::vector<ModelKind> models;
    for (const auto& name : get<std::vector<std::string>>(cfg, "models")) models.push_back(model_kind_from_string(name));
    return models;
}

void emit_report(Json& manifest, const fs::path& dir, const EvalReport& report) {
    Json doc = report_to_json(report);
    Json sig = doc["significance"];
    doc.erase("significance");
    emit(manifest, dir, "report.json", doc);
    emit_text(manifest, dir, "report.csv", report_to_csv(report));
    emit(manifest, dir, "significance.json", Json{{"significance", sig}});
}

int cmd_evaluate(Json& cfg, std::ostream& out) {
    const fs::path dir = require_path(cfg, "out");
    const fs::path data = existing_file(cfg, "data");
    const fs::path truth_path = existing_file(cfg, "truth");
    const DatasetKind setting = setting_of(cfg);
    const std::vector<ModelKind> models = models_from(cfg);
    const CvPlan plan = plan_from(cfg);
    const int jobs = get<int>(cfg, "jobs");

    EvalReport report;
    if (setting == DatasetKind::global) {
        const GlobalDataset ds = load_global_dataset(data);
        const auto truth = load_truth(truth_path, ds, EstimateKind::global);
        const GlobalFitConfig c = global_config(cfg);
        report = run_cv_global(ds, stack_means(truth), models, plan, c, jobs);
    } else {
        const TimeSeriesDataset ds = load_timeseries_dataset(data);
        const auto truth = load_truth(truth_path, ds, EstimateKind::timeseries);
        TimeSeriesFitConfig c = timeseries_config(cfg);
        std::vector<Matrix> series;
        for (const auto& t : truth) series.push_back(t.mean);
        report = run_cv_timeseries(ds, series, models, plan, c, get<std::vector<int>>(cfg, "w_grid"), jobs);
    }

    Json manifest = base_manifest("evaluate", cfg);
    manifest["inputs"] = {{"data", file_hash(data)}, {"truth", file_hash(truth_path)}};
    emit_report(manifest, dir, report);
    emit(manifest, dir, "resolved_config.json", cfg);
    write_json(manifest, dir / "manifest.json");
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
    out << "wrote " << (dir / "report.json").string() << "\n";
    return kExitOk;
}

Json sweep_defaults() {
    Json steps = Json::array();
    for (int i = 0; i <= 10; ++i) steps.push_back(i / 10.0);
    Json d{{"steps", steps},
           {"seed", 0},
           {"jobs", 0},
           {"out", nullptr},
           {"M", 100},
           {"P", 20},
           {"D", 2},
           {"K", 100},
           {"annotators_per_instance", 10},
           {"sigma2", 0.1},
           {"tau2", 0.1},
           {"models", {"joint", "independent"}},
           {"folds", 5},
           {"validation_fraction", 0.2},
           {"n_boot", 1000},
           {"alpha", 0.05}};
    d.update(fit_defaults());
    for (const char* k : {"W", "restarts", "solver_tol", "weighting"}) d.erase(k);
    return d;
}

int cmd_sweep(Json& cfg, std::ostream& out) {
    const fs::path dir = require_path(cfg, "out");
    const auto seed = get<std::uint64_t>(cfg, "seed");
    const std::vector<ModelKind> models = models_from(cfg);
    const CvPlan plan = plan_from(cfg);
    const int jobs = get<int>(cfg, "jobs");
    const GlobalFitConfig c = global_config(cfg);

    GlobalSynthSpec base = dependency_sweep_base(seed);
    base.M = get<int>(cfg, "M");
    base.P = get<int>(cfg, "P");
    base.D = get<int>(cfg, "D");
    base.K = get<int>(cfg, "K");
    base.annotators_per_instance = get<int>(cfg, "annotators_per_instance");
    base.sigma2 = get<double>(cfg, "sigma2");
    base.tau2 = get<double>(cfg, "tau2");
    const auto steps = get<std::vector<double>>(cfg, "steps");
    if (steps.empty()) throw ValidationError("sweep needs at least one step");

    Json manifest = base_manifest("sweep", cfg);
    manifest["datasets"] = Json::array();
    Json summary{{"steps", Json::array()}};
    std::string csv = "step,model,dim,metric,value\n";
    for (const SweepStep& s : gen_dependency_sweep(base, steps)) {
        const std::string hash = content_hash(to_json(s.data.dataset).dump());
        manifest["datasets"].push_back({{"step", s.step}, {"hash", hash}});
        const EvalReport report = run_cv_global(s.data.dataset, s.data.truth, models, plan, c, jobs);

        Json entry{{"step", s.step}, {"dataset_hash", hash}, {"aggregate", Json::array()}};
        for (const auto& m : report.models)
            for (int d = 0; d < report.D; ++d)
                for (Metric metric : {Metric::ccc, Metric::pearson}) {
                    const double v = report.mean(m, d, metric);
                    entry["aggregate"].push_back({{"model", m}, {"dim", d}, {"metric", to_string(metric)}, {"mean", v}});
                    csv += format_double(s.step) + ',' + m + ',' + std::to_string(d) + ',' + to_string(metric) + ',' +
                           format_double(v) + '\n';
                }

        // Distortion recovery from a fit on the whole dataset.
        const GlobalFitResult full = fit(s.data.dataset, c);
        const Matrix mean_f = mean_distortion(full.params, s.data.dataset.annotator_counts());
        const Matrix& true_f = s.data.params.f.front();
        const double cosine = matrix_cosine(mean_f, true_f);
        entry["f_recovery"] = {{"true_F", matrix_to_json(true_f)},
                               {"mean_estimated_F", matrix_to_json(mean_f)},
                               {"cosine", cosine}};
        summary["steps"].push_back(std::move(entry));
        out << "step " << format_double(s.step) << " done\n";
    }
    emit(manifest, dir, "sweep.json", summary);
    emit_text(manifest, dir, "sweep.csv", csv);
    emit(manifest, dir, "resolved_config.json", cfg);
    write_json(manifest, dir / "manifest.json");
    return kExitOk;
}

struct Command {
    std::string name;
    std::string help;
    Json (*defaults)();
    int (*run)(Json&, std::ostream&);
    std::vector<FlagSpec> flags;
};

std::vector<Command> commands() {
    const FlagSpec seed{"seed", "seed", FlagType::integer, "Random seed"};
    const FlagSpec outdir{"out", "out", FlagType::str, "Output directory"};
    const FlagSpec jobs{"jobs", "jobs", FlagType::integer, "Worker threads (0 = all cores)"};
    const FlagSpec data{"data", "data", FlagType::str, "Dataset JSON file"};
    const FlagSpec setting{"setting", "setting", FlagType::str, "global or timeseries"};
    const FlagSpec restarts{"restarts", "restarts", FlagType::integer, "Random restarts per time-series fit"};
    const FlagSpec folds{"folds", "folds", FlagType::integer, "Cross-validation folds"};
    const FlagSpec max_iters{"max-iters", "max_iters", FlagType::integer, "EM iteration cap"};
    return {
        {"generate", "Generate a synthetic dataset", generate_defaults, cmd_generate,
         {seed, outdir, jobs, {"recipe", "recipe", FlagType::str, "global-full | sweep-base | timeseries-full | timeseries-reduced"}}},
        {"fit", "Fit a fusion model", fit_command_defaults, cmd_fit,
         {seed, outdir, jobs, data, setting, restarts, max_iters,
          {"model", "model", FlagType::str, "joint | independent | mean"},
          {"w", "W", FlagType::integer, "Filter width for time-series fits"}}},
        {"evaluate", "Cross-validated comparison of fusion models", evaluate_defaults, cmd_evaluate,
         {seed, outdir, jobs, data, setting, restarts, folds, max_iters,
          {"truth", "truth", FlagType::str, "Ground-truth JSON file"},
          {"model", "models", FlagType::str_list, "Comma-separated models (joint,independent,mean)"},
          {"w-grid", "w_grid", FlagType::int_list, "Comma-separated filter widths"}}},
        {"sweep", "Dependency sweep over shared off-diagonal distortion", sweep_defaults, cmd_sweep,
         {seed, outdir, jobs, folds, max_iters,
          {"model", "models", FlagType::str_list, "Comma-separated models"},
          {"steps", "steps", FlagType::real_list, "Comma-separated off-diagonal steps"}}},
    };
}

}  // namespace

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return hex64(h);
}

std::string file_hash(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return content_hash(ss.str());
}

Json params_to_json(const GlobalModelParams& params) {
    Json j;
    j["setting"] = "global";
    j["theta"] = matrix_to_json(params.theta);
    j["sigma2"] = params.sigma2;
    j["annotators"] = Json::array();
    for (int k = 0; k < params.K(); ++k)
        j["annotators"].push_back(
            {{"id", k}, {"F", matrix_to_json(params.f[static_cast<std::size_t>(k)])}, {"tau2", params.tau2(k)}});
    return j;
}

Json params_to_json(const TimeSeriesModelParams& params) {
    Json j;
    j["setting"] = "timeseries";
    j["theta"] = matrix_to_json(params.theta);
    j["W"] = params.W();
    j["sigma2"] = params.sigma2;
    j["annotators"] = Json::array();
    for (int k = 0; k < params.K(); ++k) {
        Json filters = Json::array();
        for (int d = 0; d < params.D(); ++d)
            filters.push_back(
                {{"d", d}, {"coeffs", vector_to_json(params.filters.coeffs[static_cast<std::size_t>(k)].col(d))}});
        j["annotators"].push_back({{"id", k}, {"filters", filters}, {"tau2", params.tau2(k)}});
    }
    return j;
}

Json config_to_json(const GlobalFitConfig& c) {
    return Json{{"max_iters", c.max_iters},       {"rel_ll_tol", c.rel_ll_tol}, {"sigma2_floor", c.sigma2_floor},
                {"tau2_floor", c.tau2_floor},     {"ridge", c.ridge},
                {"init", c.init == GlobalInit::sample_moment ? "sample_moment" : "provided"}};
}

Json config_to_json(const TimeSeriesFitConfig& c) {
    return Json{{"W", c.W},
                {"max_iters", c.max_iters},
                {"rel_ll_tol", c.rel_ll_tol},
                {"restarts", c.restarts},
                {"solver_tol", c.solver_tol},
                {"ridge", c.ridge},
                {"sigma2_floor", c.sigma2_floor},
                {"tau2_floor", c.tau2_floor},
                {"rng_seed", c.rng_seed},
                {"weighting", c.weighting == ModeWeighting::variance ? "variance" : "unit"}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Joint multi-dimensional annotation fusion"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON configuration file with per-command sections");

    const std::vector<Command> cmds = commands();
    std::vector<CLI::App*> subs;
    std::vector<std::vector<std::vector<std::string>>> raw(cmds.size());
    std::vector<std::string> sub_config(cmds.size());
    for (std::size_t i = 0; i < cmds.size(); ++i) {
        CLI::App* sub = app.add_subcommand(cmds[i].name, cmds[i].help);
        sub->add_option("--config", sub_config[i], "JSON configuration file with per-command sections");
        raw[i].resize(cmds[i].flags.size());
        for (std::size_t f = 0; f < cmds[i].flags.size(); ++f) {
            const FlagSpec& spec = cmds[i].flags[f];
            CLI::Option* opt = sub->add_option("--" + spec.name, raw[i][f], spec.help);
            if (spec.type == FlagType::int_list || spec.type == FlagType::real_list || spec.type == FlagType::str_list)
                opt->delimiter(',');
            else
                opt->expected(1);
        }
        subs.push_back(sub);
    }

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        for (std::size_t i = 0; i < cmds.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            const Command& cmd = cmds[i];
            Json resolved = cmd.defaults();
            const std::string path = sub_config[i].empty() ? config_path : sub_config[i];
            if (!path.empty()) {
                if (!fs::is_regular_file(path)) throw ValidationError("config file '" + path + "' does not exist");
                Json file;
                try {
                    file = read_json(path);
                } catch (const nlohmann::json::exception& e) {
                    throw ParseError(path + ": " + e.what());
                }
                if (!file.is_object()) throw ValidationError("config file must hold a JSON object");
                Json top = Json::object();
                for (const auto& [key, value] : file.items()) {
                    const bool section = key == "generate" || key == "fit" || key == "evaluate" || key == "sweep";
                    if (section) continue;
                    if (key != "seed" && key != "jobs" && key != "out")
                        throw ValidationError("config file: unknown top-level key '" + key + "'");
                    top[key] = value;
                }
                merge_section(resolved, top, "config file");
                if (file.contains(cmd.name)) merge_section(resolved, file.at(cmd.name), "config section '" + cmd.name + "'");
            }
            Json flags = Json::object();
            for (std::size_t f = 0; f < cmd.flags.size(); ++f)
                if (!raw[i][f].empty()) flags[cmd.flags[f].key] = parse_flag(cmd.flags[f], raw[i][f]);
            merge_section(resolved, flags, "flags");
            return cmd.run(resolved, out);
        }
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitValidation;
}

}  // namespace mdfuse
