#include "mdfuse/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace mdfuse {

namespace fs = std::filesystem;

namespace {

// Non-finite values cannot be written as JSON numbers; they are read from
// null or the strings "NaN"/"Inf"/"-Inf" so validation can report them.
double number_from_json(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Inf" || s == "inf" || s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Inf" || s == "-inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
    }
    throw ParseError("expected a number, got " + j.dump());
}

const Json& field(const Json& obj, const char* name) {
    if (!obj.is_object()) throw ParseError(std::string("expected an object holding '") + name + "'");
    auto it = obj.find(name);
    if (it == obj.end()) throw ParseError(std::string("missing field '") + name + "'");
    return *it;
}

int int_field(const Json& obj, const char* name) {
    const auto& j = field(obj, name);
    if (!j.is_number_integer()) throw ParseError(std::string("field '") + name + "' must be an integer");
    return j.get<int>();
}

std::string id_from_json(const Json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    throw ParseError("instance id must be a string or integer");
}

Json number_to_json(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "NaN";
    return v > 0 ? "Inf" : "-Inf";
}

std::vector<Annotation> annotations_from_json(const Json& arr, bool timeseries) {
    if (!arr.is_array()) throw ParseError("'annotations' must be an array");
    std::vector<Annotation> out;
    out.reserve(arr.size());
    for (const auto& a : arr) {
        Annotation ann;
        ann.annotator = int_field(a, "annotator");
        const auto& vals = field(a, "values");
        if (timeseries) {
            ann.values = matrix_from_json(vals);
        } else {
            Vector v = vector_from_json(vals);
            ann.values = v.transpose();
        }
        out.push_back(std::move(ann));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Annotation& a, const Annotation& b) { return a.annotator < b.annotator; });
    return out;
}

Json annotations_to_json(const std::vector<Annotation>& anns, bool timeseries) {
    Json arr = Json::array();
    for (const auto& a : anns) {
        Json j;
        j["annotator"] = a.annotator;
        if (timeseries)
            j["values"] = matrix_to_json(a.values);
        else
            j["values"] = vector_to_json(a.values.row(0).transpose());
        arr.push_back(std::move(j));
    }
    return arr;
}

void check_kind(const Json& doc, const char* expected) {
    const auto& k = field(doc, "kind");
    if (!k.is_string() || k.get<std::string>() != expected)
        throw ParseError(std::string("dataset kind must be '") + expected + "', got " + k.dump());
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

// ---- CSV ----

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

long long parse_index(const std::string& s, const fs::path& path, std::size_t lineno) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad index '" + s + "'");
    return v;
}

double parse_value(const std::string& s, const fs::path& path, std::size_t lineno) {
    if (s.empty())
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty value");
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad value '" + s + "'");
    return v;
}

struct CsvRow {
    std::string instance;
    long long a = 0, b = 0, c = 0;  // column meaning depends on file
    double value = 0.0;
};

std::vector<CsvRow> read_long_csv(const fs::path& path, std::size_t columns) {
    auto in = open_in(path);
    std::string line;
    std::vector<CsvRow> rows;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (header) {
            header = false;
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != columns)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(columns) + " columns, got " + std::to_string(cells.size()));
        CsvRow r;
        r.instance = cells[0];
        r.a = parse_index(cells[1], path, lineno);
        r.b = parse_index(cells[2], path, lineno);
        if (columns == 5) r.c = parse_index(cells[3], path, lineno);
        r.value = parse_value(cells.back(), path, lineno);
        rows.push_back(std::move(r));
    }
    if (header) throw ParseError(path.string() + ": missing header row");
    return rows;
}

}  // namespace

// ---- matrices ----

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("expected an array of rows");
    if (j.empty()) return Matrix(0, 0);
    const auto cols = j.front().is_array() ? j.front().size() : 0;
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols) throw ParseError("ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = number_from_json(j[i][c]);
    }
    return m;
}

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(number_to_json(v(i)));
    return arr;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number_from_json(j[i]);
    return v;
}

// ---- datasets ----

GlobalDataset global_dataset_from_json(const Json& doc) {
    check_kind(doc, "global");
    GlobalDataset ds;
    ds.D = int_field(doc, "D");
    ds.P = int_field(doc, "P");
    ds.K = int_field(doc, "K");
    const auto& insts = field(doc, "instances");
    if (!insts.is_array()) throw ParseError("'instances' must be an array");
    for (const auto& ji : insts) {
        GlobalInstance inst;
        inst.id = id_from_json(field(ji, "id"));
        inst.features = vector_from_json(field(ji, "features"));
        inst.annotations = annotations_from_json(field(ji, "annotations"), false);
        ds.instances.push_back(std::move(inst));
    }
    ds.validate();
    return ds;
}

TimeSeriesDataset timeseries_dataset_from_json(const Json& doc) {
    check_kind(doc, "timeseries");
    TimeSeriesDataset ds;
    ds.D = int_field(doc, "D");
    ds.P = int_field(doc, "P");
    ds.K = int_field(doc, "K");
    const auto& insts = field(doc, "instances");
    if (!insts.is_array()) throw ParseError("'instances' must be an array");
    for (const auto& ji : insts) {
        TimeSeriesInstance inst;
        inst.id = id_from_json(field(ji, "id"));
        inst.features = matrix_from_json(field(ji, "features"));
        inst.annotations = annotations_from_json(field(ji, "annotations"), true);
        ds.instances.push_back(std::move(inst));
    }
    ds.validate();
    return ds;
}

Json to_json(const GlobalDataset& ds) {
    Json doc;
    doc["kind"] = "global";
    doc["D"] = ds.D;
    doc["P"] = ds.P;
    doc["K"] = ds.K;
    Json insts = Json::array();
    for (const auto& inst : ds.instances) {
        Json j;
        j["id"] = inst.id;
        j["features"] = vector_to_json(inst.features);
        j["annotations"] = annotations_to_json(inst.annotations, false);
        insts.push_back(std::move(j));
    }
    doc["instances"] = std::move(insts);
    return doc;
}

Json to_json(const TimeSeriesDataset& ds) {
    Json doc;
    doc["kind"] = "timeseries";
    doc["D"] = ds.D;
    doc["P"] = ds.P;
    doc["K"] = ds.K;
    Json insts = Json::array();
    for (const auto& inst : ds.instances) {
        Json j;
        j["id"] = inst.id;
        j["features"] = matrix_to_json(inst.features);
        j["annotations"] = annotations_to_json(inst.annotations, true);
        insts.push_back(std::move(j));
    }
    doc["instances"] = std::move(insts);
    return doc;
}

Json read_json(const fs::path& path) {
    auto in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

GlobalDataset load_global_dataset(const fs::path& path) {
    try {
        return global_dataset_from_json(read_json(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

TimeSeriesDataset load_timeseries_dataset(const fs::path& path) {
    try {
        return timeseries_dataset_from_json(read_json(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

AnyDataset load_dataset(const fs::path& path, DatasetKind kind) {
    if (kind == DatasetKind::global) return load_global_dataset(path);
    return load_timeseries_dataset(path);
}

AnyDataset load_dataset_csv(const fs::path& annotations_csv, const fs::path& features_csv,
                            DatasetKind kind) {
    const auto feat_rows = read_long_csv(features_csv, 4);   // instance,frame,feature,value
    const auto ann_rows = read_long_csv(annotations_csv, 5);  // instance,annotator,frame,dim,value

    std::vector<std::string> order;
    std::map<std::string, std::size_t> index;
    long long P = 0, D = 0, K = 0;
    std::map<std::string, long long> frames;
    for (const auto& r : feat_rows) {
        if (index.emplace(r.instance, order.size()).second) order.push_back(r.instance);
        P = std::max(P, r.b + 1);
        frames[r.instance] = std::max(frames[r.instance], r.a + 1);
    }
    for (const auto& r : ann_rows) {
        if (!index.count(r.instance))
            throw ValidationError("annotation for instance '" + r.instance + "' without features");
        K = std::max(K, r.a + 1);
        D = std::max(D, r.c + 1);
        if (r.b >= frames[r.instance])
            throw ValidationError("instance '" + r.instance + "': annotation frame " +
                                  std::to_string(r.b) + " beyond feature frames");
    }
    if (kind == DatasetKind::global)
        for (const auto& [id, t] : frames)
            if (t != 1) throw ValidationError("instance '" + id + "': global data must use frame 0 only");

    // Cells never written stay NaN and are reported by validate().
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<Matrix> feats(order.size());
    for (std::size_t m = 0; m < order.size(); ++m)
        feats[m] = Matrix::Constant(frames[order[m]], P, nan);
    for (const auto& r : feat_rows) feats[index[r.instance]](r.a, r.b) = r.value;

    std::vector<std::map<long long, Matrix>> anns(order.size());
    for (const auto& r : ann_rows) {
        const auto m = index[r.instance];
        auto [it, fresh] = anns[m].try_emplace(r.a);
        if (fresh) it->second = Matrix::Constant(frames[r.instance], D, nan);
        it->second(r.b, r.c) = r.value;
    }

    auto build = [&](auto& ds, auto make_instance) {
        ds.D = static_cast<int>(D);
        ds.P = static_cast<int>(P);
        ds.K = static_cast<int>(K);
        for (std::size_t m = 0; m < order.size(); ++m) {
            auto inst = make_instance(m);
            inst.id = order[m];
            for (auto& [k, vals] : anns[m]) inst.annotations.push_back({static_cast<AnnotatorId>(k), vals});
            ds.instances.push_back(std::move(inst));
        }
        ds.validate();
    };
    if (kind == DatasetKind::global) {
        GlobalDataset ds;
        build(ds, [&](std::size_t m) {
            GlobalInstance inst;
            inst.features = feats[m].row(0).transpose();
            return inst;
        });
        return ds;
    }
    TimeSeriesDataset ds;
    build(ds, [&](std::size_t m) {
        TimeSeriesInstance inst;
        inst.features = feats[m];
        return inst;
    });
    return ds;
}

void save_dataset(const GlobalDataset& ds, const fs::path& path) { write_json(to_json(ds), path); }
void save_dataset(const TimeSeriesDataset& ds, const fs::path& path) { write_json(to_json(ds), path); }

// ---- estimates ----

Json estimates_to_json(const std::vector<PosteriorEstimate>& estimates) {
    if (estimates.empty()) throw ValidationError("no estimates to save");
    const EstimateKind kind = estimates.front().kind;
    Json insts = Json::array();
    for (const auto& e : estimates) {
        if (e.kind != kind) throw ValidationError("estimates mix global and time-series shapes");
        if (kind == EstimateKind::global && e.mean.rows() != 1)
            throw ValidationError("global estimate '" + e.id + "' must have a single row");
        if (e.mean.cols() != estimates.front().mean.cols())
            throw ValidationError("estimates have inconsistent dimension counts");
        Json j;
        j["id"] = e.id;
        if (kind == EstimateKind::global)
            j["mean"] = vector_to_json(e.mean.row(0).transpose());
        else
            j["mean"] = matrix_to_json(e.mean);
        if (e.cov) j["cov"] = matrix_to_json(*e.cov);
        insts.push_back(std::move(j));
    }
    Json doc;
    doc["kind"] = kind == EstimateKind::global ? "global" : "timeseries";
    doc["instances"] = std::move(insts);
    return doc;
}

std::vector<PosteriorEstimate> estimates_from_json(const Json& doc) {
    const auto& k = field(doc, "kind");
    EstimateKind kind;
    if (k == "global")
        kind = EstimateKind::global;
    else if (k == "timeseries")
        kind = EstimateKind::timeseries;
    else
        throw ParseError("unknown estimate kind " + k.dump());
    std::vector<PosteriorEstimate> out;
    for (const auto& ji : field(doc, "instances")) {
        PosteriorEstimate e;
        e.id = id_from_json(field(ji, "id"));
        e.kind = kind;
        if (kind == EstimateKind::global)
            e.mean = vector_from_json(field(ji, "mean")).transpose();
        else
            e.mean = matrix_from_json(field(ji, "mean"));
        if (ji.contains("cov")) e.cov = matrix_from_json(ji["cov"]);
        out.push_back(std::move(e));
    }
    if (out.empty()) throw ParseError("estimate file has no instances");
    return out;
}

void save_estimates(const std::vector<PosteriorEstimate>& estimates, const fs::path& path) {
    write_json(estimates_to_json(estimates), path);
}

void save_estimates_csv(const std::vector<PosteriorEstimate>& estimates, const fs::path& path) {
    estimates_to_json(estimates);  // shape checks
    std::string text = "instance,frame,dim,value\n";
    for (const auto& e : estimates)
        for (Eigen::Index t = 0; t < e.mean.rows(); ++t)
            for (Eigen::Index d = 0; d < e.mean.cols(); ++d)
                text += e.id + "," + std::to_string(t) + "," + std::to_string(d) + "," +
                        format_double(e.mean(t, d)) + "\n";
    write_text(text, path);
}

std::vector<PosteriorEstimate> load_estimates(const fs::path& path) {
    try {
        return estimates_from_json(read_json(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const Json& doc, const fs::path& path) { write_text(doc.dump(1) + "\n", path); }

void write_text(const std::string& text, const fs::path& path) {
    auto out = open_out(path);
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace mdfuse
