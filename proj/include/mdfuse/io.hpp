#ifndef MDFUSE_IO_HPP
#define MDFUSE_IO_HPP

#include "mdfuse/types.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace mdfuse {

using Json = nlohmann::ordered_json;

/// Raised on malformed input files (JSON syntax, missing fields, bad CSV rows).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DatasetKind { global, timeseries };

using AnyDataset = std::variant<GlobalDataset, TimeSeriesDataset>;

// Dataset JSON: {kind, D, P, K, instances:[{id, features, annotations:[{annotator, values}]}]}.
// Every loader validates before returning.
GlobalDataset global_dataset_from_json(const Json& doc);
TimeSeriesDataset timeseries_dataset_from_json(const Json& doc);
Json to_json(const GlobalDataset& ds);
Json to_json(const TimeSeriesDataset& ds);

AnyDataset load_dataset(const std::filesystem::path& path, DatasetKind kind);
GlobalDataset load_global_dataset(const std::filesystem::path& path);
TimeSeriesDataset load_timeseries_dataset(const std::filesystem::path& path);

/// Long-format CSV ingestion. Annotations: `instance,annotator,frame,dim,value`;
/// features: `instance,frame,feature,value`. Both files carry a header row.
/// Global data uses frame 0 throughout. Instances are ordered by first
/// appearance in the features file.
AnyDataset load_dataset_csv(const std::filesystem::path& annotations_csv,
                            const std::filesystem::path& features_csv, DatasetKind kind);

void save_dataset(const GlobalDataset& ds, const std::filesystem::path& path);
void save_dataset(const TimeSeriesDataset& ds, const std::filesystem::path& path);

// Estimates: JSON {kind, instances:[{id, mean, cov?}]}, CSV `instance,frame,dim,value`.
Json estimates_to_json(const std::vector<PosteriorEstimate>& estimates);
std::vector<PosteriorEstimate> estimates_from_json(const Json& doc);
void save_estimates(const std::vector<PosteriorEstimate>& estimates,
                    const std::filesystem::path& path);
void save_estimates_csv(const std::vector<PosteriorEstimate>& estimates,
                        const std::filesystem::path& path);
std::vector<PosteriorEstimate> load_estimates(const std::filesystem::path& path);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
/// Writes `doc` with a trailing newline. Doubles use the shortest
/// representation that parses back to the same bits.
void write_json(const Json& doc, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace mdfuse

#endif  // MDFUSE_IO_HPP
