#ifndef MDFUSE_CLI_HPP
#define MDFUSE_CLI_HPP

#include "mdfuse/global_model.hpp"
#include "mdfuse/io.hpp"
#include "mdfuse/timeseries_model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mdfuse {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Diagnostics go to `err`, progress to `out`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a digest of the bytes, as 16 hex digits.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::filesystem::path& path);

Json params_to_json(const GlobalModelParams& params);
Json params_to_json(const TimeSeriesModelParams& params);
Json config_to_json(const GlobalFitConfig& config);
Json config_to_json(const TimeSeriesFitConfig& config);

}  // namespace mdfuse

#endif  // MDFUSE_CLI_HPP
