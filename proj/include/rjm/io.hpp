#pragma once

#include "rjm/simgen.hpp"
#include "rjm/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace rjm::io {

/// Unreadable file or malformed content.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Parses a CSV with header `y,x1,...,xp`. Errors name the offending line.
Dataset read_dataset_csv(const std::filesystem::path& path);

/// Parses a feature CSV for prediction; a leading `y` column is dropped.
Matrix read_features_csv(const std::filesystem::path& path);

/// Headerless numeric CSV.
Matrix read_matrix_csv(const std::filesystem::path& path);

std::string dataset_to_csv(const Dataset& data);

/// %.17g: enough digits for any double to read back exactly.
std::string format_real(double v);

/// JSON text with reals printed by format_real and two-space indentation.
std::string dump(const Json& j);

Json params_to_json(const std::vector<ClusterParams>& params);
std::vector<ClusterParams> params_from_json(const Json& j);

Json fit_to_json(const FitResult& fit, const FitConfig& config);
/// Reads the cluster parameters of a model written by fit_to_json.
std::vector<ClusterParams> model_params(const Json& model);

Json config_to_json(const FitConfig& config);
Json truth_to_json(const sim::SimData& sim, const sim::SimSpec& spec);

std::string labels_csv(const std::vector<int>& labels);
std::string trace_csv(const std::vector<double>& trace);

}  // namespace rjm::io
