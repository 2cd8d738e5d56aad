#pragma once

#include "dfal/al_loop.hpp"
#include "dfal/contraction.hpp"
#include "dfal/data.hpp"
#include "dfal/eval.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfal {

using Json = nlohmann::json;

inline constexpr const char* artifact_version = "0.3.0";

/// Invalid configuration; `what()` starts with the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DatasetSpec {
    std::string kind = "blobs"; // "blobs" or "csv"
    std::string name = "blobs";
    // blobs
    Index n_samples = 1200;
    int n_classes = 4;
    Index n_features = 10;
    double spread = 1.0;
    std::uint64_t seed = 0;
    // csv
    std::string path;
    std::string label_column = "label";
};

struct GeometrySpec {
    Index initial_size = 10;
    std::vector<Index> batch_sizes{10, 20, 40};
    std::vector<Method> methods{Method::grad, Method::entropy, Method::badge};
    std::vector<Index> hidden_widths{128};
    std::uint64_t seed = 0;
};

struct ShiftSpec {
    double shift_sigma = 5.0;
    Index eval_size = 200;
    Index shifted_size = 200;
};

struct ContractionSpec {
    ContractionConfig base;
    std::vector<std::uint64_t> seeds{0};
};

struct TimingSpec {
    Index pool_size = 25000;
    Index batch_size = 500;
    Index initial_size = 500;
    int rounds = 5;
    int epochs = 5;
    std::vector<Method> methods{Method::entropy, Method::grad, Method::badge, Method::kcenter};
    std::uint64_t seed = 0;
};

/// One declarative file describing every command's inputs.
struct RunConfig {
    std::string name = "experiment";
    DatasetSpec dataset;
    ExperimentConfig experiment; // method is filled per run from `methods`
    std::vector<Method> methods{Method::grad, Method::random};
    std::string out_dir = "results";
    GeometrySpec geometry;
    ShiftSpec shift;
    ContractionSpec contraction;
    TimingSpec timing;

    /// Learning rate for single-model commands: the configured rate, or
    /// 0.01 when the run config asks for a sweep.
    double fixed_learning_rate() const;
};

RunConfig parse_config(const Json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved config (defaults applied) with sorted keys.
Json to_json(const RunConfig& cfg);

/// 16 hex digits of FNV-1a over the canonical JSON of `doc`.
std::string fingerprint(const Json& doc);
std::string config_fingerprint(const RunConfig& cfg);

Dataset build_dataset(const DatasetSpec& spec);

// ---------------------------------------------------------------------------
// Result serialization
// ---------------------------------------------------------------------------

Json to_json(const AcquisitionBatch& batch);
Json to_json(const RoundRecord& record);
Json to_json(const ExperimentResult& result);
ExperimentResult experiment_result_from_json(const std::string& method, const Json& doc);

Json to_json(const PenaltyMatrix& ppm);
Json to_json(const ContractionReport& report);

/// Writes `text` to `path`, creating parent directories.
void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);

/// Square CSV with method names as header row and first column.
std::string ppm_csv(const PenaltyMatrix& ppm, const std::string& fingerprint);

std::string iso_timestamp();

} // namespace dfal
