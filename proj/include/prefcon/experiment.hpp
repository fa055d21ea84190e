#ifndef PREFCON_EXPERIMENT_HPP
#define PREFCON_EXPERIMENT_HPP

#include "prefcon/dataset.hpp"
#include "prefcon/llm_client.hpp"
#include "prefcon/prompting.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace prefcon {

PREFCON_DEFINE_ERROR(CorruptOutputs);
PREFCON_DEFINE_ERROR(ManifestMismatch);

/// Reproducibility envelope written next to every outputs file.
struct RunManifest
{
    std::filesystem::path dataset_path;
    std::string dataset_sha256;
    std::string template_id;
    std::vector<ShotSetting> shots;
    std::string model_id;
    std::string backend;
    DecodingConfig decoding;
    std::uint64_t seed = 0;
    std::string timestamp; ///< ISO-8601 UTC
};

/// Hashes the dataset file now.
[[nodiscard]] RunManifest make_manifest(
    std::filesystem::path const & dataset_path,
    std::string template_id,
    std::vector<ShotSetting> shots,
    std::string model_id,
    std::string backend,
    DecodingConfig decoding,
    std::uint64_t seed,
    std::string timestamp);

[[nodiscard]] nlohmann::json to_json(RunManifest const & manifest);
[[nodiscard]] RunManifest manifest_from_json(nlohmann::json const & j);

[[nodiscard]] std::string utc_timestamp_now();

/// One line of the outputs JSONL file.
struct OutputRecord
{
    std::string record_id;
    std::string shot;
    std::string model_id;
    std::string prompt_digest;
    std::string response_text;

    friend bool operator==(OutputRecord const &, OutputRecord const &) = default;
};

[[nodiscard]] nlohmann::json to_json(OutputRecord const & record);

/// Reads an outputs file; a missing file is an empty run. Throws
/// CorruptOutputs with the offending line number.
[[nodiscard]] std::vector<OutputRecord> read_outputs(std::filesystem::path const & path);

[[nodiscard]] std::filesystem::path manifest_path_for(std::filesystem::path const & outputs);

struct ItemFailure
{
    std::string record_id;
    std::string shot;
    std::string error_type;
    std::string message;
};

struct RunSummary
{
    std::size_t completed = 0;
    std::size_t skipped = 0;
    std::vector<ItemFailure> failures;
};

struct RunOptions
{
    int concurrency = 4;
    RetryPolicy retry;
    Sleeper sleeper = real_sleeper();
};

/// For every record x shot setting not already in the outputs file: select
/// examples, build the prompt, complete, append one line. Lines are written
/// in dataset x setting order regardless of completion order. A failing item
/// is recorded in the summary and never aborts the run.
RunSummary run_experiment(
    RunManifest const & manifest,
    Dataset const & dataset,
    TemplateRegistry const & templates,
    Backend & backend,
    std::filesystem::path const & outputs_path,
    RunOptions const & options = {});

} // namespace prefcon

#endif // PREFCON_EXPERIMENT_HPP
