#include "prefcon/experiment.hpp"

#include "prefcon/digest.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <variant>

namespace prefcon {

RunManifest make_manifest(
    std::filesystem::path const & dataset_path,
    std::string template_id,
    std::vector<ShotSetting> shots,
    std::string model_id,
    std::string backend,
    DecodingConfig decoding,
    std::uint64_t seed,
    std::string timestamp)
{
    decoding.validate();
    RunManifest m;
    m.dataset_path = dataset_path;
    m.dataset_sha256 = sha256_file_hex(dataset_path);
    m.template_id = std::move(template_id);
    m.shots = std::move(shots);
    m.model_id = std::move(model_id);
    m.backend = std::move(backend);
    m.decoding = decoding;
    m.seed = seed;
    m.timestamp = std::move(timestamp);
    return m;
}

nlohmann::json to_json(RunManifest const & m)
{
    nlohmann::json shots = nlohmann::json::array();
    for (auto const & s : m.shots) {
        shots.push_back(s.label());
    }
    return nlohmann::json{
        {"dataset", {{"path", m.dataset_path.generic_string()}, {"sha256", m.dataset_sha256}}},
        {"template_id", m.template_id},
        {"shots", shots},
        {"model_id", m.model_id},
        {"backend", m.backend},
        {"decoding", to_json(m.decoding)},
        {"seed", m.seed},
        {"timestamp", m.timestamp},
    };
}

RunManifest manifest_from_json(nlohmann::json const & j)
{
    try {
        RunManifest m;
        m.dataset_path = j.at("dataset").at("path").get<std::string>();
        m.dataset_sha256 = j.at("dataset").at("sha256").get<std::string>();
        m.template_id = j.at("template_id").get<std::string>();
        for (auto const & s : j.at("shots")) {
            m.shots.push_back(ShotSetting::parse(s.get<std::string>()));
        }
        m.model_id = j.at("model_id").get<std::string>();
        m.backend = j.value("backend", std::string{});
        m.decoding = decoding_from_json(j.at("decoding"));
        m.seed = j.at("seed").get<std::uint64_t>();
        m.timestamp = j.value("timestamp", std::string{});
        return m;
    } catch (nlohmann::json::exception const & e) {
        throw SchemaError(std::string("run manifest: ") + e.what());
    }
}

std::string utc_timestamp_now()
{
    std::time_t const now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json to_json(OutputRecord const & r)
{
    return nlohmann::json{
        {"record_id", r.record_id},
        {"shot", r.shot},
        {"model_id", r.model_id},
        {"prompt_digest", r.prompt_digest},
        {"response_text", r.response_text},
    };
}

std::vector<OutputRecord> read_outputs(std::filesystem::path const & path)
{
    std::vector<OutputRecord> out;
    if (!std::filesystem::exists(path)) {
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            auto const j = nlohmann::json::parse(line);
            OutputRecord r;
            r.record_id = j.at("record_id").get<std::string>();
            r.shot = j.at("shot").get<std::string>();
            r.model_id = j.at("model_id").get<std::string>();
            r.prompt_digest = j.at("prompt_digest").get<std::string>();
            r.response_text = j.at("response_text").get<std::string>();
            out.push_back(std::move(r));
        } catch (nlohmann::json::exception const & e) {
            throw CorruptOutputs(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::filesystem::path manifest_path_for(std::filesystem::path const & outputs)
{
    return std::filesystem::path(outputs.string() + ".manifest.json");
}

namespace {

struct Task
{
    GoldRecord const * record;
    ShotSetting shot;
};

using TaskResult = std::variant<OutputRecord, ItemFailure>;

TaskResult run_task(
    Task const & task,
    RunManifest const & manifest,
    Dataset const & dataset,
    TemplateRegistry const & templates,
    Backend & backend,
    RunOptions const & options)
{
    std::string const shot = task.shot.label();
    try {
        PromptSpec spec;
        spec.template_id = manifest.template_id;
        spec.shot = task.shot;
        spec.example_ids = select_examples(dataset, task.record->id, task.shot.examples(), manifest.seed);
        spec.target = *task.record;
        CompletionRequest req;
        req.prompt = build_prompt(spec, dataset, templates);
        req.model_id = manifest.model_id;
        req.decoding = manifest.decoding;
        ModelResponse const resp = complete(backend, req, options.retry, options.sleeper);
        return OutputRecord{task.record->id, shot, manifest.model_id, sha256_hex(req.prompt), resp.text};
    } catch (Error const & e) {
        return ItemFailure{task.record->id, shot, e.type(), e.what()};
    } catch (std::exception const & e) {
        return ItemFailure{task.record->id, shot, "Error", e.what()};
    }
}

void check_resumable(RunManifest const & previous, RunManifest const & current)
{
    auto mismatch = [](std::string const & field, std::string const & was, std::string const & now) {
        throw ManifestMismatch("cannot resume: " + field + " was '" + was + "', now '" + now + "'");
    };
    if (previous.dataset_sha256 != current.dataset_sha256) {
        mismatch("dataset sha256", previous.dataset_sha256, current.dataset_sha256);
    }
    if (previous.template_id != current.template_id) {
        mismatch("template", previous.template_id, current.template_id);
    }
    if (previous.model_id != current.model_id) {
        mismatch("model", previous.model_id, current.model_id);
    }
    if (previous.backend != current.backend) {
        mismatch("backend", previous.backend, current.backend);
    }
    if (previous.seed != current.seed) {
        mismatch("seed", std::to_string(previous.seed), std::to_string(current.seed));
    }
    if (to_json(previous.decoding) != to_json(current.decoding)) {
        mismatch("decoding", to_json(previous.decoding).dump(), to_json(current.decoding).dump());
    }
}

} // namespace

RunSummary run_experiment(
    RunManifest const & manifest,
    Dataset const & dataset,
    TemplateRegistry const & templates,
    Backend & backend,
    std::filesystem::path const & outputs_path,
    RunOptions const & options)
{
    std::string const actual_hash = sha256_file_hex(manifest.dataset_path);
    if (actual_hash != manifest.dataset_sha256) {
        throw ManifestMismatch(
            "dataset " + manifest.dataset_path.string() + " hashes to " + actual_hash + ", manifest records "
            + manifest.dataset_sha256);
    }
    manifest.decoding.validate();
    (void)templates.get(manifest.template_id);

    std::set<std::pair<std::string, std::string>> done;
    for (auto const & r : read_outputs(outputs_path)) {
        done.emplace(r.record_id, r.shot);
    }

    RunSummary summary;
    std::vector<Task> tasks;
    for (auto const & record : dataset) {
        for (auto const & shot : manifest.shots) {
            if (done.count({record.id, shot.label()}) != 0) {
                ++summary.skipped;
            } else {
                tasks.push_back(Task{&record, shot});
            }
        }
    }

    RunManifest written = manifest;
    if (!done.empty() && std::filesystem::exists(manifest_path_for(outputs_path))) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(manifest_path_for(outputs_path)));
        } catch (nlohmann::json::parse_error const & e) {
            throw CorruptOutputs(manifest_path_for(outputs_path).string() + ": " + e.what());
        }
        RunManifest const previous = manifest_from_json(j);
        check_resumable(previous, manifest);
        written.timestamp = previous.timestamp;
        written.shots = previous.shots;
        for (auto const & shot : manifest.shots) {
            if (std::find(written.shots.begin(), written.shots.end(), shot) == written.shots.end()) {
                written.shots.push_back(shot);
            }
        }
    }
    {
        std::ofstream mf(manifest_path_for(outputs_path), std::ios::binary | std::ios::trunc);
        if (!mf) {
            throw IoError("cannot write manifest next to " + outputs_path.string());
        }
        mf << to_json(written).dump(2) << '\n';
    }

    std::ofstream out(outputs_path, std::ios::binary | std::ios::app);
    if (!out) {
        throw IoError("cannot open " + outputs_path.string() + " for appending");
    }

    std::vector<std::optional<TaskResult>> results(tasks.size());
    std::mutex mutex;
    std::condition_variable ready;
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            std::size_t const i = next.fetch_add(1);
            if (i >= tasks.size()) {
                return;
            }
            TaskResult r = run_task(tasks[i], manifest, dataset, templates, backend, options);
            {
                std::lock_guard lock(mutex);
                results[i] = std::move(r);
            }
            ready.notify_one();
        }
    };

    std::size_t const n_workers =
        std::min<std::size_t>(tasks.size(), static_cast<std::size_t>(std::max(1, options.concurrency)));
    std::vector<std::jthread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) {
        workers.emplace_back(worker);
    }

    // Single writer, in task order.
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        TaskResult r;
        {
            std::unique_lock lock(mutex);
            ready.wait(lock, [&] { return results[i].has_value(); });
            r = std::move(*results[i]);
            results[i].reset();
        }
        if (auto const * rec = std::get_if<OutputRecord>(&r)) {
            out << to_json(*rec).dump() << '\n';
            out.flush();
            ++summary.completed;
        } else {
            summary.failures.push_back(std::get<ItemFailure>(r));
        }
    }
    return summary;
}

} // namespace prefcon
