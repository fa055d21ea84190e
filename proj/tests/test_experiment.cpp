#include "prefcon/experiment.hpp"

#include "prefcon/digest.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <mutex>

using namespace prefcon;

namespace {

std::vector<ShotSetting> const all_shots{ShotSetting::zero(), ShotSetting::one(), ShotSetting::few()};

struct Experiment : ::testing::Test
{
    Dataset dataset = load_dataset(test::corpus_path());
    TemplateRegistry templates = TemplateRegistry::load_directory(test::templates_dir());
    MockBackend mock = MockBackend::from_file(test::fixtures_path());
    RunOptions options = quiet();

    static RunOptions quiet()
    {
        RunOptions o;
        o.sleeper = [](std::chrono::milliseconds) {};
        return o;
    }

    RunManifest manifest(std::filesystem::path const & data = test::corpus_path(), std::string model = "mock-llm")
    {
        return make_manifest(data, "it-v1", all_shots, std::move(model), "mock", DecodingConfig{}, 0, "2024-01-01T00:00:00Z");
    }
};

std::size_t line_count(std::filesystem::path const & p)
{
    std::ifstream in(p);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++n;
    }
    return n;
}

/// Fails every prompt whose target is one of the given records.
class Selective : public Backend
{
public:
    Selective(Backend & inner, std::set<std::string> bad_texts)
    : inner_(inner)
    , bad_(std::move(bad_texts))
    {}
    ModelResponse complete(CompletionRequest const & request) override
    {
        for (auto const & b : bad_) {
            if (request.prompt.ends_with(b)) {
                throw AuthError("denied");
            }
        }
        return inner_.complete(request);
    }
    std::string name() const override { return "selective"; }

private:
    Backend & inner_;
    std::set<std::string> bad_;
};

} // namespace

TEST_F(Experiment, MockRunProduces78Lines)
{
    auto const dir = test::scratch_dir("exp-78");
    RunSummary const s = run_experiment(manifest(), dataset, templates, mock, dir / "out.jsonl", options);
    EXPECT_EQ(s.completed, 78U);
    EXPECT_EQ(s.skipped, 0U);
    EXPECT_TRUE(s.failures.empty());
    EXPECT_EQ(line_count(dir / "out.jsonl"), 78U);

    auto const rows = read_outputs(dir / "out.jsonl");
    for (auto const & r : rows) {
        EXPECT_NE(find_record(dataset, r.record_id), nullptr);
        EXPECT_EQ(r.model_id, "mock-llm");
    }
    EXPECT_EQ(rows[0].record_id, "u01");
    EXPECT_EQ(rows[0].shot, "0s");
    EXPECT_EQ(rows[2].shot, "fs");
    EXPECT_EQ(rows[3].record_id, "u02");

    auto const m = manifest_from_json(nlohmann::json::parse(read_file(manifest_path_for(dir / "out.jsonl"))));
    EXPECT_EQ(m.dataset_sha256, sha256_file_hex(test::corpus_path()));
    EXPECT_EQ(m.shots, all_shots);
    EXPECT_EQ(m.decoding, DecodingConfig{});
}

TEST_F(Experiment, RerunIsNoOp)
{
    auto const dir = test::scratch_dir("exp-rerun");
    (void)run_experiment(manifest(), dataset, templates, mock, dir / "out.jsonl", options);
    std::string const before = read_file(dir / "out.jsonl");
    RunSummary const again = run_experiment(manifest(), dataset, templates, mock, dir / "out.jsonl", options);
    EXPECT_EQ(again.completed, 0U);
    EXPECT_EQ(again.skipped, 78U);
    EXPECT_EQ(read_file(dir / "out.jsonl"), before);
}

TEST_F(Experiment, ResumesPartialRun)
{
    auto const dir = test::scratch_dir("exp-resume");
    RunManifest first = manifest();
    first.shots = {ShotSetting::zero()};
    EXPECT_EQ(run_experiment(first, dataset, templates, mock, dir / "out.jsonl", options).completed, 26U);
    RunSummary const rest = run_experiment(manifest(), dataset, templates, mock, dir / "out.jsonl", options);
    EXPECT_EQ(rest.completed, 52U);
    EXPECT_EQ(rest.skipped, 26U);
    EXPECT_EQ(line_count(dir / "out.jsonl"), 78U);
    EXPECT_THROW(
        (void)run_experiment(manifest(test::corpus_path(), "other"), dataset, templates, mock, dir / "out.jsonl", options),
        ManifestMismatch);
}

TEST_F(Experiment, OutputIsIndependentOfConcurrency)
{
    auto const dir = test::scratch_dir("exp-conc");
    RunOptions one = options;
    one.concurrency = 1;
    RunOptions many = options;
    many.concurrency = 16;
    (void)run_experiment(manifest(), dataset, templates, mock, dir / "a.jsonl", one);
    (void)run_experiment(manifest(), dataset, templates, mock, dir / "b.jsonl", many);
    EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
}

TEST_F(Experiment, EmptyDataset)
{
    auto const dir = test::scratch_dir("exp-empty");
    std::ofstream(dir / "empty.jsonl").close();
    Dataset const empty;
    RunSummary const s = run_experiment(manifest(dir / "empty.jsonl"), empty, templates, mock, dir / "out.jsonl", options);
    EXPECT_EQ(s.completed, 0U);
    EXPECT_TRUE(read_outputs(dir / "out.jsonl").empty());
    EXPECT_TRUE(std::filesystem::exists(dir / "out.jsonl"));
    auto const m = manifest_from_json(nlohmann::json::parse(read_file(manifest_path_for(dir / "out.jsonl"))));
    EXPECT_EQ(m.dataset_sha256, sha256_hex(""));
}

TEST_F(Experiment, FailuresAreIsolated)
{
    auto const dir = test::scratch_dir("exp-fail");
    std::set<std::string> bad;
    for (auto const * id : {"u03", "u19"}) {
        bad.insert(tag_utterance(*find_record(dataset, id)) + "\nVincoli:\n");
    }
    Selective backend(mock, bad);
    RunSummary const s = run_experiment(manifest(), dataset, templates, backend, dir / "out.jsonl", options);
    EXPECT_EQ(s.failures.size(), 6U);
    EXPECT_EQ(s.completed, 72U);
    EXPECT_EQ(line_count(dir / "out.jsonl"), 78U - s.failures.size());
    for (auto const & f : s.failures) {
        EXPECT_TRUE(f.record_id == "u03" || f.record_id == "u19");
        EXPECT_EQ(f.error_type, "AuthError");
    }
    // a later run fills the gaps
    RunSummary const fill = run_experiment(manifest(), dataset, templates, mock, dir / "out.jsonl", options);
    EXPECT_EQ(fill.completed, 6U);
    EXPECT_EQ(line_count(dir / "out.jsonl"), 78U);
}

TEST_F(Experiment, MockMissIsAFailureNotACrash)
{
    auto const dir = test::scratch_dir("exp-miss");
    MockBackend empty(std::map<std::string, std::string>{});
    RunSummary const s = run_experiment(manifest(), dataset, templates, empty, dir / "out.jsonl", options);
    EXPECT_EQ(s.failures.size(), 78U);
    EXPECT_EQ(s.failures[0].error_type, "MockMiss");
}

TEST_F(Experiment, DatasetHashIsChecked)
{
    auto const dir = test::scratch_dir("exp-hash");
    RunManifest m = manifest();
    m.dataset_sha256 = std::string(64, '0');
    EXPECT_THROW((void)run_experiment(m, dataset, templates, mock, dir / "out.jsonl", options), ManifestMismatch);
}

TEST(Outputs, CorruptLinesReportLineNumber)
{
    auto const dir = test::scratch_dir("outputs-corrupt");
    OutputRecord const r{"u01", "0s", "m", "abc", "s_t = 1 ∀ t"};
    std::ofstream(dir / "o.jsonl") << to_json(r).dump() << "\n{\"record_id\":\"u02\"}\n";
    try {
        (void)read_outputs(dir / "o.jsonl");
        FAIL();
    } catch (CorruptOutputs const & e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
    EXPECT_TRUE(read_outputs(dir / "missing.jsonl").empty());
}

TEST(Manifest, JsonRoundTrip)
{
    RunManifest m;
    m.dataset_path = "data/x.jsonl";
    m.dataset_sha256 = "ff";
    m.template_id = "en-v1";
    m.shots = {ShotSetting::zero(), ShotSetting::few(3)};
    m.model_id = "m";
    m.backend = "openai";
    m.seed = 99;
    m.timestamp = "2024-05-01T10:00:00Z";
    RunManifest const back = manifest_from_json(to_json(m));
    EXPECT_EQ(to_json(back), to_json(m));
    EXPECT_EQ(back.shots, m.shots);
}
