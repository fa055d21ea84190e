#include "prefcon/cli.hpp"

#include "prefcon/constraint.hpp"
#include "prefcon/dataset.hpp"
#include "prefcon/digest.hpp"
#include "prefcon/experiment.hpp"
#include "prefcon/grounding.hpp"
#include "prefcon/llm_client.hpp"
#include "prefcon/metrics.hpp"
#include "prefcon/prompting.hpp"
#include "prefcon/scheduler.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

namespace prefcon::cli {

namespace {

std::string trim(std::string s)
{
    auto const b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    auto const e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_commas(std::string const & s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

/// flags > environment > config file > default
class Settings
{
public:
    Settings(EnvLookup env, std::map<std::string, std::string> file)
    : env_(std::move(env))
    , file_(std::move(file))
    {}

    [[nodiscard]] std::string get(
        std::string const & flag_value,
        std::string const & env_name,
        std::string const & config_key,
        std::string const & fallback) const
    {
        if (!flag_value.empty()) {
            return flag_value;
        }
        if (!env_name.empty()) {
            if (auto v = env_(env_name); v && !v->empty()) {
                return *v;
            }
        }
        if (auto it = file_.find(config_key); it != file_.end()) {
            return it->second;
        }
        return fallback;
    }

    [[nodiscard]] std::optional<std::string> env(std::string const & name) const { return env_(name); }

private:
    EnvLookup env_;
    std::map<std::string, std::string> file_;
};

struct Options
{
    bool json = false;
    std::string config;

    // shared
    std::string data;
    std::string templates_dir;
    std::string template_id;
    std::uint64_t seed = 0;
    double h_min = 10.0;
    double h_max = 60.0;

    // parse
    std::vector<std::string> texts;
    bool extract = false;

    // prompt
    std::string record;
    std::string shot = "0s";

    // run
    std::string outputs;
    std::string shots = "0s,1s,fs";
    std::string backend;
    std::string fixtures;
    std::string model;
    std::string endpoint;
    std::string timestamp;
    int concurrency = 0;
    int max_attempts = 4;
    double temperature = 0.1;
    int top_k = 20;
    double top_p = 0.9;
    int max_new_tokens = 30;

    // eval
    std::string gold;
    bool corpus_chrf = false;

    // ground / schedule / check-functional
    std::vector<std::string> constraints;
    int slot_minutes = Horizon::default_slot_minutes;
    std::string problem;
    std::vector<std::string> gold_constraints;
    std::vector<std::string> generated_constraints;
};

TemperatureBounds bounds_of(Options const & o) { return TemperatureBounds{o.h_min, o.h_max}; }

std::vector<Constraint> parse_all(std::vector<std::string> const & texts, TemperatureBounds const & b)
{
    std::vector<Constraint> out;
    for (auto const & t : texts) {
        out.push_back(parse_constraint(t, b));
    }
    return out;
}

nlohmann::json constraint_json(Constraint const & c)
{
    TimeWindow const w = window_of(c.condition);
    static constexpr char const * kinds[] = {"all", "range", "from", "until"};
    nlohmann::json j{
        {"canonical", render_constraint(c)},
        {"variable", c.variable == Variable::State ? "s_t" : "h_t"},
        {"condition", kinds[c.condition.index()]},
        {"window", {TimePoint{w.lo}.to_string(), TimePoint{w.hi}.to_string()}},
    };
    if (auto const * b = std::get_if<Binary>(&c.value)) {
        j["value"] = b->bit;
    } else {
        j["value"] = std::get<Degrees>(c.value).celsius;
    }
    return j;
}

std::string templates_dir_of(Options const & o, Settings const & s)
{
    return s.get(o.templates_dir, "PREFCON_TEMPLATES_DIR", "templates_dir", std::string(PREFCON_DATA_DIR) + "/templates");
}

// ---------------------------------------------------------------------------

int cmd_validate(Options const & o, std::ostream & out)
{
    Dataset const d = load_dataset(o.data, bounds_of(o));
    std::size_t constraints = 0;
    std::size_t spans = 0;
    for (auto const & r : d) {
        constraints += r.constraints.size();
        spans += r.spans.size();
    }
    std::string const digest = sha256_file_hex(o.data);
    if (o.json) {
        out << nlohmann::json{
                   {"valid", true},
                   {"records", d.size()},
                   {"spans", spans},
                   {"constraints", constraints},
                   {"sha256", digest}}
                   .dump(2)
            << '\n';
    } else {
        out << "ok: " << d.size() << " records, " << spans << " spans, " << constraints << " constraints\n"
            << "sha256: " << digest << '\n';
    }
    return exit_ok;
}

int cmd_parse(Options const & o, std::ostream & out)
{
    auto const b = bounds_of(o);
    if (o.extract) {
        nlohmann::json results = nlohmann::json::array();
        for (auto const & text : o.texts) {
            Extraction const ex = extract_constraints(text, b);
            nlohmann::json cs = nlohmann::json::array();
            nlohmann::json is = nlohmann::json::array();
            for (auto const & c : ex.constraints) {
                cs.push_back(constraint_json(c));
                if (!o.json) {
                    out << render_constraint(c) << '\n';
                }
            }
            for (auto const & i : ex.issues) {
                is.push_back({{"kind", to_string(i.kind)}, {"offset", i.offset}, {"message", i.message}});
                if (!o.json) {
                    out << "# " << to_string(i.kind) << " at byte " << i.offset << ": " << i.message << '\n';
                }
            }
            results.push_back({{"input", text}, {"constraints", cs}, {"issues", is}});
        }
        if (o.json) {
            out << nlohmann::json{{"extractions", results}}.dump(2) << '\n';
        }
        return exit_ok;
    }

    nlohmann::json results = nlohmann::json::array();
    for (auto const & text : o.texts) {
        Constraint const c = parse_constraint(text, b);
        if (o.json) {
            results.push_back(constraint_json(c));
        } else {
            out << render_constraint(c) << '\n';
        }
    }
    if (o.json) {
        out << nlohmann::json{{"constraints", results}}.dump(2) << '\n';
    }
    return exit_ok;
}

int cmd_prompt(Options const & o, Settings const & s, std::ostream & out)
{
    Dataset const d = load_dataset(o.data, bounds_of(o));
    auto const templates = TemplateRegistry::load_directory(templates_dir_of(o, s));
    GoldRecord const * target = find_record(d, o.record);
    if (target == nullptr) {
        throw UnknownExample("record '" + o.record + "' not found in " + o.data);
    }
    PromptSpec spec;
    spec.template_id = s.get(o.template_id, "", "template", "it-v1");
    spec.shot = ShotSetting::parse(o.shot);
    spec.example_ids = select_examples(d, target->id, spec.shot.examples(), o.seed);
    spec.target = *target;
    std::string const prompt = build_prompt(spec, d, templates);
    if (o.json) {
        out << nlohmann::json{
                   {"record_id", target->id},
                   {"shot", spec.shot.label()},
                   {"template_id", spec.template_id},
                   {"seed", o.seed},
                   {"example_ids", spec.example_ids},
                   {"prompt_digest", sha256_hex(prompt)},
                   {"prompt", prompt}}
                   .dump(2)
            << '\n';
    } else {
        out << prompt;
    }
    return exit_ok;
}

int cmd_run(Options const & o, Settings const & s, std::ostream & out, std::ostream & err)
{
    auto const b = bounds_of(o);
    Dataset const d = load_dataset(o.data, b);
    auto const templates = TemplateRegistry::load_directory(templates_dir_of(o, s));

    std::vector<ShotSetting> shots;
    for (auto const & label : split_commas(o.shots)) {
        shots.push_back(ShotSetting::parse(label));
    }

    std::string const backend_name = s.get(o.backend, "PREFCON_BACKEND", "backend", "mock");
    std::unique_ptr<Backend> backend;
    if (backend_name == "mock") {
        std::string const fixtures = s.get(o.fixtures, "PREFCON_FIXTURES", "fixtures", "");
        if (fixtures.empty()) {
            throw ConfigError("mock backend needs --fixtures (or PREFCON_FIXTURES / 'fixtures' in the config file)");
        }
        backend = std::make_unique<MockBackend>(MockBackend::from_file(fixtures));
    } else if (backend_name == "openai") {
        RemoteConfig rc;
        rc.base_url = s.get(o.endpoint, "PREFCON_ENDPOINT", "endpoint", rc.base_url);
        rc.api_key = s.get("", "PREFCON_API_KEY", "api_key", "");
        if (rc.api_key.empty()) {
            rc.api_key = s.env("OPENAI_API_KEY").value_or("");
        }
        rc.send_top_k = s.get("", "PREFCON_SEND_TOP_K", "send_top_k", "true") != "false";
        backend = std::make_unique<OpenAiBackend>(rc);
    } else {
        throw ConfigError("unknown backend '" + backend_name + "' (expected mock or openai)");
    }

    DecodingConfig decoding{o.temperature, o.top_k, o.top_p, o.max_new_tokens};
    std::string const model = s.get(o.model, "PREFCON_MODEL", "model", backend_name == "mock" ? "mock" : "");
    if (model.empty()) {
        throw ConfigError("no model id given (--model, PREFCON_MODEL or 'model' in the config file)");
    }
    RunManifest const manifest = make_manifest(
        o.data,
        s.get(o.template_id, "", "template", "it-v1"),
        shots,
        model,
        backend_name,
        decoding,
        o.seed,
        o.timestamp.empty() ? utc_timestamp_now() : o.timestamp);

    RunOptions ro;
    ro.concurrency = o.concurrency > 0 ? o.concurrency : std::stoi(s.get("", "PREFCON_CONCURRENCY", "concurrency", "4"));
    ro.retry.max_attempts = o.max_attempts;
    RunSummary const summary = run_experiment(manifest, d, templates, *backend, o.outputs, ro);

    if (o.json) {
        nlohmann::json failures = nlohmann::json::array();
        for (auto const & f : summary.failures) {
            failures.push_back({{"record_id", f.record_id}, {"shot", f.shot}, {"type", f.error_type}, {"message", f.message}});
        }
        out << nlohmann::json{
                   {"outputs", o.outputs},
                   {"manifest", manifest_path_for(o.outputs).string()},
                   {"completed", summary.completed},
                   {"skipped", summary.skipped},
                   {"failed", summary.failures.size()},
                   {"failures", failures}}
                   .dump(2)
            << '\n';
    } else {
        out << "completed " << summary.completed << ", skipped " << summary.skipped << ", failed "
            << summary.failures.size() << '\n';
        for (auto const & f : summary.failures) {
            err << "failed " << f.record_id << " [" << f.shot << "]: " << f.error_type << ": " << f.message << '\n';
        }
    }
    return summary.failures.empty() ? exit_ok : exit_domain_error;
}

int cmd_eval(Options const & o, std::ostream & out)
{
    auto const b = bounds_of(o);
    Dataset const gold = load_dataset(o.gold, b);
    auto const outputs = read_outputs(o.outputs);
    EvalOptions eo;
    eo.corpus_chrf = o.corpus_chrf;
    eo.bounds = b;
    auto const reports = evaluate_run(outputs, gold, eo);
    if (o.json) {
        out << reports_to_json(reports).dump(2) << '\n';
    } else {
        out << render_table(reports);
    }
    return exit_ok;
}

int cmd_ground(Options const & o, std::ostream & out)
{
    auto const b = bounds_of(o);
    auto const constraints = parse_all(o.constraints, b);
    Horizon const h(o.slot_minutes);
    GroundedAssignment const g = ground(constraints, h);
    if (o.json) {
        out << to_json(g).dump() << '\n';
        return exit_ok;
    }
    for (int slot = 0; slot < h.num_slots(); ++slot) {
        auto const i = static_cast<std::size_t>(slot);
        if (!g.state[i] && !g.temperature[i]) {
            continue;
        }
        out << "slot " << slot << ' ' << TimePoint{h.slot_start(slot)}.to_string() << '-'
            << TimePoint{h.slot_end(slot)}.to_string();
        if (g.state[i]) {
            out << " s_t=" << *g.state[i];
        }
        if (g.temperature[i]) {
            out << " h_t=" << *g.temperature[i];
        }
        out << '\n';
    }
    return exit_ok;
}

ScheduleProblem load_problem(Options const & o)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(o.problem));
    } catch (nlohmann::json::parse_error const & e) {
        throw InvalidProblem(o.problem + ": " + e.what());
    }
    return problem_from_json(j, bounds_of(o));
}

int cmd_schedule(Options const & o, std::ostream & out)
{
    ScheduleProblem p = load_problem(o);
    if (!o.constraints.empty()) {
        p.forced = merge(p.forced, ground(parse_all(o.constraints, bounds_of(o)), p.horizon));
    }
    Schedule const s = solve(p);
    if (o.json) {
        out << to_json(s).dump(2) << '\n';
    } else {
        out << render_timeline(p, s);
    }
    return exit_ok;
}

int cmd_check_functional(Options const & o, std::ostream & out)
{
    auto const b = bounds_of(o);
    ScheduleProblem const p = load_problem(o);
    auto const gold = parse_all(o.gold_constraints, b);
    auto const generated = parse_all(o.generated_constraints, b);
    FunctionalResult const r = check_functional(gold, generated, p);
    if (o.json) {
        nlohmann::json j{{"passed", r.passed}, {"reason", r.reason}};
        j["schedule"] = r.schedule ? to_json(*r.schedule) : nlohmann::json(nullptr);
        out << j.dump(2) << '\n';
    } else {
        out << (r.passed ? "PASS" : "FAIL");
        if (!r.reason.empty()) {
            out << ": " << r.reason;
        }
        out << '\n';
    }
    return exit_ok;
}

void add_common(CLI::App * sub, Options & o)
{
    sub->add_flag("--json", o.json, "Machine-readable JSON on stdout");
    sub->add_option("--h-min", o.h_min, "Lowest admissible temperature (°C)")->capture_default_str();
    sub->add_option("--h-max", o.h_max, "Highest admissible temperature (°C)")->capture_default_str();
}

} // namespace

EnvLookup process_environment()
{
    return [](std::string const & name) -> std::optional<std::string> {
        char const * v = std::getenv(name.c_str());
        return v == nullptr ? std::nullopt : std::optional<std::string>(v);
    };
}

std::map<std::string, std::string> read_config_file(std::string const & path)
{
    std::map<std::string, std::string> out;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        auto const eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + " line " + std::to_string(line_no) + ": expected key = value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

int run(std::vector<std::string> args, std::ostream & out, std::ostream & err, EnvLookup const & env)
{
    CLI::App app{"Turn natural-language appliance preferences into formal scheduling constraints, "
                 "run prompted model experiments and score them."};
    app.name(args.empty() ? "prefcon" : args.front());
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    Options o;
    app.add_option("--config", o.config, "key = value config file (also PREFCON_CONFIG)");

    auto * validate = app.add_subcommand("validate-data", "Load and validate a JSONL gold corpus");
    validate->add_option("--data", o.data, "Corpus JSONL")->required();
    add_common(validate, o);

    auto * parse = app.add_subcommand("parse", "Parse and canonicalize constraints");
    parse->add_option("text", o.texts, "Constraint text(s)")->required();
    parse->add_flag("--extract", o.extract, "Lenient scan of free text (model output) instead of a strict parse");
    add_common(parse, o);

    auto * prompt = app.add_subcommand("prompt", "Build the prompt for one record");
    prompt->add_option("--data", o.data, "Corpus JSONL")->required();
    prompt->add_option("--record", o.record, "Target record id")->required();
    prompt->add_option("--shot", o.shot, "0s, 1s, fs or fs<k>")->capture_default_str();
    prompt->add_option("--seed", o.seed, "Example selection seed")->capture_default_str();
    prompt->add_option("--template", o.template_id, "Template id (default it-v1)");
    prompt->add_option("--templates-dir", o.templates_dir, "Directory of .tmpl files");
    add_common(prompt, o);

    auto * runc = app.add_subcommand("run", "Query a backend for every record and shot setting");
    runc->add_option("--data", o.data, "Corpus JSONL")->required();
    runc->add_option("--outputs", o.outputs, "Outputs JSONL (appended, resumable)")->required();
    runc->add_option("--shots", o.shots, "Comma-separated shot settings")->capture_default_str();
    runc->add_option("--backend", o.backend, "mock or openai (PREFCON_BACKEND)");
    runc->add_option("--fixtures", o.fixtures, "Mock fixture file (PREFCON_FIXTURES)");
    runc->add_option("--model", o.model, "Model id (PREFCON_MODEL)");
    runc->add_option("--endpoint", o.endpoint, "OpenAI-compatible base URL (PREFCON_ENDPOINT)");
    runc->add_option("--seed", o.seed, "Example selection seed")->capture_default_str();
    runc->add_option("--template", o.template_id, "Template id (default it-v1)");
    runc->add_option("--templates-dir", o.templates_dir, "Directory of .tmpl files");
    runc->add_option("--concurrency", o.concurrency, "In-flight requests (default 4)");
    runc->add_option("--max-attempts", o.max_attempts, "Attempts per request incl. retries")->capture_default_str();
    runc->add_option("--temperature", o.temperature, "Sampling temperature")->capture_default_str();
    runc->add_option("--top-k", o.top_k, "Top-k")->capture_default_str();
    runc->add_option("--top-p", o.top_p, "Top-p")->capture_default_str();
    runc->add_option("--max-new-tokens", o.max_new_tokens, "Generation cap")->capture_default_str();
    runc->add_option("--timestamp", o.timestamp, "Manifest timestamp (default: now, UTC)");
    add_common(runc, o);

    auto * eval = app.add_subcommand("eval", "Score an outputs file against the gold corpus");
    eval->add_option("--outputs", o.outputs, "Outputs JSONL")->required();
    eval->add_option("--gold", o.gold, "Gold corpus JSONL")->required();
    eval->add_flag("--corpus-chrf", o.corpus_chrf, "Pool n-gram statistics instead of averaging sentence scores");
    add_common(eval, o);

    auto * groundc = app.add_subcommand("ground", "Expand constraints over a slotted day");
    groundc->add_option("constraint", o.constraints, "Constraint text(s)")->required();
    groundc->add_option("--slot-minutes", o.slot_minutes, "1, 5, 15, 30 or 60")->capture_default_str();
    add_common(groundc, o);

    auto * schedule = app.add_subcommand("schedule", "Solve a self-consumption scheduling problem");
    schedule->add_option("--problem", o.problem, "Problem JSON")->required();
    schedule->add_option("--constraint", o.constraints, "Extra constraint(s) to ground into the forced slots");
    add_common(schedule, o);

    auto * check = app.add_subcommand("check-functional", "Check generated constraints against gold via the scheduler");
    check->add_option("--problem", o.problem, "Problem JSON")->required();
    check->add_option("--gold", o.gold_constraints, "Gold constraint (repeatable)");
    check->add_option("--generated", o.generated_constraints, "Generated constraint (repeatable)");
    add_common(check, o);

    std::vector<char const *> argv;
    for (auto const & a : args) {
        argv.push_back(a.c_str());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (CLI::CallForHelp const &) {
        CLI::App const * target = &app;
        for (auto const * sub : app.get_subcommands()) {
            target = sub;
        }
        out << target->help();
        return exit_ok;
    } catch (CLI::CallForAllHelp const &) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (CLI::ParseError const & e) {
        CLI::App const * target = &app;
        for (auto const * sub : app.get_subcommands()) {
            target = sub;
        }
        err << "usage error: " << e.what() << "\n\n" << target->help();
        return exit_usage_error;
    }

    try {
        std::string config_path = o.config;
        if (config_path.empty()) {
            config_path = env("PREFCON_CONFIG").value_or("");
        }
        Settings const settings(env, config_path.empty() ? std::map<std::string, std::string>{} : read_config_file(config_path));

        if (*validate) {
            return cmd_validate(o, out);
        }
        if (*parse) {
            return cmd_parse(o, out);
        }
        if (*prompt) {
            return cmd_prompt(o, settings, out);
        }
        if (*runc) {
            return cmd_run(o, settings, out, err);
        }
        if (*eval) {
            return cmd_eval(o, out);
        }
        if (*groundc) {
            return cmd_ground(o, out);
        }
        if (*schedule) {
            return cmd_schedule(o, out);
        }
        if (*check) {
            return cmd_check_functional(o, out);
        }
    } catch (Error const & e) {
        if (o.json) {
            out << nlohmann::json{{"error", {{"type", e.type()}, {"message", e.what()}}}}.dump(2) << '\n';
        }
        err << "error: " << e.type() << ": " << e.what() << '\n';
        return exit_domain_error;
    } catch (std::exception const & e) {
        if (o.json) {
            out << nlohmann::json{{"error", {{"type", "Error"}, {"message", e.what()}}}}.dump(2) << '\n';
        }
        err << "error: " << e.what() << '\n';
        return exit_domain_error;
    }
    return exit_usage_error;
}

} // namespace prefcon::cli
