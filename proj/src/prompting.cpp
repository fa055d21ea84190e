#include "prefcon/prompting.hpp"

#include "prefcon/digest.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace prefcon {

namespace {

constexpr std::array<std::string_view, 5> section_blocks{"task_intro", "tag_semantics", "format", "examples", "input"};

// Placeholders each block may use.
std::set<std::string, std::less<>> const & allowed_placeholders(std::string_view block)
{
    static std::set<std::string, std::less<>> const layout{"task_intro", "tag_semantics", "format", "examples", "input"};
    static std::set<std::string, std::less<>> const examples{"example_blocks"};
    static std::set<std::string, std::less<>> const example{"utterance", "constraints"};
    static std::set<std::string, std::less<>> const input{"utterance"};
    static std::set<std::string, std::less<>> const none;
    if (block == "layout") {
        return layout;
    }
    if (block == "examples") {
        return examples;
    }
    if (block == "example") {
        return example;
    }
    if (block == "input") {
        return input;
    }
    return none;
}

template <typename Fn>
void for_each_placeholder(std::string_view text, Fn && fn)
{
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string_view::npos) {
        std::size_t const close = text.find("}}", pos + 2);
        if (close == std::string_view::npos) {
            return;
        }
        fn(text.substr(pos + 2, close - pos - 2));
        pos = close + 2;
    }
}

std::string substitute(std::string_view text, std::map<std::string, std::string, std::less<>> const & values)
{
    std::string out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t const open = text.find("{{", pos);
        std::size_t const close = open == std::string_view::npos ? open : text.find("}}", open + 2);
        if (open == std::string_view::npos || close == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        auto const name = text.substr(open + 2, close - open - 2);
        auto it = values.find(name);
        if (it == values.end()) {
            throw TemplateError("no value for placeholder {{" + std::string(name) + "}}");
        }
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

std::string trim_trailing_newlines(std::string s)
{
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) {
        s.pop_back();
    }
    return s;
}

// Expands the layout line by line. A line that is a lone placeholder
// expanding to nothing is dropped together with one following blank line.
std::string expand_layout(std::string_view layout, std::map<std::string, std::string, std::less<>> const & values)
{
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= layout.size()) {
        std::size_t const eol = layout.find('\n', pos);
        lines.push_back(layout.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos));
        if (eol == std::string_view::npos) {
            break;
        }
        pos = eol + 1;
    }
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        auto const line = lines[i];
        if (line.size() > 4 && line.starts_with("{{") && line.ends_with("}}")) {
            auto it = values.find(line.substr(2, line.size() - 4));
            if (it != values.end() && it->second.empty()) {
                if (i + 1 < lines.size() && lines[i + 1].empty()) {
                    ++i;
                }
                continue;
            }
        }
        out += substitute(line, values);
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Uniform integer in [0, n) from raw engine output; independent of the
// standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64 & rng, std::uint64_t n)
{
    std::uint64_t const limit = std::mt19937_64::max() - (std::mt19937_64::max() % n + 1) % n;
    std::uint64_t x = 0;
    do {
        x = rng();
    } while (x > limit);
    return x % n;
}

} // namespace

ShotSetting ShotSetting::few(int k)
{
    if (k < 2 || k > max_few_shot) {
        throw InvalidShotSetting("few-shot needs 2..5 examples, got " + std::to_string(k));
    }
    return ShotSetting(k);
}

ShotSetting ShotSetting::parse(std::string_view label)
{
    if (label == "0s") {
        return zero();
    }
    if (label == "1s") {
        return one();
    }
    if (label == "fs") {
        return few();
    }
    if (label.size() == 3 && label.starts_with("fs") && label[2] >= '0' && label[2] <= '9') {
        return few(label[2] - '0');
    }
    throw InvalidShotSetting("unknown shot setting '" + std::string(label) + "' (expected 0s, 1s, fs or fs<k>)");
}

std::string ShotSetting::label() const
{
    if (k_ == 0) {
        return "0s";
    }
    if (k_ == 1) {
        return "1s";
    }
    return k_ == max_few_shot ? "fs" : "fs" + std::to_string(k_);
}

PromptTemplate PromptTemplate::parse(std::string id, std::string_view text)
{
    PromptTemplate t;
    t.id_ = std::move(id);
    std::string current;
    std::string body;
    bool in_block = false;
    auto flush = [&] {
        if (in_block) {
            if (t.blocks_.count(current) != 0) {
                throw TemplateError(t.id_ + ": duplicate block '" + current + "'");
            }
            t.blocks_[current] = trim_trailing_newlines(body);
        }
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t const eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() : eol + 1;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.starts_with("@@ ")) {
            flush();
            current = std::string(line.substr(3));
            body.clear();
            in_block = true;
            continue;
        }
        if (!in_block) {
            if (!line.empty() && !line.starts_with("#")) {
                throw TemplateError(t.id_ + ": text outside a block: '" + std::string(line) + "'");
            }
            continue;
        }
        body.append(line);
        body.push_back('\n');
    }
    flush();

    std::set<std::string, std::less<>> required{"layout", "example"};
    required.insert(section_blocks.begin(), section_blocks.end());
    for (auto const & name : required) {
        if (t.blocks_.count(name) == 0) {
            throw TemplateError(t.id_ + ": missing block '" + name + "'");
        }
    }
    for (auto const & [name, content] : t.blocks_) {
        if (required.count(name) == 0) {
            throw TemplateError(t.id_ + ": unknown block '" + name + "'");
        }
        auto const & allowed = allowed_placeholders(name);
        for_each_placeholder(content, [&](std::string_view ph) {
            if (allowed.count(ph) == 0) {
                throw TemplateError(t.id_ + ": placeholder {{" + std::string(ph) + "}} not allowed in '" + name + "'");
            }
        });
    }
    for (std::size_t i = 0; i < section_blocks.size(); ++i) {
        auto const & content = t.blocks_.at(std::string(section_blocks[i]));
        auto const first_line = content.substr(0, content.find('\n'));
        if (first_line.empty() || first_line.find("{{") != std::string::npos) {
            throw TemplateError(t.id_ + ": block '" + std::string(section_blocks[i]) + "' must start with a marker line");
        }
        t.markers_[i] = first_line;
    }
    for (std::size_t i = 0; i < section_blocks.size(); ++i) {
        if (t.blocks_.at("layout").find("{{" + std::string(section_blocks[i]) + "}}") == std::string::npos) {
            throw TemplateError(t.id_ + ": layout must reference {{" + std::string(section_blocks[i]) + "}}");
        }
    }
    return t;
}

std::string const & PromptTemplate::marker(Section section) const
{
    return markers_[static_cast<std::size_t>(section)];
}

std::string const & PromptTemplate::block(std::string const & name) const
{
    auto it = blocks_.find(name);
    if (it == blocks_.end()) {
        throw TemplateError(id_ + ": no block '" + name + "'");
    }
    return it->second;
}

TemplateRegistry TemplateRegistry::load_directory(std::filesystem::path const & dir)
{
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("template directory not found: " + dir.string());
    }
    TemplateRegistry reg;
    std::vector<std::filesystem::path> files;
    for (auto const & entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".tmpl") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (auto const & f : files) {
        reg.add(PromptTemplate::parse(f.stem().string(), read_file(f)));
    }
    return reg;
}

void TemplateRegistry::add(PromptTemplate tmpl)
{
    std::string id = tmpl.id();
    templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

PromptTemplate const & TemplateRegistry::get(std::string const & id) const
{
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        std::string known;
        for (auto const & [k, _] : templates_) {
            known += (known.empty() ? "" : ", ") + k;
        }
        throw UnknownTemplate("unknown template '" + id + "' (available: " + known + ")");
    }
    return it->second;
}

std::vector<std::string> TemplateRegistry::ids() const
{
    std::vector<std::string> out;
    for (auto const & [k, _] : templates_) {
        out.push_back(k);
    }
    return out;
}

std::string build_prompt(PromptSpec const & spec, Dataset const & dataset, TemplateRegistry const & templates)
{
    PromptTemplate const & tmpl = templates.get(spec.template_id);
    if (static_cast<int>(spec.example_ids.size()) != spec.shot.examples()) {
        throw InvalidShotSetting(
            "setting " + spec.shot.label() + " needs " + std::to_string(spec.shot.examples()) + " example(s), got "
            + std::to_string(spec.example_ids.size()));
    }
    if (std::find(spec.example_ids.begin(), spec.example_ids.end(), spec.target.id) != spec.example_ids.end()) {
        throw LeakageError("target '" + spec.target.id + "' is among its own in-context examples");
    }

    std::string example_blocks;
    for (auto const & id : spec.example_ids) {
        GoldRecord const * r = find_record(dataset, id);
        if (r == nullptr) {
            throw UnknownExample("example id '" + id + "' not found in dataset");
        }
        std::string constraints;
        for (auto const & c : r->constraints) {
            constraints += (constraints.empty() ? "" : "\n") + render_constraint(c);
        }
        if (!example_blocks.empty()) {
            example_blocks += "\n\n";
        }
        example_blocks += substitute(
            tmpl.block("example"),
            {{"utterance", tag_utterance(*r)}, {"constraints", constraints}});
    }

    std::map<std::string, std::string, std::less<>> sections{
        {"task_intro", tmpl.block("task_intro")},
        {"tag_semantics", tmpl.block("tag_semantics")},
        {"format", tmpl.block("format")},
        {"examples", ""},
        {"input", substitute(tmpl.block("input"), {{"utterance", tag_utterance(spec.target)}})},
    };
    if (!spec.example_ids.empty()) {
        sections["examples"] = substitute(tmpl.block("examples"), {{"example_blocks", example_blocks}});
    }
    return expand_layout(tmpl.block("layout"), sections);
}

std::vector<std::string> select_examples(Dataset const & dataset, std::string_view target_id, int k, std::uint64_t seed)
{
    if (k < 0) {
        throw InvalidShotSetting("negative example count");
    }
    std::vector<std::string> pool;
    for (auto const & r : dataset) {
        if (r.id != target_id) {
            pool.push_back(r.id);
        }
    }
    if (static_cast<std::size_t>(k) > pool.size()) {
        throw InsufficientData(
            "need " + std::to_string(k) + " examples besides '" + std::string(target_id) + "', dataset offers "
            + std::to_string(pool.size()));
    }
    std::mt19937_64 rng(seed ^ fnv1a64(target_id));
    // Partial Fisher-Yates: the first k positions become the selection.
    for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
        std::size_t const j = i + bounded(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

} // namespace prefcon
