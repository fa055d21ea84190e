#ifndef PREFCON_PROMPTING_HPP
#define PREFCON_PROMPTING_HPP

#include "prefcon/dataset.hpp"
#include "prefcon/error.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace prefcon {

PREFCON_DEFINE_ERROR(UnknownTemplate);
PREFCON_DEFINE_ERROR(TemplateError);
PREFCON_DEFINE_ERROR(UnknownExample);
PREFCON_DEFINE_ERROR(LeakageError);
PREFCON_DEFINE_ERROR(InsufficientData);
PREFCON_DEFINE_ERROR(InvalidShotSetting);

/// Number of in-context examples: zero-shot, one-shot or few-shot (2..5).
class ShotSetting
{
public:
    static constexpr int max_few_shot = 5;

    [[nodiscard]] static ShotSetting zero() { return ShotSetting(0); }
    [[nodiscard]] static ShotSetting one() { return ShotSetting(1); }
    /// Throws InvalidShotSetting unless 2 <= k <= 5.
    [[nodiscard]] static ShotSetting few(int k = max_few_shot);

    /// "0s", "1s", "fs" (k = 5) or "fs<k>".
    [[nodiscard]] static ShotSetting parse(std::string_view label);

    [[nodiscard]] int examples() const noexcept { return k_; }
    [[nodiscard]] std::string label() const;

    friend bool operator==(ShotSetting, ShotSetting) = default;
    friend auto operator<=>(ShotSetting, ShotSetting) = default;

private:
    explicit ShotSetting(int k) : k_(k) {}
    int k_;
};

/// The five prompt sections, in emission order.
enum class Section { TaskIntro, TagSemantics, Format, Examples, Input };

/// A parsed prompt template. See docs/templates.md for the file format.
class PromptTemplate
{
public:
    /// Throws TemplateError on missing blocks or unknown placeholders.
    [[nodiscard]] static PromptTemplate parse(std::string id, std::string_view text);

    [[nodiscard]] std::string const & id() const noexcept { return id_; }

    /// First line of each section block; present in every prompt that
    /// includes the section.
    [[nodiscard]] std::string const & marker(Section section) const;

    [[nodiscard]] std::string const & block(std::string const & name) const;

private:
    std::string id_;
    std::map<std::string, std::string> blocks_;
    std::array<std::string, 5> markers_;
};

class TemplateRegistry
{
public:
    /// Loads every "<id>.tmpl" file in dir.
    [[nodiscard]] static TemplateRegistry load_directory(std::filesystem::path const & dir);

    void add(PromptTemplate tmpl);

    /// Throws UnknownTemplate.
    [[nodiscard]] PromptTemplate const & get(std::string const & id) const;

    [[nodiscard]] std::vector<std::string> ids() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

struct PromptSpec
{
    std::string template_id;
    ShotSetting shot = ShotSetting::zero();
    std::vector<std::string> example_ids;
    GoldRecord target;
};

/// Renders the five sections in layout order. The examples section is omitted for zero-shot; the
/// target appears tagged and without constraints.
[[nodiscard]] std::string build_prompt(
    PromptSpec const & spec,
    Dataset const & dataset,
    TemplateRegistry const & templates);

/// Seeded selection of k example ids, never including target_id. The stream
/// is keyed on (seed, target_id) so examples rotate between targets.
[[nodiscard]] std::vector<std::string> select_examples(
    Dataset const & dataset,
    std::string_view target_id,
    int k,
    std::uint64_t seed);

} // namespace prefcon

#endif // PREFCON_PROMPTING_HPP
