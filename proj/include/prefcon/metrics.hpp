#ifndef PREFCON_METRICS_HPP
#define PREFCON_METRICS_HPP

#include "prefcon/dataset.hpp"
#include "prefcon/experiment.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prefcon {

PREFCON_DEFINE_ERROR(EmptyInput);
PREFCON_DEFINE_ERROR(MissingRecord);
PREFCON_DEFINE_ERROR(MissingGold);

/// Clipped character n-gram counts for orders 1..max_n (index 0 is order 1).
struct ChrfStatistics
{
    std::vector<std::size_t> matches;
    std::vector<std::size_t> hypothesis_ngrams;
    std::vector<std::size_t> reference_ngrams;

    ChrfStatistics & operator+=(ChrfStatistics const & other);
};

/// Whitespace is removed and strings are compared as Unicode scalars.
[[nodiscard]] ChrfStatistics chrf_statistics(std::string_view reference, std::string_view hypothesis, int max_n = 6);

/// Precision averages over orders where the hypothesis has n-grams, recall
/// over orders where the reference has n-grams. Returns 0..100.
[[nodiscard]] double chrf_from_statistics(ChrfStatistics const & stats, double beta = 1.0);

/// Sentence-level ChrF_beta in 0..100. Throws EmptyInput if either side is
/// empty once whitespace is removed.
[[nodiscard]] double chrf(std::string_view reference, std::string_view hypothesis, double beta = 1.0, int max_n = 6);

/// Corpus-level ChrF: n-gram statistics are pooled before averaging.
[[nodiscard]] double chrf_corpus(
    std::span<std::pair<std::string, std::string> const> reference_hypothesis_pairs,
    double beta = 1.0,
    int max_n = 6);

using ConstraintMatch = std::function<bool(Constraint const & gold, Constraint const & generated)>;

/// Size of a maximum bipartite matching between gold and generated
/// constraints under `match`.
[[nodiscard]] std::size_t maximum_matching(
    std::span<Constraint const> gold,
    std::span<Constraint const> generated,
    ConstraintMatch const & match);

/// Same variable kind and value.
[[nodiscard]] bool variable_matches(Constraint const & gold, Constraint const & generated);

/// Same canonical time condition, regardless of variable and value.
[[nodiscard]] bool condition_matches(Constraint const & gold, Constraint const & generated);

using ParsedOutputs = std::map<std::string, std::vector<Constraint>, std::less<>>;

/// Mean over utterances of matched/gold variables. Records without gold
/// constraints are left out of the mean. Throws MissingRecord.
[[nodiscard]] double acc_variables(Dataset const & gold, ParsedOutputs const & parsed);

/// Mean over utterances of matched/gold conditions.
[[nodiscard]] double acc_conditions(Dataset const & gold, ParsedOutputs const & parsed);

struct UtteranceScore
{
    std::string record_id;
    bool has_output = false;
    double chrf = 0.0;
    std::size_t variables_correct = 0;
    std::size_t conditions_correct = 0;
    std::size_t gold_constraints = 0;
    std::size_t extracted = 0;
    std::size_t issues = 0;
};

struct EvalReport
{
    std::string model_id;
    std::string shot;
    double chrf = 0.0;
    double acc_variables = 0.0;
    double acc_conditions = 0.0;
    double acc_avg = 0.0;
    std::size_t n_utterances = 0;
    std::size_t n_missing = 0;
    std::vector<UtteranceScore> utterances;
};

struct EvalOptions
{
    double beta = 1.0;
    int max_n = 6;
    bool corpus_chrf = false;
    TemperatureBounds bounds;
};

/// One report per (model_id, shot) found in the outputs, ordered by model id
/// then shot size. Gold records without an output line score zero and are
/// counted in n_missing. Throws MissingGold for unknown record ids and
/// CorruptOutputs for duplicate (model, shot, record) lines.
[[nodiscard]] std::vector<EvalReport> evaluate_run(
    std::span<OutputRecord const> outputs,
    Dataset const & gold,
    EvalOptions const & options = {});

[[nodiscard]] nlohmann::json to_json(EvalReport const & report);
[[nodiscard]] nlohmann::json reports_to_json(std::span<EvalReport const> reports);

/// Aligned plain-text table: model, prompt, ChrF, Acc_Variables,
/// Acc_Conditions, Acc_Avg, four decimals.
[[nodiscard]] std::string render_table(std::span<EvalReport const> reports);

} // namespace prefcon

#endif // PREFCON_METRICS_HPP
