#include "prefcon/metrics.hpp"

#include "prefcon/utf8.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace prefcon {

namespace {

bool is_unicode_space(char32_t c)
{
    return c == U' ' || (c >= U'\t' && c <= U'\r') || c == 0x85 || c == 0xA0 || c == 0x1680
           || (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F
           || c == 0x3000;
}

std::u32string strip_whitespace(std::string_view s)
{
    std::u32string out = utf8::decode(s);
    std::erase_if(out, is_unicode_space);
    return out;
}

std::map<std::u32string_view, std::size_t> ngram_counts(std::u32string const & s, std::size_t n)
{
    std::map<std::u32string_view, std::size_t> counts;
    if (s.size() < n) {
        return counts;
    }
    std::u32string_view const view(s);
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
        ++counts[view.substr(i, n)];
    }
    return counts;
}

ChrfStatistics statistics_of(std::u32string const & ref, std::u32string const & hyp, int max_n)
{
    ChrfStatistics st;
    for (int order = 1; order <= max_n; ++order) {
        auto const n = static_cast<std::size_t>(order);
        auto const ref_counts = ngram_counts(ref, n);
        auto const hyp_counts = ngram_counts(hyp, n);
        std::size_t matches = 0;
        for (auto const & [gram, count] : hyp_counts) {
            auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) {
                matches += std::min(count, it->second);
            }
        }
        st.matches.push_back(matches);
        st.hypothesis_ngrams.push_back(hyp.size() >= n ? hyp.size() - n + 1 : 0);
        st.reference_ngrams.push_back(ref.size() >= n ? ref.size() - n + 1 : 0);
    }
    return st;
}

std::string fixed4(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

double mean_ratio(
    Dataset const & gold,
    ParsedOutputs const & parsed,
    ConstraintMatch const & match)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (auto const & record : gold) {
        auto it = parsed.find(record.id);
        if (it == parsed.end()) {
            throw MissingRecord("no parsed constraints for record '" + record.id + "'");
        }
        if (record.constraints.empty()) {
            continue;
        }
        auto const correct = maximum_matching(record.constraints, it->second, match);
        sum += static_cast<double>(correct) / static_cast<double>(record.constraints.size());
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

bool augment(
    std::size_t g,
    std::vector<std::vector<std::size_t>> const & adj,
    std::vector<bool> & seen,
    std::vector<std::ptrdiff_t> & owner)
{
    for (std::size_t p : adj[g]) {
        if (seen[p]) {
            continue;
        }
        seen[p] = true;
        if (owner[p] < 0 || augment(static_cast<std::size_t>(owner[p]), adj, seen, owner)) {
            owner[p] = static_cast<std::ptrdiff_t>(g);
            return true;
        }
    }
    return false;
}

int shot_rank(std::string const & label)
{
    try {
        return ShotSetting::parse(label).examples();
    } catch (Error const &) {
        return 100;
    }
}

} // namespace

ChrfStatistics & ChrfStatistics::operator+=(ChrfStatistics const & other)
{
    auto add = [](std::vector<std::size_t> & a, std::vector<std::size_t> const & b) {
        if (a.size() < b.size()) {
            a.resize(b.size(), 0);
        }
        for (std::size_t i = 0; i < b.size(); ++i) {
            a[i] += b[i];
        }
    };
    add(matches, other.matches);
    add(hypothesis_ngrams, other.hypothesis_ngrams);
    add(reference_ngrams, other.reference_ngrams);
    return *this;
}

ChrfStatistics chrf_statistics(std::string_view reference, std::string_view hypothesis, int max_n)
{
    return statistics_of(strip_whitespace(reference), strip_whitespace(hypothesis), max_n);
}

double chrf_from_statistics(ChrfStatistics const & st, double beta)
{
    double precision = 0.0;
    double recall = 0.0;
    std::size_t p_orders = 0;
    std::size_t r_orders = 0;
    for (std::size_t i = 0; i < st.matches.size(); ++i) {
        if (st.hypothesis_ngrams[i] > 0) {
            precision += static_cast<double>(st.matches[i]) / static_cast<double>(st.hypothesis_ngrams[i]);
            ++p_orders;
        }
        if (st.reference_ngrams[i] > 0) {
            recall += static_cast<double>(st.matches[i]) / static_cast<double>(st.reference_ngrams[i]);
            ++r_orders;
        }
    }
    precision = p_orders == 0 ? 0.0 : precision / static_cast<double>(p_orders);
    recall = r_orders == 0 ? 0.0 : recall / static_cast<double>(r_orders);
    if (precision == 0.0 && recall == 0.0) {
        return 0.0;
    }
    double const b2 = beta * beta;
    return 100.0 * (1.0 + b2) * precision * recall / (recall + b2 * precision);
}

double chrf(std::string_view reference, std::string_view hypothesis, double beta, int max_n)
{
    if (!(beta > 0.0)) {
        throw Error("InvalidArgument", "beta must be positive");
    }
    if (max_n < 1) {
        throw Error("InvalidArgument", "max_n must be at least 1");
    }
    auto const ref = strip_whitespace(reference);
    auto const hyp = strip_whitespace(hypothesis);
    if (ref.empty() || hyp.empty()) {
        throw EmptyInput(ref.empty() ? "reference is empty" : "hypothesis is empty");
    }
    return chrf_from_statistics(statistics_of(ref, hyp, max_n), beta);
}

double chrf_corpus(std::span<std::pair<std::string, std::string> const> pairs, double beta, int max_n)
{
    ChrfStatistics total;
    for (auto const & [ref, hyp] : pairs) {
        total += chrf_statistics(ref, hyp, max_n);
    }
    return chrf_from_statistics(total, beta);
}

std::size_t maximum_matching(
    std::span<Constraint const> gold,
    std::span<Constraint const> generated,
    ConstraintMatch const & match)
{
    std::vector<std::vector<std::size_t>> adj(gold.size());
    for (std::size_t g = 0; g < gold.size(); ++g) {
        for (std::size_t p = 0; p < generated.size(); ++p) {
            if (match(gold[g], generated[p])) {
                adj[g].push_back(p);
            }
        }
    }
    std::vector<std::ptrdiff_t> owner(generated.size(), -1);
    std::size_t size = 0;
    for (std::size_t g = 0; g < gold.size(); ++g) {
        std::vector<bool> seen(generated.size(), false);
        if (augment(g, adj, seen, owner)) {
            ++size;
        }
    }
    return size;
}

bool variable_matches(Constraint const & gold, Constraint const & generated)
{
    return gold.variable == generated.variable && gold.value == generated.value;
}

bool condition_matches(Constraint const & gold, Constraint const & generated)
{
    return gold.condition == generated.condition;
}

double acc_variables(Dataset const & gold, ParsedOutputs const & parsed)
{
    return mean_ratio(gold, parsed, variable_matches);
}

double acc_conditions(Dataset const & gold, ParsedOutputs const & parsed)
{
    return mean_ratio(gold, parsed, condition_matches);
}

std::vector<EvalReport> evaluate_run(
    std::span<OutputRecord const> outputs,
    Dataset const & gold,
    EvalOptions const & options)
{
    // (model, shot) -> record id -> output line
    std::map<std::pair<std::string, std::string>, std::map<std::string, OutputRecord const *>> groups;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        auto const & o = outputs[i];
        if (find_record(gold, o.record_id) == nullptr) {
            throw MissingGold("output line " + std::to_string(i + 1) + " references unknown record '" + o.record_id + "'");
        }
        auto & group = groups[{o.model_id, o.shot}];
        if (!group.emplace(o.record_id, &o).second) {
            throw CorruptOutputs(
                "output line " + std::to_string(i + 1) + " duplicates (" + o.model_id + ", " + o.shot + ", "
                + o.record_id + ")");
        }
    }

    std::vector<EvalReport> reports;
    for (auto const & [key, lines] : groups) {
        EvalReport report;
        report.model_id = key.first;
        report.shot = key.second;

        ParsedOutputs parsed;
        std::vector<std::pair<std::string, std::string>> chrf_pairs;
        double chrf_sum = 0.0;
        std::size_t chrf_n = 0;
        for (auto const & record : gold) {
            UtteranceScore score;
            score.record_id = record.id;
            score.gold_constraints = record.constraints.size();
            std::string reference;
            for (auto const & c : record.constraints) {
                reference += (reference.empty() ? "" : " ") + render_constraint(c);
            }

            auto it = lines.find(record.id);
            auto & generated = parsed[record.id];
            if (it == lines.end()) {
                ++report.n_missing;
            } else {
                score.has_output = true;
                std::string const & response = it->second->response_text;
                Extraction ex = extract_constraints(response, options.bounds);
                score.extracted = ex.constraints.size();
                score.issues = ex.issues.size();
                generated = std::move(ex.constraints);
                if (!reference.empty()) {
                    try {
                        score.chrf = chrf(reference, response, options.beta, options.max_n);
                    } catch (EmptyInput const &) {
                        score.chrf = 0.0;
                    }
                }
            }
            if (!reference.empty()) {
                chrf_sum += score.chrf;
                ++chrf_n;
                chrf_pairs.emplace_back(reference, it == lines.end() ? std::string{} : it->second->response_text);
            }
            score.variables_correct = maximum_matching(record.constraints, generated, variable_matches);
            score.conditions_correct = maximum_matching(record.constraints, generated, condition_matches);
            report.utterances.push_back(std::move(score));
        }

        report.n_utterances = gold.size();
        if (options.corpus_chrf) {
            report.chrf = chrf_corpus(chrf_pairs, options.beta, options.max_n);
        } else {
            report.chrf = chrf_n == 0 ? 0.0 : chrf_sum / static_cast<double>(chrf_n);
        }
        report.acc_variables = acc_variables(gold, parsed);
        report.acc_conditions = acc_conditions(gold, parsed);
        report.acc_avg = (report.acc_variables + report.acc_conditions) / 2.0;
        reports.push_back(std::move(report));
    }

    std::stable_sort(reports.begin(), reports.end(), [](EvalReport const & a, EvalReport const & b) {
        if (a.model_id != b.model_id) {
            return a.model_id < b.model_id;
        }
        return shot_rank(a.shot) < shot_rank(b.shot);
    });
    return reports;
}

nlohmann::json to_json(EvalReport const & r)
{
    nlohmann::json utterances = nlohmann::json::array();
    for (auto const & u : r.utterances) {
        utterances.push_back({
            {"record_id", u.record_id},
            {"has_output", u.has_output},
            {"chrf", u.chrf},
            {"variables_correct", u.variables_correct},
            {"conditions_correct", u.conditions_correct},
            {"gold_constraints", u.gold_constraints},
            {"extracted", u.extracted},
            {"issues", u.issues},
        });
    }
    return nlohmann::json{
        {"model_id", r.model_id},
        {"shot", r.shot},
        {"chrf", r.chrf},
        {"acc_variables", r.acc_variables},
        {"acc_conditions", r.acc_conditions},
        {"acc_avg", r.acc_avg},
        {"n_utterances", r.n_utterances},
        {"n_missing", r.n_missing},
        {"utterances", utterances},
    };
}

nlohmann::json reports_to_json(std::span<EvalReport const> reports)
{
    nlohmann::json rows = nlohmann::json::array();
    for (auto const & r : reports) {
        rows.push_back(to_json(r));
    }
    return nlohmann::json{{"reports", rows}};
}

std::string render_table(std::span<EvalReport const> reports)
{
    std::vector<std::vector<std::string>> rows{{"model", "prompt", "ChrF", "Acc_Variables", "Acc_Conditions", "Acc_Avg"}};
    for (auto const & r : reports) {
        rows.push_back(
            {r.model_id, r.shot, fixed4(r.chrf), fixed4(r.acc_variables), fixed4(r.acc_conditions), fixed4(r.acc_avg)});
    }
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (auto const & row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], utf8::decode(row[c]).size());
        }
    }
    std::string out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::string line;
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            std::string cell = rows[i][c];
            if (c + 1 < rows[i].size()) {
                cell.append(widths[c] - utf8::decode(cell).size() + 2, ' ');
            }
            line += cell;
        }
        out += line + '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (std::size_t c = 0; c < widths.size(); ++c) {
                total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
            }
            out += std::string(total, '-') + '\n';
        }
    }
    return out;
}

} // namespace prefcon
