#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "m3kg/backend.hpp"
#include "m3kg/prompts.hpp"

namespace m3kg::eval {

struct JudgeScore {
    int raw = 0;          // 0..5
    double scaled = 0.0;  // raw * 20

    bool operator==(const JudgeScore&) const = default;
};

JudgeScore make_score(int raw);

/// Integer rating from a judge reply: after "Rating", else after "score",
/// else the first integer. Clamped to 0..5; nullopt when no integer exists.
std::optional<int> parse_rating(std::string_view reply);

/// Model-as-judge score; nullopt when the reply cannot be parsed.
std::optional<JudgeScore> judge(const std::string& question, const std::string& reference, const std::string& answer,
                                JudgeBackend& backend, const PromptLibrary& prompts);

enum class Side { A, B };

inline constexpr std::array<std::string_view, 4> kCriteria = {"Comprehensiveness", "Diversity", "Empowerment",
                                                               "Overall Winner"};

struct WinRateRecord {
    std::string id;
    bool swapped = false;
    std::array<Side, 4> winners{};  // indexed like kCriteria

    bool operator==(const WinRateRecord&) const = default;
};

/// Winners from a verdict in prompt terms: A = "Answer 1", B = "Answer 2".
/// nullopt unless every criterion names one of the two answers.
std::optional<std::array<Side, 4>> parse_verdict(std::string_view reply);

/// Swaps the sides of every criterion.
std::array<Side, 4> relabel(const std::array<Side, 4>& winners);

/// Pairwise judgment of answer_a against answer_b. With `swap`, answer_b is
/// shown first and the verdict is mapped back to the original sides.
std::optional<WinRateRecord> winrate(const std::string& question, const std::string& reference,
                                     const std::string& answer_a, const std::string& answer_b, JudgeBackend& backend,
                                     const PromptLibrary& prompts, bool swap);

struct CriterionTally {
    std::size_t a_wins = 0;
    std::size_t b_wins = 0;
    std::optional<double> a_percent;  // undefined without valid records
    std::optional<double> b_percent;
};

struct WinRateReport {
    std::size_t valid = 0;
    std::size_t excluded = 0;
    std::array<CriterionTally, 4> criteria{};
};

struct JudgeReport {
    std::size_t valid = 0;
    std::size_t excluded = 0;
    std::optional<double> mean_raw;
    std::optional<double> mean_scaled;
};

WinRateReport aggregate_winrate(const std::vector<WinRateRecord>& records, std::size_t excluded);
JudgeReport aggregate_judge(const std::vector<JudgeScore>& scores, std::size_t excluded);

nlohmann::json to_json(const WinRateReport& report);
nlohmann::json to_json(const JudgeReport& report);
std::string to_table(const WinRateReport& report, std::string_view label_a = "A", std::string_view label_b = "B");
std::string to_table(const JudgeReport& report);

/// One line of an answers file: `answer` for single-system files,
/// `answer_a`/`answer_b` for pairwise ones.
struct AnswerRecord {
    std::string id;
    std::string question;
    std::string reference;
    std::optional<std::string> answer;
    std::optional<std::string> answer_a;
    std::optional<std::string> answer_b;
};

/// Throws InvalidInput naming the line on malformed records.
std::vector<AnswerRecord> parse_answers(std::string_view content);

/// Ids are carried as text whether they were numbers or strings.
std::string id_text(const nlohmann::json& id);

struct EvalOptions {
    bool swap_pairing = true;
    int jobs = 1;
};

struct EvalOutcome {
    bool pairwise = false;
    std::vector<JudgeScore> scores;
    std::vector<WinRateRecord> records;
    std::vector<std::string> excluded_ids;
    JudgeReport judge_report;
    WinRateReport winrate_report;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// Judges every record. Pairwise files get win-rate records (two per item
/// with swap pairing), others get Model-as-judge scores. Records are kept in
/// file order. Throws InvalidInput when the file mixes both kinds.
EvalOutcome run_eval(const std::vector<AnswerRecord>& records, JudgeBackend& backend, const PromptLibrary& prompts,
                     const EvalOptions& options);

}  // namespace m3kg::eval
