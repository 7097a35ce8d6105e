#include "m3kg/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "m3kg/error.hpp"
#include "m3kg/parallel.hpp"
#include "m3kg/text.hpp"

namespace m3kg::eval {

using json = nlohmann::json;

namespace {

/// First integer at or after `from`; a leading '-' makes it negative.
std::optional<long> first_integer(std::string_view s, std::size_t from = 0) {
    for (std::size_t i = from; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) continue;
        long value = 0;
        auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + s.size(), value);
        if (ec != std::errc{}) return std::nullopt;
        return (i > from && s[i - 1] == '-') ? -value : value;
    }
    return std::nullopt;
}

std::string percent(const std::optional<double>& p) { return p ? fmt::format("{:.1f}%", *p) : std::string("n/a"); }

std::optional<Side> winner_side(const json& value) {
    std::string name;
    if (value.is_string()) {
        name = value.get<std::string>();
    } else if (value.is_object() && value.contains("Winner") && value.at("Winner").is_string()) {
        name = value.at("Winner").get<std::string>();
    } else {
        return std::nullopt;
    }
    name = text::to_lower(text::trim(name));
    if (name == "answer 1") return Side::A;
    if (name == "answer 2") return Side::B;
    return std::nullopt;
}

}  // namespace

JudgeScore make_score(int raw) {
    raw = std::clamp(raw, 0, 5);
    return {raw, raw * 20.0};
}

std::optional<int> parse_rating(std::string_view reply) {
    const std::string lower = text::to_lower(reply);
    std::optional<long> value;
    for (std::string_view key : {"rating", "score"}) {
        if (auto pos = lower.find(key); pos != std::string::npos) {
            value = first_integer(lower, pos + key.size());
            if (value) break;
        }
    }
    if (!value) value = first_integer(lower);
    if (!value) return std::nullopt;
    return static_cast<int>(std::clamp<long>(*value, 0, 5));
}

std::optional<JudgeScore> judge(const std::string& question, const std::string& reference, const std::string& answer,
                                JudgeBackend& backend, const PromptLibrary& prompts) {
    const auto prompt = text::render_template(prompts.judge(), {{"QUESTION", question}, {"REFERENCE", reference}, {"ANSWER", answer}});
    const auto reply = backend.judge(prompt);
    auto raw = parse_rating(reply);
    if (!raw) {
        spdlog::warn("judge reply has no rating: {}", text::collapse_whitespace(reply).substr(0, 200));
        return std::nullopt;
    }
    return make_score(*raw);
}

std::optional<std::array<Side, 4>> parse_verdict(std::string_view reply) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    json verdict = json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (verdict.is_discarded() || !verdict.is_object()) return std::nullopt;
    std::array<Side, 4> winners{};
    for (std::size_t i = 0; i < kCriteria.size(); ++i) {
        auto it = verdict.find(std::string(kCriteria[i]));
        if (it == verdict.end()) return std::nullopt;
        auto side = winner_side(*it);
        if (!side) return std::nullopt;
        winners[i] = *side;
    }
    return winners;
}

std::array<Side, 4> relabel(const std::array<Side, 4>& winners) {
    std::array<Side, 4> out{};
    for (std::size_t i = 0; i < winners.size(); ++i) out[i] = winners[i] == Side::A ? Side::B : Side::A;
    return out;
}

std::optional<WinRateRecord> winrate(const std::string& question, const std::string& reference,
                                     const std::string& answer_a, const std::string& answer_b, JudgeBackend& backend,
                                     const PromptLibrary& prompts, bool swap) {
    const auto prompt = text::render_template(prompts.winrate(), {{"QUESTION", question},
                                                                  {"REFERENCE", reference},
                                                                  {"ANSWER_1", swap ? answer_b : answer_a},
                                                                  {"ANSWER_2", swap ? answer_a : answer_b}});
    const auto reply = backend.judge(prompt);
    auto winners = parse_verdict(reply);
    if (!winners) {
        spdlog::warn("malformed win-rate verdict: {}", text::collapse_whitespace(reply).substr(0, 200));
        return std::nullopt;
    }
    WinRateRecord r;
    r.swapped = swap;
    r.winners = swap ? relabel(*winners) : *winners;
    return r;
}

WinRateReport aggregate_winrate(const std::vector<WinRateRecord>& records, std::size_t excluded) {
    WinRateReport report;
    report.valid = records.size();
    report.excluded = excluded;
    for (const auto& r : records) {
        for (std::size_t i = 0; i < kCriteria.size(); ++i) {
            ++(r.winners[i] == Side::A ? report.criteria[i].a_wins : report.criteria[i].b_wins);
        }
    }
    if (report.valid > 0) {
        for (auto& c : report.criteria) {
            c.a_percent = 100.0 * static_cast<double>(c.a_wins) / static_cast<double>(report.valid);
            c.b_percent = 100.0 - *c.a_percent;
        }
    }
    return report;
}

JudgeReport aggregate_judge(const std::vector<JudgeScore>& scores, std::size_t excluded) {
    JudgeReport report;
    report.valid = scores.size();
    report.excluded = excluded;
    if (!scores.empty()) {
        long total = 0;
        for (const auto& s : scores) total += s.raw;
        report.mean_raw = static_cast<double>(total) / static_cast<double>(scores.size());
        report.mean_scaled = 20.0 * *report.mean_raw;
    }
    return report;
}

json to_json(const WinRateReport& report) {
    json criteria = json::object();
    for (std::size_t i = 0; i < kCriteria.size(); ++i) {
        const auto& c = report.criteria[i];
        criteria[std::string(kCriteria[i])] = {
            {"a_wins", c.a_wins},
            {"b_wins", c.b_wins},
            {"a_percent", c.a_percent ? json(*c.a_percent) : json(nullptr)},
            {"b_percent", c.b_percent ? json(*c.b_percent) : json(nullptr)},
        };
    }
    return json{{"protocol", "winrate"}, {"valid", report.valid}, {"excluded", report.excluded}, {"criteria", criteria}};
}

json to_json(const JudgeReport& report) {
    return json{{"protocol", "judge"},
                {"valid", report.valid},
                {"excluded", report.excluded},
                {"mean_raw", report.mean_raw ? json(*report.mean_raw) : json(nullptr)},
                {"mean_scaled", report.mean_scaled ? json(*report.mean_scaled) : json(nullptr)}};
}

std::string to_table(const WinRateReport& report, std::string_view label_a, std::string_view label_b) {
    std::string out = fmt::format("{:<20}{:>10}{:>10}\n", "Criterion", label_a, label_b);
    for (std::size_t i = 0; i < kCriteria.size(); ++i) {
        const auto& c = report.criteria[i];
        out += fmt::format("{:<20}{:>10}{:>10}\n", kCriteria[i], percent(c.a_percent), percent(c.b_percent));
    }
    out += fmt::format("valid records: {}, excluded: {}\n", report.valid, report.excluded);
    return out;
}

std::string to_table(const JudgeReport& report) {
    std::string out = fmt::format("{:<20}{:>10}\n", "Metric", "Value");
    out += fmt::format("{:<20}{:>10}\n", "M.J. (0-100)",
                       report.mean_scaled ? fmt::format("{:.2f}", *report.mean_scaled) : std::string("n/a"));
    out += fmt::format("{:<20}{:>10}\n", "mean raw (0-5)",
                       report.mean_raw ? fmt::format("{:.3f}", *report.mean_raw) : std::string("n/a"));
    out += fmt::format("valid records: {}, excluded: {}\n", report.valid, report.excluded);
    return out;
}

std::string id_text(const json& id) {
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer() || id.is_number_unsigned()) return id.dump();
    throw InvalidInput("field 'id' must be a string or an integer");
}

std::vector<AnswerRecord> parse_answers(std::string_view content) {
    std::vector<AnswerRecord> out;
    std::size_t line_no = 0;
    auto opt = [](const json& j, const char* key) -> std::optional<std::string> {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw InvalidInput(fmt::format("field '{}' must be a string", key));
        return it->get<std::string>();
    };
    for (const auto& line : text::split_lines(content)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            AnswerRecord r;
            r.id = id_text(j.at("id"));
            r.question = j.at("question").get<std::string>();
            r.reference = opt(j, "reference").value_or("");
            r.answer = opt(j, "answer");
            r.answer_a = opt(j, "answer_a");
            r.answer_b = opt(j, "answer_b");
            if (!r.answer && !(r.answer_a && r.answer_b)) {
                throw InvalidInput("record needs 'answer' or both 'answer_a' and 'answer_b'");
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw InvalidInput(fmt::format("answers line {}: {}", line_no, e.what()));
        } catch (const InvalidInput& e) {
            throw InvalidInput(fmt::format("answers line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

EvalOutcome run_eval(const std::vector<AnswerRecord>& records, JudgeBackend& backend, const PromptLibrary& prompts,
                     const EvalOptions& options) {
    EvalOutcome out;
    const bool any_pairwise = std::any_of(records.begin(), records.end(), [](const AnswerRecord& r) { return r.answer_a && r.answer_b; });
    const bool any_single = std::any_of(records.begin(), records.end(), [](const AnswerRecord& r) { return !(r.answer_a && r.answer_b); });
    if (any_pairwise && any_single) throw InvalidInput("answers file mixes single-system and pairwise records");
    out.pairwise = any_pairwise;

    if (out.pairwise) {
        const std::size_t per_item = options.swap_pairing ? 2 : 1;
        std::vector<std::optional<WinRateRecord>> slots(records.size() * per_item);
        parallel_for(slots.size(), options.jobs, [&](std::size_t k) {
            const auto& r = records[k / per_item];
            const bool swap = (k % per_item) == 1;
            if (r.question.empty() || r.reference.empty() || r.answer_a->empty() || r.answer_b->empty()) return;
            slots[k] = winrate(r.question, r.reference, *r.answer_a, *r.answer_b, backend, prompts, swap);
            if (slots[k]) slots[k]->id = r.id;
        });
        for (std::size_t k = 0; k < slots.size(); ++k) {
            if (slots[k]) {
                out.records.push_back(*slots[k]);
            } else {
                out.excluded_ids.push_back(records[k / per_item].id);
            }
        }
        out.winrate_report = aggregate_winrate(out.records, out.excluded_ids.size());
    } else {
        std::vector<std::optional<JudgeScore>> slots(records.size());
        parallel_for(slots.size(), options.jobs, [&](std::size_t k) {
            const auto& r = records[k];
            if (r.question.empty() || r.reference.empty() || r.answer->empty()) return;
            slots[k] = judge(r.question, r.reference, *r.answer, backend, prompts);
        });
        for (std::size_t k = 0; k < slots.size(); ++k) {
            if (slots[k]) {
                out.scores.push_back(*slots[k]);
            } else {
                out.excluded_ids.push_back(records[k].id);
            }
        }
        out.judge_report = aggregate_judge(out.scores, out.excluded_ids.size());
    }
    return out;
}

json EvalOutcome::to_json() const {
    json j = pairwise ? eval::to_json(winrate_report) : eval::to_json(judge_report);
    j["excluded_ids"] = excluded_ids;
    if (pairwise) {
        json recs = json::array();
        for (const auto& r : records) {
            json w = json::object();
            for (std::size_t i = 0; i < kCriteria.size(); ++i) {
                w[std::string(kCriteria[i])] = r.winners[i] == Side::A ? "A" : "B";
            }
            recs.push_back({{"id", r.id}, {"swapped", r.swapped}, {"winners", w}});
        }
        j["records"] = recs;
    } else {
        json recs = json::array();
        for (const auto& s : scores) recs.push_back({{"raw", s.raw}, {"scaled", s.scaled}});
        j["scores"] = recs;
    }
    return j;
}

std::string EvalOutcome::to_table() const {
    return pairwise ? eval::to_table(winrate_report) : eval::to_table(judge_report);
}

}  // namespace m3kg::eval
