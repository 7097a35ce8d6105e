#include "m3kg/stubs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "m3kg/graph_io.hpp"
#include "m3kg/text.hpp"

namespace m3kg::stubs {

using json = nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

const std::set<std::string>& leading_fillers() {
    static const std::set<std::string> words{"a", "an", "the", "my", "our", "their", "his", "her", "its", "your"};
    return words;
}

bool contains_phrase(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) return false;
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

/// Largest table value whose keyword occurs in `text`; without a table, the
/// fraction of text tokens that also occur in the media reference.
double table_score(const std::map<std::string, double>& table, const std::string& text, const std::string& ref) {
    const auto toks = text::tokens(text);
    if (table.empty()) {
        if (toks.empty()) return 0.0;
        const auto ref_toks = text::token_set(ref);
        std::size_t hit = 0;
        for (const auto& t : toks) hit += ref_toks.count(t);
        return static_cast<double>(hit) / static_cast<double>(toks.size());
    }
    double best = 0.0;
    for (const auto& [keyword, value] : table) {
        if (contains_phrase(toks, text::tokens(keyword))) best = std::max(best, value);
    }
    return best;
}

std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> words;
    std::string cur;
    auto flush = [&] {
        // strip punctuation at the edges, keep inner hyphens and apostrophes
        auto b = cur.find_first_not_of("\"'()[]{}!?:");
        auto e = cur.find_last_not_of("\"'()[]{}!?:");
        if (b != std::string::npos) words.push_back(cur.substr(b, e - b + 1));
        cur.clear();
    };
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return words;
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
        if (!out.empty()) out += ' ';
        out += words[i];
    }
    return out;
}

std::size_t skip_fillers(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
    while (from < to && leading_fillers().contains(text::to_lower(words[from]))) ++from;
    return from;
}

/// Replaces the first whole-word, case-insensitive occurrence of `word`.
std::optional<std::string> replace_word(const std::string& haystack, const std::string& word,
                                        const std::string& replacement) {
    const std::string lower = text::to_lower(haystack);
    const std::string needle = text::to_lower(word);
    if (needle.empty()) return std::nullopt;
    auto is_word_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    for (std::size_t pos = lower.find(needle); pos != std::string::npos; pos = lower.find(needle, pos + 1)) {
        const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right_ok = end >= lower.size() || !is_word_char(lower[end]);
        if (left_ok && right_ok) return haystack.substr(0, pos) + replacement + haystack.substr(end);
    }
    return std::nullopt;
}

std::string singular(std::string word) {
    auto ends = [&](std::string_view s) { return word.size() > s.size() && word.ends_with(s); };
    if (ends("ies") && word.size() > 4) return word.substr(0, word.size() - 3) + "y";
    if (ends("sses")) return word.substr(0, word.size() - 2);
    if (ends("s") && !ends("ss") && !ends("us") && !ends("is") && word.size() > 3) word.pop_back();
    return word;
}

/// Text between `begin` and `end` markers (end optional).
std::string between(const std::string& s, const std::string& begin, const std::string& end) {
    auto b = s.find(begin);
    if (b == std::string::npos) return {};
    b += begin.size();
    auto e = end.empty() ? std::string::npos : s.find(end, b);
    return s.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

}  // namespace

const std::vector<std::string>& default_relations() {
    static const std::vector<std::string> words{
        "above",   "across",  "against", "at",      "behind",   "beside",  "carries", "catches", "chases",
        "crosses", "drives",  "eats",    "feeds",   "follows",  "holds",   "hits",    "in",      "into",
        "near",    "on",      "over",    "passes",  "plays",    "produces", "pulls",  "pushes",  "rides",
        "sings",   "strikes", "throws",  "through", "under",    "wears",   "with",    "accompanies", "fills",
    };
    return words;
}

std::optional<std::string> prompt_field(const std::string& prompt, const std::string& prefix) {
    std::optional<std::string> found;
    for (const auto& line : text::split_lines(prompt)) {
        if (line.starts_with(prefix)) found = line.substr(prefix.size());
    }
    return found;
}

StubConfig parse_stub_config(const json& j) {
    StubConfig c;
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("dims")) {
        c.dims.audio = j.at("dims").at("audio").get<std::size_t>();
        c.dims.visual = j.at("dims").at("visual").get<std::size_t>();
    }
    if (j.contains("visual_table")) c.visual_table = j.at("visual_table").get<std::map<std::string, double>>();
    if (j.contains("audio_table")) c.audio_table = j.at("audio_table").get<std::map<std::string, double>>();
    if (j.contains("rewrites")) c.rewrites = j.at("rewrites").get<std::map<std::string, std::string>>();
    if (j.contains("relations")) c.relations = j.at("relations").get<std::vector<std::string>>();
    if (j.contains("refiner_mode")) c.refiner_mode = j.at("refiner_mode").get<std::string>();
    if (j.contains("inspector_score")) c.inspector_score = j.at("inspector_score").get<int>();
    if (j.contains("answer_mode")) c.answer_mode = j.at("answer_mode").get<std::string>();
    if (j.contains("kb")) c.kb = j.at("kb").get<std::map<std::string, std::vector<std::string>>>();
    return c;
}

std::vector<float> StubEmbedder::embed(Modality modality, const std::string& content_ref) {
    const std::size_t dim = config_.dims.of(modality);
    std::uint64_t state = fnv1a64(content_ref, config_.seed ^ (0x51ed270b27a1f1c5ULL * (static_cast<int>(modality) + 1)));
    std::vector<float> v(dim);
    for (auto& x : v) {
        const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        x = static_cast<float>(2.0 * u - 1.0);
    }
    return v;
}

std::vector<double> StubVisualGrounder::ground(const std::string& entity, const std::string& visual_ref,
                                               int frame_count) {
    const double score = table_score(config_.visual_table, entity, visual_ref);
    return std::vector<double>(static_cast<std::size_t>(std::max(1, frame_count)), score);
}

double StubAudioGrounder::ground(const std::string& sentence, const std::string& audio_ref) {
    return table_score(config_.audio_table, sentence, audio_ref);
}

std::string StubAgent::run(AgentRole role, const std::string& prompt) {
    switch (role) {
        case AgentRole::Rewriter:
            return rewrite(prompt);
        case AgentRole::Extractor:
            return extract(prompt);
        case AgentRole::Normalizer:
            return normalize(prompt);
        case AgentRole::SearcherCallback:
            return describe(prompt);
        case AgentRole::Selector:
            return select(prompt);
        case AgentRole::Refiner:
            return refine(prompt);
        case AgentRole::Inspector:
            return std::to_string(config_.inspector_score);
        case AgentRole::GraspFilter:
            return filter(prompt);
    }
    return {};
}

std::string StubAgent::rewrite(const std::string& prompt) const {
    const std::string caption = prompt_field(prompt, "ORIGINAL CAPTION: ").value_or("");
    const std::string context = text::to_lower(prompt_field(prompt, "Title: ").value_or("") + " " +
                                               prompt_field(prompt, "Description: ").value_or(""));
    std::string out = caption;
    for (const auto& [generic, specific] : config_.rewrites) {
        if (context.find(text::to_lower(specific)) == std::string::npos) continue;
        if (auto replaced = replace_word(out, generic, specific)) out = *replaced;
    }
    return out;
}

std::string StubAgent::extract(const std::string& prompt) const {
    const std::string caption = prompt_field(prompt, "Caption: ").value_or("");
    std::set<std::string> relations(default_relations().begin(), default_relations().end());
    for (const auto& r : config_.relations) relations.insert(text::to_lower(r));

    // clauses end at sentence punctuation, commas and the word "and"
    std::vector<std::string> clauses;
    std::string cur;
    for (char c : caption) {
        if (c == '.' || c == ';' || c == ',') {
            clauses.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    clauses.push_back(cur);

    std::vector<std::string> lines;
    for (const auto& clause : clauses) {
        auto words = split_words(clause);
        std::size_t start = 0;
        for (std::size_t i = 0; i <= words.size(); ++i) {
            if (i < words.size() && text::to_lower(words[i]) != "and") continue;
            std::vector<std::string> part(words.begin() + static_cast<std::ptrdiff_t>(start),
                                          words.begin() + static_cast<std::ptrdiff_t>(i));
            start = i + 1;
            if (part.empty()) continue;
            const std::size_t head_begin = skip_fillers(part, 0, part.size());
            std::size_t rel = part.size();
            for (std::size_t k = head_begin + 1; k < part.size(); ++k) {
                if (relations.contains(text::to_lower(part[k]))) {
                    rel = k;
                    break;
                }
            }
            const std::size_t tail_begin = rel < part.size() ? skip_fillers(part, rel + 1, part.size()) : part.size();
            if (rel < part.size() && tail_begin < part.size()) {
                lines.push_back(fmt::format("({}, {}, {})", join(part, head_begin, rel), part[rel],
                                            join(part, tail_begin, part.size())));
            } else {
                lines.push_back(join(part, 0, part.size()));
            }
        }
    }
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += '\n';
        out += l;
    }
    return out;
}

std::string StubAgent::normalize(const std::string& prompt) const {
    auto words = split_words(text::to_lower(prompt_field(prompt, "CONCEPT: ").value_or("")));
    const std::size_t begin = skip_fillers(words, 0, words.size());
    words.erase(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(begin));
    if (words.empty()) return {};
    words.back() = singular(words.back());
    return join(words, 0, words.size());
}

std::string StubAgent::describe(const std::string& prompt) const {
    std::string concept_name = text::trim(prompt_field(prompt, "Concept: ").value_or(""));
    if (concept_name.empty()) return {};
    concept_name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(concept_name[0])));
    return concept_name + " is an entity that can be seen or heard in everyday recordings.";
}

std::string StubAgent::select(const std::string& prompt) const {
    const std::string context = prompt_field(prompt, "CAPTION: ").value_or("") + " " +
                                prompt_field(prompt, "CONCEPT: ").value_or("");
    std::vector<std::string> candidates;
    bool in_list = false;
    for (const auto& raw : text::split_lines(prompt)) {
        std::string line = raw;
        if (line.starts_with("CANDIDATES: ")) {
            in_list = true;
            line = line.substr(12);
        } else if (line.starts_with("Output:")) {
            in_list = false;
        }
        if (!in_list) continue;
        auto dot = line.find(". ");
        if (dot != std::string::npos) candidates.push_back(line.substr(dot + 2));
    }
    if (candidates.empty()) return {};
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double s = text::token_overlap(candidates[i], context);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return candidates[best];
}

std::string StubAgent::refine(const std::string& prompt) const {
    const std::string original = prompt_field(prompt, "Concept (original phrasing): ").value_or("");
    const std::string searchable = prompt_field(prompt, "Searchable concept (KB term): ").value_or("");
    const std::string selected =
        text::trim(between(prompt, "Selected description (about the searchable concept):\n", "\nOutput:"));
    if (config_.refiner_mode == "echo") return selected;
    if (config_.refiner_mode == "prefix") return fmt::format("Referring to '{}': {}", original, selected);
    if (original == searchable) return selected;
    return replace_word(selected, searchable, original).value_or(selected);
}

std::string StubAgent::filter(const std::string& prompt) const {
    const std::string block = between(prompt, "Triplets: ", "");
    std::size_t n = 0;
    for (const auto& line : text::split_lines(block)) {
        if (line.starts_with('[')) ++n;
    }
    std::string out = "[";
    for (std::size_t i = 0; i < n; ++i) out += (i ? ", " : "") + std::to_string(i);
    return out + "]";
}

std::string StubAnswerer::answer(const std::string& prompt, const std::optional<std::string>&,
                                 const std::optional<std::string>&) {
    if (config_.answer_mode == "echo") return prompt;
    const std::string block = between(prompt, "Retrieved Triples : ", "\nTriple Format : ");
    std::vector<std::string> facts;
    for (const auto& line : text::split_lines(block)) {
        const auto head = between(line, "head=", " | relation=");
        const auto relation = between(line, "relation=", " | tail=");
        const auto tail = between(line, "tail=", " || ");
        if (head.empty() || relation.empty() || tail.empty()) continue;
        facts.push_back(fmt::format("{} {} {}", head, relation, tail));
        if (facts.size() == 3) break;
    }
    if (facts.empty()) return "No retrieved evidence applies; answering from the input alone.";
    std::string out = "Evidence: ";
    for (std::size_t i = 0; i < facts.size(); ++i) out += (i ? "; " : "") + facts[i];
    return out + ".";
}

std::string StubJudge::judge(const std::string& prompt) {
    if (prompt.find("\nAnswer 1:\n") != std::string::npos) {
        const auto reference = between(prompt, "Reference Answer (trusted ground truth):\n", "\n\nAnswer 1:\n");
        const auto first = between(prompt, "\nAnswer 1:\n", "\n\nAnswer 2:\n");
        const auto second = between(prompt, "\nAnswer 2:\n", "\n\nEvaluate on the following criteria");
        const bool second_wins = text::token_overlap(second, reference) > text::token_overlap(first, reference);
        const std::string winner = second_wins ? "Answer 2" : "Answer 1";
        json verdict;
        for (const char* k : {"Comprehensiveness", "Diversity", "Empowerment", "Overall Winner"}) {
            verdict[k] = {{"Winner", winner}, {"Explanation", "token overlap with the reference"}};
        }
        return verdict.dump(2);
    }
    const auto reference = between(prompt, "[Reference Answer]\n", "\n\n[Model Answer]");
    const auto answer = between(prompt, "[Model Answer]\n", "\n\n[Task]");
    const long rating = std::lround(5.0 * text::token_overlap(answer, reference));
    return fmt::format("Explanation: token overlap with the reference.\nRating: {}", rating);
}

MapKnowledgeSource MapKnowledgeSource::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open knowledge base file '" + path + "'");
    try {
        return MapKnowledgeSource(json::parse(in).get<std::map<std::string, std::vector<std::string>>>());
    } catch (const json::exception& e) {
        throw InvalidInput(fmt::format("knowledge base file '{}': {}", path, e.what()));
    }
}

std::vector<std::string> MapKnowledgeSource::query(const std::string& concept_name) {
    auto it = entries_.find(concept_name);
    if (it == entries_.end()) return {};
    return it->second;
}

Backends make_stub_backends(const StubConfig& config) {
    Backends b;
    b.embedder = std::make_shared<StubEmbedder>(config);
    b.visual_grounder = std::make_shared<StubVisualGrounder>(config);
    b.audio_grounder = std::make_shared<StubAudioGrounder>(config);
    b.agent = std::make_shared<StubAgent>(config);
    b.answerer = std::make_shared<StubAnswerer>(config);
    b.judge = std::make_shared<StubJudge>();
    b.knowledge = std::make_shared<MapKnowledgeSource>(config.kb);
    return b;
}

}  // namespace m3kg::stubs
