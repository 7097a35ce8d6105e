#include "m3kg/generation.hpp"

#include <fmt/format.h>

#include "m3kg/error.hpp"
#include "m3kg/text.hpp"

namespace m3kg {

namespace {

constexpr std::string_view kBlockMarker = "{TRIPLES_BLOCK}";

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

}  // namespace

std::string render_triple_line(std::size_t i, const Triplet& triplet, const Graph& graph) {
    const auto& head = graph.entity(triplet.head);
    const auto& tail = graph.entity(triplet.tail);
    return fmt::format("[{}] head={} | relation={} | tail={} || head_description={} | tail_description={}", i,
                       head.surface, triplet.relation, tail.surface, head.description.value_or("none"),
                       tail.description.value_or("none"));
}

AugmentedPrompt assemble(const std::string& question, const OrderedTripletSet& kept, const Graph& graph,
                         const PromptLibrary& prompts, std::size_t char_budget, std::string query_ref) {
    const std::string& tmpl = prompts.rag();
    std::vector<std::string> lines;
    lines.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) lines.push_back(render_triple_line(i + 1, graph.triplet(kept[i]), graph));

    // Rendered length = base (block empty) + occurrences * block length.
    const std::size_t base = text::utf8_length(text::render_template(tmpl, {{"QUERY", question}, {"TRIPLES_BLOCK", ""}}));
    const std::size_t occurrences = std::max<std::size_t>(1, count_occurrences(tmpl, kBlockMarker));
    std::size_t count = 0;
    std::size_t block_len = 0;
    for (const auto& line : lines) {
        const std::size_t next = block_len + (count ? 1 : 0) + text::utf8_length(line);
        if (base + occurrences * next > char_budget) break;
        block_len = next;
        ++count;
    }

    std::string block;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) block += '\n';
        block += lines[i];
    }
    AugmentedPrompt out;
    out.triple_count = count;
    out.truncated = lines.size() - count;
    out.query_ref = std::move(query_ref);
    out.text = text::render_template(tmpl, {{"QUERY", question}, {"TRIPLES_BLOCK", count ? block : "(none)"}});
    return out;
}

std::string answer(const AugmentedPrompt& prompt, AnswerBackend& backend, const std::optional<std::string>& audio_ref,
                   const std::optional<std::string>& visual_ref) {
    auto reply = backend.answer(prompt.text, audio_ref, visual_ref);
    if (text::trim(reply).empty()) throw BackendResponseError("answering backend returned an empty answer");
    return reply;
}

}  // namespace m3kg
