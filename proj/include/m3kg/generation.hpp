#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "m3kg/backend.hpp"
#include "m3kg/graph.hpp"
#include "m3kg/prompts.hpp"
#include "m3kg/retrieval.hpp"

namespace m3kg {

inline constexpr std::size_t kDefaultCharBudget = 16384;

struct AugmentedPrompt {
    std::string text;
    std::size_t triple_count = 0;  // rendered `[i]` lines
    std::size_t truncated = 0;     // lines dropped to fit the budget
    std::string query_ref;
};

/// `[i] head=H | relation=R | tail=T || head_description=HD | tail_description=TD`
/// with 1-based `i`; a missing description renders as `none`.
std::string render_triple_line(std::size_t i, const Triplet& triplet, const Graph& graph);

/// Renders the answer prompt for `question` and the kept triplets, in order.
/// When the prompt would exceed `char_budget` code points, whole lines are
/// dropped from the end. The question itself is never shortened.
AugmentedPrompt assemble(const std::string& question, const OrderedTripletSet& kept, const Graph& graph,
                         const PromptLibrary& prompts, std::size_t char_budget = kDefaultCharBudget,
                         std::string query_ref = {});

/// Sends the prompt with the media references and returns the reply
/// verbatim. An empty reply raises BackendResponseError.
std::string answer(const AugmentedPrompt& prompt, AnswerBackend& backend, const std::optional<std::string>& audio_ref,
                   const std::optional<std::string>& visual_ref);

}  // namespace m3kg
