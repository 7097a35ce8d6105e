#include "fixture_recorder.hpp"

#include <utility>

#include "m3kg/prompts.hpp"
#include "m3kg/protocol.hpp"
#include "m3kg/text.hpp"

namespace m3kg::tools {

using json = nlohmann::json;
namespace p = m3kg::protocol;

namespace {

json exchange(const std::string& name, std::string_view path, const char* req_schema, json request,
              const char* resp_schema, json response, int status = 200) {
    return json{{"name", name},
                {"path", std::string(path)},
                {"status", status},
                {"request_schema", req_schema},
                {"request", std::move(request)},
                {"response_schema", resp_schema},
                {"response", std::move(response)}};
}

// Template inputs per role, chosen so the stub agent has something to act on.
std::map<std::string, std::string> role_inputs(AgentRole role) {
    switch (role) {
        case AgentRole::Rewriter:
            return {{"TITLE", "Golden retriever fetch session"},
                    {"DESCRIPTION", "A retriever plays in the park."},
                    {"ORIGINAL_CAPTION", "A dog chases a ball on the grass."}};
        case AgentRole::Extractor:
            return {{"CAPTION", "A retriever chases a ball and a man throws a stick."}};
        case AgentRole::Normalizer:
            return {{"CONCEPT", "the retrievers"}};
        case AgentRole::SearcherCallback:
            return {{"CONCEPT", "stick"}, {"CAPTION", "A man throws a stick."}};
        case AgentRole::Selector:
            return {{"CONCEPT", "retriever"},
                    {"CAPTION", "A retriever chases a ball."},
                    {"ENUMERATED_CANDIDATES",
                     "1. A retriever is a type of gun dog that retrieves game for a hunter.\n2. Retriever is a 2019 novel."}};
        case AgentRole::Refiner:
            return {{"ORIGINAL_CONCEPT", "golden retriever"},
                    {"SEARCHABLE_CONCEPT", "retriever"},
                    {"SELECTED_DESCRIPTION", "A retriever is a type of gun dog that retrieves game for a hunter."}};
        case AgentRole::Inspector:
            return {{"CONCEPT", "retriever"},
                    {"DESCRIPTION", "A retriever is a type of gun dog that retrieves game for a hunter."}};
        case AgentRole::GraspFilter:
            return {{"QUERY", "What is the dog chasing?"},
                    {"TRIPLETS", "[0] retriever chases ball\n[1] man throws stick\n[2] rain falls on roof"}};
    }
    return {};
}

}  // namespace

std::vector<json> record_exchanges(const stubs::StubConfig& config) {
    const auto b = stubs::make_stub_backends(config);
    const auto lib = PromptLibrary::defaults();
    std::vector<json> out;

    const std::pair<Modality, std::string> embeds[] = {{Modality::Audio, "clips/rain_on_roof.wav"},
                                                        {Modality::Visual, "clips/dog_park.mp4"}};
    for (const auto& [m, ref] : embeds) {
        out.push_back(exchange(std::string("embed_") + to_string(m), p::kEmbedPath, "embed_request",
                               p::EmbedRequest{m, ref}, "embed_response", p::EmbedResponse{b.embedder->embed(m, ref)}));
    }

    const std::pair<std::string, int> entities[] = {{"retriever", 4}, {"man", 4}, {"umbrella", 2}};
    for (const auto& [entity, frames] : entities) {
        p::GroundVisualRequest req{entity, "clips/dog_park.mp4", frames};
        out.push_back(exchange("ground_visual_" + entity, p::kGroundVisualPath, "ground_visual_request", req,
                               "ground_visual_response",
                               p::GroundVisualResponse{b.visual_grounder->ground(entity, req.visual_ref, frames)}));
    }

    for (const std::string sentence : {"rain falls on roof", "dog chases ball", "car passes bridge"}) {
        p::GroundAudioRequest req{sentence, "clips/rain_on_roof.wav"};
        out.push_back(exchange("ground_audio_" + text::to_lower(sentence.substr(0, sentence.find(' '))),
                               p::kGroundAudioPath, "ground_audio_request", req, "ground_audio_response",
                               p::GroundAudioResponse{b.audio_grounder->ground(sentence, req.audio_ref)}));
    }

    for (auto role : {AgentRole::Rewriter, AgentRole::Extractor, AgentRole::Normalizer, AgentRole::SearcherCallback,
                      AgentRole::Selector, AgentRole::Refiner, AgentRole::Inspector, AgentRole::GraspFilter}) {
        const auto prompt = text::render_template(lib.agent(role), role_inputs(role));
        out.push_back(exchange("agent_" + std::string(role_name(role)),
                               std::string(p::kAgentPrefix) + std::string(role_name(role)), "prompt_request",
                               p::PromptRequest{prompt}, "text_response", p::TextResponse{b.agent->run(role, prompt)}));
    }

    const std::string rag = text::render_template(
        lib.rag(), {{"QUERY", "What is the dog chasing?"},
                    {"TRIPLES_BLOCK",
                     "[1] head=retriever | relation=chases | tail=ball || head_description=A retriever is a type of "
                     "gun dog. | tail_description=A ball is a round object."}});
    p::AnswerRequest answer{rag, std::nullopt, "clips/dog_park.mp4"};
    out.push_back(exchange("answer", p::kAnswerPath, "answer_request", answer, "text_response",
                           p::TextResponse{b.answerer->answer(rag, answer.audio_ref, answer.visual_ref)}));

    const std::string judge = text::render_template(lib.judge(), {{"QUESTION", "What is the dog chasing?"},
                                                                  {"REFERENCE", "The dog chases a ball."},
                                                                  {"ANSWER", "A ball."}});
    out.push_back(exchange("judge_score", p::kJudgePath, "prompt_request", p::PromptRequest{judge}, "text_response",
                           p::TextResponse{b.judge->judge(judge)}));
    const std::string winrate = text::render_template(lib.winrate(), {{"QUESTION", "What is the dog chasing?"},
                                                                      {"REFERENCE", "The dog chases a ball."},
                                                                      {"ANSWER_1", "The dog chases a ball."},
                                                                      {"ANSWER_2", "Rain."}});
    out.push_back(exchange("judge_winrate", p::kJudgePath, "prompt_request", p::PromptRequest{winrate}, "text_response",
                           p::TextResponse{b.judge->judge(winrate)}));

    for (const std::string concept_name : {"retriever", "unicorn"}) {
        out.push_back(exchange("kb_search_" + concept_name, p::kKbSearchPath, "kb_search_request",
                               p::KbSearchRequest{concept_name}, "kb_search_response",
                               p::KbSearchResponse{b.knowledge->query(concept_name)}));
    }

    out.push_back(exchange("error_bad_modality", p::kEmbedPath, "none",
                           json{{"modality", "smell"}, {"content_ref", "x"}}, "error_response", nullptr, 400));
    out.push_back(exchange("error_missing_field", p::kGroundAudioPath, "none", json{{"sentence", "rain"}},
                           "error_response", nullptr, 400));
    return out;
}

std::string to_jsonl(const std::vector<json>& exchanges) {
    std::string out;
    for (const auto& e : exchanges) out += e.dump() + "\n";
    return out;
}

}  // namespace m3kg::tools
