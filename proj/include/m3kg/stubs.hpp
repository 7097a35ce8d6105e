#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "m3kg/backend.hpp"
#include "m3kg/graph.hpp"

namespace m3kg::stubs {

/// Behaviour knobs for the deterministic in-process backends. Every stub is a
/// pure function of its inputs and this configuration.
struct StubConfig {
    std::uint64_t seed = 0x6d336b67ULL;
    ModalityDims dims{16, 16};

    // Grounding rule tables: keyword (whole-token phrase) -> confidence. When a
    // table is empty the grounder falls back to token overlap between the text
    // and the media reference.
    std::map<std::string, double> visual_table;
    std::map<std::string, double> audio_table;

    // Rewriter: generic word -> specific term, applied when the title or
    // description mentions the specific term.
    std::map<std::string, std::string> rewrites;
    // Extra relation words for the rule-based extractor.
    std::vector<std::string> relations;
    // Refiner: "adapt" (swap concept for surface), "echo" or "prefix".
    std::string refiner_mode = "adapt";
    int inspector_score = 9;
    // Answerer: "evidence" (quote retrieved triples) or "echo".
    std::string answer_mode = "evidence";
    // Knowledge base entries used by the fixture knowledge source.
    std::map<std::string, std::vector<std::string>> kb;
};

StubConfig parse_stub_config(const nlohmann::json& j);

/// Seeded hash of the content reference expanded to the modality's dimension,
/// values in [-1, 1].
class StubEmbedder final : public Embedder {
public:
    explicit StubEmbedder(StubConfig config) : config_(std::move(config)) {}
    std::vector<float> embed(Modality modality, const std::string& content_ref) override;

private:
    StubConfig config_;
};

/// Table-driven presence scores. An entity matching several keywords gets the
/// largest value; every frame reports the same confidence.
class StubVisualGrounder final : public VisualGrounder {
public:
    explicit StubVisualGrounder(StubConfig config) : config_(std::move(config)) {}
    std::vector<double> ground(const std::string& entity, const std::string& visual_ref, int frame_count) override;

private:
    StubConfig config_;
};

class StubAudioGrounder final : public AudioGrounder {
public:
    explicit StubAudioGrounder(StubConfig config) : config_(std::move(config)) {}
    double ground(const std::string& sentence, const std::string& audio_ref) override;

private:
    StubConfig config_;
};

/// Rule-based agent that reads its inputs back out of the rendered prompt.
class StubAgent final : public AgentBackend {
public:
    explicit StubAgent(StubConfig config) : config_(std::move(config)) {}
    std::string run(AgentRole role, const std::string& prompt) override;

private:
    std::string rewrite(const std::string& prompt) const;
    std::string extract(const std::string& prompt) const;
    std::string normalize(const std::string& prompt) const;
    std::string describe(const std::string& prompt) const;
    std::string select(const std::string& prompt) const;
    std::string refine(const std::string& prompt) const;
    std::string filter(const std::string& prompt) const;

    StubConfig config_;
};

class StubAnswerer final : public AnswerBackend {
public:
    explicit StubAnswerer(StubConfig config) : config_(std::move(config)) {}
    std::string answer(const std::string& prompt, const std::optional<std::string>& audio_ref,
                       const std::optional<std::string>& visual_ref) override;

private:
    StubConfig config_;
};

/// Scores by token overlap with the reference. Win-rate prompts: the answer
/// with more overlap wins every criterion, ties go to Answer 1.
class StubJudge final : public JudgeBackend {
public:
    std::string judge(const std::string& prompt) override;
};

/// In-memory concept -> candidates map; also the file-backed fixture source.
class MapKnowledgeSource final : public KnowledgeSource {
public:
    explicit MapKnowledgeSource(std::map<std::string, std::vector<std::string>> entries)
        : entries_(std::move(entries)) {}
    /// Reads a JSON object {"concept": ["description", ...], ...}.
    static MapKnowledgeSource from_file(const std::string& path);

    std::vector<std::string> query(const std::string& concept_name) override;

private:
    std::map<std::string, std::vector<std::string>> entries_;
};

/// Agent whose behaviour is a caller-supplied function; used for scripted tests.
class FunctionAgent final : public AgentBackend {
public:
    using Fn = std::function<std::string(AgentRole, const std::string&)>;
    explicit FunctionAgent(Fn fn) : fn_(std::move(fn)) {}
    std::string run(AgentRole role, const std::string& prompt) override { return fn_(role, prompt); }

private:
    Fn fn_;
};

Backends make_stub_backends(const StubConfig& config);

/// Last line of `prompt` starting with `prefix`, with the prefix removed.
std::optional<std::string> prompt_field(const std::string& prompt, const std::string& prefix);

/// Relation words known to the stub extractor.
const std::vector<std::string>& default_relations();

}  // namespace m3kg::stubs
