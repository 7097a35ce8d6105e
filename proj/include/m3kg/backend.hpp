#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "m3kg/error.hpp"
#include "m3kg/ids.hpp"
#include "m3kg/prompts.hpp"

namespace m3kg {

// Every model dependency of the engine sits behind one of these interfaces.
// Implementations: deterministic in-process stubs (stubs.hpp) and the HTTP
// client for the wire protocol (protocol.hpp). All must be safe for
// concurrent calls.

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<float> embed(Modality modality, const std::string& content_ref) = 0;
};

class VisualGrounder {
public:
    virtual ~VisualGrounder() = default;
    /// Per-frame detection confidences of `entity` on `frame_count` uniformly
    /// sampled frames of `visual_ref`. May return fewer values than frames.
    virtual std::vector<double> ground(const std::string& entity, const std::string& visual_ref,
                                       int frame_count) = 0;
};

class AudioGrounder {
public:
    virtual ~AudioGrounder() = default;
    virtual double ground(const std::string& sentence, const std::string& audio_ref) = 0;
};

class AgentBackend {
public:
    virtual ~AgentBackend() = default;
    virtual std::string run(AgentRole role, const std::string& prompt) = 0;
};

class AnswerBackend {
public:
    virtual ~AnswerBackend() = default;
    virtual std::string answer(const std::string& prompt, const std::optional<std::string>& audio_ref,
                               const std::optional<std::string>& visual_ref) = 0;
};

class JudgeBackend {
public:
    virtual ~JudgeBackend() = default;
    virtual std::string judge(const std::string& prompt) = 0;
};

/// Raised by a knowledge source whose lookup exceeded its time budget.
class KnowledgeTimeout : public Error {
public:
    using Error::Error;
};

/// Encyclopedic lookup: candidate descriptions for a normalized concept.
class KnowledgeSource {
public:
    virtual ~KnowledgeSource() = default;
    virtual std::vector<std::string> query(const std::string& concept_name) = 0;
};

struct Backends {
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<VisualGrounder> visual_grounder;
    std::shared_ptr<AudioGrounder> audio_grounder;
    std::shared_ptr<AgentBackend> agent;
    std::shared_ptr<AnswerBackend> answerer;
    std::shared_ptr<JudgeBackend> judge;
    std::shared_ptr<KnowledgeSource> knowledge;
};

}  // namespace m3kg
