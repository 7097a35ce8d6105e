#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "m3kg/backend.hpp"

namespace m3kg::protocol {

// Endpoint paths. Agents are addressed as kAgentPrefix + role_name(role).
inline constexpr std::string_view kEmbedPath = "/v1/embed";
inline constexpr std::string_view kGroundVisualPath = "/v1/ground/visual";
inline constexpr std::string_view kGroundAudioPath = "/v1/ground/audio";
inline constexpr std::string_view kAgentPrefix = "/v1/agent/";
inline constexpr std::string_view kAnswerPath = "/v1/answer";
inline constexpr std::string_view kJudgePath = "/v1/judge";
inline constexpr std::string_view kKbSearchPath = "/v1/kb/search";

inline constexpr std::string_view kRequestIdHeader = "x-m3kg-request-id";
inline constexpr std::string_view kTimeoutHeader = "x-m3kg-timeout-ms";

struct EmbedRequest {
    Modality modality = Modality::Audio;
    std::string content_ref;
    bool operator==(const EmbedRequest&) const = default;
};
struct EmbedResponse {
    std::vector<float> embedding;
    bool operator==(const EmbedResponse&) const = default;
};
struct GroundVisualRequest {
    std::string entity;
    std::string visual_ref;
    int frame_count = 4;
    bool operator==(const GroundVisualRequest&) const = default;
};
struct GroundVisualResponse {
    std::vector<double> confidences;
    bool operator==(const GroundVisualResponse&) const = default;
};
struct GroundAudioRequest {
    std::string sentence;
    std::string audio_ref;
    bool operator==(const GroundAudioRequest&) const = default;
};
struct GroundAudioResponse {
    double score = 0.0;
    bool operator==(const GroundAudioResponse&) const = default;
};
/// Body of `/v1/agent/{role}` and `/v1/judge`.
struct PromptRequest {
    std::string prompt;
    bool operator==(const PromptRequest&) const = default;
};
struct AnswerRequest {
    std::string prompt;
    std::optional<std::string> audio_ref;
    std::optional<std::string> visual_ref;
    bool operator==(const AnswerRequest&) const = default;
};
struct TextResponse {
    std::string text;
    bool operator==(const TextResponse&) const = default;
};
struct KbSearchRequest {
    std::string concept_name;  // wire field "concept"
    bool operator==(const KbSearchRequest&) const = default;
};
struct KbSearchResponse {
    std::vector<std::string> candidates;
    bool operator==(const KbSearchResponse&) const = default;
};
struct ErrorResponse {
    std::string error;
    bool operator==(const ErrorResponse&) const = default;
};

// Parsing is strict: missing fields and wrong types throw nlohmann::json
// exceptions, non-finite numbers and unknown enum values throw SchemaError.
void to_json(nlohmann::json& j, const EmbedRequest& r);
void from_json(const nlohmann::json& j, EmbedRequest& r);
void to_json(nlohmann::json& j, const EmbedResponse& r);
void from_json(const nlohmann::json& j, EmbedResponse& r);
void to_json(nlohmann::json& j, const GroundVisualRequest& r);
void from_json(const nlohmann::json& j, GroundVisualRequest& r);
void to_json(nlohmann::json& j, const GroundVisualResponse& r);
void from_json(const nlohmann::json& j, GroundVisualResponse& r);
void to_json(nlohmann::json& j, const GroundAudioRequest& r);
void from_json(const nlohmann::json& j, GroundAudioRequest& r);
void to_json(nlohmann::json& j, const GroundAudioResponse& r);
void from_json(const nlohmann::json& j, GroundAudioResponse& r);
void to_json(nlohmann::json& j, const PromptRequest& r);
void from_json(const nlohmann::json& j, PromptRequest& r);
void to_json(nlohmann::json& j, const AnswerRequest& r);
void from_json(const nlohmann::json& j, AnswerRequest& r);
void to_json(nlohmann::json& j, const TextResponse& r);
void from_json(const nlohmann::json& j, TextResponse& r);
void to_json(nlohmann::json& j, const KbSearchRequest& r);
void from_json(const nlohmann::json& j, KbSearchRequest& r);
void to_json(nlohmann::json& j, const KbSearchResponse& r);
void from_json(const nlohmann::json& j, KbSearchResponse& r);
void to_json(nlohmann::json& j, const ErrorResponse& r);
void from_json(const nlohmann::json& j, ErrorResponse& r);

struct ClientOptions {
    std::string base_url;  // e.g. "http://127.0.0.1:8080"
    int timeout_ms = 30000;
    int retries = 2;  // attempts after the first one
    int backoff_ms = 100;
    int max_in_flight = 4;
    std::optional<std::string> bearer_token;
};

/// JSON-over-HTTP client with request ids, bounded in-flight requests and
/// exponential-backoff retries. Connection failures, 429 and 5xx are retried;
/// other 4xx fail immediately with BackendResponseError. Exhausted retries
/// raise BackendUnavailable.
class HttpClient {
public:
    explicit HttpClient(ClientOptions options);
    ~HttpClient();

    nlohmann::json post(std::string_view path, const nlohmann::json& body);

    const ClientOptions& options() const { return options_; }

private:
    std::string next_request_id();

    ClientOptions options_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;
    std::atomic<std::uint64_t> counter_{0};
};

/// One endpoint speaking the whole protocol; each role-specific interface maps
/// onto its endpoint.
class HttpBackend final : public Embedder,
                          public VisualGrounder,
                          public AudioGrounder,
                          public AgentBackend,
                          public AnswerBackend,
                          public JudgeBackend,
                          public KnowledgeSource {
public:
    explicit HttpBackend(ClientOptions options) : client_(std::move(options)) {}

    std::vector<float> embed(Modality modality, const std::string& content_ref) override;
    std::vector<double> ground(const std::string& entity, const std::string& visual_ref, int frame_count) override;
    double ground(const std::string& sentence, const std::string& audio_ref) override;
    std::string run(AgentRole role, const std::string& prompt) override;
    std::string answer(const std::string& prompt, const std::optional<std::string>& audio_ref,
                       const std::optional<std::string>& visual_ref) override;
    std::string judge(const std::string& prompt) override;
    std::vector<std::string> query(const std::string& concept_name) override;

private:
    template <class Response, class Request>
    Response call(std::string_view path, const Request& request);

    HttpClient client_;
};

}  // namespace m3kg::protocol
