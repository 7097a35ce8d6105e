#include "m3kg/protocol.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace m3kg::protocol {

using json = nlohmann::json;

namespace {

double finite_number(const json& j, const char* field) {
    const double v = j.at(field).get<double>();
    if (!std::isfinite(v)) throw SchemaError(fmt::format("field '{}' is not finite", field));
    return v;
}

std::optional<std::string> optional_string(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

void to_json(json& j, const EmbedRequest& r) {
    j = json{{"modality", to_string(r.modality)}, {"content_ref", r.content_ref}};
}
void from_json(const json& j, EmbedRequest& r) {
    const auto m = j.at("modality").get<std::string>();
    if (m == "audio") {
        r.modality = Modality::Audio;
    } else if (m == "visual") {
        r.modality = Modality::Visual;
    } else {
        throw SchemaError("modality must be \"audio\" or \"visual\"");
    }
    r.content_ref = j.at("content_ref").get<std::string>();
}

void to_json(json& j, const EmbedResponse& r) { j = json{{"embedding", r.embedding}}; }
void from_json(const json& j, EmbedResponse& r) {
    r.embedding.clear();
    for (const auto& x : j.at("embedding")) {
        const double v = x.get<double>();
        if (!std::isfinite(v)) throw SchemaError("embedding value is not finite");
        r.embedding.push_back(static_cast<float>(v));
    }
}

void to_json(json& j, const GroundVisualRequest& r) {
    j = json{{"entity", r.entity}, {"visual_ref", r.visual_ref}, {"frame_count", r.frame_count}};
}
void from_json(const json& j, GroundVisualRequest& r) {
    r.entity = j.at("entity").get<std::string>();
    r.visual_ref = j.at("visual_ref").get<std::string>();
    r.frame_count = j.at("frame_count").get<int>();
}

void to_json(json& j, const GroundVisualResponse& r) { j = json{{"confidences", r.confidences}}; }
void from_json(const json& j, GroundVisualResponse& r) {
    r.confidences.clear();
    for (const auto& x : j.at("confidences")) {
        const double v = x.get<double>();
        if (!std::isfinite(v)) throw SchemaError("confidence is not finite");
        r.confidences.push_back(v);
    }
}

void to_json(json& j, const GroundAudioRequest& r) {
    j = json{{"sentence", r.sentence}, {"audio_ref", r.audio_ref}};
}
void from_json(const json& j, GroundAudioRequest& r) {
    r.sentence = j.at("sentence").get<std::string>();
    r.audio_ref = j.at("audio_ref").get<std::string>();
}

void to_json(json& j, const GroundAudioResponse& r) { j = json{{"score", r.score}}; }
void from_json(const json& j, GroundAudioResponse& r) { r.score = finite_number(j, "score"); }

void to_json(json& j, const PromptRequest& r) { j = json{{"prompt", r.prompt}}; }
void from_json(const json& j, PromptRequest& r) { r.prompt = j.at("prompt").get<std::string>(); }

void to_json(json& j, const AnswerRequest& r) {
    j = json{{"prompt", r.prompt}, {"audio_ref", nullable(r.audio_ref)}, {"visual_ref", nullable(r.visual_ref)}};
}
void from_json(const json& j, AnswerRequest& r) {
    r.prompt = j.at("prompt").get<std::string>();
    r.audio_ref = optional_string(j, "audio_ref");
    r.visual_ref = optional_string(j, "visual_ref");
}

void to_json(json& j, const TextResponse& r) { j = json{{"text", r.text}}; }
void from_json(const json& j, TextResponse& r) { r.text = j.at("text").get<std::string>(); }

void to_json(json& j, const KbSearchRequest& r) { j = json{{"concept", r.concept_name}}; }
void from_json(const json& j, KbSearchRequest& r) { r.concept_name = j.at("concept").get<std::string>(); }

void to_json(json& j, const KbSearchResponse& r) { j = json{{"candidates", r.candidates}}; }
void from_json(const json& j, KbSearchResponse& r) {
    r.candidates = j.at("candidates").get<std::vector<std::string>>();
}

void to_json(json& j, const ErrorResponse& r) { j = json{{"error", r.error}}; }
void from_json(const json& j, ErrorResponse& r) { r.error = j.at("error").get<std::string>(); }

HttpClient::HttpClient(ClientOptions options)
    : options_(std::move(options)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(std::max(1, options_.max_in_flight))) {}

HttpClient::~HttpClient() = default;

std::string HttpClient::next_request_id() {
    static const std::uint64_t process_token = std::random_device{}();
    return fmt::format("{:08x}-{}", process_token & 0xffffffffU, counter_.fetch_add(1));
}

json HttpClient::post(std::string_view path, const json& body) {
    const std::string payload = body.dump();
    const std::string request_id = next_request_id();
    std::string last_error;

    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms * (1LL << (attempt - 1))));
        }

        httplib::Result res = [&] {
            in_flight_->acquire();
            httplib::Client cli(options_.base_url);
            const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
            cli.set_connection_timeout(timeout);
            cli.set_read_timeout(timeout);
            cli.set_write_timeout(timeout);
            httplib::Headers headers{{std::string(kRequestIdHeader), request_id},
                                     {std::string(kTimeoutHeader), std::to_string(options_.timeout_ms)}};
            if (options_.bearer_token) headers.emplace("Authorization", "Bearer " + *options_.bearer_token);
            auto r = cli.Post(std::string(path), headers, payload, "application/json");
            in_flight_->release();
            return r;
        }();

        if (!res) {
            last_error = httplib::to_string(res.error());
        } else if (res->status == 200) {
            if (res->has_header(std::string(kRequestIdHeader)) &&
                res->get_header_value(std::string(kRequestIdHeader)) != request_id) {
                throw BackendResponseError(fmt::format("{}: response echoes request id '{}', expected '{}'", path,
                                                       res->get_header_value(std::string(kRequestIdHeader)),
                                                       request_id));
            }
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw BackendResponseError(fmt::format("{}: response is not JSON: {}", path, e.what()));
            }
        } else if (res->status == 429 || res->status >= 500) {
            last_error = fmt::format("HTTP {}", res->status);
        } else {
            std::string detail = res->body;
            try {
                detail = json::parse(res->body).get<ErrorResponse>().error;
            } catch (const json::exception&) {
            }
            throw BackendResponseError(fmt::format("{}: HTTP {}: {}", path, res->status, detail));
        }
        spdlog::warn("{} {} attempt {} failed: {}", options_.base_url, path, attempt + 1, last_error);
    }
    throw BackendUnavailable(fmt::format("{}{} unavailable after {} attempts: {}", options_.base_url, path,
                                         options_.retries + 1, last_error));
}

template <class Response, class Request>
Response HttpBackend::call(std::string_view path, const Request& request) {
    const json reply = client_.post(path, json(request));
    try {
        return reply.get<Response>();
    } catch (const json::exception& e) {
        throw BackendResponseError(fmt::format("{}: malformed response: {}", path, e.what()));
    } catch (const SchemaError& e) {
        throw BackendResponseError(fmt::format("{}: malformed response: {}", path, e.what()));
    }
}

std::vector<float> HttpBackend::embed(Modality modality, const std::string& content_ref) {
    return call<EmbedResponse>(kEmbedPath, EmbedRequest{modality, content_ref}).embedding;
}

std::vector<double> HttpBackend::ground(const std::string& entity, const std::string& visual_ref, int frame_count) {
    auto r = call<GroundVisualResponse>(kGroundVisualPath, GroundVisualRequest{entity, visual_ref, frame_count});
    if (r.confidences.empty() || r.confidences.size() > static_cast<std::size_t>(frame_count)) {
        throw BackendResponseError(fmt::format("visual grounding returned {} confidences for {} frames",
                                               r.confidences.size(), frame_count));
    }
    return r.confidences;
}

double HttpBackend::ground(const std::string& sentence, const std::string& audio_ref) {
    return call<GroundAudioResponse>(kGroundAudioPath, GroundAudioRequest{sentence, audio_ref}).score;
}

std::string HttpBackend::run(AgentRole role, const std::string& prompt) {
    const std::string path = std::string(kAgentPrefix) + std::string(role_name(role));
    return call<TextResponse>(path, PromptRequest{prompt}).text;
}

std::string HttpBackend::answer(const std::string& prompt, const std::optional<std::string>& audio_ref,
                                const std::optional<std::string>& visual_ref) {
    return call<TextResponse>(kAnswerPath, AnswerRequest{prompt, audio_ref, visual_ref}).text;
}

std::string HttpBackend::judge(const std::string& prompt) {
    return call<TextResponse>(kJudgePath, PromptRequest{prompt}).text;
}

std::vector<std::string> HttpBackend::query(const std::string& concept_name) {
    return call<KbSearchResponse>(kKbSearchPath, KbSearchRequest{concept_name}).candidates;
}

}  // namespace m3kg::protocol
