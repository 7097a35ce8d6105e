#include "stub_server.hpp"

#include <httplib.h>

#include "m3kg/protocol.hpp"

namespace m3kg::testing {

using json = nlohmann::json;
namespace p = m3kg::protocol;

StubServer::StubServer(Backends backends, FaultFn fault)
    : backends_(std::move(backends)), fault_(std::move(fault)), server_(std::make_unique<httplib::Server>()) {
    server_->Post(R"(/v1/.*)", [this](const httplib::Request& req, httplib::Response& res) {
        SeenRequest seen{req.path, json(), req.get_header_value(std::string(p::kRequestIdHeader)),
                         req.get_header_value(std::string(p::kTimeoutHeader)), req.get_header_value("Authorization")};
        std::size_t attempt = 0;
        {
            std::lock_guard lock(mu_);
            attempt = attempts_[req.path]++;
        }
        try {
            seen.body = json::parse(req.body);
        } catch (const json::exception&) {
        }
        {
            std::lock_guard lock(mu_);
            seen_.push_back(seen);
        }
        if (fault_) {
            if (auto f = fault_(req.path, attempt)) {
                res.status = f->status;
                if (f->request_id_override) {
                    res.set_header(std::string(p::kRequestIdHeader), *f->request_id_override);
                } else if (f->echo_request_id) {
                    res.set_header(std::string(p::kRequestIdHeader), seen.request_id);
                }
                res.set_content(f->body, "application/json");
                return;
            }
        }
        res.set_header(std::string(p::kRequestIdHeader), seen.request_id);
        try {
            if (seen.body.is_discarded() || seen.body.is_null()) throw std::invalid_argument("body is not JSON");
            auto reply = dispatch(req.path, seen.body);
            if (!reply) {
                res.status = 404;
                res.set_content(json(p::ErrorResponse{"unknown endpoint"}).dump(), "application/json");
                return;
            }
            res.status = 200;
            res.set_content(reply->dump(), "application/json");
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(json(p::ErrorResponse{e.what()}).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json(p::ErrorResponse{e.what()}).dump(), "application/json");
        }
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

StubServer::~StubServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string StubServer::url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::vector<SeenRequest> StubServer::requests() const {
    std::lock_guard lock(mu_);
    return seen_;
}

std::size_t StubServer::request_count(const std::string& path) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& r : seen_) n += r.path == path;
    return n;
}

std::optional<json> StubServer::dispatch(const std::string& path, const json& body) {
    if (path == p::kEmbedPath) {
        auto r = body.get<p::EmbedRequest>();
        return json(p::EmbedResponse{backends_.embedder->embed(r.modality, r.content_ref)});
    }
    if (path == p::kGroundVisualPath) {
        auto r = body.get<p::GroundVisualRequest>();
        return json(p::GroundVisualResponse{backends_.visual_grounder->ground(r.entity, r.visual_ref, r.frame_count)});
    }
    if (path == p::kGroundAudioPath) {
        auto r = body.get<p::GroundAudioRequest>();
        return json(p::GroundAudioResponse{backends_.audio_grounder->ground(r.sentence, r.audio_ref)});
    }
    if (path.starts_with(p::kAgentPrefix)) {
        auto role = parse_role(std::string_view(path).substr(p::kAgentPrefix.size()));
        if (!role) return std::nullopt;
        auto r = body.get<p::PromptRequest>();
        return json(p::TextResponse{backends_.agent->run(*role, r.prompt)});
    }
    if (path == p::kAnswerPath) {
        auto r = body.get<p::AnswerRequest>();
        return json(p::TextResponse{backends_.answerer->answer(r.prompt, r.audio_ref, r.visual_ref)});
    }
    if (path == p::kJudgePath) {
        auto r = body.get<p::PromptRequest>();
        return json(p::TextResponse{backends_.judge->judge(r.prompt)});
    }
    if (path == p::kKbSearchPath) {
        auto r = body.get<p::KbSearchRequest>();
        return json(p::KbSearchResponse{backends_.knowledge->query(r.concept_name)});
    }
    return std::nullopt;
}

}  // namespace m3kg::testing
