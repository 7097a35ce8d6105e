#include "m3kg/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "m3kg/error.hpp"
#include "m3kg/protocol.hpp"
#include "m3kg/text.hpp"

namespace m3kg {

using json = nlohmann::json;

namespace {

void check_keys(const json& obj, const char* section, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) throw ConfigError(fmt::format("config section '{}' must be an object", section));
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("unknown key '{}' in config section '{}'", key, section));
        }
    }
}

double non_negative(const json& v, const char* name) {
    if (!v.is_number()) throw ConfigError(fmt::format("'{}' must be a number", name));
    const double d = v.get<double>();
    if (!std::isfinite(d) || d < 0) throw ConfigError(fmt::format("'{}' must be a finite non-negative number", name));
    return d;
}

int positive_int(const json& v, const char* name, int min = 1) {
    if (!v.is_number_integer() || v.get<long long>() < min) {
        throw ConfigError(fmt::format("'{}' must be an integer >= {}", name, min));
    }
    return v.get<int>();
}

bool is_inf_text(const json& v) {
    if (!v.is_string()) return false;
    const auto s = text::to_lower(v.get<std::string>());
    return s == "inf" || s == "infinity";
}

std::size_t parse_hops(const json& v) {
    if (v.is_null() || is_inf_text(v)) return kUnboundedHops;
    return static_cast<std::size_t>(positive_int(v, "retrieval.hops", 0));
}

std::string endpoint(const json& v, const char* name) {
    if (!v.is_string() || v.get<std::string>().empty()) {
        throw ConfigError(fmt::format("backend '{}' must be \"stub\", \"none\" or a URL", name));
    }
    return v.get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

double parse_tau(const json& value) {
    if (value.is_null() || is_inf_text(value)) return kNoThreshold;
    return non_negative(value, "tau");
}

void apply_profile(EngineConfig& config, const std::string& name) {
    config.retrieval.k = 5;
    if (name == "audiocaps") {
        config.retrieval.tau = 0.3;
        config.grasp.eta_a = 0.5;
    } else if (name == "vcgpt") {
        config.retrieval.tau = 0.15;
        config.grasp.eta_v = 1.5;
    } else if (name == "valor") {
        config.retrieval.tau = 4.5;
        config.grasp.eta_av = 1.2;
    } else {
        throw ConfigError(fmt::format("unknown profile '{}' (expected audiocaps, vcgpt or valor)", name));
    }
}

void apply_config(EngineConfig& config, const json& doc, const std::filesystem::path& base_dir) {
    check_keys(doc, "<root>",
               {"profile", "backends", "retrieval", "grasp", "generation", "jobs", "retries", "timeout_ms",
                "backoff_ms", "max_in_flight", "bearer_token", "prompts_dir", "stubs", "stubs_file"});
    try {
        if (doc.contains("profile")) apply_profile(config, doc.at("profile").get<std::string>());

        if (doc.contains("backends")) {
            const auto& b = doc.at("backends");
            check_keys(b, "backends",
                       {"all", "embedder", "visual_grounder", "audio_grounder", "agent", "answerer", "judge", "knowledge"});
            if (b.contains("all")) {
                const auto all = endpoint(b.at("all"), "all");
                config.backends = {all, all, all, all, all, all, all};
            }
            auto set = [&](const char* key, std::string& slot) {
                if (b.contains(key)) slot = endpoint(b.at(key), key);
            };
            set("embedder", config.backends.embedder);
            set("visual_grounder", config.backends.visual_grounder);
            set("audio_grounder", config.backends.audio_grounder);
            set("agent", config.backends.agent);
            set("answerer", config.backends.answerer);
            set("judge", config.backends.judge);
            set("knowledge", config.backends.knowledge);
            if (config.backends.knowledge.starts_with("file:")) {
                config.backends.knowledge = "file:" + resolve(base_dir, config.backends.knowledge.substr(5)).string();
            }
        }
        if (doc.contains("retrieval")) {
            const auto& r = doc.at("retrieval");
            check_keys(r, "retrieval", {"k", "tau", "hops"});
            if (r.contains("k")) config.retrieval.k = static_cast<std::size_t>(positive_int(r.at("k"), "retrieval.k"));
            if (r.contains("tau")) config.retrieval.tau = parse_tau(r.at("tau"));
            if (r.contains("hops")) config.retrieval.hops = parse_hops(r.at("hops"));
        }
        if (doc.contains("grasp")) {
            const auto& g = doc.at("grasp");
            check_keys(g, "grasp", {"eta_v", "eta_a", "eta_av", "frame_count", "stages"});
            if (g.contains("eta_v")) config.grasp.eta_v = non_negative(g.at("eta_v"), "grasp.eta_v");
            if (g.contains("eta_a")) config.grasp.eta_a = non_negative(g.at("eta_a"), "grasp.eta_a");
            if (g.contains("eta_av")) config.grasp.eta_av = non_negative(g.at("eta_av"), "grasp.eta_av");
            if (g.contains("frame_count")) config.grasp.frame_count = positive_int(g.at("frame_count"), "grasp.frame_count");
            if (g.contains("stages")) {
                const auto& s = g.at("stages");
                check_keys(s, "grasp.stages", {"visual", "audio", "filter"});
                if (s.contains("visual")) config.grasp.stages.visual_grounding = s.at("visual").get<bool>();
                if (s.contains("audio")) config.grasp.stages.audio_grounding = s.at("audio").get<bool>();
                if (s.contains("filter")) config.grasp.stages.llm_filter = s.at("filter").get<bool>();
            }
        }
        if (doc.contains("generation")) {
            const auto& g = doc.at("generation");
            check_keys(g, "generation", {"char_budget"});
            if (g.contains("char_budget")) {
                config.char_budget = static_cast<std::size_t>(positive_int(g.at("char_budget"), "generation.char_budget"));
            }
        }
        if (doc.contains("jobs")) config.jobs = positive_int(doc.at("jobs"), "jobs");
        if (doc.contains("retries")) config.retries = positive_int(doc.at("retries"), "retries", 0);
        if (doc.contains("timeout_ms")) config.timeout_ms = positive_int(doc.at("timeout_ms"), "timeout_ms");
        if (doc.contains("backoff_ms")) config.backoff_ms = positive_int(doc.at("backoff_ms"), "backoff_ms", 0);
        if (doc.contains("max_in_flight")) config.max_in_flight = positive_int(doc.at("max_in_flight"), "max_in_flight");
        if (doc.contains("bearer_token")) config.bearer_token = doc.at("bearer_token").get<std::string>();
        if (doc.contains("prompts_dir")) config.prompts_dir = resolve(base_dir, doc.at("prompts_dir").get<std::string>());
        if (doc.contains("stubs_file")) {
            const auto path = resolve(base_dir, doc.at("stubs_file").get<std::string>());
            std::ifstream in(path);
            if (!in) throw ConfigError(fmt::format("cannot open stubs file '{}'", path.string()));
            config.stubs = stubs::parse_stub_config(json::parse(in));
        }
        if (doc.contains("stubs")) config.stubs = stubs::parse_stub_config(doc.at("stubs"));
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("invalid config: {}", e.what()));
    }
}

EngineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(fmt::format("config '{}' is not valid JSON", path.string()));
    EngineConfig config;
    apply_config(config, doc, path.parent_path());
    return config;
}

json config_to_json(const EngineConfig& c) {
    auto number_or_inf = [](double v) { return std::isinf(v) ? json("inf") : json(v); };
    return json{{"backends",
                 {{"embedder", c.backends.embedder},
                  {"visual_grounder", c.backends.visual_grounder},
                  {"audio_grounder", c.backends.audio_grounder},
                  {"agent", c.backends.agent},
                  {"answerer", c.backends.answerer},
                  {"judge", c.backends.judge},
                  {"knowledge", c.backends.knowledge}}},
                {"retrieval",
                 {{"k", c.retrieval.k},
                  {"tau", number_or_inf(c.retrieval.tau)},
                  {"hops", c.retrieval.hops == kUnboundedHops ? json("inf") : json(c.retrieval.hops)}}},
                {"grasp", grasp_config_json(c.grasp)},
                {"generation", {{"char_budget", c.char_budget}}},
                {"jobs", c.jobs},
                {"retries", c.retries},
                {"timeout_ms", c.timeout_ms}};
}

Backends make_backends(const EngineConfig& config) {
    std::map<std::string, std::shared_ptr<protocol::HttpBackend>> clients;
    auto http = [&](const std::string& url) {
        auto& slot = clients[url];
        if (!slot) {
            protocol::ClientOptions o;
            o.base_url = url;
            o.timeout_ms = config.timeout_ms;
            o.retries = config.retries;
            o.backoff_ms = config.backoff_ms;
            o.max_in_flight = config.max_in_flight;
            o.bearer_token = config.bearer_token;
            slot = std::make_shared<protocol::HttpBackend>(std::move(o));
        }
        return slot;
    };
    auto check_url = [](const std::string& ep, const char* role) {
        if (!ep.starts_with("http://") && !ep.starts_with("https://")) {
            throw ConfigError(fmt::format("backend '{}': unsupported endpoint '{}'", role, ep));
        }
    };

    const auto stubs = stubs::make_stub_backends(config.stubs);
    Backends b;
    auto pick = [&]<class T>(const std::string& ep, const std::shared_ptr<T>& stub, const char* role) -> std::shared_ptr<T> {
        if (ep == "stub") return stub;
        if (ep == "none") return nullptr;
        check_url(ep, role);
        return http(ep);
    };
    b.embedder = pick(config.backends.embedder, stubs.embedder, "embedder");
    b.visual_grounder = pick(config.backends.visual_grounder, stubs.visual_grounder, "visual_grounder");
    b.audio_grounder = pick(config.backends.audio_grounder, stubs.audio_grounder, "audio_grounder");
    b.agent = pick(config.backends.agent, stubs.agent, "agent");
    b.answerer = pick(config.backends.answerer, stubs.answerer, "answerer");
    b.judge = pick(config.backends.judge, stubs.judge, "judge");
    if (config.backends.knowledge.starts_with("file:")) {
        b.knowledge = std::make_shared<stubs::MapKnowledgeSource>(
            stubs::MapKnowledgeSource::from_file(config.backends.knowledge.substr(5)));
    } else {
        b.knowledge = pick(config.backends.knowledge, stubs.knowledge, "knowledge");
    }
    return b;
}

PromptLibrary make_prompts(const EngineConfig& config) {
    return config.prompts_dir ? PromptLibrary::with_overrides(*config.prompts_dir) : PromptLibrary::defaults();
}

}  // namespace m3kg
