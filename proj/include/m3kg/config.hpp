#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "m3kg/backend.hpp"
#include "m3kg/grasp.hpp"
#include "m3kg/retrieval.hpp"
#include "m3kg/stubs.hpp"

namespace m3kg {

/// Where each dependency lives: "stub", an http(s) base URL, or for the
/// knowledge source also "file:<path>" (JSON object concept -> candidates).
struct BackendEndpoints {
    std::string embedder = "stub";
    std::string visual_grounder = "stub";
    std::string audio_grounder = "stub";
    std::string agent = "stub";
    std::string answerer = "stub";
    std::string judge = "stub";
    std::string knowledge = "stub";
};

struct EngineConfig {
    BackendEndpoints backends;
    RetrievalConfig retrieval;
    GraspConfig grasp;
    std::size_t char_budget = 16384;
    int jobs = 1;
    int retries = 2;
    int timeout_ms = 30000;
    int backoff_ms = 100;
    int max_in_flight = 4;
    std::optional<std::string> bearer_token;
    std::optional<std::filesystem::path> prompts_dir;
    stubs::StubConfig stubs;
};

/// Named per-benchmark settings: audiocaps, vcgpt, valor. Throws ConfigError
/// for an unknown name.
void apply_profile(EngineConfig& config, const std::string& name);

/// Overlays a JSON config document onto `config`. Relative paths resolve
/// against `base_dir`. Throws ConfigError on unknown keys or bad values.
void apply_config(EngineConfig& config, const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

EngineConfig load_config(const std::filesystem::path& path);

/// "inf", "infinity" or null mean no threshold; otherwise a non-negative number.
double parse_tau(const nlohmann::json& value);

nlohmann::json config_to_json(const EngineConfig& config);

/// Instantiates the configured backends; HTTP endpoints sharing a base URL
/// share one client.
Backends make_backends(const EngineConfig& config);

PromptLibrary make_prompts(const EngineConfig& config);

}  // namespace m3kg
