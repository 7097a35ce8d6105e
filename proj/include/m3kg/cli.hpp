#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "m3kg/agents.hpp"
#include "m3kg/config.hpp"
#include "m3kg/generation.hpp"
#include "m3kg/grasp.hpp"
#include "m3kg/retrieval.hpp"

namespace m3kg::cli {

enum ExitCode : int { kOk = 0, kBackendFailure = 1, kInputFailure = 2, kConfigFailure = 3 };

/// Runs the `m3kg` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

struct QuerySpec {
    nlohmann::json id;  // copied verbatim into outputs
    std::string question;
    std::optional<std::string> audio_ref;
    std::optional<std::string> visual_ref;
    std::optional<std::string> reference;
};

/// Queryset JSON lines. Throws InvalidInput naming the line.
std::vector<QuerySpec> parse_queryset(std::string_view content);

/// Everything a query needs: the graph, its indices and the backends.
struct Engine {
    Graph graph{ModalityDims{}};
    IndexSet indices;
    Backends backends;
    PromptLibrary prompts = PromptLibrary::defaults();
    EngineConfig config;
};

/// Loads the graph and its indices (from sidecars when current, otherwise
/// built in memory). Modalities absent from the graph get no index.
Engine open_engine(const std::filesystem::path& graph_path, EngineConfig config);

struct QueryResult {
    RetrievalResult retrieval;
    StageResult pruned;
    AugmentedPrompt prompt;
    std::optional<std::string> answer;
};

/// retrieve -> grasp -> assemble, then answer when `with_answer` is set.
/// `use_grasp = false` hands the initial subgraph straight to generation.
QueryResult run_query(const Engine& engine, const QuerySpec& query, bool use_grasp, bool with_answer);

}  // namespace m3kg::cli
