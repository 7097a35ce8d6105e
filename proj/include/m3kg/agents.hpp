#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "m3kg/backend.hpp"
#include "m3kg/graph.hpp"
#include "m3kg/prompts.hpp"

namespace m3kg::agents {

inline constexpr std::size_t kCandidateCap = 5;
inline constexpr std::size_t kMaxConceptLength = 128;
inline constexpr int kAcceptScore = 7;
inline constexpr int kMaxProducerCalls = 3;

struct CorpusSample {
    SampleId id;
    std::string caption;
    std::optional<std::string> audio_ref;
    std::optional<std::string> visual_ref;
    std::optional<std::string> title;
    std::optional<std::string> metadata_description;  // manifest field "description"

    bool operator==(const CorpusSample&) const = default;
};

/// One manifest record. Throws InvalidInput when the caption is empty, no
/// media reference is present, or a field has the wrong type.
CorpusSample parse_sample(const nlohmann::json& record);
nlohmann::json sample_to_json(const CorpusSample& sample);

/// JSON-lines manifest; blank lines are skipped. Errors name the line.
std::vector<CorpusSample> parse_manifest(std::string_view content);
std::vector<CorpusSample> load_manifest(const std::filesystem::path& path);

/// Append-only JSON-lines audit trail of drops, skips, fallbacks and
/// discards. Safe for concurrent appends.
class AuditLog {
public:
    AuditLog() = default;
    AuditLog(const AuditLog& other);
    AuditLog& operator=(const AuditLog& other);

    void record(nlohmann::json event);
    void append(const AuditLog& other);
    std::vector<nlohmann::json> records() const;
    std::size_t count(std::string_view event) const;
    std::string to_jsonl() const;
    void write(const std::filesystem::path& path) const;

private:
    mutable std::mutex mu_;
    std::vector<nlohmann::json> records_;
};

struct RawTriplet {
    std::string head_surface;
    std::string relation;
    std::string tail_surface;

    bool operator==(const RawTriplet&) const = default;
};

struct ParseDrop {
    std::size_t line = 0;  // 1-based line in the agent output
    std::string text;
    std::string reason;
};

struct ExtractResult {
    std::vector<RawTriplet> triplets;
    std::vector<ParseDrop> drops;
};

/// Parses `(h, r, t)` lines. A line must be wrapped in parentheses and split
/// into exactly three non-empty fields by top-level commas; anything else is
/// dropped and reported. Blank lines are ignored.
ExtractResult parse_triplets(std::string_view agent_output);

enum class DescriptionOrigin { KnowledgeBase, LlmCallback };

struct CandidateDescriptions {
    std::string concept_name;
    std::vector<std::string> candidates;
    DescriptionOrigin origin = DescriptionOrigin::KnowledgeBase;
};

/// First number in the inspector's reply, floored and clamped to [0, 10];
/// nullopt when there is none.
std::optional<int> parse_inspector_score(std::string_view reply);

struct InspectionOutcome {
    bool accepted = false;
    std::string text;  // accepted description, empty when discarded
    int producer_calls = 0;
    std::vector<int> scores;  // one per producer call
};

/// Returns a candidate description or nullopt when the producer's output is
/// unusable (counted as score 0 without consulting the inspector).
using Producer = std::function<std::optional<std::string>()>;

/// Graph-ready contents of one processed sample.
struct PreparedSample {
    SampleId id;
    std::string enriched_caption;
    std::vector<TripletInput> triplets;
    std::map<EntityMention, std::string> descriptions;
    std::vector<MediaInput> media;
};

/// The construction agents. Each step renders its prompt template, calls the
/// role-addressed agent backend and validates the reply. Stateless apart
/// from the optional audit sink, so one instance per worker is cheap.
class Pipeline {
public:
    Pipeline(Backends backends, const PromptLibrary& prompts, AuditLog* audit = nullptr);

    /// Single-line caption enriched with title and description. Without any
    /// metadata the caption is returned and the agent is not called.
    std::string rewrite_caption(const CorpusSample& sample);

    ExtractResult extract_triplets(const std::string& enriched_caption);

    /// Canonical concept for a mention; falls back to the trimmed surface when
    /// the reply is empty, multi-line or longer than kMaxConceptLength.
    std::string normalize_entity(const std::string& surface);

    /// Knowledge-base candidates (at most kCandidateCap, KB order). An empty
    /// KB result triggers the searcher callback, whose output goes through the
    /// inspector; nullopt when that description is discarded.
    std::optional<CandidateDescriptions> search_descriptions(const std::string& concept_name,
                                                             const std::string& enriched_caption);

    /// Agent choice among the candidates, repaired to the candidate with the
    /// highest token overlap when it is not returned verbatim.
    std::string select_description(const std::string& concept_name, const std::string& enriched_caption,
                                   const CandidateDescriptions& candidates);

    /// Adapts `selected` to the original phrasing. Empty replies throw
    /// BackendResponseError.
    std::string refine_description(const std::string& original_surface, const std::string& concept_name,
                                   const std::string& selected);

    /// Self-reflection loop: calls `produce` until the inspector scores a
    /// description at least kAcceptScore, at most kMaxProducerCalls times.
    InspectionOutcome inspect_and_accept(const std::string& concept_name, const Producer& produce,
                                         AgentRole producer);

    /// Search, select, refine and inspect for one mention.
    std::optional<std::string> describe_entity(const std::string& surface, const std::string& concept_name,
                                               const std::string& enriched_caption);

    /// Runs every construction step for one sample and embeds its media.
    PreparedSample prepare(const CorpusSample& sample);

private:
    std::string call(AgentRole role, const std::map<std::string, std::string>& values);
    std::vector<std::string> query_knowledge(const std::string& concept_name);
    void note(nlohmann::json event);

    Backends backends_;
    PromptLibrary prompts_;
    AuditLog* audit_;
};

struct BuildOptions {
    int jobs = 1;
};

struct BuildStats {
    std::size_t samples = 0;
    std::size_t skipped = 0;
    std::size_t without_triplets = 0;
    std::size_t parse_drops = 0;
    std::size_t discarded_descriptions = 0;
};

/// Builds and finalizes the graph. Samples are prepared concurrently (up to
/// `jobs` workers) and committed in corpus order, so the result does not
/// depend on scheduling. BackendUnavailable aborts the build; any other
/// per-sample failure skips that sample and is audited.
Graph build_graph(const std::vector<CorpusSample>& corpus, const Backends& backends, const PromptLibrary& prompts,
                  const BuildOptions& options, AuditLog* audit = nullptr, BuildStats* stats = nullptr);

}  // namespace m3kg::agents
