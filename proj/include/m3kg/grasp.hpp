#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "m3kg/backend.hpp"
#include "m3kg/graph.hpp"
#include "m3kg/prompts.hpp"
#include "m3kg/retrieval.hpp"

namespace m3kg {

/// Component switches for ablations.
struct GraspStages {
    bool visual_grounding = true;
    bool audio_grounding = true;
    bool llm_filter = true;
};

struct GraspConfig {
    double eta_v = 0.0;
    double eta_a = 0.0;
    double eta_av = 0.0;
    int frame_count = 4;
    GraspStages stages;
};

/// Media of the query plus the question; refs go to the grounding backends.
struct GraspQuery {
    std::string id;
    std::string question;
    std::optional<std::string> visual_ref;
    std::optional<std::string> audio_ref;
};

enum class GroundingMode { None, Visual, Audio, Fused };

const char* to_string(GroundingMode mode);

/// Enabled grounding stages intersected with the modalities of the query.
GroundingMode grounding_mode(const GraspConfig& config, const GraspQuery& query);

/// Threshold applied in a mode (0 for None).
double threshold_for(const GraspConfig& config, GroundingMode mode);

struct TraceRecord {
    TripletId triplet;
    std::optional<double> visual_score;
    std::optional<double> audio_score;
    std::optional<double> fused_score;
    bool kept_by_grounding = true;
    bool kept_by_filter = true;
};

struct PruneTrace {
    std::string query_id;
    GroundingMode mode = GroundingMode::None;
    double eta = 0.0;
    bool filter_ran = false;
    bool filter_fallback = false;
    std::string fallback_reason;
    std::vector<TraceRecord> records;  // one per triplet of the initial subgraph, in order

    /// One JSON object per record, tagged with the query id and `config`.
    std::vector<nlohmann::json> to_json_records(const nlohmann::json& config) const;
};

nlohmann::json grasp_config_json(const GraspConfig& config);

/// "head relation tail" with the original surfaces, single spaces.
std::string serialize_triplet(const Triplet& triplet, const Graph& graph);

/// Largest per-frame confidence; frames without a detection count as 0.
double frame_max(const std::vector<double>& confidences);

/// Presence scores for one query. Visual entity scores are memoized, so the
/// visual grounder sees each distinct entity once.
class PresenceScorer {
public:
    PresenceScorer(const Graph& graph, const GraspQuery& query, VisualGrounder* visual, AudioGrounder* audio,
                   int frame_count);

    double visual_entity(EntityId entity);
    double visual_triplet(TripletId triplet);
    double audio_triplet(TripletId triplet);
    double fused_triplet(TripletId triplet);

    std::size_t visual_calls() const { return visual_calls_; }
    std::size_t audio_calls() const { return audio_calls_; }

private:
    const Graph& graph_;
    const GraspQuery& query_;
    VisualGrounder* visual_;
    AudioGrounder* audio_;
    int frame_count_;
    std::map<EntityId, double> entity_scores_;
    std::map<TripletId, double> audio_scores_;
    std::size_t visual_calls_ = 0;
    std::size_t audio_calls_ = 0;
};

struct StageResult {
    OrderedTripletSet kept;
    PruneTrace trace;
};

/// Keeps triplets whose score in the query's grounding mode is >= its
/// threshold, in input order.
StageResult ground_prune(const OrderedTripletSet& initial, const GraspQuery& query, const GraspConfig& config,
                         const Backends& backends, const Graph& graph);

/// Kept indices from a filter reply: the first `[...]` list, or a bare list
/// of integers. nullopt on anything else or an index >= n. Duplicates are
/// ignored.
std::optional<std::vector<std::size_t>> parse_index_list(std::string_view reply, std::size_t n);

/// Conservative LLM keep-or-drop pass. Kept triplets stay in input order; an
/// unusable reply or an unreachable agent keeps everything.
StageResult llm_filter(const std::string& question, const OrderedTripletSet& grounded, AgentBackend* agent,
                       const PromptLibrary& prompts, const Graph& graph);

/// Grounding prune followed by the LLM filter, each behind its switch.
StageResult grasp(const OrderedTripletSet& initial, const GraspQuery& query, const GraspConfig& config,
                  const Backends& backends, const PromptLibrary& prompts, const Graph& graph);

}  // namespace m3kg
