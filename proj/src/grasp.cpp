#include "m3kg/grasp.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "m3kg/error.hpp"
#include "m3kg/text.hpp"

namespace m3kg {

using json = nlohmann::json;

const char* to_string(GroundingMode mode) {
    switch (mode) {
        case GroundingMode::None:
            return "none";
        case GroundingMode::Visual:
            return "visual";
        case GroundingMode::Audio:
            return "audio";
        case GroundingMode::Fused:
            return "fused";
    }
    return "?";
}

GroundingMode grounding_mode(const GraspConfig& config, const GraspQuery& query) {
    const bool v = config.stages.visual_grounding && query.visual_ref.has_value();
    const bool a = config.stages.audio_grounding && query.audio_ref.has_value();
    if (v && a) return GroundingMode::Fused;
    if (v) return GroundingMode::Visual;
    if (a) return GroundingMode::Audio;
    return GroundingMode::None;
}

double threshold_for(const GraspConfig& config, GroundingMode mode) {
    switch (mode) {
        case GroundingMode::Visual:
            return config.eta_v;
        case GroundingMode::Audio:
            return config.eta_a;
        case GroundingMode::Fused:
            return config.eta_av;
        case GroundingMode::None:
            break;
    }
    return 0.0;
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<json> PruneTrace::to_json_records(const json& config) const {
    std::vector<json> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        json j;
        j["query"] = query_id;
        j["triplet"] = r.triplet.value;
        j["mode"] = to_string(mode);
        j["eta"] = eta;
        j["visual_score"] = optional_number(r.visual_score);
        j["audio_score"] = optional_number(r.audio_score);
        j["fused_score"] = optional_number(r.fused_score);
        j["kept_by_grounding"] = r.kept_by_grounding;
        j["kept_by_filter"] = r.kept_by_filter;
        j["filter_fallback"] = filter_fallback;
        j["config"] = config;
        out.push_back(std::move(j));
    }
    return out;
}

json grasp_config_json(const GraspConfig& c) {
    return json{{"eta_v", c.eta_v},
                {"eta_a", c.eta_a},
                {"eta_av", c.eta_av},
                {"frame_count", c.frame_count},
                {"stages",
                 {{"visual", c.stages.visual_grounding}, {"audio", c.stages.audio_grounding}, {"filter", c.stages.llm_filter}}}};
}

std::string serialize_triplet(const Triplet& triplet, const Graph& graph) {
    return fmt::format("{} {} {}", graph.entity(triplet.head).surface, triplet.relation,
                       graph.entity(triplet.tail).surface);
}

double frame_max(const std::vector<double>& confidences) {
    double best = 0.0;
    for (double c : confidences) best = std::max(best, c);
    return best;
}

PresenceScorer::PresenceScorer(const Graph& graph, const GraspQuery& query, VisualGrounder* visual,
                               AudioGrounder* audio, int frame_count)
    : graph_(graph), query_(query), visual_(visual), audio_(audio), frame_count_(frame_count) {
    if (frame_count_ < 1) throw ConfigError("frame_count must be at least 1");
}

double PresenceScorer::visual_entity(EntityId entity) {
    if (auto it = entity_scores_.find(entity); it != entity_scores_.end()) return it->second;
    if (!query_.visual_ref) throw InvalidInput("visual scoring needs a visual query");
    if (!visual_) throw ConfigError("no visual grounding backend configured");
    const auto& surface = graph_.entity(entity).surface;
    ++visual_calls_;
    const double score = frame_max(visual_->ground(surface, *query_.visual_ref, frame_count_));
    entity_scores_.emplace(entity, score);
    return score;
}

double PresenceScorer::visual_triplet(TripletId triplet) {
    const auto& t = graph_.triplet(triplet);
    return visual_entity(t.head) + visual_entity(t.tail);
}

double PresenceScorer::audio_triplet(TripletId triplet) {
    if (auto it = audio_scores_.find(triplet); it != audio_scores_.end()) return it->second;
    if (!query_.audio_ref) throw InvalidInput("audio scoring needs an audio query");
    if (!audio_) throw ConfigError("no audio grounding backend configured");
    ++audio_calls_;
    const double score = audio_->ground(serialize_triplet(graph_.triplet(triplet), graph_), *query_.audio_ref);
    audio_scores_.emplace(triplet, score);
    return score;
}

double PresenceScorer::fused_triplet(TripletId triplet) { return visual_triplet(triplet) + audio_triplet(triplet); }

StageResult ground_prune(const OrderedTripletSet& initial, const GraspQuery& query, const GraspConfig& config,
                         const Backends& backends, const Graph& graph) {
    StageResult result;
    result.trace.query_id = query.id;
    result.trace.mode = grounding_mode(config, query);
    result.trace.eta = threshold_for(config, result.trace.mode);

    PresenceScorer scorer(graph, query, backends.visual_grounder.get(), backends.audio_grounder.get(),
                          config.frame_count);
    for (TripletId t : initial) {
        TraceRecord rec{t, std::nullopt, std::nullopt, std::nullopt, true, true};
        double score = 0.0;
        switch (result.trace.mode) {
            case GroundingMode::None:
                break;
            case GroundingMode::Visual:
                score = *(rec.visual_score = scorer.visual_triplet(t));
                break;
            case GroundingMode::Audio:
                score = *(rec.audio_score = scorer.audio_triplet(t));
                break;
            case GroundingMode::Fused:
                rec.visual_score = scorer.visual_triplet(t);
                rec.audio_score = scorer.audio_triplet(t);
                score = *(rec.fused_score = *rec.visual_score + *rec.audio_score);
                break;
        }
        rec.kept_by_grounding = result.trace.mode == GroundingMode::None || score >= result.trace.eta;
        rec.kept_by_filter = rec.kept_by_grounding;
        if (rec.kept_by_grounding) result.kept.push_back(t);
        result.trace.records.push_back(rec);
    }
    return result;
}

std::optional<std::vector<std::size_t>> parse_index_list(std::string_view reply, std::size_t n) {
    std::string_view body = reply;
    if (auto open = reply.find('['); open != std::string_view::npos) {
        auto close = reply.find(']', open);
        if (close == std::string_view::npos) return std::nullopt;
        body = reply.substr(open + 1, close - open - 1);
    } else if (text::trim(reply).empty()) {
        return std::nullopt;
    }

    std::vector<std::size_t> out;
    std::set<std::size_t> seen;
    std::size_t i = 0;
    while (i < body.size()) {
        const char c = body[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            ++i;
            continue;
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        std::size_t value = 0;
        auto [ptr, ec] = std::from_chars(body.data() + i, body.data() + body.size(), value);
        if (ec != std::errc{}) return std::nullopt;
        i = static_cast<std::size_t>(ptr - body.data());
        if (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i])) && body[i] != ',') {
            return std::nullopt;
        }
        if (value >= n) return std::nullopt;
        if (seen.insert(value).second) out.push_back(value);
    }
    return out;
}

StageResult llm_filter(const std::string& question, const OrderedTripletSet& grounded, AgentBackend* agent,
                       const PromptLibrary& prompts, const Graph& graph) {
    StageResult result;
    result.trace.filter_ran = true;
    for (TripletId t : grounded) result.trace.records.push_back({t, std::nullopt, std::nullopt, std::nullopt, true, true});
    if (grounded.empty()) return result;

    auto keep_all = [&](std::string reason) {
        spdlog::warn("triplet filter fell back to keeping all {} triplets: {}", grounded.size(), reason);
        result.trace.filter_fallback = true;
        result.trace.fallback_reason = std::move(reason);
        result.kept = grounded;
        return result;
    };
    if (!agent) return keep_all("no agent backend configured");

    std::string listing;
    for (std::size_t i = 0; i < grounded.size(); ++i) {
        if (i) listing += '\n';
        listing += fmt::format("[{}] {}", i, serialize_triplet(graph.triplet(grounded[i]), graph));
    }
    const auto prompt =
        text::render_template(prompts.agent(AgentRole::GraspFilter), {{"QUERY", question}, {"TRIPLETS", listing}});

    std::string reply;
    try {
        reply = agent->run(AgentRole::GraspFilter, prompt);
    } catch (const BackendUnavailable& e) {
        return keep_all(fmt::format("agent unavailable: {}", e.what()));
    } catch (const BackendResponseError& e) {
        return keep_all(fmt::format("agent error: {}", e.what()));
    }
    auto indices = parse_index_list(reply, grounded.size());
    if (!indices) return keep_all(fmt::format("unusable reply: {}", text::collapse_whitespace(reply).substr(0, 200)));

    std::vector<bool> keep(grounded.size(), false);
    for (std::size_t i : *indices) keep[i] = true;
    for (std::size_t i = 0; i < grounded.size(); ++i) {
        result.trace.records[i].kept_by_filter = keep[i];
        if (keep[i]) result.kept.push_back(grounded[i]);
    }
    return result;
}

StageResult grasp(const OrderedTripletSet& initial, const GraspQuery& query, const GraspConfig& config,
                  const Backends& backends, const PromptLibrary& prompts, const Graph& graph) {
    StageResult result = ground_prune(initial, query, config, backends, graph);
    if (!config.stages.llm_filter) return result;

    auto filtered = llm_filter(query.question, result.kept, backends.agent.get(), prompts, graph);
    result.trace.filter_ran = true;
    result.trace.filter_fallback = filtered.trace.filter_fallback;
    result.trace.fallback_reason = filtered.trace.fallback_reason;
    std::size_t j = 0;
    for (auto& rec : result.trace.records) {
        if (!rec.kept_by_grounding) continue;
        rec.kept_by_filter = filtered.trace.records[j++].kept_by_filter;
    }
    result.kept = std::move(filtered.kept);
    return result;
}

}  // namespace m3kg
