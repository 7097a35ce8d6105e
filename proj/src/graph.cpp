#include "m3kg/graph.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "m3kg/error.hpp"
#include "m3kg/text.hpp"

namespace m3kg {

namespace {

bool all_finite(const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

void check_mention(const EntityMention& m) {
    if (m.surface.empty()) throw InvalidInput("entity surface is empty");
    if (m.normalized.empty() || text::trim(m.normalized) != m.normalized) {
        throw InvalidInput(fmt::format("normalized form '{}' is empty or not trimmed", m.normalized));
    }
}

}  // namespace

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json j;
    j["valid"] = valid();
    auto& cov = j["coverage_violations"] = nlohmann::json::array();
    for (auto t : coverage_violations) cov.push_back(t.value);
    auto& dan = j["dangling"] = nlohmann::json::array();
    for (const auto& d : dangling) dan.push_back({{"field", d.field}, {"owner", d.owner}, {"missing", d.missing}});
    auto& loops = j["self_loops"] = nlohmann::json::array();
    for (auto t : self_loops) loops.push_back(t.value);
    j["record_issues"] = record_issues;
    return j;
}

Graph::Graph(ModalityDims dims) : dims_(dims) {}

Graph Graph::from_records(ModalityDims dims, std::vector<Entity> entities, std::vector<Triplet> triplets,
                          std::vector<MediaItem> media, std::vector<Link> links) {
    Graph g(dims);
    for (auto& e : entities) {
        const auto id = e.id;
        g.next_entity_ = std::max(g.next_entity_, id.value + 1);
        g.entity_keys_.emplace(EntityMention{e.surface, e.normalized}, id);
        if (!g.entities_.emplace(id, std::move(e)).second) {
            throw SchemaError(fmt::format("duplicate entity id {}", id.value));
        }
    }
    for (auto& t : triplets) {
        const auto id = t.id;
        g.next_triplet_ = std::max(g.next_triplet_, id.value + 1);
        g.index_triplet(t);
        if (!g.triplets_.emplace(id, std::move(t)).second) {
            throw SchemaError(fmt::format("duplicate triplet id {}", id.value));
        }
    }
    for (auto& m : media) {
        const auto id = m.id;
        g.next_media_ = std::max(g.next_media_, id.value + 1);
        g.sample_media_[m.sample].push_back(id);
        if (!g.media_.emplace(id, std::move(m)).second) {
            throw SchemaError(fmt::format("duplicate media id {}", id.value));
        }
    }
    for (const auto& l : links) {
        if (!g.links_.insert(l).second) {
            throw SchemaError(fmt::format("duplicate link {} -> {}", l.triplet.value, l.media.value));
        }
        g.index_link(l);
    }
    g.finalized_ = true;
    return g;
}

void Graph::index_triplet(const Triplet& t) {
    triplet_keys_.emplace(std::make_tuple(t.head, t.relation, t.tail), t.id);
    incident_[t.head].insert(t.id);
    incident_[t.tail].insert(t.id);
}

void Graph::index_link(const Link& l) {
    media_links_[l.media].insert(l.triplet);
    triplet_links_[l.triplet].insert(l.media);
}

EntityId Graph::intern_entity(const EntityMention& mention) {
    auto it = entity_keys_.find(mention);
    if (it != entity_keys_.end()) return it->second;
    EntityId id{next_entity_++};
    entity_keys_.emplace(mention, id);
    entities_.emplace(id, Entity{id, mention.surface, mention.normalized, std::nullopt});
    return id;
}

std::vector<TripletId> Graph::add_sample(SampleId sample, std::span<const TripletInput> triplets,
                                         const std::map<EntityMention, std::string>& descriptions,
                                         std::vector<MediaInput> media) {
    if (finalized_) throw GraphStateError("add_sample called on a finalized graph");

    // Validate everything before mutating so a rejected commit leaves no trace.
    for (const auto& m : media) {
        if (m.embedding.size() != dims_.of(m.modality)) {
            throw DimensionMismatch(fmt::format("{} embedding for '{}' has dimension {}, graph declares {}",
                                                to_string(m.modality), m.content_ref, m.embedding.size(),
                                                dims_.of(m.modality)));
        }
        if (!all_finite(m.embedding)) {
            throw InvalidInput(fmt::format("embedding for '{}' contains NaN or Inf", m.content_ref));
        }
    }
    for (const auto& t : triplets) {
        check_mention(t.head);
        check_mention(t.tail);
        if (t.relation.empty()) throw InvalidInput("triplet relation is empty");
    }

    std::vector<MediaId> new_media;
    for (auto& m : media) {
        MediaId id{next_media_++};
        media_.emplace(id, MediaItem{id, m.modality, std::move(m.content_ref), std::move(m.embedding), sample});
        sample_media_[sample].push_back(id);
        new_media.push_back(id);
    }

    std::vector<TripletId> out;
    out.reserve(triplets.size());
    for (const auto& in : triplets) {
        const EntityId head = intern_entity(in.head);
        const EntityId tail = intern_entity(in.tail);
        auto key = std::make_tuple(head, in.relation, tail);
        TripletId id;
        if (auto it = triplet_keys_.find(key); it != triplet_keys_.end()) {
            id = it->second;
            auto& sources = triplets_.at(id).sources;
            if (auto pos = std::lower_bound(sources.begin(), sources.end(), sample);
                pos == sources.end() || *pos != sample) {
                sources.insert(pos, sample);
            }
        } else {
            id = TripletId{next_triplet_++};
            Triplet t{id, head, in.relation, tail, {sample}};
            index_triplet(t);
            triplets_.emplace(id, std::move(t));
        }
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
        for (auto m : new_media) {
            Link l{id, m};
            if (links_.insert(l).second) index_link(l);
        }
    }

    for (const auto& [mention, desc] : descriptions) {
        auto it = entity_keys_.find(mention);
        if (it == entity_keys_.end()) continue;
        auto& entity = entities_.at(it->second);
        if (!entity.description) {
            entity.description = desc;
        } else if (*entity.description != desc) {
            ++description_conflicts_;
            spdlog::debug("description conflict for '{}' ({}); keeping the first", mention.surface,
                          mention.normalized);
        }
    }
    return out;
}

void Graph::finalize() {
    if (finalized_) return;
    auto report = validate(*this);
    if (!report.valid()) {
        throw IntegrityError(fmt::format("graph fails validation: {} coverage violations, {} dangling refs, {} record issues",
                                         report.coverage_violations.size(), report.dangling.size(),
                                         report.record_issues.size()));
    }
    finalized_ = true;
}

const Entity& Graph::entity(EntityId id) const {
    auto it = entities_.find(id);
    if (it == entities_.end()) throw UnknownId(fmt::format("unknown entity {}", id.value));
    return it->second;
}

const Triplet& Graph::triplet(TripletId id) const {
    auto it = triplets_.find(id);
    if (it == triplets_.end()) throw UnknownId(fmt::format("unknown triplet {}", id.value));
    return it->second;
}

const MediaItem& Graph::media_item(MediaId id) const {
    auto it = media_.find(id);
    if (it == media_.end()) throw UnknownId(fmt::format("unknown media {}", id.value));
    return it->second;
}

std::vector<TripletId> Graph::neighbors(EntityId entity) const {
    if (!contains(entity)) throw UnknownId(fmt::format("unknown entity {}", entity.value));
    auto it = incident_.find(entity);
    if (it == incident_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

std::vector<TripletId> Graph::triplets_of_media(MediaId media) const {
    if (!contains(media)) throw UnknownId(fmt::format("unknown media {}", media.value));
    auto it = media_links_.find(media);
    if (it == media_links_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

std::vector<MediaId> Graph::media_of_triplet(TripletId triplet) const {
    if (!contains(triplet)) throw UnknownId(fmt::format("unknown triplet {}", triplet.value));
    auto it = triplet_links_.find(triplet);
    if (it == triplet_links_.end()) return {};
    return {it->second.begin(), it->second.end()};
}

std::vector<MediaId> Graph::media_of_sample(SampleId sample) const {
    auto it = sample_media_.find(sample);
    if (it == sample_media_.end()) return {};
    return it->second;
}

ValidationReport validate(const Graph& graph) {
    ValidationReport r;
    for (const auto& [id, e] : graph.entities()) {
        if (e.surface.empty()) r.record_issues.push_back(fmt::format("entity {}: empty surface", id.value));
        if (e.normalized.empty() || text::trim(e.normalized) != e.normalized) {
            r.record_issues.push_back(fmt::format("entity {}: normalized form empty or untrimmed", id.value));
        }
    }

    std::set<TripletId> linked;
    for (const auto& l : graph.links()) {
        if (!graph.contains(l.triplet)) r.dangling.push_back({"link.triplet", l.triplet.value, l.triplet.value});
        if (!graph.contains(l.media)) r.dangling.push_back({"link.media", l.triplet.value, l.media.value});
        if (graph.contains(l.media)) linked.insert(l.triplet);
    }

    for (const auto& [id, t] : graph.triplets()) {
        if (!graph.contains(t.head)) r.dangling.push_back({"triplet.head", id.value, t.head.value});
        if (!graph.contains(t.tail)) r.dangling.push_back({"triplet.tail", id.value, t.tail.value});
        if (t.relation.empty()) r.record_issues.push_back(fmt::format("triplet {}: empty relation", id.value));
        if (t.head == t.tail) r.self_loops.push_back(id);
        if (!linked.contains(id)) r.coverage_violations.push_back(id);
    }

    for (const auto& [id, m] : graph.media()) {
        if (m.embedding.size() != graph.dims().of(m.modality)) {
            r.record_issues.push_back(fmt::format("media {}: embedding dimension {} != declared {}", id.value,
                                                  m.embedding.size(), graph.dims().of(m.modality)));
        }
        if (!all_finite(m.embedding)) {
            r.record_issues.push_back(fmt::format("media {}: non-finite embedding value", id.value));
        }
    }
    return r;
}

}  // namespace m3kg
