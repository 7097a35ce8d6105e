#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "m3kg/ids.hpp"

namespace m3kg {

struct Entity {
    EntityId id;
    std::string surface;     // mention as extracted, e.g. "small brown dog"
    std::string normalized;  // canonical concept, e.g. "dog"
    std::optional<std::string> description;

    bool operator==(const Entity&) const = default;
};

struct Triplet {
    TripletId id;
    EntityId head;
    std::string relation;
    EntityId tail;
    /// Every sample that produced this (head, relation, tail); ascending, unique.
    std::vector<SampleId> sources;

    bool operator==(const Triplet&) const = default;
};

struct MediaItem {
    MediaId id;
    Modality modality = Modality::Audio;
    std::string content_ref;
    std::vector<float> embedding;
    SampleId sample;

    bool operator==(const MediaItem&) const = default;
};

struct Link {
    TripletId triplet;
    MediaId media;

    friend auto operator<=>(const Link&, const Link&) = default;
};

struct ModalityDims {
    std::size_t audio = 0;
    std::size_t visual = 0;

    std::size_t of(Modality m) const { return m == Modality::Audio ? audio : visual; }
    bool operator==(const ModalityDims&) const = default;
};

/// Identity key of an entity: the (surface, normalized) pair.
struct EntityMention {
    std::string surface;
    std::string normalized;

    friend auto operator<=>(const EntityMention&, const EntityMention&) = default;
};

struct TripletInput {
    EntityMention head;
    std::string relation;
    EntityMention tail;
};

struct MediaInput {
    Modality modality = Modality::Audio;
    std::string content_ref;
    std::vector<float> embedding;
};

struct DanglingRef {
    std::string field;  // e.g. "triplet.head", "link.media"
    std::uint64_t owner = 0;
    std::uint64_t missing = 0;

    bool operator==(const DanglingRef&) const = default;
};

struct ValidationReport {
    std::vector<TripletId> coverage_violations;
    std::vector<DanglingRef> dangling;
    std::vector<TripletId> self_loops;  // reported for audit, never invalidating
    std::vector<std::string> record_issues;

    bool valid() const { return coverage_violations.empty() && dangling.empty() && record_issues.empty(); }
    nlohmann::json to_json() const;
};

/// The multimodal knowledge graph: entities, relations, triplets, per-entity
/// descriptions, audio and visual items, and triplet-to-media links.
///
/// A graph starts in the building state, accepts commits through add_sample,
/// and becomes immutable after finalize. Finalized graphs are safe to share
/// between threads for reading.
class Graph {
public:
    explicit Graph(ModalityDims dims);

    /// Rebuilds a graph from stored records without checking integrity; call
    /// validate() on the result. Duplicate ids raise SchemaError.
    static Graph from_records(ModalityDims dims, std::vector<Entity> entities, std::vector<Triplet> triplets,
                              std::vector<MediaItem> media, std::vector<Link> links);

    /// Commits one sample. Entities are deduplicated by (surface, normalized),
    /// triplets by (head, relation, tail). Every returned triplet is linked to
    /// every media item of this commit. Descriptions are first-wins per entity.
    std::vector<TripletId> add_sample(SampleId sample, std::span<const TripletInput> triplets,
                                      const std::map<EntityMention, std::string>& descriptions,
                                      std::vector<MediaInput> media);

    /// Seals the graph. Throws IntegrityError if validate() fails.
    void finalize();
    bool finalized() const { return finalized_; }

    const ModalityDims& dims() const { return dims_; }
    const std::map<EntityId, Entity>& entities() const { return entities_; }
    const std::map<TripletId, Triplet>& triplets() const { return triplets_; }
    const std::map<MediaId, MediaItem>& media() const { return media_; }
    const std::set<Link>& links() const { return links_; }

    const Entity& entity(EntityId id) const;
    const Triplet& triplet(TripletId id) const;
    const MediaItem& media_item(MediaId id) const;

    bool contains(EntityId id) const { return entities_.contains(id); }
    bool contains(TripletId id) const { return triplets_.contains(id); }
    bool contains(MediaId id) const { return media_.contains(id); }

    /// Triplets whose head or tail is `entity`, in id order.
    std::vector<TripletId> neighbors(EntityId entity) const;
    std::vector<TripletId> triplets_of_media(MediaId media) const;
    std::vector<MediaId> media_of_triplet(TripletId triplet) const;
    std::vector<MediaId> media_of_sample(SampleId sample) const;

    std::size_t description_conflicts() const { return description_conflicts_; }

private:
    void index_triplet(const Triplet& t);
    void index_link(const Link& l);
    EntityId intern_entity(const EntityMention& mention);

    ModalityDims dims_;
    bool finalized_ = false;

    std::map<EntityId, Entity> entities_;
    std::map<TripletId, Triplet> triplets_;
    std::map<MediaId, MediaItem> media_;
    std::set<Link> links_;

    std::map<EntityMention, EntityId> entity_keys_;
    std::map<std::tuple<EntityId, std::string, EntityId>, TripletId> triplet_keys_;
    std::map<EntityId, std::set<TripletId>> incident_;
    std::map<MediaId, std::set<TripletId>> media_links_;
    std::map<TripletId, std::set<MediaId>> triplet_links_;
    std::map<SampleId, std::vector<MediaId>> sample_media_;

    std::uint64_t next_entity_ = 1;
    std::uint64_t next_triplet_ = 1;
    std::uint64_t next_media_ = 1;
    std::size_t description_conflicts_ = 0;
};

/// Reports coverage violations (triplets without links), dangling references,
/// self-loops and malformed records. Never throws.
ValidationReport validate(const Graph& graph);

}  // namespace m3kg
