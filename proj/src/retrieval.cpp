#include "m3kg/retrieval.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "m3kg/error.hpp"

namespace m3kg {

OrderedTripletSet lift(const Graph& graph, std::span<const MediaId> selected) {
    OrderedTripletSet out;
    std::unordered_set<TripletId> seen;
    for (MediaId m : selected) {
        if (!graph.contains(m)) throw UnknownId(fmt::format("media {} is not in the graph", m.value));
        for (TripletId t : graph.triplets_of_media(m)) {
            if (seen.insert(t).second) out.push_back(t);
        }
    }
    return out;
}

OrderedTripletSet expand(const Graph& graph, const OrderedTripletSet& seed, std::size_t hops) {
    OrderedTripletSet out;
    std::unordered_set<TripletId> seen;
    std::vector<TripletId> frontier;
    for (TripletId t : seed) {
        if (seen.insert(t).second) {
            out.push_back(t);
            frontier.push_back(t);
        }
    }
    std::unordered_set<EntityId> visited_entities;
    for (std::size_t hop = 0; hop < hops && !frontier.empty(); ++hop) {
        std::set<TripletId> added;
        for (TripletId t : frontier) {
            const auto& tr = graph.triplet(t);
            for (EntityId e : {tr.head, tr.tail}) {
                if (!visited_entities.insert(e).second) continue;
                for (TripletId n : graph.neighbors(e)) {
                    if (!seen.contains(n)) added.insert(n);
                }
            }
        }
        frontier.assign(added.begin(), added.end());
        for (TripletId t : frontier) {
            seen.insert(t);
            out.push_back(t);
        }
    }
    return out;
}

const ModalityIndex* IndexSet::find(IndexModality m) const {
    const auto& slot = m == IndexModality::Audio ? audio : m == IndexModality::Visual ? visual : audiovisual;
    return slot ? &*slot : nullptr;
}

IndexModality query_modality(const QueryVectors& query) {
    if (query.visual && query.audio) return IndexModality::AudioVisual;
    if (query.visual) return IndexModality::Visual;
    if (query.audio) return IndexModality::Audio;
    throw InvalidInput("query has neither a visual nor an audio vector");
}

RetrievalResult retrieve(const Graph& graph, const IndexSet& indices, const QueryVectors& query,
                         const RetrievalConfig& config) {
    if (config.k == 0) throw ConfigError("retrieval k must be at least 1");
    RetrievalResult r;
    r.modality = query_modality(query);
    const ModalityIndex* index = indices.find(r.modality);
    if (!index) throw IndexMissing(fmt::format("no {} index is available", to_string(r.modality)));

    std::vector<float> q;
    switch (r.modality) {
        case IndexModality::AudioVisual:
            q = fuse_query(*query.visual, *query.audio, graph.dims());
            break;
        case IndexModality::Visual:
            q = *query.visual;
            break;
        case IndexModality::Audio:
            q = *query.audio;
            break;
    }
    r.nearest = knn(*index, q, config.k);
    r.kept = threshold_filter(r.nearest, config.tau);
    for (const auto& c : r.kept) {
        const auto& media = index->entries()[c.row].media;
        r.selected.insert(r.selected.end(), media.begin(), media.end());
    }
    r.lifted = lift(graph, r.selected);
    r.expanded = expand(graph, r.lifted, config.hops);
    return r;
}

}  // namespace m3kg
