#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "m3kg/graph.hpp"
#include "m3kg/index.hpp"

namespace m3kg {

/// Triplet ids in pipeline order; no duplicates.
using OrderedTripletSet = std::vector<TripletId>;

/// Expand until nothing new is reachable.
inline constexpr std::size_t kUnboundedHops = std::numeric_limits<std::size_t>::max();

struct RetrievalConfig {
    std::size_t k = 5;
    double tau = kNoThreshold;
    std::size_t hops = 1;
};

/// Triplets linked to any selected item, ordered by (rank of the first
/// selected item linking them, TripletId). Throws UnknownId.
OrderedTripletSet lift(const Graph& graph, std::span<const MediaId> selected);

/// Adds, hop by hop, every triplet sharing an entity with the previous hop's
/// triplets. The seed keeps its order; each hop's additions follow in id order.
OrderedTripletSet expand(const Graph& graph, const OrderedTripletSet& seed, std::size_t hops);

struct IndexSet {
    std::optional<ModalityIndex> audio;
    std::optional<ModalityIndex> visual;
    std::optional<ModalityIndex> audiovisual;

    const ModalityIndex* find(IndexModality m) const;
};

struct QueryVectors {
    std::optional<std::vector<float>> visual;
    std::optional<std::vector<float>> audio;
};

/// The modality searched for a query: fused when both vectors are present.
IndexModality query_modality(const QueryVectors& query);

struct RetrievalResult {
    IndexModality modality = IndexModality::Audio;
    std::vector<Candidate> nearest;  // knn output
    std::vector<Candidate> kept;     // after the distance threshold
    std::vector<MediaId> selected;   // media behind the kept candidates, rank order
    OrderedTripletSet lifted;
    OrderedTripletSet expanded;  // the initial subgraph handed to pruning
};

/// knn -> threshold -> lift -> expand. Throws InvalidInput without any query
/// vector, IndexMissing when the needed index is absent, DimensionMismatch
/// when the query does not fit it.
RetrievalResult retrieve(const Graph& graph, const IndexSet& indices, const QueryVectors& query,
                         const RetrievalConfig& config);

}  // namespace m3kg
