#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "m3kg/graph.hpp"

namespace m3kg {

enum class IndexModality : std::uint8_t { Audio = 0, Visual = 1, AudioVisual = 2 };

const char* to_string(IndexModality m);
std::optional<IndexModality> parse_index_modality(std::string_view name);

/// One searchable row. Single-modality entries are keyed by MediaId and hold
/// that item; fused entries are keyed by SampleId and hold the sample's
/// visual item followed by its audio item.
struct IndexEntry {
    std::uint64_t key = 0;
    std::vector<MediaId> media;

    bool operator==(const IndexEntry&) const = default;
};

struct IndexExclusion {
    SampleId sample;
    std::size_t audio_items = 0;
    std::size_t visual_items = 0;
};

struct Candidate {
    std::uint64_t key = 0;
    std::size_t row = 0;
    double distance = 0.0;  // exact L2, accumulated in double precision

    bool operator==(const Candidate&) const = default;
};

/// Flat exact-L2 index. Rows are sorted by key and stored contiguously.
class ModalityIndex {
public:
    ModalityIndex(IndexModality modality, std::size_t dim) : modality_(modality), dim_(dim) {}

    /// Appends a row; keys must arrive in ascending order. Throws
    /// DimensionMismatch or InvalidInput (non-finite value, key order).
    void add(IndexEntry entry, std::span<const float> vector);

    IndexModality modality() const { return modality_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    const std::vector<IndexEntry>& entries() const { return entries_; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    const std::vector<IndexExclusion>& exclusions() const { return exclusions_; }
    void set_exclusions(std::vector<IndexExclusion> e) { exclusions_ = std::move(e); }

    bool operator==(const ModalityIndex& o) const {
        return modality_ == o.modality_ && dim_ == o.dim_ && entries_ == o.entries_ && data_ == o.data_;
    }

private:
    IndexModality modality_;
    std::size_t dim_;
    std::vector<IndexEntry> entries_;
    std::vector<float> data_;
    std::vector<IndexExclusion> exclusions_;
};

/// Builds the index of one modality. Fused entries come only from samples with
/// exactly one audio and one visual item; other samples are listed as
/// exclusions.
ModalityIndex build_index(const Graph& graph, IndexModality modality);

/// Visual vector followed by audio vector.
std::vector<float> fuse_query(std::span<const float> visual, std::span<const float> audio, const ModalityDims& dims);

/// Exact L2 distance in double precision.
double l2_distance(std::span<const float> a, std::span<const float> b);

/// The min(k, size) nearest rows, by ascending (distance, key).
std::vector<Candidate> knn(const ModalityIndex& index, std::span<const float> query, std::size_t k);

inline constexpr double kNoThreshold = std::numeric_limits<double>::infinity();

/// Longest prefix with distance <= tau. Input must be sorted by distance.
std::vector<Candidate> threshold_filter(const std::vector<Candidate>& candidates, double tau);

// Sidecar cache. Layout (little-endian): magic "M3KGIDX\0", version u32,
// modality u8, dim u32, count u64, graph hash u64, then count rows of
// (key u64, dim x f32).
inline constexpr std::uint32_t kIndexFileVersion = 1;

void save_index(const ModalityIndex& index, std::uint64_t graph_hash, const std::filesystem::path& path);

/// Loads a sidecar. Returns nullopt when it was written for a different graph
/// or modality; throws SchemaError when the file is corrupt. Fused entries
/// get their media pairs back from `graph`.
std::optional<ModalityIndex> load_index(const std::filesystem::path& path, const Graph& graph,
                                        std::uint64_t graph_hash, IndexModality modality);

/// Sidecar path for a graph file, e.g. g.jsonl -> g.jsonl.visual.idx.
std::filesystem::path index_path(const std::filesystem::path& graph_path, IndexModality modality);

}  // namespace m3kg
