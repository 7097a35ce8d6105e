#include "m3kg/index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "m3kg/error.hpp"

namespace m3kg {

namespace {

constexpr char kMagic[8] = {'M', '3', 'K', 'G', 'I', 'D', 'X', '\0'};

static_assert(std::endian::native == std::endian::little, "index files are written in host byte order");

template <class T>
void put(std::string& out, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    out.append(bytes, sizeof(T));
}

template <class T>
T get(std::string_view in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw SchemaError("index file is truncated");
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

void put_f32(std::string& out, float f) { put(out, std::bit_cast<std::uint32_t>(f)); }
float get_f32(std::string_view in, std::size_t& pos) { return std::bit_cast<float>(get<std::uint32_t>(in, pos)); }

struct Pair {
    std::optional<MediaId> audio;
    std::optional<MediaId> visual;
    std::size_t audio_count = 0;
    std::size_t visual_count = 0;
};

std::map<SampleId, Pair> sample_pairs(const Graph& graph) {
    std::map<SampleId, Pair> pairs;
    for (const auto& [id, item] : graph.media()) {
        auto& p = pairs[item.sample];
        if (item.modality == Modality::Audio) {
            ++p.audio_count;
            p.audio = id;
        } else {
            ++p.visual_count;
            p.visual = id;
        }
    }
    return pairs;
}

}  // namespace

const char* to_string(IndexModality m) {
    switch (m) {
        case IndexModality::Audio:
            return "audio";
        case IndexModality::Visual:
            return "visual";
        case IndexModality::AudioVisual:
            return "audiovisual";
    }
    return "?";
}

std::optional<IndexModality> parse_index_modality(std::string_view name) {
    if (name == "audio") return IndexModality::Audio;
    if (name == "visual") return IndexModality::Visual;
    if (name == "audiovisual" || name == "av") return IndexModality::AudioVisual;
    return std::nullopt;
}

void ModalityIndex::add(IndexEntry entry, std::span<const float> vector) {
    if (vector.size() != dim_) {
        throw DimensionMismatch(fmt::format("index row {} has dimension {}, index expects {}", entry.key,
                                            vector.size(), dim_));
    }
    if (!entries_.empty() && entry.key <= entries_.back().key) {
        throw InvalidInput(fmt::format("index keys must be ascending ({} after {})", entry.key, entries_.back().key));
    }
    for (float x : vector) {
        if (!std::isfinite(x)) throw InvalidInput(fmt::format("index row {} holds a non-finite value", entry.key));
    }
    entries_.push_back(std::move(entry));
    data_.insert(data_.end(), vector.begin(), vector.end());
}

ModalityIndex build_index(const Graph& graph, IndexModality modality) {
    const auto& dims = graph.dims();
    if (modality != IndexModality::AudioVisual) {
        const Modality m = modality == IndexModality::Audio ? Modality::Audio : Modality::Visual;
        ModalityIndex index(modality, dims.of(m));
        for (const auto& [id, item] : graph.media()) {
            if (item.modality == m) index.add({id.value, {id}}, item.embedding);
        }
        return index;
    }

    ModalityIndex index(modality, dims.visual + dims.audio);
    std::vector<IndexExclusion> excluded;
    std::vector<float> fused;
    for (const auto& [sample, pair] : sample_pairs(graph)) {
        if (pair.audio_count != 1 || pair.visual_count != 1) {
            excluded.push_back({sample, pair.audio_count, pair.visual_count});
            continue;
        }
        const auto& v = graph.media_item(*pair.visual).embedding;
        const auto& a = graph.media_item(*pair.audio).embedding;
        fused.assign(v.begin(), v.end());
        fused.insert(fused.end(), a.begin(), a.end());
        index.add({sample.value, {*pair.visual, *pair.audio}}, fused);
    }
    index.set_exclusions(std::move(excluded));
    return index;
}

std::vector<float> fuse_query(std::span<const float> visual, std::span<const float> audio, const ModalityDims& dims) {
    if (visual.size() != dims.visual || audio.size() != dims.audio) {
        throw DimensionMismatch(fmt::format("fused query parts have dimensions ({}, {}), graph declares ({}, {})",
                                            visual.size(), audio.size(), dims.visual, dims.audio));
    }
    std::vector<float> out(visual.begin(), visual.end());
    out.insert(out.end(), audio.begin(), audio.end());
    return out;
}

namespace {

double squared_l2(const float* a, const float* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = static_cast<double>(a[i]) - b[i];
        const double d1 = static_cast<double>(a[i + 1]) - b[i + 1];
        const double d2 = static_cast<double>(a[i + 2]) - b[i + 2];
        const double d3 = static_cast<double>(a[i + 3]) - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s0 += d * d;
    }
    return (s0 + s1) + (s2 + s3);
}

}  // namespace

double l2_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw DimensionMismatch("vectors differ in dimension");
    return std::sqrt(squared_l2(a.data(), b.data(), a.size()));
}

std::vector<Candidate> knn(const ModalityIndex& index, std::span<const float> query, std::size_t k) {
    if (query.size() != index.dim()) {
        throw DimensionMismatch(
            fmt::format("query has dimension {}, {} index expects {}", query.size(), to_string(index.modality()), index.dim()));
    }
    const std::size_t n = index.size();
    const std::size_t take = std::min(k, n);
    if (take == 0) return {};

    const auto& entries = index.entries();
    std::vector<Candidate> all(n);
    for (std::size_t i = 0; i < n; ++i) {
        all[i] = {entries[i].key, i, squared_l2(query.data(), index.row(i).data(), index.dim())};
    }
    auto closer = [](const Candidate& a, const Candidate& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.key < b.key;
    };
    if (take < n) {
        std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), closer);
        all.resize(take);
    }
    std::sort(all.begin(), all.end(), closer);
    for (auto& c : all) c.distance = std::sqrt(c.distance);
    return all;
}

std::vector<Candidate> threshold_filter(const std::vector<Candidate>& candidates, double tau) {
    std::vector<Candidate> out;
    for (const auto& c : candidates) {
        if (!(c.distance <= tau)) break;
        out.push_back(c);
    }
    return out;
}

void save_index(const ModalityIndex& index, std::uint64_t graph_hash, const std::filesystem::path& path) {
    std::string out;
    out.reserve(37 + index.size() * (8 + 4 * index.dim()));
    out.append(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, kIndexFileVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(index.modality()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(index.dim()));
    put<std::uint64_t>(out, index.size());
    put<std::uint64_t>(out, graph_hash);
    for (std::size_t i = 0; i < index.size(); ++i) {
        put<std::uint64_t>(out, index.entries()[i].key);
        for (float x : index.row(i)) put_f32(out, x);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(fmt::format("cannot write index '{}'", path.string()));
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError(fmt::format("failed writing index '{}'", path.string()));
}

std::optional<ModalityIndex> load_index(const std::filesystem::path& path, const Graph& graph,
                                        std::uint64_t graph_hash, IndexModality modality) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(fmt::format("cannot open index '{}'", path.string()));
    std::stringstream buf;
    buf << f.rdbuf();
    const std::string bytes = buf.str();
    const std::string_view in(bytes);

    if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
        throw SchemaError(fmt::format("'{}' is not an index file", path.string()));
    }
    std::size_t pos = sizeof(kMagic);
    const auto version = get<std::uint32_t>(in, pos);
    const auto stored_modality = get<std::uint8_t>(in, pos);
    const auto dim = get<std::uint32_t>(in, pos);
    const auto count = get<std::uint64_t>(in, pos);
    const auto stored_hash = get<std::uint64_t>(in, pos);
    if (version != kIndexFileVersion || stored_hash != graph_hash ||
        stored_modality != static_cast<std::uint8_t>(modality)) {
        return std::nullopt;
    }
    const std::size_t row_bytes = 8 + 4 * static_cast<std::size_t>(dim);
    if (count > (in.size() - pos) / row_bytes || in.size() - pos != count * row_bytes) {
        throw SchemaError(fmt::format("index '{}' size does not match its header", path.string()));
    }

    const auto& dims = graph.dims();
    const std::size_t expected_dim =
        modality == IndexModality::Audio ? dims.audio : modality == IndexModality::Visual ? dims.visual : dims.audio + dims.visual;
    if (dim != expected_dim) throw SchemaError("index dimension disagrees with the graph");

    std::map<SampleId, Pair> pairs;
    if (modality == IndexModality::AudioVisual) pairs = sample_pairs(graph);

    ModalityIndex index(modality, dim);
    std::vector<float> row(dim);
    for (std::uint64_t r = 0; r < count; ++r) {
        const auto key = get<std::uint64_t>(in, pos);
        for (auto& x : row) x = get_f32(in, pos);
        IndexEntry entry{key, {}};
        if (modality == IndexModality::AudioVisual) {
            auto it = pairs.find(SampleId{key});
            if (it == pairs.end() || !it->second.audio || !it->second.visual) {
                throw SchemaError(fmt::format("index row {} has no audio-visual pair in the graph", key));
            }
            entry.media = {*it->second.visual, *it->second.audio};
        } else {
            const MediaId id{key};
            if (!graph.contains(id)) throw SchemaError(fmt::format("index row {} is not in the graph", key));
            entry.media = {id};
        }
        try {
            index.add(std::move(entry), row);
        } catch (const Error& e) {
            throw SchemaError(fmt::format("index '{}': {}", path.string(), e.what()));
        }
    }
    if (modality == IndexModality::AudioVisual) {
        std::vector<IndexExclusion> excluded;
        for (const auto& [sample, pair] : pairs) {
            if (pair.audio_count != 1 || pair.visual_count != 1) {
                excluded.push_back({sample, pair.audio_count, pair.visual_count});
            }
        }
        index.set_exclusions(std::move(excluded));
    }
    return index;
}

std::filesystem::path index_path(const std::filesystem::path& graph_path, IndexModality modality) {
    auto p = graph_path;
    p += fmt::format(".{}.idx", to_string(modality));
    return p;
}

}  // namespace m3kg
