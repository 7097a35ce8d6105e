#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "m3kg/graph.hpp"

namespace m3kg {

inline constexpr int kGraphFileVersion = 1;

/// Line-delimited graph file: header, then entity, triplet, media and link
/// records, each kind in ascending id order. Requires a finalized graph.
std::string serialize_graph(const Graph& graph);

/// Parses a graph file. Throws SchemaError on malformed records or version
/// mismatch and IntegrityError when the parsed graph fails validate().
Graph parse_graph(std::string_view content);

/// Like parse_graph but skips validate(); for reporting on damaged files.
Graph parse_graph_records(std::string_view content);

void save_graph(const Graph& graph, const std::filesystem::path& path);
Graph load_graph(const std::filesystem::path& path);

/// Whole file as bytes. Throws IoError.
std::string read_text_file(const std::filesystem::path& path);

/// FNV-1a 64 of the serialized graph; keys index sidecar caches.
std::uint64_t graph_content_hash(const Graph& graph);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_float(float value);

}  // namespace m3kg
