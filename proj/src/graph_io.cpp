#include "m3kg/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "m3kg/error.hpp"
#include "m3kg/text.hpp"

namespace m3kg {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_float(float value) {
    // -0 would come back from the parser as integer 0
    if (value == 0.0f) return "0";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

std::string serialize_graph(const Graph& graph) {
    if (!graph.finalized()) throw GraphStateError("only finalized graphs can be saved");
    std::string out;

    ordered_json header;
    header["kind"] = "header";
    header["version"] = kGraphFileVersion;
    header["dims"] = ordered_json{{"audio", graph.dims().audio}, {"visual", graph.dims().visual}};
    out += header.dump() + '\n';

    for (const auto& [id, e] : graph.entities()) {
        ordered_json r;
        r["kind"] = "entity";
        r["id"] = id.value;
        r["surface"] = e.surface;
        r["normalized"] = e.normalized;
        r["description"] = e.description ? ordered_json(*e.description) : ordered_json(nullptr);
        out += r.dump() + '\n';
    }
    for (const auto& [id, t] : graph.triplets()) {
        ordered_json r;
        r["kind"] = "triplet";
        r["id"] = id.value;
        r["head"] = t.head.value;
        r["relation"] = t.relation;
        r["tail"] = t.tail.value;
        auto& sources = r["sources"] = ordered_json::array();
        for (auto s : t.sources) sources.push_back(s.value);
        out += r.dump() + '\n';
    }
    for (const auto& [id, m] : graph.media()) {
        // The embedding is written by hand: the JSON library prints doubles,
        // which would not be the shortest text for a float.
        out += fmt::format(R"({{"kind":"media","id":{},"modality":"{}","content_ref":{},"sample":{},"embedding":[)",
                           id.value, to_string(m.modality), json(m.content_ref).dump(), m.sample.value);
        for (std::size_t i = 0; i < m.embedding.size(); ++i) {
            if (i) out += ',';
            out += format_float(m.embedding[i]);
        }
        out += "]}\n";
    }
    for (const auto& l : graph.links()) {
        out += fmt::format(R"({{"kind":"link","triplet":{},"media":{}}})", l.triplet.value, l.media.value);
        out += '\n';
    }
    return out;
}

namespace {

int kind_rank(const std::string& kind) {
    if (kind == "entity") return 1;
    if (kind == "triplet") return 2;
    if (kind == "media") return 3;
    if (kind == "link") return 4;
    return -1;
}

Modality parse_modality(const std::string& s) {
    if (s == "audio") return Modality::Audio;
    if (s == "visual") return Modality::Visual;
    throw SchemaError(fmt::format("unknown modality '{}'", s));
}

}  // namespace

Graph parse_graph_records(std::string_view content) {
    auto lines = text::split_lines(content);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw SchemaError("graph file is empty");

    ModalityDims dims;
    std::vector<Entity> entities;
    std::vector<Triplet> triplets;
    std::vector<MediaItem> media;
    std::vector<Link> links;

    int last_rank = 0;
    std::uint64_t last_id = 0;
    Link last_link{};
    bool have_link = false;

    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::size_t line_no = n + 1;
        try {
            const json r = json::parse(lines[n]);
            const auto kind = r.at("kind").get<std::string>();
            if (n == 0) {
                if (kind != "header") throw SchemaError("first record must be the header");
                const int version = r.at("version").get<int>();
                if (version != kGraphFileVersion) {
                    throw SchemaError(fmt::format("graph file version {} unsupported (expected {})", version,
                                                  kGraphFileVersion));
                }
                dims.audio = r.at("dims").at("audio").get<std::size_t>();
                dims.visual = r.at("dims").at("visual").get<std::size_t>();
                continue;
            }
            const int rank = kind_rank(kind);
            if (rank < 0) throw SchemaError(fmt::format("unknown record kind '{}'", kind));
            if (rank < last_rank) throw SchemaError(fmt::format("record kind '{}' out of order", kind));
            if (rank != last_rank) {
                last_id = 0;
                have_link = false;
            }
            last_rank = rank;

            if (rank == 4) {
                Link l{TripletId{r.at("triplet").get<std::uint64_t>()}, MediaId{r.at("media").get<std::uint64_t>()}};
                if (have_link && !(last_link < l)) throw SchemaError("link records not in ascending order");
                last_link = l;
                have_link = true;
                links.push_back(l);
                continue;
            }
            const auto id = r.at("id").get<std::uint64_t>();
            if (id <= last_id) throw SchemaError(fmt::format("{} ids not strictly ascending", kind));
            last_id = id;

            if (rank == 1) {
                Entity e{EntityId{id}, r.at("surface").get<std::string>(), r.at("normalized").get<std::string>(),
                         std::nullopt};
                if (!r.at("description").is_null()) e.description = r.at("description").get<std::string>();
                entities.push_back(std::move(e));
            } else if (rank == 2) {
                Triplet t{TripletId{id}, EntityId{r.at("head").get<std::uint64_t>()},
                          r.at("relation").get<std::string>(), EntityId{r.at("tail").get<std::uint64_t>()}, {}};
                for (const auto& s : r.at("sources")) t.sources.emplace_back(s.get<std::uint64_t>());
                triplets.push_back(std::move(t));
            } else {
                MediaItem m;
                m.id = MediaId{id};
                m.modality = parse_modality(r.at("modality").get<std::string>());
                m.content_ref = r.at("content_ref").get<std::string>();
                m.sample = SampleId{r.at("sample").get<std::uint64_t>()};
                const auto& emb = r.at("embedding");
                m.embedding.reserve(emb.size());
                for (const auto& x : emb) m.embedding.push_back(static_cast<float>(x.get<double>()));
                media.push_back(std::move(m));
            }
        } catch (const json::exception& e) {
            throw SchemaError(fmt::format("graph file line {}: {}", line_no, e.what()));
        } catch (const SchemaError& e) {
            throw SchemaError(fmt::format("graph file line {}: {}", line_no, e.what()));
        }
    }

    return Graph::from_records(dims, std::move(entities), std::move(triplets), std::move(media), std::move(links));
}

Graph parse_graph(std::string_view content) {
    Graph g = parse_graph_records(content);
    auto report = validate(g);
    if (!report.valid()) throw IntegrityError("loaded graph fails validation: " + report.to_json().dump());
    return g;
}

void save_graph(const Graph& graph, const std::filesystem::path& path) {
    const auto content = serialize_graph(graph);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Graph load_graph(const std::filesystem::path& path) { return parse_graph(read_text_file(path)); }

std::uint64_t graph_content_hash(const Graph& graph) { return fnv1a64(serialize_graph(graph)); }

}  // namespace m3kg
