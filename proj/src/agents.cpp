#include "m3kg/agents.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "m3kg/error.hpp"
#include "m3kg/text.hpp"

namespace m3kg::agents {

using json = nlohmann::json;

namespace {

std::optional<std::string> optional_text(const json& record, const char* field) {
    auto it = record.find(field);
    if (it == record.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw InvalidInput(fmt::format("field '{}' must be a string or null", field));
    auto value = it->get<std::string>();
    if (text::trim(value).empty()) return std::nullopt;
    return value;
}

json nullable(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::string first_nonblank_line(std::string_view s) {
    for (const auto& line : text::split_lines(s)) {
        auto t = text::trim(line);
        if (!t.empty()) return t;
    }
    return {};
}

std::string enumerate(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += '\n';
        out += fmt::format("{}. {}", i + 1, items[i]);
    }
    return out;
}

}  // namespace

CorpusSample parse_sample(const json& record) {
    if (!record.is_object()) throw InvalidInput("manifest record must be a JSON object");
    CorpusSample s;
    auto id = record.find("id");
    if (id == record.end() || !id->is_number_unsigned()) {
        if (id == record.end() || !id->is_number_integer() || id->get<std::int64_t>() < 0) {
            throw InvalidInput("field 'id' must be a non-negative integer");
        }
    }
    s.id = SampleId{id->get<std::uint64_t>()};
    auto caption = record.find("caption");
    if (caption == record.end() || !caption->is_string() || text::trim(caption->get<std::string>()).empty()) {
        throw InvalidInput(fmt::format("sample {}: caption must be a non-empty string", s.id.value));
    }
    s.caption = caption->get<std::string>();
    s.audio_ref = optional_text(record, "audio_ref");
    s.visual_ref = optional_text(record, "visual_ref");
    s.title = optional_text(record, "title");
    s.metadata_description = optional_text(record, "description");
    if (!s.audio_ref && !s.visual_ref) {
        throw InvalidInput(fmt::format("sample {}: needs an audio_ref or a visual_ref", s.id.value));
    }
    return s;
}

json sample_to_json(const CorpusSample& s) {
    return json{{"id", s.id.value},
                {"caption", s.caption},
                {"audio_ref", nullable(s.audio_ref)},
                {"visual_ref", nullable(s.visual_ref)},
                {"title", nullable(s.title)},
                {"description", nullable(s.metadata_description)}};
}

std::vector<CorpusSample> parse_manifest(std::string_view content) {
    std::vector<CorpusSample> out;
    std::set<SampleId> seen;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(content)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto sample = parse_sample(json::parse(line));
            if (!seen.insert(sample.id).second) {
                throw InvalidInput(fmt::format("duplicate sample id {}", sample.id.value));
            }
            out.push_back(std::move(sample));
        } catch (const json::exception& e) {
            throw InvalidInput(fmt::format("manifest line {}: {}", line_no, e.what()));
        } catch (const InvalidInput& e) {
            throw InvalidInput(fmt::format("manifest line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

std::vector<CorpusSample> load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open manifest '{}'", path.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

AuditLog::AuditLog(const AuditLog& other) : records_(other.records()) {}

AuditLog& AuditLog::operator=(const AuditLog& other) {
    if (this != &other) {
        auto copy = other.records();
        std::lock_guard lock(mu_);
        records_ = std::move(copy);
    }
    return *this;
}

void AuditLog::record(json event) {
    std::lock_guard lock(mu_);
    records_.push_back(std::move(event));
}

void AuditLog::append(const AuditLog& other) {
    auto copy = other.records();
    std::lock_guard lock(mu_);
    records_.insert(records_.end(), copy.begin(), copy.end());
}

std::vector<json> AuditLog::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

std::size_t AuditLog::count(std::string_view event) const {
    std::lock_guard lock(mu_);
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [&](const json& r) {
        return r.value("event", std::string{}) == event;
    }));
}

std::string AuditLog::to_jsonl() const {
    std::string out;
    for (const auto& r : records()) out += r.dump() + "\n";
    return out;
}

void AuditLog::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write audit log '{}'", path.string()));
    out << to_jsonl();
    if (!out) throw IoError(fmt::format("failed writing audit log '{}'", path.string()));
}

ExtractResult parse_triplets(std::string_view agent_output) {
    ExtractResult result;
    std::size_t line_no = 0;
    for (const auto& raw : text::split_lines(agent_output)) {
        ++line_no;
        const std::string line = text::trim(raw);
        if (line.empty()) continue;
        auto drop = [&](std::string reason) { result.drops.push_back({line_no, line, std::move(reason)}); };

        if (line.size() < 2 || line.front() != '(' || line.back() != ')') {
            drop("not wrapped in parentheses");
            continue;
        }
        const std::string_view inner = std::string_view(line).substr(1, line.size() - 2);
        std::vector<std::string> fields(1);
        int depth = 0;
        for (char c : inner) {
            if (c == '(' || c == '[' || c == '{') ++depth;
            if (c == ')' || c == ']' || c == '}') --depth;
            if (c == ',' && depth == 0) {
                fields.emplace_back();
            } else {
                fields.back().push_back(c);
            }
        }
        if (fields.size() != 3) {
            drop(fmt::format("expected 2 separators, found {}", fields.size() - 1));
            continue;
        }
        for (auto& f : fields) f = text::trim(f);
        if (std::any_of(fields.begin(), fields.end(), [](const std::string& f) { return f.empty(); })) {
            drop("empty field");
            continue;
        }
        result.triplets.push_back({fields[0], fields[1], fields[2]});
    }
    return result;
}

std::optional<int> parse_inspector_score(std::string_view reply) {
    for (std::size_t i = 0; i < reply.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(reply[i]))) continue;
        std::size_t start = i;
        if (start > 0 && reply[start - 1] == '-') --start;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(reply.data() + start, reply.data() + reply.size(), value);
        if (ec != std::errc{}) return std::nullopt;
        return static_cast<int>(std::clamp(std::floor(value), 0.0, 10.0));
    }
    return std::nullopt;
}

Pipeline::Pipeline(Backends backends, const PromptLibrary& prompts, AuditLog* audit)
    : backends_(std::move(backends)), prompts_(prompts), audit_(audit) {}

void Pipeline::note(json event) {
    if (audit_) audit_->record(std::move(event));
}

std::string Pipeline::call(AgentRole role, const std::map<std::string, std::string>& values) {
    if (!backends_.agent) throw ConfigError("no agent backend configured");
    return backends_.agent->run(role, text::render_template(prompts_.agent(role), values));
}

std::string Pipeline::rewrite_caption(const CorpusSample& sample) {
    if (!sample.title && !sample.metadata_description) return sample.caption;
    const auto reply = call(AgentRole::Rewriter, {{"TITLE", sample.title.value_or("")},
                                                  {"DESCRIPTION", sample.metadata_description.value_or("")},
                                                  {"ORIGINAL_CAPTION", sample.caption}});
    auto line = first_nonblank_line(reply);
    if (line.empty()) {
        note({{"event", "rewrite_fallback"}, {"sample", sample.id.value}, {"reason", "empty response"}});
        spdlog::warn("sample {}: rewriter returned nothing, keeping the original caption", sample.id.value);
        return sample.caption;
    }
    return line;
}

ExtractResult Pipeline::extract_triplets(const std::string& enriched_caption) {
    return parse_triplets(call(AgentRole::Extractor, {{"CAPTION", enriched_caption}}));
}

std::string Pipeline::normalize_entity(const std::string& surface) {
    const std::string reply = text::trim(call(AgentRole::Normalizer, {{"CONCEPT", surface}}));
    const char* problem = nullptr;
    if (reply.empty()) {
        problem = "empty response";
    } else if (reply.find('\n') != std::string::npos) {
        problem = "multi-line response";
    } else if (text::utf8_length(reply) > kMaxConceptLength) {
        problem = "response too long";
    }
    if (!problem) return reply;
    note({{"event", "normalize_fallback"}, {"surface", surface}, {"reason", problem}});
    return text::trim(surface);
}

std::vector<std::string> Pipeline::query_knowledge(const std::string& concept_name) {
    if (!backends_.knowledge) return {};
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            return backends_.knowledge->query(concept_name);
        } catch (const KnowledgeTimeout& e) {
            note({{"event", "kb_timeout"}, {"concept", concept_name}, {"attempt", attempt + 1}});
        } catch (const BackendUnavailable& e) {
            note({{"event", "kb_unavailable"}, {"concept", concept_name}, {"error", e.what()}});
            return {};
        } catch (const BackendResponseError& e) {
            note({{"event", "kb_error"}, {"concept", concept_name}, {"error", e.what()}});
            return {};
        }
    }
    return {};
}

std::optional<CandidateDescriptions> Pipeline::search_descriptions(const std::string& concept_name,
                                                                   const std::string& enriched_caption) {
    CandidateDescriptions result{concept_name, {}, DescriptionOrigin::KnowledgeBase};
    for (const auto& c : query_knowledge(concept_name)) {
        auto cleaned = text::collapse_whitespace(c);
        if (cleaned.empty()) continue;
        result.candidates.push_back(std::move(cleaned));
        if (result.candidates.size() == kCandidateCap) break;
    }
    if (!result.candidates.empty()) return result;

    auto outcome = inspect_and_accept(
        concept_name,
        [&]() -> std::optional<std::string> {
            auto d = text::collapse_whitespace(
                call(AgentRole::SearcherCallback, {{"CONCEPT", concept_name}, {"CAPTION", enriched_caption}}));
            if (d.empty()) return std::nullopt;
            return d;
        },
        AgentRole::SearcherCallback);
    if (!outcome.accepted) {
        note({{"event", "description_discarded"}, {"concept", concept_name}, {"producer", "searcher_callback"},
              {"scores", outcome.scores}});
        return std::nullopt;
    }
    result.origin = DescriptionOrigin::LlmCallback;
    result.candidates.push_back(outcome.text);
    return result;
}

std::string Pipeline::select_description(const std::string& concept_name, const std::string& enriched_caption,
                                         const CandidateDescriptions& candidates) {
    const auto& items = candidates.candidates;
    if (items.empty()) throw InvalidInput("select_description needs at least one candidate");
    if (items.size() == 1) return items.front();

    const std::string reply = text::trim(call(AgentRole::Selector, {{"CONCEPT", concept_name},
                                                                    {"CAPTION", enriched_caption},
                                                                    {"ENUMERATED_CANDIDATES", enumerate(items)}}));
    for (const auto& c : items) {
        if (text::trim(c) == reply) return c;
    }
    std::size_t best = 0;
    double best_overlap = -1.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const double o = text::token_overlap(items[i], reply);
        if (o > best_overlap) {
            best_overlap = o;
            best = i;
        }
    }
    note({{"event", "selector_repair"}, {"concept", concept_name}, {"chosen", best + 1}, {"overlap", best_overlap}});
    return items[best];
}

std::string Pipeline::refine_description(const std::string& original_surface, const std::string& concept_name,
                                         const std::string& selected) {
    auto reply = text::collapse_whitespace(call(AgentRole::Refiner, {{"ORIGINAL_CONCEPT", original_surface},
                                                                     {"SEARCHABLE_CONCEPT", concept_name},
                                                                     {"SELECTED_DESCRIPTION", selected}}));
    if (reply.empty()) throw BackendResponseError("refiner returned an empty description");
    return reply;
}

InspectionOutcome Pipeline::inspect_and_accept(const std::string& concept_name, const Producer& produce,
                                               AgentRole producer) {
    if (producer != AgentRole::Refiner && producer != AgentRole::SearcherCallback) {
        throw InvalidInput(fmt::format("role '{}' is not inspected", role_name(producer)));
    }
    InspectionOutcome outcome;
    while (outcome.producer_calls < kMaxProducerCalls) {
        auto candidate = produce();
        ++outcome.producer_calls;
        int score = 0;
        if (candidate) {
            const auto reply = call(AgentRole::Inspector, {{"CONCEPT", concept_name}, {"DESCRIPTION", *candidate}});
            if (auto parsed = parse_inspector_score(reply)) {
                score = *parsed;
            } else {
                note({{"event", "inspector_unparseable"}, {"concept", concept_name}, {"reply", reply}});
            }
        }
        outcome.scores.push_back(score);
        if (candidate && score >= kAcceptScore) {
            outcome.accepted = true;
            outcome.text = std::move(*candidate);
            break;
        }
    }
    return outcome;
}

std::optional<std::string> Pipeline::describe_entity(const std::string& surface, const std::string& concept_name,
                                                     const std::string& enriched_caption) {
    auto candidates = search_descriptions(concept_name, enriched_caption);
    if (!candidates) return std::nullopt;
    const auto selected = select_description(concept_name, enriched_caption, *candidates);
    auto outcome = inspect_and_accept(
        surface,
        [&]() -> std::optional<std::string> {
            try {
                return refine_description(surface, concept_name, selected);
            } catch (const BackendResponseError& e) {
                note({{"event", "refiner_invalid"}, {"surface", surface}, {"error", e.what()}});
                return std::nullopt;
            }
        },
        AgentRole::Refiner);
    if (!outcome.accepted) {
        note({{"event", "description_discarded"}, {"surface", surface}, {"concept", concept_name},
              {"producer", "refiner"}, {"scores", outcome.scores}});
        return std::nullopt;
    }
    return outcome.text;
}

PreparedSample Pipeline::prepare(const CorpusSample& sample) {
    if (text::trim(sample.caption).empty()) throw InvalidInput(fmt::format("sample {}: empty caption", sample.id.value));
    if (!sample.audio_ref && !sample.visual_ref) {
        throw InvalidInput(fmt::format("sample {}: no media reference", sample.id.value));
    }
    PreparedSample out;
    out.id = sample.id;
    out.enriched_caption = rewrite_caption(sample);

    auto extracted = extract_triplets(out.enriched_caption);
    for (const auto& d : extracted.drops) {
        note({{"event", "parse_drop"}, {"sample", sample.id.value}, {"line", d.line}, {"text", d.text},
              {"reason", d.reason}});
    }
    if (extracted.triplets.empty()) note({{"event", "no_triplets"}, {"sample", sample.id.value}});

    std::map<std::string, std::string> concepts;
    std::vector<EntityMention> order;
    auto mention = [&](const std::string& surface) {
        auto it = concepts.find(surface);
        if (it == concepts.end()) {
            it = concepts.emplace(surface, normalize_entity(surface)).first;
            order.push_back({surface, it->second});
        }
        return EntityMention{surface, it->second};
    };
    for (const auto& raw : extracted.triplets) {
        auto head = mention(raw.head_surface);
        auto tail = mention(raw.tail_surface);
        out.triplets.push_back({std::move(head), raw.relation, std::move(tail)});
    }
    for (const auto& m : order) {
        if (auto d = describe_entity(m.surface, m.normalized, out.enriched_caption)) out.descriptions[m] = *d;
    }

    if (!backends_.embedder) throw ConfigError("no embedder backend configured");
    if (sample.audio_ref) {
        out.media.push_back({Modality::Audio, *sample.audio_ref, backends_.embedder->embed(Modality::Audio, *sample.audio_ref)});
    }
    if (sample.visual_ref) {
        out.media.push_back(
            {Modality::Visual, *sample.visual_ref, backends_.embedder->embed(Modality::Visual, *sample.visual_ref)});
    }
    return out;
}

Graph build_graph(const std::vector<CorpusSample>& corpus, const Backends& backends, const PromptLibrary& prompts,
                  const BuildOptions& options, AuditLog* audit, BuildStats* stats) {
    for (const auto& s : corpus) {
        if (!s.audio_ref && !s.visual_ref) {
            throw InvalidInput(fmt::format("sample {}: needs an audio_ref or a visual_ref", s.id.value));
        }
    }

    struct Slot {
        std::optional<PreparedSample> prepared;
        AuditLog events;
        std::exception_ptr error;
        std::string error_text;
    };
    std::vector<Slot> slots(corpus.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};

    auto worker = [&] {
        for (std::size_t i = next++; i < corpus.size() && !abort; i = next++) {
            Slot& slot = slots[i];
            Pipeline pipeline(backends, prompts, &slot.events);
            try {
                slot.prepared = pipeline.prepare(corpus[i]);
            } catch (const BackendUnavailable&) {
                slot.error = std::current_exception();
                abort = true;
            } catch (const ConfigError&) {
                slot.error = std::current_exception();
                abort = true;
            } catch (const std::exception& e) {
                slot.error_text = e.what();
            }
        }
    };
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options.jobs)), std::max<std::size_t>(1, corpus.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (const auto& slot : slots) {
        if (slot.error) std::rethrow_exception(slot.error);
    }

    ModalityDims dims;
    for (const auto& slot : slots) {
        if (!slot.prepared) continue;
        for (const auto& m : slot.prepared->media) {
            auto& d = m.modality == Modality::Audio ? dims.audio : dims.visual;
            if (d == 0) d = m.embedding.size();
        }
    }

    Graph graph(dims);
    BuildStats local;
    local.samples = corpus.size();
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        Slot& slot = slots[i];
        if (audit) audit->append(slot.events);
        local.parse_drops += slot.events.count("parse_drop");
        local.discarded_descriptions += slot.events.count("description_discarded");
        if (!slot.prepared) {
            ++local.skipped;
            if (audit) audit->record({{"event", "sample_skipped"}, {"sample", corpus[i].id.value}, {"error", slot.error_text}});
            spdlog::warn("sample {} skipped: {}", corpus[i].id.value, slot.error_text);
            continue;
        }
        auto& p = *slot.prepared;
        if (p.triplets.empty()) ++local.without_triplets;
        const std::size_t conflicts_before = graph.description_conflicts();
        try {
            graph.add_sample(p.id, p.triplets, p.descriptions, std::move(p.media));
        } catch (const Error& e) {
            ++local.skipped;
            if (audit) audit->record({{"event", "sample_skipped"}, {"sample", p.id.value}, {"error", e.what()}});
            spdlog::warn("sample {} skipped: {}", p.id.value, e.what());
            continue;
        }
        if (audit && graph.description_conflicts() > conflicts_before) {
            audit->record({{"event", "description_conflict"},
                           {"sample", p.id.value},
                           {"count", graph.description_conflicts() - conflicts_before}});
        }
    }
    graph.finalize();
    if (stats) *stats = local;
    return graph;
}

}  // namespace m3kg::agents
