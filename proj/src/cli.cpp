#include "m3kg/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "m3kg/error.hpp"
#include "m3kg/eval.hpp"
#include "m3kg/graph_io.hpp"
#include "m3kg/index.hpp"
#include "m3kg/parallel.hpp"
#include "m3kg/text.hpp"

namespace m3kg::cli {

using json = nlohmann::json;

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
    out << content;
    if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

std::optional<std::string> optional_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw InvalidInput(fmt::format("field '{}' must be a string or null", key));
    if (text::trim(it->get<std::string>()).empty()) return std::nullopt;
    return it->get<std::string>();
}

std::string format_value(double v) {
    if (std::isinf(v)) return "inf";
    return fmt::format("{}", v);
}

void setup_logging(const std::string& level) {
    auto logger = spdlog::get("m3kg");
    if (!logger) logger = spdlog::stderr_logger_mt("m3kg");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::from_str(level));
}

/// Options shared by every subcommand.
struct Common {
    std::string config_path;
    std::string profile;
    bool stub_all = false;
    bool stub_agents = false;
    bool stub_embedder = false;
    bool stub_grounders = false;
    bool stub_answerer = false;
    bool stub_judge = false;
    bool stub_kb = false;
    int jobs = 0;
    std::string log_level = "warn";

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (default: $M3KG_CONFIG)");
        cmd->add_option("--profile", profile, "audiocaps | vcgpt | valor");
        cmd->add_flag("--stub", stub_all, "use in-process stubs for every backend");
        cmd->add_flag("--stub-agents", stub_agents, "stub the construction and filter agents");
        cmd->add_flag("--stub-embedder", stub_embedder, "stub the embedder");
        cmd->add_flag("--stub-grounders", stub_grounders, "stub both grounding backends");
        cmd->add_flag("--stub-answerer", stub_answerer, "stub the answering model");
        cmd->add_flag("--stub-judge", stub_judge, "stub the judge");
        cmd->add_flag("--stub-kb", stub_kb, "stub the knowledge source");
        cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        cmd->add_option("--log-level", log_level, "trace | debug | info | warn | error | off");
    }

    EngineConfig resolve() const {
        EngineConfig config;
        std::string path = config_path;
        if (path.empty()) {
            if (const char* env = std::getenv("M3KG_CONFIG"); env && *env) path = env;
        }
        if (!path.empty()) config = load_config(path);
        if (!profile.empty()) apply_profile(config, profile);
        auto& b = config.backends;
        if (stub_all) b = BackendEndpoints{};
        if (stub_agents) b.agent = "stub";
        if (stub_embedder) b.embedder = "stub";
        if (stub_grounders) b.visual_grounder = b.audio_grounder = "stub";
        if (stub_answerer) b.answerer = "stub";
        if (stub_judge) b.judge = "stub";
        if (stub_kb) b.knowledge = "stub";
        if (jobs > 0) config.jobs = jobs;
        return config;
    }
};

/// Retrieval and pruning overrides for ask, answer-batch and sweep.
struct Tuning {
    std::optional<std::string> tau;
    std::optional<double> eta;
    std::optional<double> eta_v;
    std::optional<double> eta_a;
    std::optional<double> eta_av;
    std::optional<std::string> hops;
    std::optional<std::size_t> k;
    bool no_grasp = false;
    bool no_filter = false;
    bool no_visual_grounding = false;
    bool no_audio_grounding = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--tau", tau, "distance threshold (number or inf)");
        cmd->add_option("--eta", eta, "grounding threshold for every mode");
        cmd->add_option("--eta-v", eta_v, "visual grounding threshold");
        cmd->add_option("--eta-a", eta_a, "audio grounding threshold");
        cmd->add_option("--eta-av", eta_av, "fused grounding threshold");
        cmd->add_option("--hops", hops, "expansion radius (integer or inf)");
        cmd->add_option("--k", k, "neighbors per query")->check(CLI::PositiveNumber);
        cmd->add_flag("--no-grasp", no_grasp, "skip grounding and filtering");
        cmd->add_flag("--no-filter", no_filter, "skip the LLM filter");
        cmd->add_flag("--no-visual-grounding", no_visual_grounding, "skip visual grounding");
        cmd->add_flag("--no-audio-grounding", no_audio_grounding, "skip audio grounding");
    }

    void apply(EngineConfig& c) const {
        if (tau) c.retrieval.tau = parse_tau(text::to_lower(*tau) == "inf" ? json("inf") : json(std::stod(*tau)));
        if (eta) c.grasp.eta_v = c.grasp.eta_a = c.grasp.eta_av = *eta;
        if (eta_v) c.grasp.eta_v = *eta_v;
        if (eta_a) c.grasp.eta_a = *eta_a;
        if (eta_av) c.grasp.eta_av = *eta_av;
        if (hops) {
            if (text::to_lower(*hops) == "inf") {
                c.retrieval.hops = kUnboundedHops;
            } else {
                c.retrieval.hops = static_cast<std::size_t>(std::stoull(*hops));
            }
        }
        if (k) c.retrieval.k = *k;
        if (no_filter) c.grasp.stages.llm_filter = false;
        if (no_visual_grounding) c.grasp.stages.visual_grounding = false;
        if (no_audio_grounding) c.grasp.stages.audio_grounding = false;
        for (double e : {c.grasp.eta_v, c.grasp.eta_a, c.grasp.eta_av}) {
            if (!std::isfinite(e) || e < 0) throw ConfigError("grounding thresholds must be finite and non-negative");
        }
    }
};

std::vector<IndexModality> all_modalities() {
    return {IndexModality::Audio, IndexModality::Visual, IndexModality::AudioVisual};
}

bool graph_supports(const Graph& g, IndexModality m) {
    const auto& d = g.dims();
    switch (m) {
        case IndexModality::Audio:
            return d.audio > 0;
        case IndexModality::Visual:
            return d.visual > 0;
        case IndexModality::AudioVisual:
            return d.audio > 0 && d.visual > 0;
    }
    return false;
}

json trace_lines(const PruneTrace& trace, const EngineConfig& config) {
    json cfg = grasp_config_json(config.grasp);
    cfg["tau"] = std::isinf(config.retrieval.tau) ? json("inf") : json(config.retrieval.tau);
    cfg["k"] = config.retrieval.k;
    return trace.to_json_records(cfg);
}

// ---- subcommands -----------------------------------------------------------

int cmd_build(const Common& common, const std::string& manifest, const std::string& out_path, std::ostream& out) {
    auto config = common.resolve();
    auto corpus = agents::load_manifest(manifest);
    auto backends = make_backends(config);
    auto prompts = make_prompts(config);

    agents::AuditLog audit;
    agents::BuildStats stats;
    Graph graph = agents::build_graph(corpus, backends, prompts, {config.jobs}, &audit, &stats);
    save_graph(graph, out_path);
    audit.write(out_path + ".audit.jsonl");

    const auto report = validate(graph);
    out << fmt::format("samples {} (skipped {}, without triplets {}); entities {}, triplets {}, media {}, links {}; {}\n",
                       stats.samples, stats.skipped, stats.without_triplets, graph.entities().size(),
                       graph.triplets().size(), graph.media().size(), graph.links().size(),
                       report.valid() ? "VALID" : "INVALID");
    return report.valid() ? kOk : kInputFailure;
}

int cmd_index(const Common& common, const std::string& graph_path, const std::string& modality, std::ostream& out) {
    (void)common.resolve();
    const Graph graph = load_graph(graph_path);
    const auto hash = graph_content_hash(graph);
    std::vector<IndexModality> wanted;
    if (modality == "all") {
        wanted = all_modalities();
    } else if (auto m = parse_index_modality(modality)) {
        wanted = {*m};
    } else {
        throw InvalidInput(fmt::format("unknown modality '{}'", modality));
    }
    for (auto m : wanted) {
        if (!graph_supports(graph, m)) {
            if (modality != "all") throw IndexMissing(fmt::format("graph has no {} media", to_string(m)));
            out << fmt::format("{}: skipped (no media)\n", to_string(m));
            continue;
        }
        auto index = build_index(graph, m);
        const auto path = index_path(graph_path, m);
        save_index(index, hash, path);
        out << fmt::format("{}: {} entries, dim {}, {} excluded -> {}\n", to_string(m), index.size(), index.dim(),
                           index.exclusions().size(), path.string());
    }
    return kOk;
}

int cmd_ask(const Common& common, const Tuning& tuning, const std::string& graph_path, const QuerySpec& query,
            bool explain, bool print_prompt, std::ostream& out) {
    auto config = common.resolve();
    tuning.apply(config);
    const Engine engine = open_engine(graph_path, config);
    const auto result = run_query(engine, query, !tuning.no_grasp, true);
    out << *result.answer << "\n";
    if (print_prompt) out << "\n--- prompt ---\n" << result.prompt.text << "\n";
    if (explain) {
        out << fmt::format("\n--- retrieval ({}) ---\n", to_string(result.retrieval.modality));
        for (const auto& c : result.retrieval.nearest) {
            out << fmt::format("key {} distance {:.6f}{}\n", c.key, c.distance,
                               c.distance <= config.retrieval.tau ? "" : " (beyond tau)");
        }
        out << fmt::format("initial subgraph: {} triplets; kept: {}\n", result.retrieval.expanded.size(),
                           result.pruned.kept.size());
        out << "--- kept triplets ---\n";
        for (std::size_t i = 0; i < result.pruned.kept.size(); ++i) {
            out << render_triple_line(i + 1, engine.graph.triplet(result.pruned.kept[i]), engine.graph) << "\n";
        }
        out << "--- prune trace ---\n";
        for (const auto& line : trace_lines(result.pruned.trace, config)) out << line.dump() << "\n";
    }
    return kOk;
}

int cmd_answer_batch(const Common& common, const Tuning& tuning, const std::string& graph_path,
                     const std::string& queries_path, const std::string& out_path, const std::string& trace_path,
                     std::ostream& out) {
    auto config = common.resolve();
    tuning.apply(config);
    const Engine engine = open_engine(graph_path, config);
    const auto queries = parse_queryset(read_text_file(queries_path));

    std::vector<std::string> lines(queries.size());
    std::vector<std::string> traces(queries.size());
    parallel_for(queries.size(), config.jobs, [&](std::size_t i) {
        const auto& q = queries[i];
        auto result = run_query(engine, q, !tuning.no_grasp, true);
        json rec = {{"id", q.id},
                    {"question", q.question},
                    {"reference", q.reference ? json(*q.reference) : json(nullptr)},
                    {"answer", *result.answer}};
        lines[i] = rec.dump() + "\n";
        for (const auto& t : trace_lines(result.pruned.trace, config)) traces[i] += t.dump() + "\n";
    });
    std::string content;
    for (const auto& l : lines) content += l;
    write_file(out_path, content);
    if (!trace_path.empty()) {
        std::string all;
        for (const auto& t : traces) all += t;
        write_file(trace_path, all);
    }
    out << fmt::format("answered {} queries -> {}\n", queries.size(), out_path);
    return kOk;
}

int cmd_eval(const Common& common, const std::string& answers_path, const std::string& out_path, bool no_swap,
             std::ostream& out) {
    auto config = common.resolve();
    auto backends = make_backends(config);
    if (!backends.judge) throw ConfigError("no judge backend configured");
    const auto prompts = make_prompts(config);
    const auto records = eval::parse_answers(read_text_file(answers_path));
    const auto outcome = eval::run_eval(records, *backends.judge, prompts, {!no_swap, config.jobs});
    if (!out_path.empty()) write_file(out_path, outcome.to_json().dump(2) + "\n");
    out << outcome.to_table();
    return kOk;
}

int cmd_sweep(const Common& common, const Tuning& tuning, const std::string& graph_path,
              const std::string& queries_path, const std::string& axis, std::vector<double> values,
              const std::string& grid, const std::string& out_path, bool with_judge, std::ostream& out) {
    auto config = common.resolve();
    tuning.apply(config);
    if (axis != "tau" && axis != "eta") throw InvalidInput("--axis must be tau or eta");
    if (!grid.empty()) {
        if (grid != "benchmark") throw InvalidInput(fmt::format("unknown grid '{}'", grid));
        values = axis == "tau" ? std::vector<double>{1.5, 3.0, 4.5, 6.0, 7.5} : std::vector<double>{0.7, 0.9, 1.2, 1.5, 1.8};
    }
    if (values.empty()) throw InvalidInput("sweep needs --values or --grid");
    for (double v : values) {
        if (std::isnan(v) || v < 0) throw InvalidInput("sweep values must be non-negative");
    }

    Engine engine = open_engine(graph_path, config);
    const auto queries = parse_queryset(read_text_file(queries_path));
    if (with_judge && !engine.backends.judge) throw ConfigError("no judge backend configured");

    json rows = json::array();
    std::string table = fmt::format("{:<10}{:>14}{:>14}{:>10}\n", axis, "mean_kept", "mean_score", "scored");
    for (double v : values) {
        if (axis == "tau") {
            engine.config.retrieval.tau = v;
        } else {
            engine.config.grasp.eta_v = engine.config.grasp.eta_a = engine.config.grasp.eta_av = v;
        }
        std::vector<std::size_t> kept(queries.size());
        std::vector<std::optional<int>> raw(queries.size());
        parallel_for(queries.size(), engine.config.jobs, [&](std::size_t i) {
            const bool score = with_judge && queries[i].reference;
            auto result = run_query(engine, queries[i], !tuning.no_grasp, score);
            kept[i] = result.pruned.kept.size();
            if (score) {
                if (auto s = eval::judge(queries[i].question, *queries[i].reference, *result.answer,
                                         *engine.backends.judge, engine.prompts)) {
                    raw[i] = s->raw;
                }
            }
        });
        double kept_sum = 0;
        for (auto n : kept) kept_sum += static_cast<double>(n);
        const double mean_kept = queries.empty() ? 0.0 : kept_sum / static_cast<double>(queries.size());
        std::vector<eval::JudgeScore> scores;
        for (const auto& r : raw) {
            if (r) scores.push_back(eval::make_score(*r));
        }
        const auto report = eval::aggregate_judge(scores, 0);
        rows.push_back({{"value", v},
                        {"mean_kept", mean_kept},
                        {"mean_score", report.mean_scaled ? json(*report.mean_scaled) : json(nullptr)},
                        {"scored", scores.size()}});
        table += fmt::format("{:<10}{:>14.3f}{:>14}{:>10}\n", format_value(v), mean_kept,
                             report.mean_scaled ? fmt::format("{:.2f}", *report.mean_scaled) : std::string("n/a"),
                             scores.size());
    }
    if (!out_path.empty()) {
        json doc = {{"axis", axis}, {"queries", queries.size()}, {"config", config_to_json(config)}, {"rows", rows}};
        write_file(out_path, doc.dump(2) + "\n");
    }
    out << table;
    return kOk;
}

int cmd_validate(const std::string& graph_path, std::ostream& out) {
    const Graph graph = parse_graph_records(read_text_file(graph_path));
    const auto report = validate(graph);
    json doc = report.to_json();
    doc["status"] = report.valid() ? "VALID" : "INVALID";
    out << doc.dump(2) << "\n";
    return report.valid() ? kOk : kInputFailure;
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const BackendUnavailable*>(&e) || dynamic_cast<const BackendResponseError*>(&e) ||
        dynamic_cast<const KnowledgeTimeout*>(&e)) {
        return kBackendFailure;
    }
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IndexMissing*>(&e) ||
        dynamic_cast<const DimensionMismatch*>(&e)) {
        return kConfigFailure;
    }
    return kInputFailure;
}

std::vector<QuerySpec> parse_queryset(std::string_view content) {
    std::vector<QuerySpec> out;
    std::size_t line_no = 0;
    for (const auto& line : text::split_lines(content)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            const json j = json::parse(line);
            QuerySpec q;
            q.id = j.at("id");
            if (!q.id.is_string() && !q.id.is_number_integer()) throw InvalidInput("field 'id' must be a string or integer");
            q.question = j.at("question").get<std::string>();
            q.audio_ref = optional_field(j, "audio_ref");
            q.visual_ref = optional_field(j, "visual_ref");
            q.reference = optional_field(j, "reference");
            if (!q.audio_ref && !q.visual_ref) throw InvalidInput("query needs an audio_ref or a visual_ref");
            out.push_back(std::move(q));
        } catch (const json::exception& e) {
            throw InvalidInput(fmt::format("queryset line {}: {}", line_no, e.what()));
        } catch (const InvalidInput& e) {
            throw InvalidInput(fmt::format("queryset line {}: {}", line_no, e.what()));
        }
    }
    return out;
}

Engine open_engine(const std::filesystem::path& graph_path, EngineConfig config) {
    Engine engine;
    engine.graph = load_graph(graph_path);
    engine.backends = make_backends(config);
    engine.prompts = make_prompts(config);
    engine.config = std::move(config);

    std::optional<std::uint64_t> hash;
    for (auto m : all_modalities()) {
        if (!graph_supports(engine.graph, m)) continue;
        std::optional<ModalityIndex> index;
        const auto path = index_path(graph_path, m);
        if (std::filesystem::exists(path)) {
            if (!hash) hash = graph_content_hash(engine.graph);
            index = load_index(path, engine.graph, *hash, m);
            if (!index) spdlog::warn("{} is stale; rebuilding the {} index in memory", path.string(), to_string(m));
        }
        if (!index) index = build_index(engine.graph, m);
        (m == IndexModality::Audio ? engine.indices.audio
                                   : m == IndexModality::Visual ? engine.indices.visual : engine.indices.audiovisual) =
            std::move(index);
    }
    return engine;
}

QueryResult run_query(const Engine& engine, const QuerySpec& query, bool use_grasp, bool with_answer) {
    if (!engine.backends.embedder) throw ConfigError("no embedder backend configured");
    QueryVectors vectors;
    if (query.visual_ref) vectors.visual = engine.backends.embedder->embed(Modality::Visual, *query.visual_ref);
    if (query.audio_ref) vectors.audio = engine.backends.embedder->embed(Modality::Audio, *query.audio_ref);

    QueryResult r;
    r.retrieval = retrieve(engine.graph, engine.indices, vectors, engine.config.retrieval);
    const std::string query_id = query.id.is_string() ? query.id.get<std::string>() : query.id.dump();
    GraspQuery gq{query_id, query.question, query.visual_ref, query.audio_ref};
    if (use_grasp) {
        r.pruned = grasp(r.retrieval.expanded, gq, engine.config.grasp, engine.backends, engine.prompts, engine.graph);
    } else {
        r.pruned.kept = r.retrieval.expanded;
        r.pruned.trace.query_id = query_id;
        for (TripletId t : r.pruned.kept) r.pruned.trace.records.push_back({t, std::nullopt, std::nullopt, std::nullopt, true, true});
    }
    r.prompt = assemble(query.question, r.pruned.kept, engine.graph, engine.prompts, engine.config.char_budget, query_id);
    if (with_answer) {
        if (!engine.backends.answerer) throw ConfigError("no answering backend configured");
        r.answer = answer(r.prompt, *engine.backends.answerer, query.audio_ref, query.visual_ref);
    }
    return r;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multimodal knowledge-graph construction and retrieval-augmented answering", "m3kg"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    Common common;
    Tuning tuning;

    auto* build = app.add_subcommand("build", "build a graph from a corpus manifest");
    std::string manifest, out_graph;
    build->add_option("--manifest", manifest, "corpus manifest (JSON lines)")->required();
    build->add_option("--out", out_graph, "graph file to write")->required();
    common.attach(build);

    auto* index = app.add_subcommand("index", "build and cache the vector indices of a graph");
    std::string graph_path, modality = "all";
    index->add_option("--graph", graph_path, "graph file")->required();
    index->add_option("--modality", modality, "audio | visual | audiovisual | all");
    common.attach(index);

    auto* ask = app.add_subcommand("ask", "answer one question about query media");
    std::string question, audio_ref, visual_ref;
    bool explain = false, print_prompt = false;
    ask->add_option("--graph", graph_path, "graph file")->required();
    ask->add_option("--question", question, "question text")->required();
    ask->add_option("--audio", audio_ref, "audio reference of the query");
    ask->add_option("--visual", visual_ref, "visual reference of the query");
    ask->add_flag("--explain", explain, "print retrieval, kept triplets and the prune trace");
    ask->add_flag("--print-prompt", print_prompt, "print the assembled prompt");
    common.attach(ask);
    tuning.attach(ask);

    auto* batch = app.add_subcommand("answer-batch", "answer every query of a queryset");
    std::string queries_path, out_answers, trace_path;
    batch->add_option("--graph", graph_path, "graph file")->required();
    batch->add_option("--queries", queries_path, "queryset (JSON lines)")->required();
    batch->add_option("--out", out_answers, "answers file to write")->required();
    batch->add_option("--trace", trace_path, "prune trace file to write (JSON lines)");
    common.attach(batch);
    tuning.attach(batch);

    auto* ev = app.add_subcommand("eval", "score an answers file with the judge");
    std::string answers_path, report_path;
    bool no_swap = false;
    ev->add_option("--answers", answers_path, "answers file (JSON lines)")->required();
    ev->add_option("--out", report_path, "JSON report to write");
    ev->add_flag("--no-swap", no_swap, "judge pairwise answers in one order only");
    common.attach(ev);

    auto* sweep = app.add_subcommand("sweep", "vary tau or eta over a queryset");
    std::string axis, grid, sweep_out;
    std::vector<double> values;
    bool with_judge = false;
    sweep->add_option("--graph", graph_path, "graph file")->required();
    sweep->add_option("--queries", queries_path, "queryset (JSON lines)")->required();
    sweep->add_option("--axis", axis, "tau | eta")->required();
    sweep->add_option("--values", values, "comma-separated values")->delimiter(',');
    sweep->add_option("--grid", grid, "named grid: benchmark");
    sweep->add_option("--out", sweep_out, "JSON table to write");
    sweep->add_flag("--with-judge", with_judge, "answer and judge every query that has a reference");
    common.attach(sweep);
    tuning.attach(sweep);

    auto* val = app.add_subcommand("validate", "check a graph file");
    val->add_option("--graph", graph_path, "graph file")->required();
    val->add_option("--log-level", common.log_level, "log level");

    std::vector<const char*> argv{"m3kg"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputFailure;
    }

    try {
        setup_logging(common.log_level);
        if (build->parsed()) return cmd_build(common, manifest, out_graph, out);
        if (index->parsed()) return cmd_index(common, graph_path, modality, out);
        if (ask->parsed()) {
            QuerySpec q;
            q.id = "ask";
            q.question = question;
            if (!audio_ref.empty()) q.audio_ref = audio_ref;
            if (!visual_ref.empty()) q.visual_ref = visual_ref;
            if (!q.audio_ref && !q.visual_ref) throw InvalidInput("ask needs --audio and/or --visual");
            return cmd_ask(common, tuning, graph_path, q, explain, print_prompt, out);
        }
        if (batch->parsed()) return cmd_answer_batch(common, tuning, graph_path, queries_path, out_answers, trace_path, out);
        if (ev->parsed()) return cmd_eval(common, answers_path, report_path, no_swap, out);
        if (sweep->parsed()) {
            return cmd_sweep(common, tuning, graph_path, queries_path, axis, values, grid, sweep_out, with_judge, out);
        }
        if (val->parsed()) return cmd_validate(graph_path, out);
    } catch (const std::invalid_argument& e) {
        err << "m3kg: invalid number: " << e.what() << "\n";
        return kInputFailure;
    } catch (const std::exception& e) {
        err << "m3kg: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kInputFailure;
}

}  // namespace m3kg::cli
