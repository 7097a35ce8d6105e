#include "support.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "m3kg/text.hpp"

#ifndef M3KG_SOURCE_DIR
#error "M3KG_SOURCE_DIR must be defined by the build"
#endif

namespace m3kg::testing {

std::filesystem::path source_dir() { return M3KG_SOURCE_DIR; }
std::filesystem::path fixture_dir() { return source_dir() / "tests" / "fixtures"; }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

TempDir::TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("m3kg-test-{}-{}-{}", ::getpid(), counter++, rd());
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Graph make_graph(const std::vector<std::vector<TripletSpec>>& samples,
                 const std::map<std::string, std::string>& descriptions, std::size_t dim) {
    Graph g(ModalityDims{dim, dim});
    for (std::size_t s = 0; s < samples.size(); ++s) {
        std::vector<TripletInput> inputs;
        std::map<EntityMention, std::string> descs;
        for (const auto& t : samples[s]) {
            EntityMention h{t.head, t.head};
            EntityMention tl{t.tail, t.tail};
            inputs.push_back({h, t.relation, tl});
            for (const auto& m : {h, tl}) {
                if (auto it = descriptions.find(m.surface); it != descriptions.end()) descs[m] = it->second;
            }
        }
        std::vector<float> v(dim), a(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            v[i] = static_cast<float>(s) + 0.25f * static_cast<float>(i);
            a[i] = -static_cast<float>(s) - 0.5f * static_cast<float>(i);
        }
        std::vector<MediaInput> media{{Modality::Visual, fmt::format("video/{}.mp4", s), v},
                                      {Modality::Audio, fmt::format("audio/{}.wav", s), a}};
        g.add_sample(SampleId{s}, inputs, descs, std::move(media));
    }
    g.finalize();
    return g;
}

namespace {

const std::vector<std::string>& nouns() {
    static const std::vector<std::string> v = {"dog",  "ball",  "man",   "woman", "guitar", "car",  "rain",
                                               "bird", "tree",  "train", "drum",  "child",  "cat",  "bridge",
                                               "lake", "horse", "crowd", "piano", "engine", "wind", "door"};
    return v;
}

const std::vector<std::string>& adjectives() {
    static const std::vector<std::string> v = {"small", "red", "old", "loud", "wet", "brown", "tall"};
    return v;
}

}  // namespace

std::vector<agents::CorpusSample> random_corpus(Rng& rng, std::size_t n) {
    const auto& rel = stubs::default_relations();
    const auto& ns = nouns();
    auto noun_phrase = [&] {
        std::string np = uniform(rng, 0, 1) ? "a " : "the ";
        if (uniform(rng, 0, 3) == 0) np += adjectives()[uniform(rng, 0, adjectives().size() - 1)] + " ";
        return np + ns[uniform(rng, 0, ns.size() - 1)];
    };
    std::vector<agents::CorpusSample> corpus;
    for (std::size_t i = 0; i < n; ++i) {
        agents::CorpusSample s;
        s.id = SampleId{i};
        const std::size_t clauses = uniform(rng, 1, 3);
        for (std::size_t c = 0; c < clauses; ++c) {
            if (c) s.caption += uniform(rng, 0, 1) ? ", " : " and ";
            if (uniform(rng, 0, 9) == 0) {
                s.caption += noun_phrase() + " waits";  // clause without a relation word
            } else {
                s.caption += noun_phrase() + " " + rel[uniform(rng, 0, rel.size() - 1)] + " " + noun_phrase();
            }
        }
        s.caption += ".";
        const auto media = uniform(rng, 0, 2);
        if (media != 1) s.audio_ref = fmt::format("audio/{}.wav", i);
        if (media != 0) s.visual_ref = fmt::format("video/{}.mp4", i);
        if (uniform(rng, 0, 1)) s.title = fmt::format("clip {}", i);
        if (uniform(rng, 0, 2) == 0) s.metadata_description = "recorded outdoors";
        corpus.push_back(std::move(s));
    }
    return corpus;
}

Graph random_graph(Rng& rng, std::size_t samples, std::size_t dim) {
    const auto& ns = nouns();
    const auto& rel = stubs::default_relations();
    std::vector<std::vector<TripletSpec>> specs(samples);
    std::map<std::string, std::string> descs;
    for (auto& s : specs) {
        const std::size_t n = uniform(rng, 1, 4);
        for (std::size_t i = 0; i < n; ++i) {
            s.push_back({ns[uniform(rng, 0, ns.size() - 1)], rel[uniform(rng, 0, 7)], ns[uniform(rng, 0, ns.size() - 1)]});
        }
    }
    for (const auto& n : ns) {
        if (uniform(rng, 0, 2)) descs[n] = fmt::format("A {} is a thing.", n);
    }
    return make_graph(specs, descs, dim);
}

std::vector<double> TableVisualGrounder::ground(const std::string& entity, const std::string&, int frame_count) {
    ++calls_;
    auto it = table_.find(entity);
    if (it == table_.end()) return std::vector<double>(static_cast<std::size_t>(frame_count), 0.0);
    return it->second;
}

double TableAudioGrounder::ground(const std::string& sentence, const std::string&) {
    ++calls_;
    auto it = table_.find(sentence);
    return it == table_.end() ? 0.0 : it->second;
}

std::string ScriptedAgent::run(AgentRole role, const std::string& prompt) {
    std::lock_guard lock(mu_);
    auto& seen = seen_[role];
    seen.push_back(prompt);
    auto it = replies_.find(role);
    if (it == replies_.end() || it->second.empty()) {
        throw BackendResponseError(fmt::format("no scripted reply for role {}", role_name(role)));
    }
    const auto& r = it->second;
    return r[std::min(seen.size(), r.size()) - 1];
}

std::size_t ScriptedAgent::calls(AgentRole role) const {
    std::lock_guard lock(mu_);
    auto it = seen_.find(role);
    return it == seen_.end() ? 0 : it->second.size();
}

std::vector<std::string> ScriptedAgent::prompts(AgentRole role) const {
    std::lock_guard lock(mu_);
    auto it = seen_.find(role);
    return it == seen_.end() ? std::vector<std::string>{} : it->second;
}

stubs::StubConfig fixture_stub_config() {
    return stubs::parse_stub_config(nlohmann::json::parse(read_file(fixture_dir() / "stubs.json")));
}

}  // namespace m3kg::testing
