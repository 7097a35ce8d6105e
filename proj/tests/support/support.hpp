#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "m3kg/agents.hpp"
#include "m3kg/backend.hpp"
#include "m3kg/graph.hpp"
#include "m3kg/stubs.hpp"

namespace m3kg::testing {

std::filesystem::path fixture_dir();
std::filesystem::path source_dir();
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

using Rng = std::mt19937_64;

/// Uniform integer in [lo, hi].
std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi);
double uniform_real(Rng& rng, double lo, double hi);

/// Hand-built graph for rendering and pruning tests.
struct TripletSpec {
    std::string head;
    std::string relation;
    std::string tail;
};

/// One sample per group; each sample gets one visual and one audio item
/// with embeddings of the given dim. Descriptions by surface.
Graph make_graph(const std::vector<std::vector<TripletSpec>>& samples,
                 const std::map<std::string, std::string>& descriptions = {}, std::size_t dim = 4);

/// Random corpus of `n` samples over a small vocabulary, every sample with
/// at least one media reference.
std::vector<agents::CorpusSample> random_corpus(Rng& rng, std::size_t n);

/// Random graph with `samples` commits and a few triplets each.
Graph random_graph(Rng& rng, std::size_t samples, std::size_t dim);

/// Visual grounder answering from a surface -> per-frame table; counts calls.
class TableVisualGrounder final : public VisualGrounder {
public:
    explicit TableVisualGrounder(std::map<std::string, std::vector<double>> table) : table_(std::move(table)) {}
    std::vector<double> ground(const std::string& entity, const std::string&, int frame_count) override;
    std::size_t calls() const { return calls_; }

private:
    std::map<std::string, std::vector<double>> table_;
    std::atomic<std::size_t> calls_{0};
};

class TableAudioGrounder final : public AudioGrounder {
public:
    explicit TableAudioGrounder(std::map<std::string, double> table) : table_(std::move(table)) {}
    double ground(const std::string& sentence, const std::string&) override;
    std::size_t calls() const { return calls_; }

private:
    std::map<std::string, double> table_;
    std::atomic<std::size_t> calls_{0};
};

/// Agent replaying fixed replies per role, in order; the last reply repeats.
/// Records every prompt it sees.
class ScriptedAgent final : public AgentBackend {
public:
    void script(AgentRole role, std::vector<std::string> replies) { replies_[role] = std::move(replies); }
    std::string run(AgentRole role, const std::string& prompt) override;
    std::size_t calls(AgentRole role) const;
    std::vector<std::string> prompts(AgentRole role) const;

private:
    mutable std::mutex mu_;
    std::map<AgentRole, std::vector<std::string>> replies_;
    std::map<AgentRole, std::vector<std::string>> seen_;
};

class ThrowingAgent final : public AgentBackend {
public:
    std::string run(AgentRole, const std::string&) override { throw BackendUnavailable("agent offline"); }
};

class FixedJudge final : public JudgeBackend {
public:
    explicit FixedJudge(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
    std::string judge(const std::string& prompt) override { return fn_(prompt); }

private:
    std::function<std::string(const std::string&)> fn_;
};

class EchoAnswerer final : public AnswerBackend {
public:
    std::string answer(const std::string& prompt, const std::optional<std::string>&,
                       const std::optional<std::string>&) override {
        return prompt;
    }
};

/// Stub configuration of the bundled fixture corpus.
stubs::StubConfig fixture_stub_config();

}  // namespace m3kg::testing
