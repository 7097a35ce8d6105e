#include <cmath>

#include <gtest/gtest.h>

#include "m3kg/config.hpp"
#include "m3kg/error.hpp"
#include "m3kg/protocol.hpp"
#include "support.hpp"

using namespace m3kg;
namespace mt = m3kg::testing;
using json = nlohmann::json;

TEST(Config, DefaultsAreStubsWithoutThresholds) {
    const EngineConfig c;
    EXPECT_EQ(c.backends.agent, "stub");
    EXPECT_TRUE(std::isinf(c.retrieval.tau));
    EXPECT_EQ(c.grasp.eta_v, 0.0);
    EXPECT_EQ(c.grasp.frame_count, 4);
    EXPECT_EQ(c.retries, 2);
}

TEST(Config, ProfilesPinBenchmarkConstants) {
    EngineConfig a, v, av;
    apply_profile(a, "audiocaps");
    apply_profile(v, "vcgpt");
    apply_profile(av, "valor");
    EXPECT_EQ(a.retrieval.tau, 0.3);
    EXPECT_EQ(a.grasp.eta_a, 0.5);
    EXPECT_EQ(v.retrieval.tau, 0.15);
    EXPECT_EQ(v.grasp.eta_v, 1.5);
    EXPECT_EQ(av.retrieval.tau, 4.5);
    EXPECT_EQ(av.grasp.eta_av, 1.2);
    for (const auto* c : {&a, &v, &av}) EXPECT_EQ(c->retrieval.k, 5u);
    EXPECT_THROW(apply_profile(a, "imagenet"), ConfigError);
}

TEST(Config, FixtureFileLoads) {
    const auto c = load_config(mt::fixture_dir() / "config.json");
    EXPECT_EQ(c.retrieval.k, 3u);
    EXPECT_TRUE(std::isinf(c.retrieval.tau));
    EXPECT_EQ(c.retrieval.hops, 1u);
    EXPECT_EQ(c.grasp.eta_av, 1.2);
    EXPECT_EQ(c.jobs, 2);
    EXPECT_EQ(c.stubs.seed, 7u);
    EXPECT_EQ(c.stubs.visual_table.at("dog"), 0.9);
    EXPECT_EQ(c.stubs.rewrites.at("dog"), "retriever");
}

TEST(Config, OverlayAndValueChecks) {
    EngineConfig c;
    apply_config(c, json::parse(R"({"profile":"valor","retrieval":{"tau":2,"hops":"inf"},"backends":{"all":"none","agent":"stub"}})"));
    EXPECT_EQ(c.retrieval.tau, 2.0);
    EXPECT_EQ(c.retrieval.hops, kUnboundedHops);
    EXPECT_EQ(c.grasp.eta_av, 1.2);
    EXPECT_EQ(c.backends.embedder, "none");
    EXPECT_EQ(c.backends.agent, "stub");

    auto bad = [](const char* doc) {
        EngineConfig c;
        EXPECT_THROW(apply_config(c, json::parse(doc)), ConfigError) << doc;
    };
    bad(R"({"unknown":1})");
    bad(R"({"retrieval":{"k":0}})");
    bad(R"({"retrieval":{"tau":-1}})");
    bad(R"({"retrieval":{"kk":1}})");
    bad(R"({"grasp":{"eta_v":-0.5}})");
    bad(R"({"grasp":{"frame_count":0}})");
    bad(R"({"grasp":{"stages":{"visual":"yes"}}})");
    bad(R"({"jobs":1.5})");
    bad(R"({"backends":{"agent":""}})");
    bad(R"({"stubs_file":"does-not-exist.json"})");
}

TEST(Config, TauParsing) {
    EXPECT_TRUE(std::isinf(parse_tau(json("inf"))));
    EXPECT_TRUE(std::isinf(parse_tau(json("Infinity"))));
    EXPECT_TRUE(std::isinf(parse_tau(json(nullptr))));
    EXPECT_EQ(parse_tau(json(0.3)), 0.3);
    EXPECT_THROW(parse_tau(json("big")), ConfigError);
}

TEST(Config, JsonViewRoundTripsThroughOverlay) {
    EngineConfig c;
    apply_profile(c, "vcgpt");
    c.retrieval.hops = kUnboundedHops;
    const auto j = config_to_json(c);
    EXPECT_EQ(j["retrieval"]["hops"], "inf");
    EngineConfig back;
    json doc{{"retrieval", j["retrieval"]}, {"grasp", j["grasp"]}, {"jobs", j["jobs"]}};
    apply_config(back, doc);
    EXPECT_EQ(config_to_json(back)["retrieval"], j["retrieval"]);
    EXPECT_EQ(config_to_json(back)["grasp"], j["grasp"]);
}

TEST(Config, BackendFactory) {
    EngineConfig c;
    auto b = make_backends(c);
    EXPECT_TRUE(b.embedder && b.agent && b.judge && b.knowledge);
    EXPECT_TRUE(std::dynamic_pointer_cast<stubs::StubAgent>(b.agent));

    c.backends.judge = "none";
    c.backends.agent = "http://127.0.0.1:9";
    c.backends.answerer = "http://127.0.0.1:9";
    b = make_backends(c);
    EXPECT_FALSE(b.judge);
    auto agent = std::dynamic_pointer_cast<protocol::HttpBackend>(b.agent);
    auto answerer = std::dynamic_pointer_cast<protocol::HttpBackend>(b.answerer);
    ASSERT_TRUE(agent);
    EXPECT_EQ(agent, answerer);

    c.backends.agent = "ftp://x";
    EXPECT_THROW(make_backends(c), ConfigError);
}

TEST(Config, FileKnowledgeSourceResolvesRelativeToConfig) {
    mt::TempDir dir;
    mt::write_file(dir / "kb.json", R"({"dog":["A dog."]})");
    mt::write_file(dir / "c.json", R"({"backends":{"knowledge":"file:kb.json"}})");
    const auto c = load_config(dir / "c.json");
    EXPECT_EQ(c.backends.knowledge, "file:" + (dir / "kb.json").string());
    const auto b = make_backends(c);
    EXPECT_EQ(b.knowledge->query("dog"), std::vector<std::string>{"A dog."});
    mt::write_file(dir / "bad.json", "{");
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
    EXPECT_THROW(load_config(dir / "missing.json"), ConfigError);
}
