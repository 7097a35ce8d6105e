#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "m3kg/error.hpp"
#include "m3kg/retrieval.hpp"
#include "support.hpp"

using namespace m3kg;
namespace mt = m3kg::testing;

namespace {

std::vector<TripletId> ids(std::initializer_list<std::uint64_t> v) {
    std::vector<TripletId> out;
    for (auto x : v) out.emplace_back(x);
    return out;
}

// Brute-force BFS over entity adjacency, tracking hop distance per triplet.
std::set<TripletId> reachable(const Graph& g, const OrderedTripletSet& seed, std::size_t hops) {
    std::set<TripletId> seen(seed.begin(), seed.end());
    std::set<TripletId> frontier = seen;
    for (std::size_t h = 0; h < hops && !frontier.empty(); ++h) {
        std::set<EntityId> ents;
        for (auto t : frontier) {
            ents.insert(g.triplet(t).head);
            ents.insert(g.triplet(t).tail);
        }
        std::set<TripletId> next;
        for (const auto& [id, t] : g.triplets()) {
            if (!seen.contains(id) && (ents.contains(t.head) || ents.contains(t.tail))) next.insert(id);
        }
        seen.insert(next.begin(), next.end());
        frontier = next;
    }
    return seen;
}

}  // namespace

TEST(Lift, UnionOrderedByRankThenId) {
    // sample 0: t1, t2 ; sample 1: t2 (shared), t3
    const auto g = mt::make_graph({{{"a", "on", "b"}, {"b", "on", "c"}}, {{"b", "on", "c"}, {"c", "on", "d"}}});
    const auto m0 = g.media_of_sample(SampleId{0});
    const auto m1 = g.media_of_sample(SampleId{1});
    EXPECT_TRUE(lift(g, std::vector<MediaId>{}).empty());
    EXPECT_EQ(lift(g, std::vector<MediaId>{m0[0]}), ids({1, 2}));
    EXPECT_EQ(lift(g, std::vector<MediaId>{m0[0], m1[0]}), ids({1, 2, 3}));
    EXPECT_EQ(lift(g, std::vector<MediaId>{m1[0], m0[0]}), ids({2, 3, 1}));
    EXPECT_THROW(lift(g, std::vector<MediaId>{MediaId{999}}), UnknownId);
}

TEST(Lift, MatchesLinkTableBruteForce) {
    mt::Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const auto g = mt::random_graph(rng, 1 + trial, 2);
        std::vector<MediaId> all;
        for (const auto& [id, _] : g.media()) all.push_back(id);
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(mt::uniform(rng, 0, all.size()));
        const auto got = lift(g, all);
        std::set<TripletId> want;
        for (const auto& l : g.links()) {
            if (std::find(all.begin(), all.end(), l.media) != all.end()) want.insert(l.triplet);
        }
        EXPECT_EQ(std::set<TripletId>(got.begin(), got.end()), want);
        EXPECT_EQ(std::set<TripletId>(got.begin(), got.end()).size(), got.size());
    }
}

TEST(Expand, ChainByHand) {
    const auto g = mt::make_graph({{{"a", "r", "b"}}, {{"b", "r", "c"}}, {{"c", "r", "d"}}});
    EXPECT_EQ(expand(g, ids({1}), 0), ids({1}));
    EXPECT_EQ(expand(g, ids({1}), 1), ids({1, 2}));
    EXPECT_EQ(expand(g, ids({1}), 2), ids({1, 2, 3}));
    EXPECT_EQ(expand(g, ids({1}), kUnboundedHops), ids({1, 2, 3}));
    EXPECT_EQ(expand(g, ids({3, 1}), 1), ids({3, 1, 2}));
    EXPECT_TRUE(expand(g, {}, 3).empty());
}

TEST(Expand, MonotoneAndMatchesBfs) {
    mt::Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const auto g = mt::random_graph(rng, 2 + trial, 2);
        OrderedTripletSet seed;
        for (const auto& [id, _] : g.triplets()) {
            if (mt::uniform(rng, 0, 5) == 0) seed.push_back(id);
        }
        std::shuffle(seed.begin(), seed.end(), rng);
        std::set<TripletId> prev;
        for (std::size_t h = 0; h < 5; ++h) {
            const auto got = expand(g, seed, h);
            ASSERT_TRUE(std::equal(seed.begin(), seed.end(), got.begin()));
            const std::set<TripletId> s(got.begin(), got.end());
            EXPECT_EQ(s.size(), got.size());
            EXPECT_EQ(s, reachable(g, seed, h));
            EXPECT_TRUE(std::includes(s.begin(), s.end(), prev.begin(), prev.end()));
            prev = s;
        }
    }
}

TEST(Retrieve, ModalitySelectionAndErrors) {
    const auto g = mt::make_graph({{{"a", "on", "b"}}, {{"c", "on", "d"}}}, {}, 2);
    IndexSet idx;
    idx.audio = build_index(g, IndexModality::Audio);
    QueryVectors q;
    EXPECT_THROW(query_modality(q), InvalidInput);
    q.audio = g.media_item(g.media_of_sample(SampleId{1})[1]).embedding;
    EXPECT_EQ(query_modality(q), IndexModality::Audio);
    RetrievalConfig cfg{1, 0.0, 0};
    const auto r = retrieve(g, idx, q, cfg);
    EXPECT_EQ(r.modality, IndexModality::Audio);
    ASSERT_EQ(r.kept.size(), 1u);
    EXPECT_EQ(r.kept[0].distance, 0.0);
    EXPECT_EQ(r.expanded, ids({2}));

    q.visual = std::vector<float>{0, 0};
    EXPECT_EQ(query_modality(q), IndexModality::AudioVisual);
    EXPECT_THROW(retrieve(g, idx, q, cfg), IndexMissing);
    cfg.k = 0;
    EXPECT_THROW(retrieve(g, idx, QueryVectors{std::nullopt, q.audio}, cfg), ConfigError);
    QueryVectors wrong{std::nullopt, std::vector<float>{1, 2, 3}};
    EXPECT_THROW(retrieve(g, idx, wrong, RetrievalConfig{}), DimensionMismatch);
}

TEST(Retrieve, ThresholdRemovesFarNeighbors) {
    const auto g = mt::make_graph({{{"a", "on", "b"}}, {{"c", "on", "d"}}}, {}, 2);
    IndexSet idx;
    idx.visual = build_index(g, IndexModality::Visual);
    // sample 0 visual = [0, 0.25]; query at distance 0.5 from it
    QueryVectors q{std::vector<float>{0.5f, 0.25f}, std::nullopt};
    const auto r = retrieve(g, idx, q, RetrievalConfig{5, 0.3, 1});
    EXPECT_EQ(r.nearest.size(), 2u);
    EXPECT_TRUE(r.kept.empty());
    EXPECT_TRUE(r.expanded.empty());
    const auto r2 = retrieve(g, idx, q, RetrievalConfig{5, 0.5, 0});
    EXPECT_EQ(r2.expanded, ids({1}));
}

TEST(Retrieve, FusedQueryPicksNearerSample) {
    const auto g = mt::make_graph({{{"a", "on", "b"}}, {{"c", "on", "d"}}}, {}, 2);
    IndexSet idx;
    idx.audiovisual = build_index(g, IndexModality::AudioVisual);
    const auto m = g.media_of_sample(SampleId{0});
    QueryVectors q{g.media_item(m[0]).embedding, g.media_item(m[1]).embedding};
    const auto r = retrieve(g, idx, q, RetrievalConfig{5, 1.0, 1});
    EXPECT_EQ(r.modality, IndexModality::AudioVisual);
    ASSERT_EQ(r.kept.size(), 1u);
    EXPECT_EQ(r.kept[0].key, 0u);
    EXPECT_EQ(r.selected.size(), 2u);
    EXPECT_EQ(r.expanded, ids({1}));
}

TEST(Retrieve, FullCoverageLimit) {
    mt::Rng rng(4);
    const auto g = mt::random_graph(rng, 25, 3);
    IndexSet idx;
    idx.audio = build_index(g, IndexModality::Audio);
    QueryVectors q{std::nullopt, std::vector<float>{0, 0, 0}};
    const auto r = retrieve(g, idx, q, RetrievalConfig{g.media().size(), kNoThreshold, kUnboundedHops});
    EXPECT_EQ(r.expanded.size(), g.triplets().size());
}

TEST(Retrieve, ThresholdIsMonotone) {
    mt::Rng rng(41);
    const auto g = mt::random_graph(rng, 40, 4);
    IndexSet idx;
    idx.visual = build_index(g, IndexModality::Visual);
    QueryVectors q{std::vector<float>{1, 2, 3, 4}, std::nullopt};
    std::size_t prev = 0;
    for (double tau : {0.0, 1.0, 5.0, 10.0, 50.0, kNoThreshold}) {
        const auto r = retrieve(g, idx, q, RetrievalConfig{10, tau, 0});
        EXPECT_GE(r.kept.size(), prev);
        prev = r.kept.size();
    }
}
