#include <algorithm>
#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "m3kg/error.hpp"
#include "m3kg/graph_io.hpp"
#include "m3kg/index.hpp"
#include "support.hpp"

using namespace m3kg;
namespace mt = m3kg::testing;

namespace {

// Straightforward reference: long double accumulation, full sort.
std::vector<std::pair<double, std::uint64_t>> oracle(const ModalityIndex& index, const std::vector<float>& q,
                                                     std::size_t k) {
    std::vector<std::pair<double, std::uint64_t>> all;
    for (std::size_t i = 0; i < index.size(); ++i) {
        long double s = 0;
        auto row = index.row(i);
        for (std::size_t d = 0; d < q.size(); ++d) {
            const long double diff = static_cast<long double>(row[d]) - static_cast<long double>(q[d]);
            s += diff * diff;
        }
        all.emplace_back(static_cast<double>(std::sqrt(s)), index.entries()[i].key);
    }
    std::sort(all.begin(), all.end());
    all.resize(std::min(k, all.size()));
    return all;
}

ModalityIndex random_index(mt::Rng& rng, std::size_t n, std::size_t dim, bool duplicates) {
    ModalityIndex idx(IndexModality::Audio, dim);
    std::vector<float> prev;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<float> v(dim);
        for (auto& x : v) x = static_cast<float>(mt::uniform_real(rng, -1, 1));
        if (duplicates && !prev.empty() && mt::uniform(rng, 0, 4) == 0) v = prev;
        idx.add({i * 3 + 1, {MediaId{i + 1}}}, v);
        prev = v;
    }
    return idx;
}

}  // namespace

TEST(Index, KnnMatchesOracle) {
    mt::Rng rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = mt::uniform(rng, 1, 400);
        const std::size_t dim = mt::uniform(rng, 1, 64);
        const auto idx = random_index(rng, n, dim, trial % 3 == 0);
        std::vector<float> q(dim);
        for (auto& x : q) x = static_cast<float>(mt::uniform_real(rng, -1, 1));
        const std::size_t k = mt::uniform(rng, 1, 12);
        const auto got = knn(idx, q, k);
        const auto want = oracle(idx, q, k);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_NEAR(got[i].distance, want[i].first, 1e-12);
            EXPECT_EQ(got[i].key, want[i].second);
            EXPECT_EQ(idx.entries()[got[i].row].key, got[i].key);
        }
    }
}

TEST(Index, TiesBreakByKey) {
    ModalityIndex idx(IndexModality::Visual, 2);
    idx.add({5, {MediaId{5}}}, std::vector<float>{1, 0});
    idx.add({7, {MediaId{7}}}, std::vector<float>{0, 1});
    idx.add({9, {MediaId{9}}}, std::vector<float>{1, 0});
    const auto got = knn(idx, std::vector<float>{0, 0}, 3);
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].key, 5u);
    EXPECT_EQ(got[1].key, 7u);
    EXPECT_EQ(got[2].key, 9u);
}

TEST(Index, EdgeCases) {
    ModalityIndex empty(IndexModality::Audio, 3);
    EXPECT_TRUE(knn(empty, std::vector<float>{0, 0, 0}, 5).empty());
    ModalityIndex idx(IndexModality::Audio, 3);
    idx.add({1, {MediaId{1}}}, std::vector<float>{1, 2, 3});
    EXPECT_THROW(knn(idx, std::vector<float>{0, 0}, 1), DimensionMismatch);
    EXPECT_THROW(idx.add({2, {MediaId{2}}}, std::vector<float>{1, 2}), DimensionMismatch);
    EXPECT_THROW(idx.add({0, {MediaId{0}}}, std::vector<float>{1, 2, 3}), InvalidInput);
    EXPECT_THROW(idx.add({3, {MediaId{3}}}, std::vector<float>{1, INFINITY, 3}), InvalidInput);
    const auto exact = knn(idx, std::vector<float>{1, 2, 3}, 10);
    ASSERT_EQ(exact.size(), 1u);
    EXPECT_EQ(exact[0].distance, 0.0);
}

TEST(Index, ThresholdKeepsInclusivePrefix) {
    std::vector<Candidate> c{{1, 0, 0.1}, {2, 1, 0.3}, {3, 2, 0.3000001}, {4, 3, 2.0}};
    EXPECT_EQ(threshold_filter(c, 0.3).size(), 2u);
    EXPECT_EQ(threshold_filter(c, 0.0).size(), 0u);
    EXPECT_EQ(threshold_filter(c, kNoThreshold).size(), 4u);
}

TEST(Index, BuildPerModalityAndFused) {
    const auto g = mt::make_graph({{{"a", "on", "b"}}, {{"b", "on", "c"}}, {{"c", "on", "d"}}}, {}, 3);
    const auto audio = build_index(g, IndexModality::Audio);
    const auto visual = build_index(g, IndexModality::Visual);
    const auto av = build_index(g, IndexModality::AudioVisual);
    EXPECT_EQ(audio.size(), 3u);
    EXPECT_EQ(visual.size(), 3u);
    ASSERT_EQ(av.size(), 3u);
    EXPECT_EQ(av.dim(), 6u);
    for (std::size_t i = 0; i < av.size(); ++i) {
        const auto& e = av.entries()[i];
        EXPECT_EQ(e.key, i);
        ASSERT_EQ(e.media.size(), 2u);
        const auto& v = g.media_item(e.media[0]);
        const auto& a = g.media_item(e.media[1]);
        EXPECT_EQ(v.modality, Modality::Visual);
        EXPECT_EQ(a.modality, Modality::Audio);
        std::vector<float> expect = v.embedding;
        expect.insert(expect.end(), a.embedding.begin(), a.embedding.end());
        const auto row = av.row(i);
        EXPECT_TRUE(std::equal(row.begin(), row.end(), expect.begin(), expect.end()));
        const auto q = fuse_query(v.embedding, a.embedding, g.dims());
        EXPECT_EQ(knn(av, q, 1)[0].key, e.key);
    }
}

TEST(Index, FusedIndexExcludesSamplesWithoutBothModalities) {
    Graph g(ModalityDims{1, 1});
    g.add_sample(SampleId{0}, {}, {}, {{Modality::Audio, "a", {0.0f}}});
    g.add_sample(SampleId{1}, {}, {}, {{Modality::Audio, "a", {0.0f}}, {Modality::Visual, "v", {1.0f}}});
    g.finalize();
    const auto av = build_index(g, IndexModality::AudioVisual);
    EXPECT_EQ(av.size(), 1u);
    ASSERT_EQ(av.exclusions().size(), 1u);
    EXPECT_EQ(av.exclusions()[0].sample, SampleId{0});
    EXPECT_EQ(av.exclusions()[0].audio_items, 1u);
    EXPECT_EQ(av.exclusions()[0].visual_items, 0u);
}

TEST(IndexSidecar, RoundTripAndStaleness) {
    mt::TempDir dir;
    mt::Rng rng(3);
    const auto g = mt::random_graph(rng, 30, 5);
    const auto hash = graph_content_hash(g);
    for (auto m : {IndexModality::Audio, IndexModality::Visual, IndexModality::AudioVisual}) {
        const auto idx = build_index(g, m);
        const auto path = index_path(dir / "g.jsonl", m);
        save_index(idx, hash, path);
        const auto back = load_index(path, g, hash, m);
        ASSERT_TRUE(back);
        EXPECT_EQ(*back, idx);
        EXPECT_FALSE(load_index(path, g, hash + 1, m));
        const auto other = m == IndexModality::Audio ? IndexModality::Visual : IndexModality::Audio;
        EXPECT_FALSE(load_index(path, g, hash, other));
    }
    EXPECT_EQ(index_path("x/g.jsonl", IndexModality::AudioVisual).string(), "x/g.jsonl.audiovisual.idx");
}

TEST(IndexSidecar, CorruptFilesAreSchemaErrors) {
    mt::TempDir dir;
    const auto g = mt::make_graph({{{"a", "on", "b"}}}, {}, 4);
    const auto hash = graph_content_hash(g);
    const auto path = dir / "g.idx";
    save_index(build_index(g, IndexModality::Audio), hash, path);
    auto bytes = mt::read_file(path);

    mt::write_file(path, bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(load_index(path, g, hash, IndexModality::Audio), SchemaError);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    mt::write_file(path, bad_magic);
    EXPECT_THROW(load_index(path, g, hash, IndexModality::Audio), SchemaError);

    mt::write_file(path, bytes + "extra");
    EXPECT_THROW(load_index(path, g, hash, IndexModality::Audio), SchemaError);
}

TEST(IndexSidecar, SavedBytesAreDeterministic) {
    mt::TempDir dir;
    mt::Rng rng(8);
    const auto g = mt::random_graph(rng, 20, 7);
    save_index(build_index(g, IndexModality::Visual), 1, dir / "a.idx");
    save_index(build_index(g, IndexModality::Visual), 1, dir / "b.idx");
    EXPECT_EQ(mt::read_file(dir / "a.idx"), mt::read_file(dir / "b.idx"));
}
