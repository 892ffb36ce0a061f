// SPDX-License-Identifier: Apache-2.0
#include "rtad/error.hpp"
#include "rtad/relgraph.hpp"

#include "support/oracles.hpp"
#include "support/testing.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace rtad {
namespace {

using testing::random_matrix;
using testing::random_vector;

Param* find(ParamRefs& ps, const std::string& name) {
    for (Param* p : ps) {
        if (p->name == name) return p;
    }
    return nullptr;
}

TEST(Attention, IdenticalMetricsShareWeightEvenly) {
    std::mt19937_64 rng(1);
    Mat x(2, 5);
    x.row(0) = random_vector(5, rng).transpose();
    x.row(1) = x.row(0);
    AttentionParams p{random_matrix(10, 3, rng), random_vector(3, rng)};
    Mat a = attention_scores(x, p);
    EXPECT_NEAR(a(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(a(0, 1), 0.5, 1e-15);
    EXPECT_NEAR(a(1, 0), 0.5, 1e-15);
}

TEST(Attention, SingleMetricAttendsToItself) {
    std::mt19937_64 rng(2);
    AttentionParams p{random_matrix(8, 3, rng), random_vector(3, rng)};
    Mat a = attention_scores(random_matrix(1, 4, rng), p);
    ASSERT_EQ(a.rows(), 1);
    EXPECT_EQ(a(0, 0), 1.0);
}

TEST(Attention, MatchesScalarOracle) {
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto m = static_cast<Eigen::Index>(1 + rng() % 4);
        const auto w = static_cast<Eigen::Index>(1 + rng() % 8);
        const auto d = static_cast<Eigen::Index>(1 + rng() % 6);
        Mat x = random_matrix(m, w, rng, -2, 2);
        AttentionParams p{random_matrix(2 * w, d, rng), random_vector(d, rng)};
        Mat got = attention_scores(x, p, 0.2);
        worst = std::max(worst, (got - oracle::attention(x, p.w_pair, p.p, 0.2)).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(Attention, RowsAreStochastic) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const double scale = trial % 2 ? 100.0 : 1.0;
        Mat x = random_matrix(6, 7, rng, -scale, scale);
        AttentionParams p{random_matrix(14, 5, rng, -3, 3), random_vector(5, rng, -3, 3)};
        Mat a = attention_scores(x, p);
        EXPECT_TRUE(a.allFinite());
        EXPECT_LT((a.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-6);
        EXPECT_GE(a.minCoeff(), 0.0);
    }
}

TEST(Attention, RejectsNonFiniteInput) {
    std::mt19937_64 rng(5);
    AttentionParams p{random_matrix(6, 2, rng), random_vector(2, rng)};
    Mat x = random_matrix(2, 3, rng);
    x(1, 2) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(attention_scores(x, p), ValidationError);
}

TEST(Binarize, Thresholds) {
    Mat a(2, 2);
    a << 0.5, 0.5, 0.9, 0.1;
    Mat expected(2, 2);
    expected << 1, 1, 1, 0;
    EXPECT_EQ(binarize_adjacency(a, 0.5), expected);
    EXPECT_EQ(binarize_adjacency(a, 0.0), Mat::Ones(2, 2));
    EXPECT_EQ(binarize_adjacency(a, 1.5), Mat::Zero(2, 2));
}

TEST(Gcn, EmptyGraphIsIdentityPropagation) {
    Mat h(1, 2);
    h << 1, -2;
    Mat out = gcn_layer(h, Mat::Zero(1, 1), Mat::Identity(2, 2));
    EXPECT_EQ(out(0, 0), 1.0);
    EXPECT_EQ(out(0, 1), 0.0);
}

TEST(Gcn, ConstantVectorOnRegularGraph) {
    Mat out = gcn_layer(Mat::Ones(2, 1), Mat::Ones(2, 2), Mat::Identity(1, 1));
    EXPECT_NEAR(out(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(out(1, 0), 1.0, 1e-15);
}

TEST(Gcn, MatchesOracleOnEveryAdjacencyUpToFourNodes) {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    std::size_t graphs = 0;
    for (int n = 1; n <= 4; ++n) {
        const int bits = n * n;
        for (long code = 0; code < (1L << bits); ++code) {
            Mat a(n, n);
            for (int b = 0; b < bits; ++b) a(b / n, b % n) = (code >> b) & 1;
            Mat h = random_matrix(n, 3, rng);
            Mat theta = random_matrix(3, 2, rng);
            worst = std::max(worst, (gcn_layer(h, a, theta) - oracle::gcn(h, a, theta)).cwiseAbs().maxCoeff());
            ++graphs;
        }
    }
    EXPECT_EQ(graphs, 2u + 16u + 512u + 65536u);
    EXPECT_LT(worst, 1e-10);
}

TEST(Pool, FullRatioKeepsEverything) {
    std::mt19937_64 rng(7);
    Mat h = random_matrix(5, 3, rng);
    PoolScorer s{random_matrix(3, 1, rng), 0.1};
    PoolResult r = sag_pool(h, Mat::Ones(5, 5), 1.0, s);
    EXPECT_EQ(r.kept, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Pool, TopScoresWinTiesToLowerIndex) {
    Vec z(4);
    z << 0.1, 0.9, 0.9, 0.2;
    EXPECT_EQ(top_k_indices(z, 2), (std::vector<std::size_t>{1, 2}));
    // with an empty graph the score is h * theta, so h = z reproduces the example
    PoolResult r = sag_pool(z, Mat::Zero(4, 4), 0.5, PoolScorer{Mat::Ones(1, 1), 0.0});
    EXPECT_EQ(r.kept, (std::vector<std::size_t>{1, 2}));
    Vec z2(4);
    z2 << 0.5, 0.5, 0.5, 0.5;
    EXPECT_EQ(top_k_indices(z2, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(Pool, KeepsInducedSubgraphAndGatedFeatures) {
    std::mt19937_64 rng(8);
    Mat h = random_matrix(6, 2, rng);
    Mat a = binarize_adjacency(random_matrix(6, 6, rng, 0, 1), 0.5);
    PoolScorer s{random_matrix(2, 1, rng), -0.2};
    PoolResult r = sag_pool(h, a, 0.5, s);
    ASSERT_EQ(r.kept.size(), 3u);
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t q = 0; q < 3; ++q) {
            EXPECT_EQ(r.a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)),
                      a(static_cast<Eigen::Index>(r.kept[p]), static_cast<Eigen::Index>(r.kept[q])));
        }
        const auto k = static_cast<Eigen::Index>(r.kept[p]);
        EXPECT_TRUE(r.h.row(static_cast<Eigen::Index>(p)).isApprox(h.row(k) * std::tanh(r.z(k))));
    }
}

TEST(Pool, KeepsFloorOfRatioTimesNodes) {
    std::mt19937_64 rng(9);
    for (int n = 1; n <= 12; ++n) {
        for (double ratio : {0.1, 0.25, 0.3, 0.5, 0.7, 0.9, 1.0}) {
            const auto expected = static_cast<std::size_t>(std::floor(ratio * n + 1e-12));
            EXPECT_EQ(pooled_size(static_cast<std::size_t>(n), ratio), expected);
            if (expected == 0) {
                EXPECT_THROW(sag_pool(random_matrix(n, 2, rng), Mat::Ones(n, n), ratio,
                                      PoolScorer{random_matrix(2, 1, rng), 0.0}),
                             ValidationError);
                continue;
            }
            PoolResult r = sag_pool(random_matrix(n, 2, rng), Mat::Ones(n, n), ratio,
                                    PoolScorer{random_matrix(2, 1, rng), 0.0});
            EXPECT_EQ(r.kept.size(), expected);
            EXPECT_EQ(r.h.rows(), static_cast<Eigen::Index>(expected));
        }
    }
}

TEST(Readout, MeanThenMax) {
    Mat one(1, 2);
    one << 1, 2;
    EXPECT_EQ(readout(one), (Vec(4) << 1, 2, 1, 2).finished());
    Mat two(2, 2);
    two << 0, 0, 2, 4;
    EXPECT_EQ(readout(two), (Vec(4) << 1, 2, 2, 4).finished());
}

TEST(Readout, PermutationInvariant) {
    std::mt19937_64 rng(10);
    Mat h = random_matrix(5, 3, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
    perm.indices() << 3, 0, 4, 1, 2;
    EXPECT_TRUE(readout(perm * h).isApprox(readout(h), 1e-15));
}

RelGraphConfig tiny(std::size_t layers) {
    RelGraphConfig c;
    c.metrics = 3;
    c.window = 8;
    c.attention_hidden = 4;
    c.features = 4;
    c.layers = layers;
    c.pool_ratio = 0.7;
    return c;
}

TEST(RelationalEncoder, OneLayerIsReadoutOfGcn) {
    std::mt19937_64 rng(11);
    RelGraphConfig cfg = tiny(1);
    RelationalEncoder enc(cfg, rng);
    ParamRefs ps;
    enc.collect(ps);
    Mat x = random_matrix(3, 8, rng);
    Mat a_bin = binarize_adjacency(enc.attention(x), cfg.effective_threshold());
    Vec expected = readout(gcn_layer(x, a_bin, find(ps, "rel.gcn0.theta")->value));
    EXPECT_TRUE(enc.forward(x).isApprox(expected, 1e-14));
    EXPECT_EQ(enc.forward(x).size(), 8);
}

TEST(RelationalEncoder, WidthIsTwiceFeaturesForAnyMetricCount) {
    for (std::size_t m : {2u, 5u, 9u}) {
        std::mt19937_64 rng(m);
        RelGraphConfig cfg = tiny(2);
        cfg.metrics = m;
        cfg.pool_ratio = 0.5;
        RelationalEncoder enc(cfg, rng);
        EXPECT_EQ(enc.forward(random_matrix(static_cast<Eigen::Index>(m), 8, rng)).size(), 8);
    }
}

TEST(RelationalEncoder, MetricPermutationPermutesAttention) {
    std::mt19937_64 rng(12);
    for (std::size_t layers : {1u, 2u}) {
        RelGraphConfig cfg = tiny(layers);
        cfg.metrics = 5;
        cfg.pool_ratio = 0.6;
        RelationalEncoder enc(cfg, rng);
        for (int trial = 0; trial < 10; ++trial) {
            Mat x = random_matrix(5, 8, rng);
            std::vector<int> idx(5);
            std::iota(idx.begin(), idx.end(), 0);
            std::shuffle(idx.begin(), idx.end(), rng);
            Eigen::PermutationMatrix<Eigen::Dynamic> perm(5);
            for (int i = 0; i < 5; ++i) perm.indices()(i) = idx[static_cast<std::size_t>(i)];
            Mat px = perm * x;
            Mat a = enc.attention(x);
            EXPECT_TRUE(enc.attention(px).isApprox(perm * a * perm.transpose(), 1e-12));
            // pooling scores are tie-free for continuous random inputs
            EXPECT_TRUE(enc.forward(px).isApprox(enc.forward(x), 1e-12)) << "layers " << layers;
        }
    }
}

TEST(RelationalEncoder, SimilarityInitTiesTheProjectionHalves) {
    std::mt19937_64 rng(13);
    RelGraphConfig cfg = tiny(1);
    RelationalEncoder enc(cfg, rng);
    AttentionParams p = enc.attention_params();
    EXPECT_EQ(p.w_pair.bottomRows(8), -p.w_pair.topRows(8));
    EXPECT_LE(p.p.maxCoeff(), 0.0);

    cfg.attention_init = AttentionInit::glorot;
    RelationalEncoder plain(cfg, rng);
    EXPECT_NE(plain.attention_params().w_pair.bottomRows(8), -plain.attention_params().w_pair.topRows(8));
}

TEST(RelationalEncoder, ConfigErrors) {
    RelGraphConfig c = tiny(2);
    c.pool_ratio = 0.2;  // floor(0.2 * 3) = 0 nodes after pooling
    EXPECT_THROW(c.validate(), ConfigError);
    c = tiny(1);
    c.attention_init_gain = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(parse_attention_init("xavier"), ConfigError);
    EXPECT_EQ(parse_attention_init("glorot"), AttentionInit::glorot);
}

double embed_loss(const RelationalEncoder& enc, const Mat& x, const Vec& c) {
    return c.dot(enc.forward(x));
}

TEST(RelationalEncoder, GradientsMatchFiniteDifferences) {
    for (std::size_t layers : {1u, 2u}) {
        std::mt19937_64 rng(14 + layers);
        RelGraphConfig cfg = tiny(layers);
        RelationalEncoder enc(cfg, rng);
        ParamRefs ps;
        enc.collect(ps);
        Mat x = random_matrix(3, 8, rng);
        Vec c = random_vector(8, rng);
        RelationalEncoder::Cache cache;
        enc.forward(x, &cache);
        for (Param* p : ps) p->zero_grad();
        enc.backward(cache, c);
        auto res = testing::check_gradients(ps, [&] { return embed_loss(enc, x, c); });
        EXPECT_LT(res.max_rel, 1e-4) << res.worst << " layers " << layers;
        EXPECT_GT(res.checked, 0u);
    }
}

TEST(RelationalEncoder, StraightThroughOnlyAddsAttentionGradients) {
    std::mt19937_64 rng(20);
    RelGraphConfig cfg = tiny(2);
    RelationalEncoder exact(cfg, rng);
    RelGraphConfig st_cfg = cfg;
    st_cfg.straight_through = true;
    // rebuild with the same values but the flag set
    std::mt19937_64 rng2(20);
    RelationalEncoder fresh(st_cfg, rng2);
    ParamRefs pe, pf;
    exact.collect(pe);
    fresh.collect(pf);
    for (std::size_t i = 0; i < pe.size(); ++i) pf[i]->value = pe[i]->value;

    Mat x = random_matrix(3, 8, rng);
    Vec c = random_vector(8, rng);
    RelationalEncoder::Cache ce, cf;
    exact.forward(x, &ce);
    fresh.forward(x, &cf);
    for (Param* p : pe) p->zero_grad();
    for (Param* p : pf) p->zero_grad();
    exact.backward(ce, c);
    fresh.backward(cf, c);
    for (std::size_t i = 0; i < pe.size(); ++i) {
        const bool attention = pe[i]->name.find("attention") != std::string::npos;
        if (attention) {
            EXPECT_EQ(pe[i]->grad.norm(), 0.0) << pe[i]->name;
            EXPECT_GT(pf[i]->grad.norm(), 0.0) << pf[i]->name;
        } else {
            EXPECT_TRUE(pe[i]->grad.isApprox(pf[i]->grad)) << pe[i]->name;
        }
    }
}

} // namespace
} // namespace rtad
