#include <gtest/gtest.h>

#include <cmath>

#include "graphnav/language_graph.hpp"

using namespace graphnav;

namespace {

constexpr int kVocab = 12, kEmb = 6, kHid = 4, kDim = 2 * kHid;

InstructionEncoding enc_of(Graph& g, ParameterStore& ps, const std::vector<int>& ids,
                           int n_valid) {
    return encode_instruction(g, ps, ids, n_valid, kVocab, kEmb, kHid);
}

Var query(Graph& g) {
    return g.constant(Tensor::vec({0.3, -0.2, 0.7, 0.1, -0.5, 0.4, 0.0, 0.9}));
}

void expect_normalized_masked(std::span<const double> w, int n_valid) {
    double sum = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        EXPECT_GE(w[i], 0.0);
        if (static_cast<int>(i) >= n_valid) EXPECT_EQ(w[i], 0.0);
        sum += w[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
}

}  // namespace

TEST(LanguageGraph, SingleTokenDegeneratesToU1Everywhere) {
    ParameterStore ps(61);
    Graph g;
    auto enc = enc_of(g, ps, {5}, 1);
    auto lc = language_contexts(g, ps, query(g), enc);
    auto u1 = g.val(g.row(enc.tokens, 0));
    for (Var ctx : {lc.scene, lc.object, lc.direction, lc.rel_sd, lc.rel_so, lc.rel_od}) {
        for (int c = 0; c < kDim; ++c) EXPECT_NEAR(g.val(ctx)[c], u1[c], 1e-12);
    }
    for (Var w : {lc.w_scene, lc.w_object, lc.w_direction, lc.w_sd, lc.w_so, lc.w_od}) {
        ASSERT_EQ(g.val(w).size(), 1u);
        EXPECT_DOUBLE_EQ(g.val(w)[0], 1.0);
    }
    // global is the mean of three copies of u1
    for (int c = 0; c < kDim; ++c) EXPECT_NEAR(g.val(lc.global)[c], u1[c], 1e-12);
}

TEST(LanguageGraph, TiedHeadParametersGiveIdenticalContexts) {
    ParameterStore ps(62);
    {
        Graph g;
        auto enc = enc_of(g, ps, {2, 3, 4}, 3);
        language_contexts(g, ps, query(g), enc);
    }
    ps.at("lang.attn_object.W").value = ps.at("lang.attn_scene.W").value;
    ps.at("lang.attn_dir.W").value = ps.at("lang.attn_scene.W").value;
    Graph g;
    auto enc = enc_of(g, ps, {2, 3, 4}, 3);
    auto sp = specialized_contexts(g, ps, query(g), enc);
    for (int c = 0; c < kDim; ++c) {
        EXPECT_DOUBLE_EQ(g.val(sp.scene)[c], g.val(sp.object)[c]);
        EXPECT_DOUBLE_EQ(g.val(sp.scene)[c], g.val(sp.direction)[c]);
    }
}

TEST(LanguageGraph, HeadsDifferAtRandomInit) {
    ParameterStore ps(63);
    Graph g;
    auto enc = enc_of(g, ps, {2, 3, 4, 5}, 4);
    auto sp = specialized_contexts(g, ps, query(g), enc);
    auto tv = [&](Var a, Var b) {
        double d = 0.0;
        for (size_t i = 0; i < g.val(a).size(); ++i) d += std::fabs(g.val(a)[i] - g.val(b)[i]);
        return d / 2.0;
    };
    EXPECT_GT(tv(sp.w_scene, sp.w_object), 0.0);
    EXPECT_GT(tv(sp.w_scene, sp.w_direction), 0.0);
    EXPECT_GT(tv(sp.w_object, sp.w_direction), 0.0);
}

TEST(LanguageGraph, ZeroSpecializedContextsGiveUniformRelationalAttention) {
    ParameterStore ps(64);
    Graph g;
    auto enc = enc_of(g, ps, {2, 3, 4, 0, 0}, 3);
    Var z = g.zeros(kDim);
    auto rel = relational_contexts(g, ps, z, z, z, enc);
    for (Var w : {rel.w_sd, rel.w_so, rel.w_od}) {
        auto wv = g.val(w);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(wv[static_cast<size_t>(j)], 1.0 / 3.0, 1e-12);
        EXPECT_EQ(wv[3], 0.0);
        EXPECT_EQ(wv[4], 0.0);
    }
}

TEST(LanguageGraph, ConcatenationOrderMatters) {
    ParameterStore ps(65);
    Graph g;
    auto enc = enc_of(g, ps, {2, 3, 4, 5}, 4);
    auto sp = specialized_contexts(g, ps, query(g), enc);
    auto rel_ab = relational_contexts(g, ps, sp.scene, sp.object, sp.direction, enc);
    auto rel_ba = relational_contexts(g, ps, sp.direction, sp.object, sp.scene, enc);
    bool differs = false;
    for (int c = 0; c < kDim; ++c)
        if (g.val(rel_ab.sd)[c] != g.val(rel_ba.sd)[c]) differs = true;
    EXPECT_TRUE(differs);
}

TEST(LanguageGraph, AllSixDistributionsNormalizedAndMasked) {
    ParameterStore ps(66);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const int n_valid = uniform_int(rng, 1, 6);
        const int pad = uniform_int(rng, 0, 3);
        std::vector<int> ids;
        for (int j = 0; j < n_valid; ++j) ids.push_back(uniform_int(rng, 2, kVocab - 1));
        for (int j = 0; j < pad; ++j) ids.push_back(0);
        Graph g;
        auto enc = enc_of(g, ps, ids, n_valid);
        std::vector<double> q(kDim);
        for (double& x : q) x = uniform(rng, -1, 1);
        auto lc = language_contexts(g, ps, g.constant(std::span<const double>(q)), enc);
        for (Var w : {lc.w_scene, lc.w_object, lc.w_direction, lc.w_sd, lc.w_so, lc.w_od})
            expect_normalized_masked(g.val(w), n_valid);
    }
}

TEST(LanguageGraph, GlobalIsExactMeanOfSpecialized) {
    ParameterStore ps(67);
    Graph g;
    auto enc = enc_of(g, ps, {2, 3, 4, 5, 6}, 5);
    auto lc = language_contexts(g, ps, query(g), enc);
    for (int c = 0; c < kDim; ++c) {
        const double m =
            (g.val(lc.scene)[c] + g.val(lc.object)[c] + g.val(lc.direction)[c]) * (1.0 / 3.0);
        EXPECT_DOUBLE_EQ(g.val(lc.global)[c], m);
    }
}

TEST(LanguageGraph, WithoutRelationsSkipsRelationalParameters) {
    ParameterStore ps(68);
    Graph g;
    auto enc = enc_of(g, ps, {2, 3}, 2);
    auto lc = language_contexts(g, ps, query(g), enc, false);
    EXPECT_FALSE(lc.rel_sd.valid());
    EXPECT_FALSE(ps.contains("lang.attn_sd.W"));
    EXPECT_FALSE(ps.contains("lang.rel_sd.proj.W"));
    EXPECT_TRUE(lc.global.valid());
}
