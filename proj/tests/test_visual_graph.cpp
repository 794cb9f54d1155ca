#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "graphnav/visual_graph.hpp"

using namespace graphnav;

namespace {

constexpr int kV = 5, kEo = 4, kDirDim = 4, kD = 8;

CandidateObservation random_obs(std::mt19937_64& rng, int n_objects = 3) {
    CandidateObservation o;
    o.scene.resize(kV);
    for (double& x : o.scene) x = uniform(rng, -1, 1);
    o.objects.resize(static_cast<size_t>(n_objects));
    for (auto& obj : o.objects) {
        obj.resize(kEo);
        for (double& x : obj) x = uniform(rng, -1, 1);
    }
    o.direction.resize(kDirDim);
    for (double& x : o.direction) x = uniform(rng, -1, 1);
    return o;
}

CandidateObservation zero_obs(int n_objects = 3) {
    CandidateObservation o;
    o.scene.assign(kV, 0.0);
    o.objects.assign(static_cast<size_t>(n_objects), std::vector<double>(kEo, 0.0));
    o.direction.assign(kDirDim, 0.0);
    return o;
}

Var rand_vec(Graph& g, std::mt19937_64& rng, int d) {
    std::vector<double> v(static_cast<size_t>(d));
    for (double& x : v) x = uniform(rng, -1, 1);
    return g.constant(std::span<const double>(v));
}

struct Ctx {
    Var hs, ho, hd, rel_sd, rel_so, rel_od, prev;
};

Ctx random_ctx(Graph& g, std::mt19937_64& rng) {
    return {rand_vec(g, rng, kD), rand_vec(g, rng, kD), rand_vec(g, rng, kD),
            rand_vec(g, rng, kD), rand_vec(g, rng, kD), rand_vec(g, rng, kD), g.zeros(kD)};
}

}  // namespace

TEST(AggregateObjects, SingleObjectPassesThrough) {
    ParameterStore ps(71);
    Graph g;
    Var obj = g.constant(Tensor::vec({0.4, -0.6, 0.2, 0.8}));
    auto a = aggregate_objects(g, ps, g.constant(Tensor::vec({1, 2, 3, 4, 5, 6, 7, 8})),
                               g.stack_rows({obj}));
    for (int c = 0; c < kEo; ++c) EXPECT_DOUBLE_EQ(g.val(a.output)[c], g.val(obj)[c]);
    EXPECT_DOUBLE_EQ(g.val(a.weights)[0], 1.0);
}

TEST(AggregateObjects, IdenticalObjectsGiveThatVectorAndNormalizedWeights) {
    ParameterStore ps(72);
    std::mt19937_64 rng(3);
    Graph g;
    Var obj = rand_vec(g, rng, kEo);
    auto a = aggregate_objects(g, ps, rand_vec(g, rng, kD), g.stack_rows({obj, obj, obj}));
    for (int c = 0; c < kEo; ++c) EXPECT_NEAR(g.val(a.output)[c], g.val(obj)[c], 1e-12);
    double sum = 0.0;
    for (double w : g.val(a.weights)) {
        EXPECT_GE(w, 0.0);
        sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST(VisualStep, ZeroSceneContextNullsSceneNodes) {
    ParameterStore ps(73);
    std::mt19937_64 rng(4);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng)};
    auto out = visual_step(g, ps, obs, g.zeros(kD), c.ho, c.hd,
                           gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    for (double x : g.val(out.init_scene)) EXPECT_DOUBLE_EQ(x, 0.0);
}

TEST(VisualStep, ZeroObservationRowNullsItsInitialNodes) {
    // Last candidate is the all-zero stop observation; with zero prev direction
    // node its initial scene/object/direction nodes are all exactly zero.
    ParameterStore ps(74);
    std::mt19937_64 rng(5);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), zero_obs()};
    auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                           gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    for (Var m : {out.init_scene, out.init_object, out.init_dir})
        for (double x : g.val(g.row(m, 1))) EXPECT_DOUBLE_EQ(x, 0.0);
}

TEST(VisualStep, InitialNodeComponentsBoundedByContextMagnitude) {
    ParameterStore ps(75);
    std::mt19937_64 rng(6);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng), random_obs(rng)};
    auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                           gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    auto check = [&](Var rows, Var ctx) {
        double inf = 0.0;
        for (double x : g.val(ctx)) inf = std::max(inf, std::fabs(x));
        for (double x : g.val(rows)) EXPECT_LT(std::fabs(x), inf);
    };
    check(out.init_scene, c.hs);
    check(out.init_object, c.ho);
    check(out.init_dir, c.hd);
}

TEST(VisualStep, ZeroGatesMakeUpdatedEqualInitialExactly) {
    ParameterStore ps(76);
    std::mt19937_64 rng(7);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng), zero_obs()};
    auto out =
        visual_step(g, ps, obs, c.hs, c.ho, c.hd, zero_gates(g, kD), c.prev);
    for (auto [upd, init] : {std::pair{out.upd_scene, out.init_scene},
                             std::pair{out.upd_object, out.init_object},
                             std::pair{out.upd_dir, out.init_dir}}) {
        auto u = g.val(upd);
        auto i = g.val(init);
        for (size_t j = 0; j < u.size(); ++j) EXPECT_EQ(u[j], i[j]);
    }
    for (Var m : {out.msg_scene, out.msg_object, out.msg_dir})
        for (double x : g.val(m)) EXPECT_EQ(x, 0.0);
}

TEST(VisualStep, ZeroContextsZeroInitsMakeAllMessagesZero) {
    ParameterStore ps(77);
    std::mt19937_64 rng(8);
    Graph g;
    Var z = g.zeros(kD);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng)};
    MessageGates gates{rand_vec(g, rng, kD), rand_vec(g, rng, kD), rand_vec(g, rng, kD),
                       rand_vec(g, rng, kD), rand_vec(g, rng, kD), rand_vec(g, rng, kD)};
    auto out = visual_step(g, ps, obs, z, z, z, gates, g.zeros(kD));
    for (Var m : {out.msg_scene, out.msg_object, out.msg_dir})
        for (double x : g.val(m)) EXPECT_EQ(x, 0.0);
}

TEST(VisualStep, SharedEdgeWeightAffectsBothDirections) {
    ParameterStore ps(78);
    std::mt19937_64 rng(9);
    auto run = [&ps, &rng](double bump) {
        std::mt19937_64 local(12345);
        Graph g;
        auto c = random_ctx(g, local);
        std::vector<CandidateObservation> obs{random_obs(local), random_obs(local)};
        if (bump != 0.0) ps.at("vgraph.edge_scene_dir.W").value.at(0, 0) += bump;
        auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                               gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
        std::vector<std::vector<double>> m;
        for (Var v : {out.msg_scene, out.msg_object, out.msg_dir}) {
            auto s = g.val(v);
            m.emplace_back(s.begin(), s.end());
        }
        return m;
    };
    (void)rng;
    const auto base = run(0.0);
    const auto bumped = run(0.25);
    EXPECT_NE(base[0], bumped[0]);  // scene combined message moved (receiving path)
    EXPECT_NE(base[2], bumped[2]);  // direction combined message moved (sending path)
    EXPECT_EQ(base[1], bumped[1]);  // object message untouched by the s-d edge
}

TEST(VisualStep, ExactlyThreeUndirectedEdgeProjections) {
    ParameterStore ps(79);
    std::mt19937_64 rng(10);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng)};
    visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    int edge_params = 0;
    for (const auto& [name, e] : ps)
        if (name.rfind("vgraph.edge_", 0) == 0) ++edge_params;
    EXPECT_EQ(edge_params, 3);
}

TEST(VisualStep, ResidualIdentityHolds) {
    ParameterStore ps(80);
    std::mt19937_64 rng(11);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng)};
    auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                           gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    for (auto [upd, init, msg] : {std::tuple{out.upd_scene, out.init_scene, out.msg_scene},
                                  std::tuple{out.upd_object, out.init_object, out.msg_object},
                                  std::tuple{out.upd_dir, out.init_dir, out.msg_dir}}) {
        auto u = g.val(upd);
        auto i = g.val(init);
        auto m = g.val(msg);
        for (size_t j = 0; j < u.size(); ++j) EXPECT_DOUBLE_EQ(u[j], i[j] + m[j]);
    }
}

TEST(VisualStep, SingleCandidateGivesProbabilityOne) {
    ParameterStore ps(81);
    std::mt19937_64 rng(12);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{zero_obs()};
    auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                           gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    ASSERT_EQ(g.val(out.p).size(), 1u);
    EXPECT_DOUBLE_EQ(g.val(out.p)[0], 1.0);
}

TEST(VisualStep, IdenticalCandidatesSplitProbabilityEvenly) {
    ParameterStore ps(82);
    std::mt19937_64 rng(13);
    Graph g;
    auto c = random_ctx(g, rng);
    auto o = random_obs(rng);
    std::vector<CandidateObservation> obs{o, o};
    auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                           gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    EXPECT_DOUBLE_EQ(g.val(out.p)[0], 0.5);
    EXPECT_DOUBLE_EQ(g.val(out.p)[1], 0.5);
}

TEST(VisualStep, LogitShiftInvariance) {
    ParameterStore ps(83);
    std::mt19937_64 rng(14);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng), random_obs(rng)};
    auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                           gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
    Var shifted = g.softmax(g.add_scalar(out.logits, g.scalar(7.5)));
    for (size_t j = 0; j < g.val(out.p).size(); ++j)
        EXPECT_NEAR(g.val(shifted)[j], g.val(out.p)[j], 1e-9);
}

TEST(VisualStep, CandidateOrderEquivariance) {
    ParameterStore ps(84);
    std::mt19937_64 rng(15);
    auto obs_a = random_obs(rng);
    auto obs_b = random_obs(rng);
    auto obs_c = random_obs(rng);
    auto run = [&ps](const std::vector<CandidateObservation>& obs) {
        std::mt19937_64 local(777);
        Graph g;
        auto c = random_ctx(g, local);
        auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                               gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
        auto p = g.val(out.p);
        return std::vector<double>(p.begin(), p.end());
    };
    const auto p = run({obs_a, obs_b, obs_c});
    const auto q = run({obs_c, obs_a, obs_b});
    EXPECT_NEAR(q[0], p[2], 1e-12);
    EXPECT_NEAR(q[1], p[0], 1e-12);
    EXPECT_NEAR(q[2], p[1], 1e-12);
}

TEST(VisualStep, ProbabilitiesNormalized) {
    ParameterStore ps(85);
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 50; ++trial) {
        Graph g;
        auto c = random_ctx(g, rng);
        const int n = uniform_int(rng, 1, 5);
        std::vector<CandidateObservation> obs;
        for (int i = 0; i < n; ++i) obs.push_back(random_obs(rng));
        obs.push_back(zero_obs());
        auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                               gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev);
        double sum = 0.0;
        for (double x : g.val(out.p)) {
            EXPECT_GE(x, 0.0);
            sum += x;
        }
        EXPECT_NEAR(sum, 1.0, 1e-6);
    }
}

TEST(VisualStep, NoEdgesAblationSkipsMessageParameters) {
    ParameterStore ps(86);
    std::mt19937_64 rng(17);
    Graph g;
    auto c = random_ctx(g, rng);
    std::vector<CandidateObservation> obs{random_obs(rng), random_obs(rng)};
    VisualAblation ab;
    ab.edges = false;
    auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd, zero_gates(g, kD), c.prev, ab);
    EXPECT_FALSE(out.msg_scene.valid());
    for (const auto& [name, e] : ps) {
        EXPECT_EQ(name.rfind("vgraph.edge_", 0), std::string::npos) << name;
        EXPECT_EQ(name.rfind("vgraph.combine_", 0), std::string::npos) << name;
    }
    auto u = g.val(out.upd_scene);
    auto i = g.val(out.init_scene);
    for (size_t j = 0; j < u.size(); ++j) EXPECT_EQ(u[j], i[j]);
}

TEST(VisualStep, NodeAblationsChangeLogitWidthAndSkipNodes) {
    std::mt19937_64 rng(18);
    auto obs = std::vector<CandidateObservation>{random_obs(rng), random_obs(rng)};
    {
        ParameterStore ps(87);
        Graph g;
        auto c = random_ctx(g, rng);
        VisualAblation ab;
        ab.object_node = false;
        auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                               gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev, ab);
        EXPECT_FALSE(out.init_object.valid());
        EXPECT_FALSE(ps.contains("vgraph.obj_attn.W"));
        EXPECT_EQ(ps.at("policy.logit.w").value.rows(), 2 * kD);
        EXPECT_TRUE(ps.contains("vgraph.edge_scene_dir.W"));
        EXPECT_FALSE(ps.contains("vgraph.edge_scene_obj.W"));
        EXPECT_FALSE(ps.contains("vgraph.edge_obj_dir.W"));
    }
    {
        ParameterStore ps(88);
        Graph g;
        auto c = random_ctx(g, rng);
        VisualAblation ab;
        ab.scene_node = false;
        auto out = visual_step(g, ps, obs, c.hs, c.ho, c.hd,
                               gates_from_relations(c.rel_sd, c.rel_so, c.rel_od), c.prev, ab);
        EXPECT_FALSE(out.init_scene.valid());
        EXPECT_EQ(ps.at("policy.logit.w").value.rows(), 2 * kD);
        EXPECT_TRUE(ps.contains("vgraph.edge_obj_dir.W"));
        EXPECT_FALSE(ps.contains("vgraph.edge_scene_dir.W"));
    }
}
