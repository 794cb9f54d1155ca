#include <gtest/gtest.h>

#include "graphnav/metrics.hpp"

namespace gn = graphnav;

namespace {

// Exhaustive minimum over all monotone alignments: start at (0,0), end at
// (|P|-1, |R|-1), steps (1,0), (0,1), (1,1). Exponential, fine for <= 6 nodes.
double oracle_dtw_from(const gn::PointPath& p, const gn::PointPath& r, size_t i, size_t j) {
    const double c = gn::point_dist(p[i], r[j]);
    const bool pi = i + 1 < p.size();
    const bool rj = j + 1 < r.size();
    if (!pi && !rj) return c;
    double best = std::numeric_limits<double>::infinity();
    if (pi) best = std::min(best, oracle_dtw_from(p, r, i + 1, j));
    if (rj) best = std::min(best, oracle_dtw_from(p, r, i, j + 1));
    if (pi && rj) best = std::min(best, oracle_dtw_from(p, r, i + 1, j + 1));
    return c + best;
}

double oracle_dtw(const gn::PointPath& p, const gn::PointPath& r) {
    return oracle_dtw_from(p, r, 0, 0);
}

// Independent re-derivation of the coverage score, written longhand.
double oracle_cls(const gn::PointPath& p, const gn::PointPath& r, double d_th) {
    std::vector<double> nearest;
    for (size_t i = 0; i < r.size(); ++i) {
        double dmin = gn::point_dist(r[i], p[0]);
        for (size_t j = 1; j < p.size(); ++j)
            dmin = std::min(dmin, gn::point_dist(r[i], p[j]));
        nearest.push_back(dmin);
    }
    double pc = 0.0;
    for (double d : nearest) pc += std::exp(-d / d_th);
    pc /= static_cast<double>(r.size());
    double tl_r = 0.0;
    for (size_t i = 1; i < r.size(); ++i) tl_r += gn::point_dist(r[i - 1], r[i]);
    if (tl_r == 0.0) return pc;
    double tl_p = 0.0;
    for (size_t i = 1; i < p.size(); ++i) tl_p += gn::point_dist(p[i - 1], p[i]);
    const double epl = pc * tl_r;
    return pc * (epl / (epl + std::abs(tl_p - epl)));
}

gn::PointPath random_path(std::mt19937_64& rng, int min_len, int max_len) {
    const int n = gn::uniform_int(rng, min_len, max_len);
    gn::PointPath p;
    for (int i = 0; i < n; ++i)
        p.push_back({gn::uniform(rng, -5.0, 5.0), gn::uniform(rng, -5.0, 5.0)});
    return p;
}

}  // namespace

TEST(Metrics, IdenticalPathsScorePerfect) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = random_path(rng, 2, 6);
        const double l = gn::traj_length(r);
        const auto m = gn::compute_metrics(r, r, l, 1.0);
        EXPECT_EQ(m.ne, 0.0);
        EXPECT_EQ(m.sr, 1.0);
        EXPECT_EQ(m.spl, 1.0);
        EXPECT_EQ(m.ndtw, 1.0);  // dtw(P,P) = 0 exactly
        EXPECT_EQ(m.sdtw, 1.0);
        EXPECT_NEAR(m.cls, 1.0, 1e-12);
    }
}

TEST(Metrics, SinglePointDtwIsPointDistance) {
    const gn::PointPath a{{0.0, 0.0}};
    const gn::PointPath b{{3.0, 4.0}};
    EXPECT_DOUBLE_EQ(gn::dtw(a, b), 5.0);
    EXPECT_DOUBLE_EQ(gn::dtw(a, a), 0.0);
}

TEST(Metrics, DtwMatchesExhaustiveAlignmentOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_path(rng, 1, 6);
        const auto r = random_path(rng, 1, 6);
        EXPECT_NEAR(gn::dtw(p, r), oracle_dtw(p, r), 1e-9);
    }
}

TEST(Metrics, BasicMetricsHandValues) {
    const gn::PointPath ref{{0.0, 0.0}, {4.0, 0.0}};
    const gn::PointPath stay{{0.0, 0.0}};  // never moved
    auto m = gn::compute_metrics(stay, ref, 4.0, 1.0);
    EXPECT_EQ(m.tl, 0.0);
    EXPECT_EQ(m.ne, 4.0);
    EXPECT_EQ(m.sr, 0.0);
    EXPECT_EQ(m.spl, 0.0);
    EXPECT_EQ(m.sdtw, 0.0);

    const gn::PointPath boundary{{0.0, 0.0}, {3.0, 0.0}};  // NE exactly d_th
    m = gn::compute_metrics(boundary, ref, 4.0, 1.0);
    EXPECT_EQ(m.ne, 1.0);
    EXPECT_EQ(m.sr, 1.0);  // inclusive threshold
}

TEST(Metrics, SplScalesWithPathEfficiency) {
    EXPECT_DOUBLE_EQ(gn::spl(1.0, 4.0, 4.0), 1.0);
    EXPECT_DOUBLE_EQ(gn::spl(1.0, 8.0, 4.0), 0.5);
    EXPECT_DOUBLE_EQ(gn::spl(0.0, 8.0, 4.0), 0.0);
    EXPECT_DOUBLE_EQ(gn::spl(1.0, 2.0, 4.0), 1.0);  // shorter than l caps at 1
    EXPECT_DOUBLE_EQ(gn::spl(1.0, 5.0, 0.0), 1.0);  // degenerate start == goal
    EXPECT_DOUBLE_EQ(gn::spl(0.0, 5.0, 0.0), 0.0);
}

TEST(Metrics, NdtwSinglePointScale) {
    const gn::PointPath a{{0.0, 0.0}};
    const gn::PointPath b{{2.0, 0.0}};
    EXPECT_DOUBLE_EQ(gn::ndtw(a, b, 2.0), std::exp(-1.0));
    EXPECT_DOUBLE_EQ(gn::ndtw(a, b, 4.0), std::exp(-0.5));
}

TEST(Metrics, RangeAndDominanceOnRandomPairs) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = random_path(rng, 1, 6);
        const auto r = random_path(rng, 2, 6);
        const double l = gn::uniform(rng, 0.5, 10.0);
        const auto m = gn::compute_metrics(p, r, l, 1.0);
        EXPECT_GE(m.sr, 0.0);
        EXPECT_LE(m.sr, 1.0);
        EXPECT_GE(m.spl, 0.0);
        EXPECT_LE(m.spl, m.sr);
        EXPECT_GT(m.ndtw, 0.0);
        EXPECT_LE(m.ndtw, 1.0);
        EXPECT_LE(m.sdtw, m.sr);
        EXPECT_LE(m.sdtw, m.ndtw);
        EXPECT_GE(m.cls, 0.0);
        EXPECT_LE(m.cls, 1.0);
        EXPECT_NEAR(gn::ndtw(p, p, 1.0), 1.0, 0.0);
        EXPECT_NEAR(gn::cls(r, r, 1.0), 1.0, 1e-12);
    }
}

TEST(Metrics, ClsMatchesIndependentRederivation) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_path(rng, 1, 6);
        const auto r = random_path(rng, 1, 6);
        const double d_th = gn::uniform(rng, 0.5, 3.0);
        EXPECT_NEAR(gn::cls(p, r, d_th), oracle_cls(p, r, d_th), 1e-12);
    }
}

TEST(Metrics, ClsDegenerateSinglePointReference) {
    const gn::PointPath r{{1.0, 1.0}};  // TL(R) = 0
    const gn::PointPath p{{1.0, 1.0}, {2.0, 1.0}};
    EXPECT_DOUBLE_EQ(gn::cls(p, r, 1.0), gn::path_coverage(p, r, 1.0));
}

TEST(Metrics, FarPathScoresNearZeroCls) {
    const gn::PointPath r{{0.0, 0.0}, {1.0, 0.0}};
    const gn::PointPath p{{100.0, 100.0}, {101.0, 100.0}};
    EXPECT_LT(gn::cls(p, r, 1.0), 1e-12);
}

TEST(Metrics, DetourNeverIncreasesSpl) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = random_path(rng, 2, 6);
        gn::PointPath p = r;  // successful baseline
        const double l = gn::traj_length(r);
        const auto base = gn::compute_metrics(p, r, l, 1.0);
        ASSERT_EQ(base.sr, 1.0);
        gn::PointPath detoured = p;
        detoured.push_back({p.back().x + gn::uniform(rng, 0.5, 3.0), p.back().y});
        detoured.push_back(p.back());  // come back, success preserved
        const auto after = gn::compute_metrics(detoured, r, l, 1.0);
        EXPECT_EQ(after.sr, 1.0);
        EXPECT_LE(after.spl, base.spl);
    }
}

TEST(Metrics, EmptyTrajectoriesThrow) {
    const gn::PointPath empty;
    const gn::PointPath one{{0.0, 0.0}};
    EXPECT_THROW(gn::traj_length(empty), gn::error);
    EXPECT_THROW(gn::nav_error(one, empty), gn::error);
    EXPECT_THROW(gn::dtw(empty, one), gn::error);
    EXPECT_THROW(gn::compute_metrics(empty, one, 1.0, 1.0), gn::error);
}

TEST(Metrics, MeanAveragesFields) {
    gn::EpisodeMetrics a;
    a.sr = 1.0;
    a.spl = 0.5;
    a.tl = 2.0;
    gn::EpisodeMetrics b;
    b.sr = 0.0;
    b.spl = 0.0;
    b.tl = 6.0;
    const auto m = gn::mean_metrics({a, b});
    EXPECT_DOUBLE_EQ(m.sr, 0.5);
    EXPECT_DOUBLE_EQ(m.spl, 0.25);
    EXPECT_DOUBLE_EQ(m.tl, 4.0);
    EXPECT_THROW(gn::mean_metrics({}), gn::error);
}
