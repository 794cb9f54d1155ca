#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include "graphnav/common.hpp"

namespace graphnav {

// ---- fixed word lists for room types and object categories ----

inline const std::vector<std::string>& room_words() {
    static const std::vector<std::string> w{"kitchen", "hallway", "bedroom", "bathroom",
                                            "lounge",  "office",  "garden",  "studio"};
    return w;
}

inline const std::vector<std::string>& object_words() {
    static const std::vector<std::string> w{"sofa",  "lamp",  "table", "mirror", "plant", "shelf",
                                            "piano", "vase",  "rug",   "clock",  "desk",  "chair"};
    return w;
}

// ---- world ----

struct Viewpoint {
    int id = 0;
    double x = 0.0, y = 0.0;
    int room = 0;
    std::vector<int> objects;    // object type ids, distinct
    std::vector<int> neighbors;  // sorted ascending; candidate order everywhere
};

struct World {
    uint64_t seed = 0;
    int n_rooms = 0;
    std::vector<Viewpoint> vps;

    int size() const { return static_cast<int>(vps.size()); }
    const Viewpoint& at(int id) const {
        require(id >= 0 && id < size(), "world: viewpoint " + std::to_string(id) + " out of range");
        return vps[static_cast<size_t>(id)];
    }
};

inline double euclid(const World& w, int a, int b) {
    const auto& p = w.at(a);
    const auto& q = w.at(b);
    return std::hypot(q.x - p.x, q.y - p.y);
}

inline double bearing(const World& w, int from, int to) {
    const auto& p = w.at(from);
    const auto& q = w.at(to);
    return std::atan2(q.y - p.y, q.x - p.x);
}

// wraps to (-pi, pi]
inline double wrap_angle(double a) {
    const double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

// ---- generation ----

struct WorldGenConfig {
    int n_viewpoints = 24;
    double extent = 10.0;   // positions drawn from [0, extent)^2
    double radius = 2.5;    // geometric-graph connection radius
    int n_rooms = 8;
    int n_object_types = 12;
    int min_objects = 2;
    int max_objects = 4;
    int max_degree = 36;    // panorama view count bounds the degree
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<size_t>(n)) {
        for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
    }
    int find(int a) {
        while (parent[static_cast<size_t>(a)] != a) {
            parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
            a = parent[static_cast<size_t>(a)];
        }
        return a;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[static_cast<size_t>(a)] = b;
        return true;
    }
};

// Deterministic k-means over viewpoint positions; cluster index = room id.
inline std::vector<int> kmeans_rooms(const std::vector<Viewpoint>& vps, int k,
                                     std::mt19937_64& rng) {
    const int n = static_cast<int>(vps.size());
    k = std::min(k, n);
    std::vector<double> cx(static_cast<size_t>(k)), cy(static_cast<size_t>(k));
    std::vector<int> pick;
    while (static_cast<int>(pick.size()) < k) {
        const int c = uniform_int(rng, 0, n - 1);
        if (std::find(pick.begin(), pick.end(), c) == pick.end()) pick.push_back(c);
    }
    for (int j = 0; j < k; ++j) {
        cx[static_cast<size_t>(j)] = vps[static_cast<size_t>(pick[static_cast<size_t>(j)])].x;
        cy[static_cast<size_t>(j)] = vps[static_cast<size_t>(pick[static_cast<size_t>(j)])].y;
    }
    std::vector<int> assign(static_cast<size_t>(n), 0);
    for (int iter = 0; iter < 25; ++iter) {
        for (int i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int arg = 0;
            for (int j = 0; j < k; ++j) {
                const double dx = vps[static_cast<size_t>(i)].x - cx[static_cast<size_t>(j)];
                const double dy = vps[static_cast<size_t>(i)].y - cy[static_cast<size_t>(j)];
                const double d = dx * dx + dy * dy;
                if (d < best) {
                    best = d;
                    arg = j;
                }
            }
            assign[static_cast<size_t>(i)] = arg;
        }
        for (int j = 0; j < k; ++j) {
            double sx = 0.0, sy = 0.0;
            int cnt = 0;
            for (int i = 0; i < n; ++i)
                if (assign[static_cast<size_t>(i)] == j) {
                    sx += vps[static_cast<size_t>(i)].x;
                    sy += vps[static_cast<size_t>(i)].y;
                    ++cnt;
                }
            if (cnt > 0) {
                cx[static_cast<size_t>(j)] = sx / cnt;
                cy[static_cast<size_t>(j)] = sy / cnt;
            }
        }
    }
    return assign;
}

}  // namespace detail

// Random geometric graph plus greedy component stitching for connectivity;
// rooms from spatial clustering; 2-4 distinct objects per viewpoint.
inline World generate_world(uint64_t seed, const WorldGenConfig& cfg = {}) {
    require(cfg.n_viewpoints >= 2, "generate_world: need at least 2 viewpoints");
    require(cfg.n_rooms >= 1 && cfg.n_rooms <= static_cast<int>(room_words().size()),
            "generate_world: n_rooms out of range");
    require(cfg.n_object_types >= cfg.max_objects &&
                cfg.n_object_types <= static_cast<int>(object_words().size()),
            "generate_world: n_object_types out of range");
    require(cfg.min_objects >= 1 && cfg.min_objects <= cfg.max_objects,
            "generate_world: bad object count range");

    World w;
    w.seed = seed;
    w.n_rooms = cfg.n_rooms;
    std::mt19937_64 rng(mix_seed({seed, fnv1a64("world")}));

    const int n = cfg.n_viewpoints;
    w.vps.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& vp = w.vps[static_cast<size_t>(i)];
        vp.id = i;
        for (int attempt = 0;; ++attempt) {
            require(attempt < 1000, "generate_world: cannot place distinct positions");
            vp.x = uniform(rng, 0.0, cfg.extent);
            vp.y = uniform(rng, 0.0, cfg.extent);
            bool dup = false;
            for (int j = 0; j < i; ++j)
                if (w.vps[static_cast<size_t>(j)].x == vp.x && w.vps[static_cast<size_t>(j)].y == vp.y)
                    dup = true;
            if (!dup) break;
        }
    }

    detail::UnionFind uf(n);
    auto add_edge = [&](int a, int b) {
        w.vps[static_cast<size_t>(a)].neighbors.push_back(b);
        w.vps[static_cast<size_t>(b)].neighbors.push_back(a);
        uf.unite(a, b);
    };
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (euclid(w, a, b) <= cfg.radius) add_edge(a, b);

    // stitch components: repeatedly join the globally nearest cross-component pair
    for (;;) {
        int best_a = -1, best_b = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int a = 0; a < n; ++a)
            for (int b = a + 1; b < n; ++b)
                if (uf.find(a) != uf.find(b)) {
                    const double d = euclid(w, a, b);
                    if (d < best_d) {
                        best_d = d;
                        best_a = a;
                        best_b = b;
                    }
                }
        if (best_a < 0) break;
        add_edge(best_a, best_b);
    }

    for (auto& vp : w.vps) {
        std::sort(vp.neighbors.begin(), vp.neighbors.end());
        require(static_cast<int>(vp.neighbors.size()) <= cfg.max_degree,
                "generate_world: viewpoint degree exceeds view count; lower the radius");
    }

    const auto rooms = detail::kmeans_rooms(w.vps, cfg.n_rooms, rng);
    for (int i = 0; i < n; ++i) w.vps[static_cast<size_t>(i)].room = rooms[static_cast<size_t>(i)];

    for (auto& vp : w.vps) {
        const int cnt = uniform_int(rng, cfg.min_objects, cfg.max_objects);
        while (static_cast<int>(vp.objects.size()) < cnt) {
            const int o = uniform_int(rng, 0, cfg.n_object_types - 1);
            if (std::find(vp.objects.begin(), vp.objects.end(), o) == vp.objects.end())
                vp.objects.push_back(o);
        }
    }
    return w;
}

// ---- graph algorithms ----

inline std::vector<int> bfs_hops(const World& w, int src) {
    std::vector<int> dist(static_cast<size_t>(w.size()), -1);
    std::queue<int> q;
    dist[static_cast<size_t>(src)] = 0;
    q.push(src);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int v : w.at(u).neighbors)
            if (dist[static_cast<size_t>(v)] < 0) {
                dist[static_cast<size_t>(v)] = dist[static_cast<size_t>(u)] + 1;
                q.push(v);
            }
    }
    return dist;
}

inline bool is_connected(const World& w) {
    const auto d = bfs_hops(w, 0);
    return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
}

inline std::vector<double> dijkstra_dist(const World& w, int src) {
    std::vector<double> dist(static_cast<size_t>(w.size()),
                             std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<size_t>(src)] = 0.0;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[static_cast<size_t>(u)]) continue;
        for (int v : w.at(u).neighbors) {
            const double nd = d + euclid(w, u, v);
            if (nd < dist[static_cast<size_t>(v)]) {
                dist[static_cast<size_t>(v)] = nd;
                pq.emplace(nd, v);
            }
        }
    }
    return dist;
}

// ---- sensing ----

struct SensingConfig {
    int views = 36;          // panorama sectors at equal spacing
    int scene_dim = 32;      // V
    int object_dim = 32;     // E_o
    int k_objects = 3;       // object slots per candidate
    double noise_scale = 0.05;
    double bucket_size = 2.0;
    int max_bucket = 4;
};

struct CandidateView {
    int to_viewpoint = -1;
    double heading = 0.0;      // relative to agent orientation, (-pi, pi]
    double heading_abs = 0.0;  // absolute bearing
    double elevation = 0.0;
    std::vector<double> scene;
    std::vector<std::vector<double>> objects;  // k x E_o
};

struct Observation {
    std::vector<std::vector<double>> view_feats;  // views x V
    std::vector<double> view_headings;            // relative, (-pi, pi]
    std::vector<CandidateView> candidates;        // adjacency (sorted id) order
};

namespace detail {

inline std::vector<double> hash_embed(uint64_t seed, int dim) {
    std::mt19937_64 rng(seed);
    std::vector<double> v(static_cast<size_t>(dim));
    for (double& x : v) x = uniform(rng, -1.0, 1.0);
    return v;
}

inline int sector_of(double absolute_angle, int views) {
    const double two_pi = 2.0 * std::numbers::pi;
    double a = std::fmod(absolute_angle, two_pi);
    if (a < 0) a += two_pi;
    int s = static_cast<int>(a / (two_pi / views));
    return std::min(s, views - 1);
}

// Absolute per-sector feature: hash embedding of (nearest room seen in the
// sector, distance bucket) plus viewpoint-and-sector-seeded noise. The base
// embedding is keyed by room type alone — like a CNN, the sensor responds to
// what a place is, not which world it is in — while the noise carries the
// per-world appearance variation. Unseen-world generalization depends on this
// split: only the type-keyed part is learnable across worlds.
inline std::vector<double> sector_feature(const World& w, int vp, int sector,
                                          const SensingConfig& sc) {
    int room = -1, bucket = sc.max_bucket + 1;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& other : w.vps) {
        if (other.id == vp) continue;
        if (sector_of(bearing(w, vp, other.id), sc.views) != sector) continue;
        const double d = euclid(w, vp, other.id);
        if (d < best) {
            best = d;
            room = other.room;
            bucket = std::min(static_cast<int>(d / sc.bucket_size), sc.max_bucket);
        }
    }
    auto feat = hash_embed(mix_seed({fnv1a64("sector"), static_cast<uint64_t>(room + 1),
                                     static_cast<uint64_t>(bucket)}),
                           sc.scene_dim);
    const auto noise = hash_embed(
        mix_seed({w.seed, fnv1a64("noise"), static_cast<uint64_t>(vp), static_cast<uint64_t>(sector)}),
        sc.scene_dim);
    for (int i = 0; i < sc.scene_dim; ++i)
        feat[static_cast<size_t>(i)] += sc.noise_scale * noise[static_cast<size_t>(i)];
    return feat;
}

// Object features are keyed by type id only, mirroring a detector that emits
// the same class embedding wherever the object appears.
inline std::vector<double> object_feature(const World& w, int object_id, const SensingConfig& sc) {
    (void)w;
    return hash_embed(mix_seed({fnv1a64("object"), static_cast<uint64_t>(object_id)}),
                      sc.object_dim);
}

}  // namespace detail

// Panoramic observation at `viewpoint` for an agent facing `agent_heading`
// (absolute radians). Features are a pure function of (world, viewpoint);
// only the relative headings depend on the agent's orientation.
inline Observation observe(const World& w, int viewpoint, double agent_heading,
                           const SensingConfig& sc = {}) {
    const auto& vp = w.at(viewpoint);
    Observation obs;
    obs.view_feats.reserve(static_cast<size_t>(sc.views));
    obs.view_headings.reserve(static_cast<size_t>(sc.views));
    const double two_pi = 2.0 * std::numbers::pi;
    for (int s = 0; s < sc.views; ++s) {
        obs.view_feats.push_back(detail::sector_feature(w, viewpoint, s, sc));
        const double center = (s + 0.5) * (two_pi / sc.views);
        obs.view_headings.push_back(wrap_angle(center - agent_heading));
    }
    for (int nb : vp.neighbors) {
        CandidateView c;
        c.to_viewpoint = nb;
        c.heading_abs = bearing(w, viewpoint, nb);
        c.heading = wrap_angle(c.heading_abs - agent_heading);
        c.elevation = 0.0;
        c.scene = obs.view_feats[static_cast<size_t>(detail::sector_of(c.heading_abs, sc.views))];
        const auto& ids = w.at(nb).objects;
        require(!ids.empty(), "observe: viewpoint without objects");
        for (int j = 0; j < sc.k_objects; ++j)
            c.objects.push_back(detail::object_feature(
                w, ids[static_cast<size_t>(j) % ids.size()], sc));
        obs.candidates.push_back(std::move(c));
    }
    return obs;
}

// ---- teacher and transitions ----

inline constexpr int kStopAction = -1;

// Index (into the sorted neighbor list) of the next hop on a shortest path to
// the goal; ties broken by smallest viewpoint id. kStopAction at the goal.
inline int teacher_action(const World& w, int current, int goal) {
    if (current == goal) return kStopAction;
    const auto dist = bfs_hops(w, goal);
    require(dist[static_cast<size_t>(current)] >= 0, "teacher_action: goal unreachable");
    const auto& nbs = w.at(current).neighbors;
    for (int i = 0; i < static_cast<int>(nbs.size()); ++i) {
        const int nb = nbs[static_cast<size_t>(i)];
        if (dist[static_cast<size_t>(nb)] == dist[static_cast<size_t>(current)] - 1)
            return i;  // neighbors sorted ascending, so first hit is smallest id
    }
    throw error("teacher_action: no descending neighbor (broken distances)");
}

// Applies a candidate index or kStopAction; stop keeps the position and ends
// the episode. The step budget T_max is enforced by the rollout loop.
inline std::pair<int, bool> step_world(const World& w, int current, int action) {
    if (action == kStopAction) return {current, true};
    const auto& nbs = w.at(current).neighbors;
    require(action >= 0 && action < static_cast<int>(nbs.size()),
            "step: candidate index " + std::to_string(action) + " out of range");
    return {nbs[static_cast<size_t>(action)], false};
}

}  // namespace graphnav
