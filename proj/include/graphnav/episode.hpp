#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "graphnav/common.hpp"
#include "graphnav/vocab.hpp"
#include "graphnav/world.hpp"

namespace graphnav {

inline constexpr double kInitialHeading = 0.0;

// Grammar words in fixed order, then rooms, then objects: token ids are
// stable across runs without storing the vocabulary alongside every file.
inline Vocabulary build_world_vocab() {
    Vocabulary v;
    for (const char* t : {"walk", "past", "the", "into", "stop", "by",
                          "left", "right", "straight", "back",
                          "slight-left", "slight-right", "sharp-left", "sharp-right"})
        v.add(t);
    for (const auto& t : room_words()) v.add(t);
    for (const auto& t : object_words()) v.add(t);
    return v;
}

// Eight 45-degree buckets; the compound words are hyphenated so each stays a
// single token under whitespace tokenization. left = counter-clockwise.
inline const char* turn_word(double delta) {
    const double o = std::numbers::pi / 8.0;
    const double a = std::abs(delta);
    if (a <= o) return "straight";
    if (a > 7.0 * o) return "back";
    if (delta > 0.0)
        return a <= 3.0 * o ? "slight-left" : a <= 5.0 * o ? "left" : "sharp-left";
    return a <= 3.0 * o ? "slight-right" : a <= 5.0 * o ? "right" : "sharp-right";
}

struct EpisodeSpec {
    int world_idx = 0;
    int start = 0;
    int goal = 0;
    std::vector<int> path;  // start..goal inclusive, the reference route
    std::string instruction;
    std::vector<int> tokens;
};

namespace detail {

// First min(k, count) objects of a viewpoint: the ones the agent can observe
// as object slots there.
inline std::vector<int> visible_objects(const World& w, int vp, int k_objects) {
    const auto& objs = w.at(vp).objects;
    const int n = std::min<int>(k_objects, static_cast<int>(objs.size()));
    return {objs.begin(), objs.begin() + n};
}

// Picks a clause object for viewpoint `to`, preferring one that none of the
// viewpoints in `confusable` shows — an unambiguous instruction beats a
// merely truthful one. Falls back to any visible object when every choice
// clashes. Exactly one rng draw either way.
inline int pick_clause_object(const World& w, int to, const std::vector<int>& confusable,
                              int k_objects, std::mt19937_64& rng) {
    const auto mine = visible_objects(w, to, k_objects);
    std::vector<int> unique;
    for (int obj : mine) {
        bool clash = false;
        for (int other : confusable) {
            const auto theirs = visible_objects(w, other, k_objects);
            if (std::find(theirs.begin(), theirs.end(), obj) != theirs.end()) {
                clash = true;
                break;
            }
        }
        if (!clash) unique.push_back(obj);
    }
    const auto& pool = unique.empty() ? mine : unique;
    return pool[static_cast<size_t>(uniform_int(rng, 0, static_cast<int>(pool.size()) - 1))];
}

}  // namespace detail

// One clause per edge ("walk <turn> past the <object> into the <room>") and a
// closing "stop by the <object>". Object words are always observable at the
// clause's viewpoint, and where possible they discriminate: the edge clause
// avoids objects shown by sibling candidates that share the turn word and the
// room, and the stop clause avoids objects seen anywhere else on the route.
inline std::string generate_instruction(const World& w, const std::vector<int>& path,
                                        std::mt19937_64& rng, int k_objects) {
    require(path.size() >= 2, "generate_instruction: path needs at least one edge");
    require(k_objects >= 1, "generate_instruction: k_objects must be positive");
    std::string out;
    double heading = kInitialHeading;
    for (size_t i = 1; i < path.size(); ++i) {
        const int from = path[i - 1];
        const int to = path[i];
        const double b = bearing(w, from, to);
        const char* turn = turn_word(wrap_angle(b - heading));
        std::vector<int> confusable;
        for (int c : w.at(from).neighbors) {
            if (c == to) continue;
            if (w.at(c).room != w.at(to).room) continue;
            if (std::string(turn_word(wrap_angle(bearing(w, from, c) - heading))) != turn)
                continue;
            confusable.push_back(c);
        }
        heading = b;
        const int obj = detail::pick_clause_object(w, to, confusable, k_objects, rng);
        out += "walk ";
        out += turn;
        out += " past the ";
        out += object_words()[static_cast<size_t>(obj)];
        out += " into the ";
        out += room_words()[static_cast<size_t>(w.at(to).room)];
        out += " ";
    }
    const std::vector<int> en_route(path.begin(), path.end() - 1);
    const int obj = detail::pick_clause_object(w, path.back(), en_route, k_objects, rng);
    out += "stop by the ";
    out += object_words()[static_cast<size_t>(obj)];
    return out;
}

// Follows the teacher from start to goal; ends at the goal by construction.
inline std::vector<int> teacher_path(const World& w, int start, int goal) {
    std::vector<int> path{start};
    int cur = start;
    while (cur != goal) {
        require(static_cast<int>(path.size()) <= w.size(), "teacher_path: cycle");
        const int a = teacher_action(w, cur, goal);
        cur = step_world(w, cur, a).first;
        path.push_back(cur);
    }
    return path;
}

inline double path_length(const World& w, const std::vector<int>& path) {
    double len = 0.0;
    for (size_t i = 1; i < path.size(); ++i) len += euclid(w, path[i - 1], path[i]);
    return len;
}

struct EpisodeConfig {
    int min_hops = 2;
    int max_hops = 5;
    int max_tries = 500;
};

// Uniformly samples (start, goal) pairs until the hop distance is in range
// and the teacher's route is also metrically shortest: its geometric length
// must equal the graph's shortest-path distance exactly, so following the
// reference route is optimal under both hop and length measures.
inline EpisodeSpec make_episode(const World& w, std::mt19937_64& rng, const EpisodeConfig& ec,
                                int k_objects) {
    require(ec.min_hops >= 1 && ec.min_hops <= ec.max_hops, "make_episode: bad hop range");
    for (int attempt = 0; attempt < ec.max_tries; ++attempt) {
        const int start = uniform_int(rng, 0, w.size() - 1);
        const int goal = uniform_int(rng, 0, w.size() - 1);
        if (start == goal) continue;
        const auto hops = bfs_hops(w, start);
        const int h = hops[static_cast<size_t>(goal)];
        if (h < ec.min_hops || h > ec.max_hops) continue;
        auto path = teacher_path(w, start, goal);
        const double len = path_length(w, path);
        const double best = dijkstra_dist(w, start)[static_cast<size_t>(goal)];
        if (len != best) continue;  // want the route optimal in length, not just hops
        EpisodeSpec ep;
        ep.start = start;
        ep.goal = goal;
        ep.path = std::move(path);
        ep.instruction = generate_instruction(w, ep.path, rng, k_objects);
        return ep;
    }
    throw error("make_episode: no admissible (start, goal) pair after " +
                std::to_string(ec.max_tries) + " tries");
}

// ---- dataset: worlds plus episodes referencing them by index ----

struct Dataset {
    std::vector<World> worlds;
    std::vector<EpisodeSpec> episodes;
};

struct DatasetConfig {
    int n_worlds = 20;
    int episodes_per_world = 10;
    WorldGenConfig world;
    EpisodeConfig episode;
    SensingConfig sensing;
};

inline Dataset make_dataset(uint64_t base_seed, const DatasetConfig& dc) {
    require(dc.n_worlds >= 1, "make_dataset: need at least one world");
    Dataset ds;
    const Vocabulary vocab = build_world_vocab();
    for (int i = 0; i < dc.n_worlds; ++i) {
        const uint64_t wseed = mix_seed({base_seed, static_cast<uint64_t>(i)});
        ds.worlds.push_back(generate_world(wseed, dc.world));
        std::mt19937_64 rng(mix_seed({wseed, fnv1a64("episodes")}));
        for (int e = 0; e < dc.episodes_per_world; ++e) {
            auto ep = make_episode(ds.worlds.back(), rng, dc.episode, dc.sensing.k_objects);
            ep.world_idx = i;
            ep.tokens = tokenize(vocab, ep.instruction);
            ds.episodes.push_back(std::move(ep));
        }
    }
    return ds;
}

}  // namespace graphnav
