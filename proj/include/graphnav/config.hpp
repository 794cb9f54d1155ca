#pragma once

#include <cstdlib>
#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "graphnav/agent.hpp"
#include "graphnav/episode.hpp"
#include "graphnav/training.hpp"

namespace graphnav {

// Every run is driven by one config document; absent keys take the defaults
// below and unknown keys are a hard error, so typos cannot silently fall back.
struct AppConfig {
    uint64_t seed = 1;
    std::string out_dir;  // empty: resolved from the output root per command

    int n_train_worlds = 20;
    int n_unseen_worlds = 10;
    int episodes_per_world = 10;

    WorldGenConfig world;
    EpisodeConfig episode;
    SensingConfig sensing;

    int emb_dim = 32;
    int enc_hidden = 32;
    int dir_repeat = 8;
    bool language_relations = true;
    VisualAblation ablation;

    int t_max = 12;
    double d_th = 1.0;

    TrainConfig train;

    AgentConfig agent_config() const {
        AgentConfig a;
        a.vocab_size = build_world_vocab().size();
        a.emb_dim = emb_dim;
        a.enc_hidden = enc_hidden;
        a.dir_repeat = dir_repeat;
        a.language_relations = language_relations;
        a.ablation = ablation;
        return a;
    }
    RolloutConfig rollout_config() const {
        RolloutConfig rc;
        rc.t_max = t_max;
        rc.d_th = d_th;
        rc.sensing = sensing;
        return rc;
    }
    DatasetConfig dataset_config(int n_worlds) const {
        DatasetConfig dc;
        dc.n_worlds = n_worlds;
        dc.episodes_per_world = episodes_per_world;
        dc.world = world;
        dc.episode = episode;
        dc.sensing = sensing;
        return dc;
    }
    TrainConfig train_config() const {
        TrainConfig tc = train;
        tc.seed = seed;
        return tc;
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& where) {
    require(j.is_object(), "config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items())
        require(known.count(key) > 0, "config: unknown key '" + key + "' in " + where);
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& into) {
    if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace detail

inline AppConfig config_from_json(const nlohmann::json& j) {
    using detail::reject_unknown;
    using detail::take;
    AppConfig c;
    reject_unknown(j, {"seed", "out_dir", "data", "world", "episode", "sensing", "agent",
                       "rollout", "train"},
                   "top level");
    take(j, "seed", c.seed);
    take(j, "out_dir", c.out_dir);
    if (j.contains("data")) {
        const auto& d = j.at("data");
        reject_unknown(d, {"n_train_worlds", "n_unseen_worlds", "episodes_per_world"}, "data");
        take(d, "n_train_worlds", c.n_train_worlds);
        take(d, "n_unseen_worlds", c.n_unseen_worlds);
        take(d, "episodes_per_world", c.episodes_per_world);
    }
    if (j.contains("world")) {
        const auto& w = j.at("world");
        reject_unknown(w,
                       {"n_viewpoints", "extent", "radius", "n_rooms", "n_object_types",
                        "min_objects", "max_objects", "max_degree"},
                       "world");
        take(w, "n_viewpoints", c.world.n_viewpoints);
        take(w, "extent", c.world.extent);
        take(w, "radius", c.world.radius);
        take(w, "n_rooms", c.world.n_rooms);
        take(w, "n_object_types", c.world.n_object_types);
        take(w, "min_objects", c.world.min_objects);
        take(w, "max_objects", c.world.max_objects);
        take(w, "max_degree", c.world.max_degree);
    }
    if (j.contains("episode")) {
        const auto& e = j.at("episode");
        reject_unknown(e, {"min_hops", "max_hops", "max_tries"}, "episode");
        take(e, "min_hops", c.episode.min_hops);
        take(e, "max_hops", c.episode.max_hops);
        take(e, "max_tries", c.episode.max_tries);
    }
    if (j.contains("sensing")) {
        const auto& s = j.at("sensing");
        reject_unknown(s,
                       {"views", "scene_dim", "object_dim", "k_objects", "noise_scale",
                        "bucket_size", "max_bucket"},
                       "sensing");
        take(s, "views", c.sensing.views);
        take(s, "scene_dim", c.sensing.scene_dim);
        take(s, "object_dim", c.sensing.object_dim);
        take(s, "k_objects", c.sensing.k_objects);
        take(s, "noise_scale", c.sensing.noise_scale);
        take(s, "bucket_size", c.sensing.bucket_size);
        take(s, "max_bucket", c.sensing.max_bucket);
    }
    if (j.contains("agent")) {
        const auto& a = j.at("agent");
        reject_unknown(a, {"emb_dim", "enc_hidden", "dir_repeat", "language_relations",
                           "ablation"},
                       "agent");
        take(a, "emb_dim", c.emb_dim);
        take(a, "enc_hidden", c.enc_hidden);
        take(a, "dir_repeat", c.dir_repeat);
        take(a, "language_relations", c.language_relations);
        if (a.contains("ablation")) {
            const auto& ab = a.at("ablation");
            reject_unknown(ab, {"scene_node", "object_node", "edges"}, "agent.ablation");
            take(ab, "scene_node", c.ablation.scene_node);
            take(ab, "object_node", c.ablation.object_node);
            take(ab, "edges", c.ablation.edges);
        }
    }
    if (j.contains("rollout")) {
        const auto& r = j.at("rollout");
        reject_unknown(r, {"t_max", "d_th"}, "rollout");
        take(r, "t_max", c.t_max);
        take(r, "d_th", c.d_th);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        reject_unknown(t,
                       {"lambda", "gamma", "lr", "grad_clip", "batch", "iterations",
                        "eval_every", "snapshot_every", "eval_max_episodes"},
                       "train");
        take(t, "lambda", c.train.lambda);
        take(t, "gamma", c.train.gamma);
        take(t, "lr", c.train.lr);
        take(t, "grad_clip", c.train.grad_clip);
        take(t, "batch", c.train.batch);
        take(t, "iterations", c.train.iterations);
        take(t, "eval_every", c.train.eval_every);
        take(t, "snapshot_every", c.train.snapshot_every);
        take(t, "eval_max_episodes", c.train.eval_max_episodes);
    }
    return c;
}

// The full effective configuration, defaults included — persisted beside every
// output so results are reproducible from the echo alone.
inline nlohmann::json config_to_json(const AppConfig& c) {
    nlohmann::json j;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["data"] = {{"n_train_worlds", c.n_train_worlds},
                 {"n_unseen_worlds", c.n_unseen_worlds},
                 {"episodes_per_world", c.episodes_per_world}};
    j["world"] = {{"n_viewpoints", c.world.n_viewpoints}, {"extent", c.world.extent},
                  {"radius", c.world.radius},             {"n_rooms", c.world.n_rooms},
                  {"n_object_types", c.world.n_object_types},
                  {"min_objects", c.world.min_objects},   {"max_objects", c.world.max_objects},
                  {"max_degree", c.world.max_degree}};
    j["episode"] = {{"min_hops", c.episode.min_hops},
                    {"max_hops", c.episode.max_hops},
                    {"max_tries", c.episode.max_tries}};
    j["sensing"] = {{"views", c.sensing.views},
                    {"scene_dim", c.sensing.scene_dim},
                    {"object_dim", c.sensing.object_dim},
                    {"k_objects", c.sensing.k_objects},
                    {"noise_scale", c.sensing.noise_scale},
                    {"bucket_size", c.sensing.bucket_size},
                    {"max_bucket", c.sensing.max_bucket}};
    j["agent"] = {{"emb_dim", c.emb_dim},
                  {"enc_hidden", c.enc_hidden},
                  {"dir_repeat", c.dir_repeat},
                  {"language_relations", c.language_relations},
                  {"ablation",
                   {{"scene_node", c.ablation.scene_node},
                    {"object_node", c.ablation.object_node},
                    {"edges", c.ablation.edges}}}};
    j["rollout"] = {{"t_max", c.t_max}, {"d_th", c.d_th}};
    j["train"] = {{"lambda", c.train.lambda},
                  {"gamma", c.train.gamma},
                  {"lr", c.train.lr},
                  {"grad_clip", c.train.grad_clip},
                  {"batch", c.train.batch},
                  {"iterations", c.train.iterations},
                  {"eval_every", c.train.eval_every},
                  {"snapshot_every", c.train.snapshot_every},
                  {"eval_max_episodes", c.train.eval_max_episodes}};
    return j;
}

inline AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw error("config: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

inline std::string default_out_root() {
    if (const char* env = std::getenv("GRAPHNAV_OUT")) return env;
    return "runs";
}

}  // namespace graphnav
