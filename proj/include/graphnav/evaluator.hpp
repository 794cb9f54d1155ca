#pragma once

#include <string>
#include <vector>

#include "graphnav/agent.hpp"
#include "graphnav/metrics.hpp"

namespace graphnav {

enum class EvalPolicy { kModel, kTeacher, kRandom };

inline EvalPolicy eval_policy_from_string(const std::string& s) {
    if (s == "model") return EvalPolicy::kModel;
    if (s == "teacher") return EvalPolicy::kTeacher;
    if (s == "random") return EvalPolicy::kRandom;
    throw error("unknown policy '" + s + "' (expected model|teacher|random)");
}

struct EvalRow {
    int episode = 0;
    std::vector<int> traj;
    EpisodeMetrics m;
};

struct EvalResult {
    std::vector<EvalRow> rows;
    EpisodeMetrics mean;
};

namespace detail {

inline std::vector<int> teacher_traj(const World& w, const EpisodeSpec& ep, int t_max) {
    std::vector<int> traj{ep.start};
    int cur = ep.start;
    for (int t = 0; t < t_max; ++t) {
        const int a = teacher_action(w, cur, ep.goal);
        if (a == kStopAction) break;
        cur = step_world(w, cur, a).first;
        traj.push_back(cur);
    }
    return traj;
}

inline std::vector<int> random_traj(const World& w, const EpisodeSpec& ep, int t_max,
                                    std::mt19937_64& rng) {
    std::vector<int> traj{ep.start};
    int cur = ep.start;
    for (int t = 0; t < t_max; ++t) {
        const int n = static_cast<int>(w.at(cur).neighbors.size());
        const int a = uniform_int(rng, 0, n);  // n = stop slot
        if (a == n) break;
        cur = step_world(w, cur, a).first;
        traj.push_back(cur);
    }
    return traj;
}

}  // namespace detail

// Greedy (argmax) rollouts for the model policy; teacher and random policies
// need no parameters. Metrics compare the executed trajectory against the
// episode's reference path, with the optimal length l from graph distances.
inline EvalResult evaluate(const Dataset& ds, EvalPolicy pol, const RolloutConfig& rc,
                           ParameterStore* ps = nullptr, const AgentConfig* cfg = nullptr,
                           uint64_t random_seed = 0, int max_episodes = 0) {
    require(!ds.episodes.empty(), "evaluate: empty episode set");
    if (pol == EvalPolicy::kModel)
        require(ps != nullptr && cfg != nullptr, "evaluate: model policy needs parameters");
    const int n = max_episodes > 0
                      ? std::min<int>(max_episodes, static_cast<int>(ds.episodes.size()))
                      : static_cast<int>(ds.episodes.size());
    EvalResult res;
    std::mt19937_64 rng(mix_seed({random_seed, fnv1a64("eval.random")}));
    Graph g;
    for (int i = 0; i < n; ++i) {
        const auto& ep = ds.episodes[static_cast<size_t>(i)];
        const auto& w = ds.worlds[static_cast<size_t>(ep.world_idx)];
        EvalRow row;
        row.episode = i;
        switch (pol) {
            case EvalPolicy::kModel: {
                g.reset();
                const auto enc = encode_for_episode(g, *ps, *cfg, ep);
                const auto ro =
                    rollout(g, *ps, *cfg, rc, w, ep, enc, PolicyMode::kArgmax);
                row.traj = ro.traj;
                break;
            }
            case EvalPolicy::kTeacher:
                row.traj = detail::teacher_traj(w, ep, rc.t_max);
                break;
            case EvalPolicy::kRandom:
                row.traj = detail::random_traj(w, ep, rc.t_max, rng);
                break;
        }
        const double l = dijkstra_dist(w, ep.start)[static_cast<size_t>(ep.goal)];
        row.m = compute_metrics(path_points(w, row.traj), path_points(w, ep.path), l, rc.d_th);
        res.rows.push_back(std::move(row));
    }
    std::vector<EpisodeMetrics> all;
    for (const auto& r : res.rows) all.push_back(r.m);
    res.mean = mean_metrics(all);
    return res;
}

}  // namespace graphnav
