#pragma once

#include <string>
#include <vector>

#include "graphnav/autodiff.hpp"
#include "graphnav/episode.hpp"
#include "graphnav/instruction.hpp"
#include "graphnav/language_graph.hpp"
#include "graphnav/state_tracker.hpp"
#include "graphnav/visual_graph.hpp"
#include "graphnav/world.hpp"

namespace graphnav {

struct AgentConfig {
    int vocab_size = 0;
    int emb_dim = 32;
    int enc_hidden = 32;            // per direction; token encodings are 2x this
    int dir_repeat = 8;             // r; directional encodings are 4r wide
    bool language_relations = true;
    VisualAblation ablation;

    // The recurrent hidden slot carries the global language context and the
    // node gating is elementwise, so both widths are pinned to the token
    // encoding width.
    int state_dim() const { return 2 * enc_hidden; }
    int node_dim() const { return 2 * enc_hidden; }
    int dir_dim() const { return 4 * dir_repeat; }

    void validate() const {
        require(vocab_size >= 2, "agent config: vocab_size must cover pad and unk");
        require(emb_dim >= 1 && enc_hidden >= 1 && dir_repeat >= 1,
                "agent config: dims must be positive");
        require(ablation.edges || !language_relations,
                "agent config: language relations require graph edges (the "
                "no-edges variant drops both)");
    }
};

inline InstructionEncoding encode_for_episode(Graph& g, ParameterStore& ps,
                                              const AgentConfig& cfg, const EpisodeSpec& ep) {
    return encode_instruction(g, ps, ep.tokens, static_cast<int>(ep.tokens.size()),
                              cfg.vocab_size, cfg.emb_dim, cfg.enc_hidden);
}

// Panorama rows for one step: each view contributes [feature || directional
// encoding of its relative heading].
inline Var make_view_rows(Graph& g, const Observation& obs, int dir_repeat) {
    require(!obs.view_feats.empty(), "make_view_rows: no views");
    const int v_dim = static_cast<int>(obs.view_feats.front().size());
    const int d_dim = 4 * dir_repeat;
    Tensor rows = Tensor::zeros({static_cast<int>(obs.view_feats.size()), v_dim + d_dim});
    for (size_t i = 0; i < obs.view_feats.size(); ++i) {
        const auto enc = directional_encoding(obs.view_headings[i], 0.0, dir_repeat);
        for (int j = 0; j < v_dim; ++j) rows.at(static_cast<int>(i), j) = obs.view_feats[i][static_cast<size_t>(j)];
        for (int j = 0; j < d_dim; ++j)
            rows.at(static_cast<int>(i), v_dim + j) = enc[static_cast<size_t>(j)];
    }
    return g.constant(rows);
}

// Model-facing candidate list: the real candidates plus a trailing all-zero
// stop entry, so action index n means stop.
inline std::vector<CandidateObservation> make_candidates(const Observation& obs,
                                                         int dir_repeat) {
    std::vector<CandidateObservation> cands;
    int v_dim = 0, o_dim = 0, k = 1;
    for (const auto& c : obs.candidates) {
        CandidateObservation co;
        co.scene = c.scene;
        co.objects = c.objects;
        co.direction = directional_encoding(c.heading, c.elevation, dir_repeat);
        v_dim = static_cast<int>(co.scene.size());
        k = static_cast<int>(co.objects.size());
        o_dim = static_cast<int>(co.objects.front().size());
        cands.push_back(std::move(co));
    }
    require(!cands.empty(), "make_candidates: isolated viewpoint");
    CandidateObservation stop;
    stop.scene.assign(static_cast<size_t>(v_dim), 0.0);
    stop.objects.assign(static_cast<size_t>(k), std::vector<double>(static_cast<size_t>(o_dim), 0.0));
    stop.direction.assign(static_cast<size_t>(4 * dir_repeat), 0.0);
    cands.push_back(std::move(stop));
    return cands;
}

struct AgentStepOut {
    Attn global_view;
    LanguageContexts lang;
    VisualStepOut vis;
    Var value;  // scalar V(h_t)
};

// One full decision step: panorama attention -> state update -> language
// contexts -> gated visual graph -> action distribution and value estimate.
// The caller selects the action and then calls commit_action.
inline AgentStepOut agent_step(Graph& g, ParameterStore& ps, const AgentConfig& cfg,
                               AgentState& state, const InstructionEncoding& enc,
                               Var view_rows, const std::vector<CandidateObservation>& cands) {
    AgentStepOut out;
    out.global_view = global_attend(g, ps, state.prev_global_context, view_rows);
    update_state(g, ps, state, out.global_view.output);
    out.lang = language_contexts(g, ps, state.h, enc, cfg.language_relations);
    const MessageGates gates =
        cfg.language_relations
            ? gates_from_relations(out.lang.rel_sd, out.lang.rel_so, out.lang.rel_od)
            : gates_from_specialized(out.lang.scene, out.lang.object, out.lang.direction);
    out.vis = visual_step(g, ps, cands, out.lang.scene, out.lang.object, out.lang.direction,
                          gates, state.prev_direction_node, cfg.ablation);
    out.value = linear(g, ps, "value", state.h, 1, true);
    state.prev_global_context = out.lang.global;
    return out;
}

// Folds the chosen action back into the recurrent state: remembers the
// candidate's updated direction node and its raw [scene || direction]
// encoding as the next step's action input.
inline void commit_action(Graph& g, AgentState& state, const AgentStepOut& step,
                          const std::vector<CandidateObservation>& cands, int chosen) {
    require(chosen >= 0 && chosen < static_cast<int>(cands.size()),
            "commit_action: index out of range");
    state.prev_direction_node = g.row(step.vis.upd_dir, chosen);
    const auto& c = cands[static_cast<size_t>(chosen)];
    std::vector<double> enc(c.scene);
    enc.insert(enc.end(), c.direction.begin(), c.direction.end());
    state.prev_action_encoding = g.constant(enc);
}

// ---- rollouts ----

enum class PolicyMode { kTeacher, kSample, kArgmax };

struct RolloutConfig {
    int t_max = 12;
    double d_th = 1.0;  // success radius, also drives the terminal reward
    SensingConfig sensing;
};

struct StepRecord {
    int viewpoint = 0;  // before acting
    int chosen = 0;     // candidate index; last index = stop
    int teacher = 0;
    double reward = 0.0;
    std::vector<double> p;
    Var log_p_chosen;
    Var value;
};

// Inspection payload: every attention distribution the model produced.
struct StepTrace {
    int viewpoint = 0;
    int chosen = 0;
    std::vector<double> p;
    std::vector<double> global_view_attn;
    std::vector<double> attn_scene, attn_object, attn_dir;
    std::vector<double> attn_rel_sd, attn_rel_so, attn_rel_od;  // empty without relations
    std::vector<std::vector<double>> object_attn;               // per candidate
};

struct Rollout {
    std::vector<StepRecord> steps;
    std::vector<int> traj;  // visited viewpoints, starts at ep.start
    bool stopped = false;   // agent chose stop before the budget ran out
};

namespace detail {

inline int sample_index(const std::vector<double>& p, std::mt19937_64& rng) {
    const double u = uniform(rng, 0.0, 1.0);
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;
}

inline int argmax_index(const std::vector<double>& p) {
    int best = 0;
    for (size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[static_cast<size_t>(best)]) best = static_cast<int>(i);
    return best;
}

}  // namespace detail

// Runs one episode on the shared tape. Teacher mode moves with the teacher
// action (the loss still reads the model's distribution); sample mode draws
// from it; argmax is greedy and evaluation-only. Rewards are the hop-distance
// decrease per move plus a terminal +/-2 on episode end within/outside d_th.
// A non-null `forced` replays that exact action sequence instead of the
// mode's choice (used to re-evaluate a recorded rollout under perturbed
// parameters).
inline Rollout rollout(Graph& g, ParameterStore& ps, const AgentConfig& cfg,
                       const RolloutConfig& rc, const World& w, const EpisodeSpec& ep,
                       const InstructionEncoding& enc, PolicyMode mode,
                       std::mt19937_64* rng = nullptr,
                       std::vector<StepTrace>* traces = nullptr,
                       const std::vector<int>* forced = nullptr) {
    cfg.validate();
    require(mode != PolicyMode::kSample || rng != nullptr || forced != nullptr,
            "rollout: sample mode needs an rng");
    require(rc.t_max >= 1, "rollout: t_max must be positive");

    const auto hops_to_goal = bfs_hops(w, ep.goal);
    AgentState state = initial_state(g, cfg.state_dim(),
                                     rc.sensing.scene_dim + cfg.dir_dim(), cfg.node_dim());
    Rollout ro;
    int cur = ep.start;
    double heading = kInitialHeading;
    ro.traj.push_back(cur);

    for (int t = 0; t < rc.t_max; ++t) {
        const Observation obs = observe(w, cur, heading, rc.sensing);
        const Var view_rows = make_view_rows(g, obs, cfg.dir_repeat);
        const auto cands = make_candidates(obs, cfg.dir_repeat);
        const int stop_index = static_cast<int>(cands.size()) - 1;

        const auto step = agent_step(g, ps, cfg, state, enc, view_rows, cands);

        StepRecord rec;
        rec.viewpoint = cur;
        rec.p = g.val_tensor(step.vis.p).data;
        const int ta = teacher_action(w, cur, ep.goal);
        rec.teacher = (ta == kStopAction) ? stop_index : ta;
        if (forced) {
            require(t < static_cast<int>(forced->size()), "rollout: forced actions exhausted");
            rec.chosen = (*forced)[static_cast<size_t>(t)];
            require(rec.chosen >= 0 && rec.chosen <= stop_index,
                    "rollout: forced action out of range");
        } else {
            switch (mode) {
                case PolicyMode::kTeacher: rec.chosen = rec.teacher; break;
                case PolicyMode::kSample: rec.chosen = detail::sample_index(rec.p, *rng); break;
                case PolicyMode::kArgmax: rec.chosen = detail::argmax_index(rec.p); break;
            }
        }
        rec.log_p_chosen = g.log(g.pick(step.vis.p, rec.chosen));
        rec.value = step.value;

        if (traces) {
            StepTrace tr;
            tr.viewpoint = cur;
            tr.chosen = rec.chosen;
            tr.p = rec.p;
            tr.global_view_attn = g.val_tensor(step.global_view.weights).data;
            tr.attn_scene = g.val_tensor(step.lang.w_scene).data;
            tr.attn_object = g.val_tensor(step.lang.w_object).data;
            tr.attn_dir = g.val_tensor(step.lang.w_direction).data;
            if (cfg.language_relations) {
                tr.attn_rel_sd = g.val_tensor(step.lang.w_sd).data;
                tr.attn_rel_so = g.val_tensor(step.lang.w_so).data;
                tr.attn_rel_od = g.val_tensor(step.lang.w_od).data;
            }
            for (const Var& ow : step.vis.obj_weights)
                tr.object_attn.push_back(g.val_tensor(ow).data);
            traces->push_back(std::move(tr));
        }

        const bool is_stop = rec.chosen == stop_index;
        const bool last_by_budget = t == rc.t_max - 1;
        const int hops_before = hops_to_goal[static_cast<size_t>(cur)];
        if (!is_stop) {
            commit_action(g, state, step, cands, rec.chosen);
            heading = obs.candidates[static_cast<size_t>(rec.chosen)].heading_abs;
            cur = obs.candidates[static_cast<size_t>(rec.chosen)].to_viewpoint;
            ro.traj.push_back(cur);
        }
        rec.reward = static_cast<double>(hops_before - hops_to_goal[static_cast<size_t>(cur)]);
        if (is_stop || last_by_budget) {
            const double ne = euclid(w, cur, ep.goal);
            rec.reward += (ne <= rc.d_th) ? 2.0 : -2.0;
        }
        ro.steps.push_back(std::move(rec));
        if (is_stop) {
            ro.stopped = true;
            break;
        }
    }
    return ro;
}

}  // namespace graphnav
