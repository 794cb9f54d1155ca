#pragma once

#include <string>
#include <vector>

#include "graphnav/attention.hpp"
#include "graphnav/autodiff.hpp"

namespace graphnav {

// Raw per-candidate visual input. The stop action is an all-zero observation
// appended as the last candidate by the caller.
struct CandidateObservation {
    std::vector<double> scene;                  // V
    std::vector<std::vector<double>> objects;   // k x E_o
    std::vector<double> direction;              // 4r
};

struct VisualAblation {
    bool scene_node = true;
    bool object_node = true;
    bool edges = true;  // false: no message passing, logits from initial nodes
};

// One gate vector per directed message. The full model shares one relational
// context per undirected edge; the language-graph ablation substitutes copies
// of the receiver's specialized context.
struct MessageGates {
    Var to_scene_from_dir, to_scene_from_obj;
    Var to_obj_from_scene, to_obj_from_dir;
    Var to_dir_from_scene, to_dir_from_obj;
};

inline MessageGates gates_from_relations(Var rel_sd, Var rel_so, Var rel_od) {
    return {rel_sd, rel_so, rel_so, rel_od, rel_sd, rel_od};
}

inline MessageGates gates_from_specialized(Var scene, Var object, Var direction) {
    return {scene, scene, object, object, direction, direction};
}

inline MessageGates zero_gates(Graph& g, int dim) {
    Var z = g.zeros(dim);
    return {z, z, z, z, z, z};
}

// Object aggregation for one candidate: attention over its k object vectors,
// queried by the specialized object context.
inline Attn aggregate_objects(Graph& g, ParameterStore& ps, Var h_object, Var obj_rows) {
    require(g.rows_of(obj_rows) >= 1, "aggregate_objects: zero objects");
    return attend(g, ps, "vgraph.obj_attn", h_object, obj_rows);
}

// Everything the step pipeline and the inspection tools need from one visual
// graph evaluation over the candidate set. Row i of each matrix belongs to
// candidate i. Vars are invalid when the corresponding node/stage is disabled.
struct VisualStepOut {
    Var logits;  // [n]
    Var p;       // softmax over candidates
    Var init_scene, init_object, init_dir;  // [n, D]
    Var upd_scene, upd_object, upd_dir;     // [n, D]
    Var msg_scene, msg_object, msg_dir;     // [n, D]
    std::vector<Var> obj_weights;           // per-candidate object attention
};

// Full per-step visual graph over all candidates: language-gated node
// initialization, one round of gated message passing over the undirected triangle
// with shared edge projections, residual node update, and action logits from
// the concatenated updated nodes.
inline VisualStepOut visual_step(Graph& g, ParameterStore& ps,
                                 const std::vector<CandidateObservation>& obs, Var h_scene,
                                 Var h_object, Var h_dir, const MessageGates& gates,
                                 Var prev_dir_node, const VisualAblation& ab = {}) {
    const int n = static_cast<int>(obs.size());
    require(n >= 1, "visual_step: zero candidates");
    require(ab.scene_node || ab.object_node, "visual_step: need at least two nodes");
    const int D = g.length(h_dir);
    require(g.length(prev_dir_node) == D, "visual_step: prev direction node dimension mismatch");

    VisualStepOut out;

    // ---- node initialization ----
    {
        std::vector<Var> dir_rows;
        dir_rows.reserve(static_cast<size_t>(n));
        for (const auto& o : obs) {
            Var d = g.constant(std::span<const double>(o.direction));
            dir_rows.push_back(g.concat({d, prev_dir_node}));  // temporal link
        }
        Var dir_cat = g.stack_rows(std::span<const Var>(dir_rows.data(), dir_rows.size()));
        out.init_dir = g.mul_bcast(tanh_proj_rows(g, ps, "vgraph.proj_dir", dir_cat, D), h_dir);
    }
    if (ab.scene_node) {
        std::vector<Var> scene_rows;
        scene_rows.reserve(static_cast<size_t>(n));
        for (const auto& o : obs) scene_rows.push_back(g.constant(std::span<const double>(o.scene)));
        Var scenes = g.stack_rows(std::span<const Var>(scene_rows.data(), scene_rows.size()));
        out.init_scene =
            g.mul_bcast(tanh_proj_rows(g, ps, "vgraph.proj_scene", scenes, D), h_scene);
    }
    if (ab.object_node) {
        std::vector<Var> agg_rows;
        agg_rows.reserve(static_cast<size_t>(n));
        for (const auto& o : obs) {
            require(!o.objects.empty(), "visual_step: candidate without objects");
            std::vector<Var> objs;
            objs.reserve(o.objects.size());
            for (const auto& v : o.objects) objs.push_back(g.constant(std::span<const double>(v)));
            auto a = aggregate_objects(g, ps, h_object,
                                       g.stack_rows(std::span<const Var>(objs.data(), objs.size())));
            agg_rows.push_back(a.output);
            out.obj_weights.push_back(a.weights);
        }
        Var agg = g.stack_rows(std::span<const Var>(agg_rows.data(), agg_rows.size()));
        out.init_object =
            g.mul_bcast(tanh_proj_rows(g, ps, "vgraph.proj_object", agg, D), h_object);
    }

    // ---- message passing (single iteration) ----
    if (ab.edges) {
        // raw directed message batch: shared edge weight, receiver's rows first
        auto raw = [&](const std::string& edge, Var recv, Var send) {
            return tanh_proj_rows(g, ps, edge, g.concat_cols(recv, send), D);
        };
        Var to_scene, to_obj, to_dir;
        bool has_scene_in = false, has_obj_in = false, has_dir_in = false;
        auto accumulate = [&](Var& acc, bool& has, Var gated) {
            acc = has ? g.add(acc, gated) : gated;
            has = true;
        };
        if (ab.scene_node) {
            Var ds = g.mul_bcast(raw("vgraph.edge_scene_dir", out.init_scene, out.init_dir),
                                 gates.to_scene_from_dir);
            accumulate(to_scene, has_scene_in, ds);
            Var sd = g.mul_bcast(raw("vgraph.edge_scene_dir", out.init_dir, out.init_scene),
                                 gates.to_dir_from_scene);
            accumulate(to_dir, has_dir_in, sd);
        }
        if (ab.scene_node && ab.object_node) {
            Var os = g.mul_bcast(raw("vgraph.edge_scene_obj", out.init_scene, out.init_object),
                                 gates.to_scene_from_obj);
            accumulate(to_scene, has_scene_in, os);
            Var so = g.mul_bcast(raw("vgraph.edge_scene_obj", out.init_object, out.init_scene),
                                 gates.to_obj_from_scene);
            accumulate(to_obj, has_obj_in, so);
        }
        if (ab.object_node) {
            Var dod = g.mul_bcast(raw("vgraph.edge_obj_dir", out.init_object, out.init_dir),
                                  gates.to_obj_from_dir);
            accumulate(to_obj, has_obj_in, dod);
            Var od = g.mul_bcast(raw("vgraph.edge_obj_dir", out.init_dir, out.init_object),
                                 gates.to_dir_from_obj);
            accumulate(to_dir, has_dir_in, od);
        }
        if (has_scene_in)
            out.msg_scene = tanh_proj_rows(g, ps, "vgraph.combine_scene", to_scene, D);
        if (has_obj_in)
            out.msg_object = tanh_proj_rows(g, ps, "vgraph.combine_object", to_obj, D);
        if (has_dir_in) out.msg_dir = tanh_proj_rows(g, ps, "vgraph.combine_dir", to_dir, D);
    }

    // ---- residual node update (exact) ----
    out.upd_dir = out.msg_dir.valid() ? g.add(out.msg_dir, out.init_dir) : out.init_dir;
    if (ab.scene_node)
        out.upd_scene =
            out.msg_scene.valid() ? g.add(out.msg_scene, out.init_scene) : out.init_scene;
    if (ab.object_node)
        out.upd_object =
            out.msg_object.valid() ? g.add(out.msg_object, out.init_object) : out.init_object;

    // ---- action logits over the concatenated updated nodes ----
    Var cat = out.upd_dir;
    if (ab.object_node) cat = g.concat_cols(out.upd_object, cat);
    if (ab.scene_node) cat = g.concat_cols(out.upd_scene, cat);
    const int cat_dim = g.cols_of(cat);
    Var w = g.param(ps, "policy.logit.w", {cat_dim}, cat_dim);
    Var b = g.param(ps, "policy.logit.b", {1}, cat_dim);
    out.logits = g.add_scalar(g.matvec(cat, w), b);
    out.p = g.softmax(out.logits);
    return out;
}

}  // namespace graphnav
