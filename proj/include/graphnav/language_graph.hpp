#pragma once

#include <string>

#include "graphnav/attention.hpp"
#include "graphnav/autodiff.hpp"
#include "graphnav/instruction.hpp"

namespace graphnav {

// First attention level: three specialized contexts over the instruction
// tokens, all queried by the agent state, each with its own head.
struct SpecializedOut {
    Var scene, object, direction;
    Var w_scene, w_object, w_direction;
};

inline SpecializedOut specialized_contexts(Graph& g, ParameterStore& ps, Var h_t,
                                           const InstructionEncoding& enc) {
    auto s = attend(g, ps, "lang.attn_scene", h_t, enc.tokens, enc.n_valid);
    auto o = attend(g, ps, "lang.attn_object", h_t, enc.tokens, enc.n_valid);
    auto d = attend(g, ps, "lang.attn_dir", h_t, enc.tokens, enc.n_valid);
    return {s.output, o.output, d.output, s.weights, o.weights, d.weights};
}

// Second attention level: per node pair, the query is a biasless tanh
// projection of the concatenated pair (scene before object before direction)
// and the keys/values are the same token sequence.
struct RelationalOut {
    Var sd, so, od;
    Var w_sd, w_so, w_od;
};

inline RelationalOut relational_contexts(Graph& g, ParameterStore& ps, Var scene, Var object,
                                         Var direction, const InstructionEncoding& enc) {
    const int dim = g.length(scene);
    auto head = [&](const std::string& name, Var a, Var b) {
        Var q = tanh_proj(g, ps, "lang.rel_" + name + ".proj", g.concat({a, b}), dim);
        return attend(g, ps, "lang.attn_" + name, q, enc.tokens, enc.n_valid);
    };
    auto sd = head("sd", scene, direction);
    auto so = head("so", scene, object);
    auto od = head("od", object, direction);
    return {sd.output, so.output, od.output, sd.weights, so.weights, od.weights};
}

// Full language graph for one step: three specialized contexts, three
// relational contexts, and the global context (their exact mean).
struct LanguageContexts {
    Var scene, object, direction;
    Var rel_sd, rel_so, rel_od;  // invalid when with_relations = false
    Var global;
    Var w_scene, w_object, w_direction;
    Var w_sd, w_so, w_od;
};

inline LanguageContexts language_contexts(Graph& g, ParameterStore& ps, Var h_t,
                                          const InstructionEncoding& enc,
                                          bool with_relations = true) {
    LanguageContexts lc;
    auto sp = specialized_contexts(g, ps, h_t, enc);
    lc.scene = sp.scene;
    lc.object = sp.object;
    lc.direction = sp.direction;
    lc.w_scene = sp.w_scene;
    lc.w_object = sp.w_object;
    lc.w_direction = sp.w_direction;
    if (with_relations) {
        auto rel = relational_contexts(g, ps, sp.scene, sp.object, sp.direction, enc);
        lc.rel_sd = rel.sd;
        lc.rel_so = rel.so;
        lc.rel_od = rel.od;
        lc.w_sd = rel.w_sd;
        lc.w_so = rel.w_so;
        lc.w_od = rel.w_od;
    }
    lc.global = g.mean({sp.scene, sp.object, sp.direction});
    return lc;
}

}  // namespace graphnav
