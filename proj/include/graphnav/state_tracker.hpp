#pragma once

#include <cmath>
#include <vector>

#include "graphnav/attention.hpp"
#include "graphnav/autodiff.hpp"

namespace graphnav {

// (cos θ, sin θ, cos φ, sin φ) replicated r times; 4r-dim. Angles are radians
// relative to the agent's current orientation.
inline std::vector<double> directional_encoding(double theta, double phi, int r) {
    require(std::isfinite(theta) && std::isfinite(phi), "directional_encoding: non-finite angle");
    require(r >= 1, "directional_encoding: replication must be >= 1");
    const double block[4] = {std::cos(theta), std::sin(theta), std::cos(phi), std::sin(phi)};
    std::vector<double> v;
    v.reserve(static_cast<size_t>(4 * r));
    for (int i = 0; i < r; ++i) v.insert(v.end(), block, block + 4);
    return v;
}

// Recurrent agent state on the current episode's tape. The three prev_ fields
// are zero at t=1 and refreshed by the step pipeline after each action.
struct AgentState {
    Var h;                     // h_t
    Var c;                     // LSTM cell, carried across steps
    Var prev_global_context;   // language global context from step t-1
    Var prev_action_encoding;  // directional encoding of the chosen action
    Var prev_direction_node;   // updated direction node at the chosen candidate
};

inline AgentState initial_state(Graph& g, int state_dim, int act_dim, int node_dim) {
    AgentState s;
    s.h = g.zeros(state_dim);
    s.c = g.zeros(state_dim);
    s.prev_global_context = g.zeros(state_dim);
    s.prev_action_encoding = g.zeros(act_dim);
    s.prev_direction_node = g.zeros(node_dim);
    return s;
}

// Attends over the panorama rows (one per view, each v_i || d_i), queried by
// the previous step's global language context.
inline Attn global_attend(Graph& g, ParameterStore& ps, Var prev_context, Var views) {
    require(g.rows_of(views) >= 1, "global_attend: zero views");
    return attend(g, ps, "state.attn_global", prev_context, views);
}

// h_t = LSTM([a_{t-1} || f_global], prev hidden slot = global language
// context); the cell is carried separately in the state.
inline void update_state(Graph& g, ParameterStore& ps, AgentState& s, Var f_global) {
    Var x = g.concat({s.prev_action_encoding, f_global});
    auto out = lstm_step(g, ps, "state.lstm", x, s.prev_global_context, s.c);
    s.h = out.h;
    s.c = out.c;
}

}  // namespace graphnav
