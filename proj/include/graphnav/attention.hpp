#pragma once

#include <string>

#include "graphnav/autodiff.hpp"

namespace graphnav {

// Soft attention with a bilinear score: score_j = q^T W u_j over the rows u_j
// of `rows`, output = sum_j softmax(score)_j u_j. Each head owns one W under
// `name`. No output projection. When n_valid >= 0, only the first n_valid rows
// participate and the remaining weights are exactly zero.
struct Attn {
    Var output;
    Var weights;
};

inline Attn attend(Graph& g, ParameterStore& ps, const std::string& name, Var q, Var rows,
                   int n_valid = -1) {
    const int dq = g.length(q);
    const int du = g.cols_of(rows);
    require(g.rows_of(rows) >= 1, "attend: no rows to attend over");
    Var w = g.param(ps, name + ".W", {dq, du}, dq);
    Var scores = g.matvec(rows, g.matvec_t(w, q));
    Var p = n_valid < 0 ? g.softmax(scores) : g.softmax_masked(scores, n_valid);
    Var out = g.matvec_t(rows, p);
    return {out, p};
}

}  // namespace graphnav
