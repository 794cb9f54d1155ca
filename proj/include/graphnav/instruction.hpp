#pragma once

#include <string>
#include <vector>

#include "graphnav/attention.hpp"
#include "graphnav/autodiff.hpp"

namespace graphnav {

// Per-token contextual vectors u_1..u_L from the bidirectional encoder. Rows
// past n_valid are exact zero and must be excluded from attention via the mask.
struct InstructionEncoding {
    std::vector<int> ids;
    int n_valid = 0;
    Var tokens;  // [L, 2*hidden]
};

// Creates the embedding table if needed and pins the PAD row to zero.
inline void ensure_embedding(ParameterStore& ps, int vocab_size, int emb_dim) {
    require(vocab_size >= 2, "embedding: vocabulary too small");
    if (ps.contains("embed.table")) return;
    auto& e = ps.get_or_create("embed.table", {vocab_size, emb_dim}, emb_dim);
    for (int c = 0; c < emb_dim; ++c) e.value.at(0, c) = 0.0;
}

// One E-dim vector per token id. PAD maps to a constant zero vector that
// carries no gradient into the table.
inline std::vector<Var> embed_tokens(Graph& g, ParameterStore& ps, const std::vector<int>& ids,
                                     int vocab_size, int emb_dim) {
    ensure_embedding(ps, vocab_size, emb_dim);
    Var table = g.param(ps, "embed.table", {vocab_size, emb_dim}, emb_dim);
    std::vector<Var> out;
    out.reserve(ids.size());
    for (int id : ids) {
        require(id >= 0 && id < vocab_size,
                "embedding: token id " + std::to_string(id) + " out of range");
        out.push_back(id == 0 ? g.zeros(emb_dim) : g.row(table, id));
    }
    return out;
}

// Bidirectional LSTM over the first n_valid tokens; u_j = fwd_j || bwd_j.
// Padded rows are zero vectors. l = n_valid must be >= 1.
inline InstructionEncoding encode_instruction(Graph& g, ParameterStore& ps,
                                              const std::vector<int>& ids, int n_valid,
                                              int vocab_size, int emb_dim, int hidden) {
    require(n_valid >= 1, "encode: empty instruction");
    require(n_valid <= static_cast<int>(ids.size()), "encode: n_valid exceeds sequence length");
    const auto emb = embed_tokens(g, ps, ids, vocab_size, emb_dim);

    std::vector<Var> fwd(static_cast<size_t>(n_valid));
    {
        Var h = g.zeros(hidden), c = g.zeros(hidden);
        for (int j = 0; j < n_valid; ++j) {
            auto out = lstm_step(g, ps, "encoder.fwd", emb[static_cast<size_t>(j)], h, c);
            h = out.h;
            c = out.c;
            fwd[static_cast<size_t>(j)] = h;
        }
    }
    std::vector<Var> bwd(static_cast<size_t>(n_valid));
    {
        Var h = g.zeros(hidden), c = g.zeros(hidden);
        for (int j = n_valid - 1; j >= 0; --j) {
            auto out = lstm_step(g, ps, "encoder.bwd", emb[static_cast<size_t>(j)], h, c);
            h = out.h;
            c = out.c;
            bwd[static_cast<size_t>(j)] = h;
        }
    }

    std::vector<Var> rows;
    rows.reserve(ids.size());
    for (int j = 0; j < static_cast<int>(ids.size()); ++j) {
        if (j < n_valid)
            rows.push_back(g.concat({fwd[static_cast<size_t>(j)], bwd[static_cast<size_t>(j)]}));
        else
            rows.push_back(g.zeros(2 * hidden));
    }
    InstructionEncoding enc;
    enc.ids = ids;
    enc.n_valid = n_valid;
    enc.tokens = g.stack_rows(rows);
    return enc;
}

}  // namespace graphnav
