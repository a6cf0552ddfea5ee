#pragma once

#include <string>

#include "params.hpp"
#include "tape.hpp"

namespace svq {

// Names of the nine tensors of one GRU inside a ParamStore, all under `prefix`.
//
// Convention (rows are batch items, x is B×in, h is B×H):
//   u  = sigmoid(x·W_u + h·U_u + b_u)          update gate
//   r  = sigmoid(x·W_r + h·U_r + b_r)          reset gate
//   c̃  = tanh(x·W_c + (r ⊙ h)·U_c + b_c)       candidate; reset applied to h before U_c
//   h' = (1 − u) ⊙ h + u ⊙ c̃
struct GruParams {
    std::string prefix;
    std::size_t input = 0;
    std::size_t hidden = 0;

    std::string name(const char* part) const { return prefix + "." + part; }
    void init(ParamStore& store, Rng& rng) const;
};

Var gru_step(Tape& tape, const ParamStore& store, const GruParams& p, Var x, Var h_prev);

// x·W + b with W in×out, b 1×out.
struct LinearParams {
    std::string prefix;
    std::size_t input = 0;
    std::size_t output = 0;

    std::string weight() const { return prefix + ".W"; }
    std::string bias() const { return prefix + ".b"; }
    void init(ParamStore& store, Rng& rng) const;
};

Var linear(Tape& tape, const ParamStore& store, const LinearParams& p, Var x);

// Additive attention over encoder states (M×E) for one decoder query (1×Q):
//   e_j = v·tanh(enc_j·W + query·U), weights = softmax(e), context = Σ_j weights_j·enc_j.
struct AttentionParams {
    std::string prefix;
    std::size_t enc_dim = 0;
    std::size_t query_dim = 0;
    std::size_t attn_dim = 0;

    std::string w() const { return prefix + ".W"; }
    std::string u() const { return prefix + ".U"; }
    std::string v() const { return prefix + ".v"; }
    void init(ParamStore& store, Rng& rng) const;
};

struct AttentionOutput {
    Var weights;  // 1×M
    Var context;  // 1×E
};

AttentionOutput bahdanau_attend(Tape& tape, const ParamStore& store, const AttentionParams& p, Var query, Var enc_states);

}  // namespace svq
