#include "layers.hpp"

#include "error.hpp"

namespace svq {

void GruParams::init(ParamStore& store, Rng& rng) const {
    for (const char* g : {"W_u", "W_r", "W_c"}) store.add(name(g), init_uniform(input, hidden, input, rng));
    for (const char* g : {"U_u", "U_r", "U_c"}) store.add(name(g), init_uniform(hidden, hidden, hidden, rng));
    for (const char* g : {"b_u", "b_r", "b_c"}) store.add(name(g), Tensor2(1, hidden));
}

Var gru_step(Tape& tape, const ParamStore& store, const GruParams& p, Var x, Var h_prev) {
    const Tensor2& xv = tape.value(x);
    const Tensor2& hv = tape.value(h_prev);
    require(xv.cols() == p.input && hv.cols() == p.hidden && xv.rows() == hv.rows(), ErrorKind::Shape,
            "gru '" + p.prefix + "' expects x [Bx" + std::to_string(p.input) + "] and h [Bx" +
                std::to_string(p.hidden) + "], got " + xv.shape_str() + " and " + hv.shape_str());
    auto gate = [&](const char* w, const char* u, const char* b, Var hin) {
        Var pre = tape.add(tape.matmul(x, tape.param(store, p.name(w))), tape.matmul(hin, tape.param(store, p.name(u))));
        return tape.add_row(pre, tape.param(store, p.name(b)));
    };
    Var u = tape.sigmoid(gate("W_u", "U_u", "b_u", h_prev));
    Var r = tape.sigmoid(gate("W_r", "U_r", "b_r", h_prev));
    Var cand = tape.tanh(gate("W_c", "U_c", "b_c", tape.mul(r, h_prev)));
    return tape.add(tape.mul(tape.one_minus(u), h_prev), tape.mul(u, cand));
}

void LinearParams::init(ParamStore& store, Rng& rng) const {
    store.add(weight(), init_uniform(input, output, input, rng));
    store.add(bias(), Tensor2(1, output));
}

Var linear(Tape& tape, const ParamStore& store, const LinearParams& p, Var x) {
    return tape.add_row(tape.matmul(x, tape.param(store, p.weight())), tape.param(store, p.bias()));
}

void AttentionParams::init(ParamStore& store, Rng& rng) const {
    store.add(w(), init_uniform(enc_dim, attn_dim, enc_dim, rng));
    store.add(u(), init_uniform(query_dim, attn_dim, query_dim, rng));
    store.add(v(), init_uniform(attn_dim, 1, attn_dim, rng));
}

AttentionOutput bahdanau_attend(Tape& tape, const ParamStore& store, const AttentionParams& p, Var query, Var enc_states) {
    const Tensor2& qv = tape.value(query);
    const Tensor2& ev = tape.value(enc_states);
    require(qv.rows() == 1 && qv.cols() == p.query_dim && ev.cols() == p.enc_dim && ev.rows() >= 1, ErrorKind::Shape,
            "attention '" + p.prefix + "' expects query [1x" + std::to_string(p.query_dim) + "] and states [Mx" +
                std::to_string(p.enc_dim) + "], got " + qv.shape_str() + " and " + ev.shape_str());
    Var keys = tape.matmul(enc_states, tape.param(store, p.w()));   // M×A
    Var q = tape.matmul(query, tape.param(store, p.u()));           // 1×A
    Var scores = tape.matmul(tape.tanh(tape.add_row(keys, q)), tape.param(store, p.v()));  // M×1
    Var weights = tape.softmax_rows(tape.transpose(scores));        // 1×M
    Var context = tape.matmul(weights, enc_states);                 // 1×E
    return {weights, context};
}

}  // namespace svq
