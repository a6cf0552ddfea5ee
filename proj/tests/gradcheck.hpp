#pragma once

// Central-difference gradient checks against Tape::backward, shared by the unit
// and acceptance suites.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "bottleneck.hpp"
#include "layers.hpp"
#include "params.hpp"
#include "quantizer.hpp"
#include "tape.hpp"

namespace svq::testing {

struct GradReport {
    double max_rel = 0.0;
    std::string worst;  // "param[index]" of the largest error
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // coordinates where the step changed a discrete choice
};

// |a − n| / max(|a|, |n|, floor): relative error, with an absolute floor for
// gradients that are zero up to rounding.
inline double rel_error(double a, double n, double floor = 1e-6) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

using LossBuilder = std::function<Var(Tape&)>;
using DiscreteState = std::function<std::vector<std::uint32_t>()>;

inline double eval_loss(const LossBuilder& build) {
    Tape t;
    return t.value(build(t))[0];
}

// Only parameters whose name starts with `only` are perturbed. `floor` should sit above
// the central-difference round-off, roughly 1e-16·|loss|/h.
inline GradReport grad_check(ParamStore& store, const LossBuilder& build, double h = 1e-5,
                             const DiscreteState& state = {}, const std::string& only = "", double floor = 1e-6) {
    store.zero_grad();
    {
        Tape t;
        Var loss = build(t);
        t.backward(loss);
    }
    std::vector<std::pair<std::string, Tensor2>> analytic;
    for (auto& [name, p] : store.params())
        if (name.starts_with(only)) analytic.emplace_back(name, p.grad);
    store.zero_grad();

    const auto base = state ? state() : std::vector<std::uint32_t>{};
    GradReport r;
    for (auto& [name, g] : analytic) {
        Param& p = store.at(name);
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double orig = p.value[i];
            p.value[i] = orig + h;
            const double fp = eval_loss(build);
            const bool moved_p = state && state() != base;
            p.value[i] = orig - h;
            const double fm = eval_loss(build);
            const bool moved_m = state && state() != base;
            p.value[i] = orig;
            if (moved_p || moved_m) {
                ++r.skipped;
                continue;
            }
            const double num = (fp - fm) / (2.0 * h);
            const double e = rel_error(g[i], num, floor);
            ++r.checked;
            if (e > r.max_rel) {
                r.max_rel = e;
                r.worst = name + "[" + std::to_string(i) + "]";
                r.worst_analytic = g[i];
                r.worst_numeric = num;
            }
        }
    }
    return r;
}

inline Tensor2 random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Tensor2 t(rows, cols);
    for (double& v : t.data()) v = scale * uniform(rng, -1.0, 1.0);
    return t;
}

// Loss = Σ C ⊙ h' for one GRU step with inputs and state as trainable leaves.
inline GradReport check_gru(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t b = 2, in = 3, hid = 4;
    ParamStore store;
    GruParams gp{"g", in, hid};
    gp.init(store, rng);
    for (auto& [_, p] : store.params())
        for (double& v : p.value.data()) v = uniform(rng, -0.8, 0.8);
    store.add("x", random_tensor(b, in, rng));
    store.add("h", random_tensor(b, hid, rng));
    const Tensor2 c = random_tensor(b, hid, rng);
    return grad_check(store, [&](Tape& t) {
        Var h = gru_step(t, store, gp, t.param(store, "x"), t.param(store, "h"));
        return t.sum(t.mul(h, t.constant(c)));
    });
}

// Loss = Σ C1 ⊙ context + Σ C2 ⊙ weights.
inline GradReport check_attention(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t m = 4, e = 3, q = 2, a = 3;
    ParamStore store;
    AttentionParams ap{"att", e, q, a};
    ap.init(store, rng);
    for (auto& [_, p] : store.params())
        for (double& v : p.value.data()) v = uniform(rng, -1.0, 1.0);
    store.add("enc", random_tensor(m, e, rng));
    store.add("query", random_tensor(1, q, rng));
    const Tensor2 c1 = random_tensor(1, e, rng), c2 = random_tensor(1, m, rng);
    return grad_check(store, [&](Tape& t) {
        auto out = bahdanau_attend(t, store, ap, t.param(store, "query"), t.param(store, "enc"));
        return t.add(t.sum(t.mul(out.context, t.constant(c1))), t.sum(t.mul(out.weights, t.constant(c2))));
    });
}

// The KL term of the vae bottleneck with respect to its heads and the summary.
inline GradReport check_kl(std::uint64_t seed) {
    Rng rng(seed);
    BottleneckConfig cfg;
    cfg.mode = BottleneckMode::Vae;
    cfg.vae_dim = 3;
    Bottleneck bn(cfg);
    ParamStore store;
    bn.init(store, rng);
    for (auto& [_, p] : store.params())
        for (double& v : p.value.data()) v = uniform(rng, -0.7, 0.7);
    store.add("summary", random_tensor(2, 3, rng));
    return grad_check(store, [&](Tape& t) {
        Rng unused(0);
        return bn.forward(t, store, t.param(store, "summary"), false, 0, unused).kl;
    });
}

// The codebook loss against the codebooks and the commitment loss against the encoder
// output, the only leaves each term reaches. Coordinates whose perturbation flips a
// nearest-code choice are skipped.
inline GradReport check_quantizer_losses(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t b = 3, s = 2, k = 5, d = 3;
    ParamStore store;
    for (std::size_t i = 0; i < s; ++i) store.add("cb" + std::to_string(i), random_tensor(k, d, rng));
    store.add("z", random_tensor(b, s * d, rng));
    auto build = [&](bool codebook_term) {
        return [&, codebook_term](Tape& t) {
            std::vector<Var> books;
            for (std::size_t i = 0; i < s; ++i) books.push_back(t.param(store, "cb" + std::to_string(i)));
            auto q = quantize_on_tape(t, t.param(store, "z"), books, 0.25);
            return codebook_term ? q.codebook_loss : q.commitment_loss;
        };
    };
    auto state = [&] {
        Tape t;
        std::vector<Var> books;
        for (std::size_t i = 0; i < s; ++i) books.push_back(t.param(store, "cb" + std::to_string(i)));
        auto q = quantize_on_tape(t, t.param(store, "z"), books, 0.25);
        std::vector<std::uint32_t> flat;
        for (const auto& c : q.codes) flat.insert(flat.end(), c.indices.begin(), c.indices.end());
        return flat;
    };
    GradReport books = grad_check(store, build(true), 1e-5, state, "cb");
    GradReport enc = grad_check(store, build(false), 1e-5, state, "z");
    GradReport& worse = enc.max_rel > books.max_rel ? enc : books;
    GradReport out = worse;
    out.checked = books.checked + enc.checked;
    out.skipped = books.skipped + enc.skipped;
    return out;
}

// The encoder-side gradient through the straight-through latent must equal the
// upstream gradient exactly. Returns the largest absolute difference.
inline double straight_through_gap(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t b = 3, s = 2, k = 6, d = 4;
    ParamStore store;
    for (std::size_t i = 0; i < s; ++i) store.add("cb" + std::to_string(i), random_tensor(k, d, rng));
    store.add("z", random_tensor(b, s * d, rng));
    const Tensor2 w = random_tensor(b, s * d, rng);
    Tape t;
    std::vector<Var> books;
    for (std::size_t i = 0; i < s; ++i) books.push_back(t.param(store, "cb" + std::to_string(i)));
    auto q = quantize_on_tape(t, t.param(store, "z"), books, 0.25);
    t.backward(t.sum(t.mul(q.latent, t.constant(w))));
    const Tensor2& g = store.at("z").grad;
    double gap = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gap = std::max(gap, std::abs(g[i] - w[i]));
    return gap;
}

}  // namespace svq::testing
