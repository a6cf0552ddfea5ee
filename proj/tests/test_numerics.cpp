#include <cmath>

#include "doctest.h"
#include "error.hpp"
#include "gradcheck.hpp"
#include "layers.hpp"
#include "oracles.hpp"
#include "params.hpp"
#include "tape.hpp"
#include "tensor.hpp"

using namespace svq;
using namespace svq::testing;

TEST_SUITE("numerics") {

TEST_CASE("matmul and transpose on hand-computed values") {
    Tensor2 a(2, 3, {1, 2, 3, 4, 5, 6});
    Tensor2 b(3, 2, {7, 8, 9, 10, 11, 12});
    CHECK(matmul(a, b) == Tensor2(2, 2, {58, 64, 139, 154}));
    CHECK(transpose(a) == Tensor2(3, 2, {1, 4, 2, 5, 3, 6}));
    CHECK_THROWS_AS(matmul(a, a), Error);
}

TEST_CASE("softmax rows sum to one and survive large logits") {
    Tensor2 a(2, 3, {1000, 1001, 1002, -5, 0, 5});
    Tensor2 s = softmax_rows(a);
    CHECK(s.all_finite());
    for (std::size_t r = 0; r < 2; ++r) {
        double sum = 0.0;
        for (double v : s.row_span(r)) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(s(0, 2) > s(0, 1));
}

TEST_CASE("from_external rejects non-finite values") {
    CHECK_THROWS_AS(Tensor2::from_external(1, 2, {1.0, NAN}), Error);
    CHECK_THROWS_AS(Tensor2::from_external(1, 2, {1.0}), Error);
}

TEST_CASE("round_to_float matches a float cast") {
    Tensor2 t(1, 2, {0.1, 1.0 / 3.0});
    round_to_float(t);
    CHECK(t[0] == static_cast<double>(0.1f));
    CHECK(t[1] == static_cast<double>(1.0f / 3.0f));
}

TEST_CASE("elementwise ops match finite differences") {
    Rng rng(3);
    ParamStore store;
    store.add("a", random_tensor(3, 4, rng));
    store.add("b", random_tensor(3, 4, rng));
    store.add("row", random_tensor(1, 4, rng));
    store.add("m", random_tensor(4, 2, rng));
    const Tensor2 w = random_tensor(3, 4, rng);
    auto weighted = [&](Tape& t, Var v) { return t.sum(t.mul(v, t.constant(w))); };

    SUBCASE("arithmetic") {
        auto r = grad_check(store, [&](Tape& t) {
            Var a = t.param(store, "a"), b = t.param(store, "b");
            Var v = t.add(t.sub(t.mul(a, b), t.scale(a, 0.5)), t.add_scalar(t.square(b), 0.3));
            return weighted(t, t.add_row(v, t.param(store, "row")));
        });
        CHECK(r.max_rel < 1e-6);
    }
    SUBCASE("nonlinearities") {
        auto r = grad_check(store, [&](Tape& t) {
            Var a = t.param(store, "a"), b = t.param(store, "b");
            return weighted(t, t.add(t.sigmoid(a), t.mul(t.tanh(b), t.exp(t.scale(a, 0.3)))));
        });
        CHECK(r.max_rel < 1e-6);
    }
    SUBCASE("matmul, transpose and softmax") {
        const Tensor2 w2 = random_tensor(2, 3, rng);
        auto r = grad_check(store, [&](Tape& t) {
            Var p = t.matmul(t.param(store, "a"), t.param(store, "m"));
            Var s = t.softmax_rows(t.transpose(p));
            return t.sum(t.mul(s, t.constant(w2)));
        });
        CHECK(r.max_rel < 1e-6);
    }
    SUBCASE("slicing, concatenation, gathering and row scaling") {
        auto r = grad_check(store, [&](Tape& t) {
            Var a = t.param(store, "a"), b = t.param(store, "b");
            Var c = t.concat_cols({t.slice_cols(a, 1, 2), t.slice_cols(b, 0, 2)});
            std::vector<Var> parts{t.slice_rows(c, 2, 1), t.slice_rows(c, 0, 2)};
            Var g = t.gather_rows(t.concat_rows(parts), {2, 0, 0});
            return weighted(t, t.row_scale(g, {1.0, 0.0, -2.0}));
        });
        CHECK(r.max_rel < 1e-6);
    }
    SUBCASE("losses") {
        Tensor2 mask(3, 4, 1.0);
        mask(1, 2) = 0.0;
        const Tensor2 target = random_tensor(3, 4, rng);
        auto r = grad_check(store, [&](Tape& t) {
            Var a = t.param(store, "a");
            return t.add(t.masked_mse(a, target, mask), t.cross_entropy(t.param(store, "b"), {3, 0, 1}));
        });
        CHECK(r.max_rel < 1e-6);
    }
}

TEST_CASE("stop_gradient blocks and straight_through passes") {
    ParamStore store;
    store.add("a", Tensor2(1, 2, {1.0, 2.0}));
    store.add("b", Tensor2(1, 2, {5.0, -3.0}));
    Tape t;
    Var a = t.param(store, "a"), b = t.param(store, "b");
    Var st = t.straight_through(a, b);
    CHECK(t.value(st) == store.at("b").value);
    t.backward(t.sum(t.add(t.scale(st, 3.0), t.stop_gradient(t.square(a)))));
    CHECK(store.at("a").grad == Tensor2(1, 2, {3.0, 3.0}));
    CHECK(store.at("b").grad == Tensor2(1, 2, {0.0, 0.0}));
}

TEST_CASE("tape misuse is a state error") {
    Tape t;
    Var x = t.constant(Tensor2(1, 1, 2.0));
    t.backward(x);
    CHECK_THROWS_AS(t.backward(x), Error);
    Tape other;
    CHECK_THROWS_AS(other.value(x), Error);
    Tape wide;
    CHECK_THROWS_AS(wide.backward(wide.constant(Tensor2(1, 2))), Error);
}

TEST_CASE("gru step matches a scalar oracle") {
    Rng rng(11);
    const std::size_t in = 3, hid = 5;
    ParamStore store;
    GruParams gp{"g", in, hid};
    gp.init(store, rng);
    for (const char* n : {"b_u", "b_r", "b_c"}) store.at(gp.name(n)).value = random_tensor(1, hid, rng);
    ScalarGru oracle;
    oracle.in = in;
    oracle.hid = hid;
    auto grab = [&](const char* n) { return store.at(gp.name(n)).value.data(); };
    oracle.wu = grab("W_u"), oracle.wr = grab("W_r"), oracle.wc = grab("W_c");
    oracle.uu = grab("U_u"), oracle.ur = grab("U_r"), oracle.uc = grab("U_c");
    oracle.bu = grab("b_u"), oracle.br = grab("b_r"), oracle.bc = grab("b_c");

    const Tensor2 x = random_tensor(2, in, rng), h = random_tensor(2, hid, rng);
    Tape t;
    const Tensor2 got = t.value(gru_step(t, store, gp, t.constant(x), t.constant(h)));
    for (std::size_t r = 0; r < 2; ++r) {
        auto row = [](const Tensor2& m, std::size_t i) {
            return std::vector<double>(m.row_span(i).begin(), m.row_span(i).end());
        };
        const auto want = oracle.step(row(x, r), row(h, r));
        for (std::size_t k = 0; k < hid; ++k) CHECK(got(r, k) == doctest::Approx(want[k]).epsilon(1e-12));
    }
}

TEST_CASE("gru, attention and kl gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CHECK(check_gru(seed).max_rel < 1e-4);
        CHECK(check_attention(seed).max_rel < 1e-4);
        CHECK(check_kl(seed).max_rel < 1e-4);
    }
}

TEST_CASE("attention weights form a distribution over states") {
    Rng rng(5);
    ParamStore store;
    AttentionParams ap{"att", 4, 3, 6};
    ap.init(store, rng);
    Tape t;
    auto out = bahdanau_attend(t, store, ap, t.constant(random_tensor(1, 3, rng)), t.constant(random_tensor(7, 4, rng)));
    const Tensor2& w = t.value(out.weights);
    REQUIRE(w.cols() == 7);
    double sum = 0.0;
    for (double v : w.data()) {
        CHECK(v > 0.0);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.value(out.context).cols() == 4);
    CHECK_THROWS_AS(bahdanau_attend(t, store, ap, t.constant(Tensor2(2, 3)), t.constant(Tensor2(7, 4))), Error);
}

TEST_CASE("adam first step moves each weight by lr against the gradient sign") {
    ParamStore store;
    store.add("w", Tensor2(1, 3, {1.0, -1.0, 0.5}));
    store.at("w").grad = Tensor2(1, 3, {0.2, -4.0, 0.0});
    adam_step(store, AdamConfig{.lr = 0.1});
    const Tensor2& w = store.at("w").value;
    CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(w[1] == doctest::Approx(-0.9).epsilon(1e-6));
    CHECK(w[2] == 0.5);
    CHECK(store.at("w").grad == Tensor2(1, 3));
    CHECK(store.step() == 1);
}

TEST_CASE("adam refuses non-finite gradients without touching weights") {
    ParamStore store;
    store.add("a", Tensor2(1, 1, 1.0));
    store.add("b", Tensor2(1, 1, 1.0));
    store.at("a").grad[0] = 1.0;
    store.at("b").grad[0] = INFINITY;
    CHECK_THROWS_AS(adam_step(store, {}), Error);
    CHECK(store.at("a").value[0] == 1.0);
}

TEST_CASE("uniform init stays within the fan-in bound") {
    Rng rng(1);
    Tensor2 w = init_uniform(16, 8, 16, rng);
    for (double v : w.data()) CHECK(std::abs(v) <= 0.25);
}

}
