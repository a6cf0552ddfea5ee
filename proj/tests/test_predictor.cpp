#include <cmath>

#include "doctest.h"
#include "error.hpp"
#include "gradcheck.hpp"
#include "predictor.hpp"

using namespace svq;
using namespace svq::testing;

namespace {

PredictorConfig tiny_config() {
    PredictorConfig c;
    c.embed_dim = 5;
    c.hidden = 6;
    c.attn_dim = 4;
    c.n_domains = 2;
    c.domain_dim = 3;
    c.target_dim = 3;
    c.splits = 3;
    c.groups = 4;
    c.epochs = 5;
    c.batch_size = 4;
    c.lr = 1e-2;
    return c;
}

struct Dataset {
    std::vector<Tensor2> contexts;
    std::vector<PredictorExample> examples;
};

// Targets are a deterministic function of the sign pattern of the mean context.
Dataset make_dataset(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.contexts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) d.contexts.push_back(random_tensor(2 + i % 4, 5, rng));
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor2& c = d.contexts[i];
        std::vector<std::uint32_t> t;
        for (std::size_t s = 0; s < 3; ++s) {
            double m = 0.0;
            for (std::size_t r = 0; r < c.rows(); ++r) m += c(r, s) + c(r, s + 1);
            t.push_back((m > 0 ? 2u : 0u) + static_cast<std::uint32_t>(i % 2));
        }
        d.examples.push_back({&d.contexts[i], static_cast<std::uint16_t>(i % 2), t});
    }
    return d;
}

ClusterMap tiny_map() {
    ClusterMap m;
    m.k = 4;
    m.codes = 8;
    for (std::size_t s = 0; s < 3; ++s) {
        m.representatives.push_back({1, 2, 5, 7});
        m.assignment.push_back({0, 0, 1, 1, 2, 2, 3, 3});
    }
    return m;
}

}  // namespace

TEST_SUITE("predictor") {

TEST_CASE("config text round-trips exactly") {
    PredictorConfig c = tiny_config();
    c.lr = 1.0 / 3.0;
    c.seed = 123456789012345ULL;
    const PredictorConfig back = parse_predictor_config(c.to_text());
    CHECK(back.to_text() == c.to_text());
    CHECK(back.lr == c.lr);
    c.groups = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK_THROWS_AS(parse_predictor_config("splits = -1\n"), Error);
}

TEST_CASE("context states carry both directions") {
    const PredictorModel model(tiny_config());
    Rng rng(1);
    const Tensor2 ctx = random_tensor(4, 5, rng);
    const Tensor2 states = model.encode_context(ctx);
    CHECK(states.rows() == 4);
    CHECK(states.cols() == 12);
    CHECK_THROWS_AS(model.encode_context(Tensor2(0, 5)), Error);
    CHECK_THROWS_AS(model.encode_context(Tensor2(3, 4)), Error);
}

TEST_CASE("with tied directions, reversing the input mirrors the states") {
    PredictorModel model(tiny_config());
    for (const char* g : {"W_u", "W_r", "W_c", "U_u", "U_r", "U_c", "b_u", "b_r", "b_c"})
        model.params().at(std::string("pred.enc.bwd.") + g).value = model.params().at(std::string("pred.enc.fwd.") + g).value;
    Rng rng(2);
    const Tensor2 ctx = random_tensor(5, 5, rng);
    Tensor2 rev(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) rev(i, j) = ctx(4 - i, j);
    const Tensor2 a = model.encode_context(ctx), b = model.encode_context(rev);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            CHECK(a(i, j) == doctest::Approx(b(4 - i, 6 + j)).epsilon(1e-12));
            CHECK(a(i, 6 + j) == doctest::Approx(b(4 - i, j)).epsilon(1e-12));
        }
}

TEST_CASE("attention rows are distributions over context positions") {
    const PredictorModel model(tiny_config());
    Rng rng(3);
    Tensor2 att;
    const auto ids = model.predict_clusters(random_tensor(6, 5, rng), 1, &att);
    CHECK(ids.size() == 3);
    for (auto id : ids) CHECK(id < 4);
    REQUIRE(att.rows() == 3);
    REQUIRE(att.cols() == 6);
    for (std::size_t s = 0; s < 3; ++s) {
        double sum = 0.0;
        for (double v : att.row_span(s)) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(model.predict_clusters(random_tensor(2, 5, rng), 2), Error);
}

TEST_CASE("loss gradients match finite differences") {
    const PredictorModel base(tiny_config());
    const auto data = make_dataset(2, 4);
    PredictorModel model = base;
    // The summed cross-entropy is near 8, so gradients under 1e-5 are at round-off level.
    auto r = grad_check(
        model.params(),
        [&](Tape& t) { return t.add(model.loss(t, data.examples[0]), model.loss(t, data.examples[1])); }, 1e-5, {}, "",
        1e-5);
    CAPTURE(r.worst);
    CAPTURE(r.worst_analytic);
    CAPTURE(r.worst_numeric);
    CHECK(r.max_rel < 1e-4);
    CHECK(r.checked == model.params().count());
}

TEST_CASE("predicted codes are the representatives of predicted clusters") {
    const PredictorModel model(tiny_config());
    const ClusterMap map = tiny_map();
    Rng rng(5);
    const Tensor2 ctx = random_tensor(3, 5, rng);
    const auto rec = model.predict_codes(ctx, 0, map);
    CHECK(rec.cluster_ids == model.predict_clusters(ctx, 0));
    CHECK(rec.split_code == map.representative_code(rec.cluster_ids));
    ClusterMap wrong = map;
    wrong.k = 5;
    for (auto& r : wrong.representatives) r.push_back(0);
    CHECK_THROWS_AS(model.predict_codes(ctx, 0, wrong), Error);
}

TEST_CASE("training memorizes a single example") {
    auto data = make_dataset(1, 6);
    PredictorConfig cfg = tiny_config();
    cfg.epochs = 60;
    cfg.batch_size = 1;
    cfg.lr = 3e-2;
    const auto r = train_predictor(data.examples, {}, cfg);
    CHECK(r.model.predict_clusters(*data.examples[0].context, data.examples[0].domain) == data.examples[0].targets);
    CHECK(r.history.back().train_loss < 0.1 * r.history.front().train_loss);
    CHECK(r.validation.split.empty());
}

TEST_CASE("training is deterministic and learns a learnable mapping") {
    const auto train = make_dataset(64, 7);
    const auto val = make_dataset(32, 8);
    PredictorConfig cfg = tiny_config();
    cfg.epochs = 25;
    std::size_t calls = 0;
    const auto a = train_predictor(train.examples, val.examples, cfg, [&](const PredictorEpoch&) { ++calls; });
    const auto b = train_predictor(train.examples, val.examples, cfg);
    CHECK(calls == 25);
    CHECK(a.model.encode_file(1) == b.model.encode_file(1));
    REQUIRE(a.validation.split.size() == 3);
    double mean = 0.0;
    for (double v : a.validation.split) mean += v / 3.0;
    CHECK(mean > 0.5);
    CHECK(a.history.back().train_loss < a.history.front().train_loss);
}

TEST_CASE("accuracy counts exact tuples and per-split hits") {
    const PredictorModel model(tiny_config());
    auto data = make_dataset(4, 9);
    for (std::size_t i = 0; i < 4; ++i)
        data.examples[i].targets = model.predict_clusters(*data.examples[i].context, data.examples[i].domain);
    data.examples[3].targets[1] = (data.examples[3].targets[1] + 1) % 4;
    const auto acc = predictor_accuracy(model, data.examples);
    CHECK(acc.exact == doctest::Approx(0.75));
    CHECK(acc.split[0] == 1.0);
    CHECK(acc.split[1] == doctest::Approx(0.75));
}

TEST_CASE("training rejects malformed examples") {
    auto data = make_dataset(2, 10);
    data.examples[1].targets.pop_back();
    CHECK_THROWS_AS(train_predictor(data.examples, {}, tiny_config()), Error);
    data = make_dataset(2, 10);
    data.examples[0].targets[0] = 4;
    CHECK_THROWS_AS(train_predictor(data.examples, {}, tiny_config()), Error);
    CHECK_THROWS_AS(train_predictor({}, {}, tiny_config()), Error);
}

TEST_CASE("model file round-trips with its cluster map hash") {
    const PredictorModel model(tiny_config());
    const std::string bytes = model.encode_file(0xABCDEF);
    std::uint64_t hash = 0;
    const PredictorModel back = PredictorModel::decode_file(bytes, &hash);
    CHECK(hash == 0xABCDEF);
    CHECK(back.encode_file(0xABCDEF) == bytes);
    CHECK_THROWS_AS(PredictorModel::decode_file(bytes.substr(0, bytes.size() - 3)), Error);
}

}
