#include <cmath>

#include "bottleneck.hpp"
#include "doctest.h"
#include "error.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace svq;
using namespace svq::testing;

TEST_SUITE("bottleneck") {

TEST_CASE("mode names round-trip") {
    for (auto m : {BottleneckMode::Vae, BottleneckMode::Vq, BottleneckMode::Svq})
        CHECK(parse_bottleneck_mode(to_string(m)) == m);
    CHECK_THROWS_AS(parse_bottleneck_mode("pq"), Error);
}

TEST_CASE("kl weight holds at zero, ramps linearly, then saturates") {
    const AnnealSchedule s;
    CHECK(kl_weight(s, 0) == 0.0);
    CHECK(kl_weight(s, 499) == 0.0);
    CHECK(kl_weight(s, 500) == 0.0);
    CHECK(kl_weight(s, 1500) == doctest::Approx(0.5));
    CHECK(kl_weight(s, 2500) == 1.0);
    CHECK(kl_weight(s, 100000) == 1.0);
    CHECK(kl_weight(AnnealSchedule{0, 0, 0.3}, 0) == 0.3);
}

TEST_CASE("reparameterize is mu plus sigma times eps") {
    const std::vector<double> mu{1.0, -2.0}, sigma{0.5, 2.0}, eps{2.0, -1.0};
    CHECK(reparameterize(mu, sigma, eps) == std::vector<double>{2.0, -4.0});
    CHECK_THROWS_AS(reparameterize(mu, std::vector<double>{0.5, 0.0}, eps), Error);
    CHECK_THROWS_AS(reparameterize(mu, std::vector<double>{0.5}, eps), Error);
}

TEST_CASE("kl is zero at the prior and matches hand values") {
    CHECK(kl_divergence(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 0.0);
    CHECK(kl_divergence(std::vector<double>{1.0}, std::vector<double>{1.0}) == doctest::Approx(0.5));
    CHECK(kl_divergence(std::vector<double>{0.0}, std::vector<double>{std::exp(1.0)}) ==
          doctest::Approx(0.5 * (std::exp(2.0) - 3.0)));
}

TEST_CASE("closed-form kl matches a Monte-Carlo estimate") {
    Rng rng(17);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> mu(3), sigma(3);
        for (double& m : mu) m = uniform(rng, -1.5, 1.5);
        for (double& s : sigma) s = uniform(rng, 0.3, 2.0);
        const double exact = kl_divergence(mu, sigma);
        CHECK(mc_kl(mu, sigma, 200000, rng) == doctest::Approx(exact).epsilon(0.03));
    }
}

TEST_CASE("kl term gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) CHECK(check_kl(seed).max_rel < 1e-4);
}

TEST_CASE("vae forward: eval uses the mean, training samples") {
    BottleneckConfig cfg;
    cfg.mode = BottleneckMode::Vae;
    cfg.vae_dim = 4;
    Bottleneck bn(cfg);
    ParamStore store;
    Rng rng(1);
    bn.init(store, rng);
    const std::vector<double> summary{0.1, -0.3, 0.7, 0.2};
    const auto eval = bn.forward(summary, store, false, 0, rng);
    const auto& g = std::get<GaussianLatent>(eval.diagnostics);
    CHECK(eval.latent == g.mu);
    CHECK(eval.aux_losses.at("kl_weighted") == 0.0);
    CHECK(eval.aux_losses.at("kl") == doctest::Approx(kl_divergence(g.mu, g.sigma)));
    const auto train = bn.forward(summary, store, true, 2500, rng);
    CHECK(train.latent != eval.latent);
    CHECK(train.aux_losses.at("kl_weighted") == doctest::Approx(train.aux_losses.at("kl")));
    CHECK_THROWS_AS(bn.forward(std::vector<double>{1.0}, store, false, 0, rng), Error);
    CHECK_THROWS_AS(bn.codebooks(store), Error);
}

TEST_CASE("svq forward returns the split-quantized summary") {
    BottleneckConfig cfg;
    cfg.splits = 2;
    cfg.codes = 8;
    cfg.code_dim = 3;
    Bottleneck bn(cfg);
    ParamStore store;
    Rng rng(2);
    bn.init(store, rng);
    const std::vector<double> summary{0.1, -0.3, 0.2, 0.5, 0.0, -0.4};
    const auto out = bn.forward(summary, store, true, 0, rng);
    const auto want = split_quantize(summary, bn.codebooks(store));
    CHECK(std::get<SplitCode>(out.diagnostics) == want.code);
    CHECK(out.latent == want.reconstruction);
    CHECK(out.aux_losses.at("codebook") == doctest::Approx(squared_distance(summary, want.reconstruction)));
}

TEST_CASE("vq mode forces one split of the configured width") {
    BottleneckConfig cfg;
    cfg.mode = BottleneckMode::Vq;
    cfg.splits = 4;
    cfg.code_dim = 32;
    CHECK(cfg.effective_splits() == 1);
    CHECK(cfg.width() == 32);
    Bottleneck bn(cfg);
    ParamStore store;
    Rng rng(3);
    bn.init(store, rng);
    CHECK(bn.codebooks(store).splits() == 1);
}

TEST_CASE("usage is an exponential moving average of code frequencies") {
    BottleneckConfig cfg;
    cfg.splits = 1;
    cfg.codes = 4;
    cfg.code_dim = 2;
    cfg.ema_decay = 0.5;
    Bottleneck bn(cfg);
    bn.update_usage({SplitCode{{0}}, SplitCode{{0}}, SplitCode{{2}}, SplitCode{{0}}});
    CHECK(bn.usage()[0] == std::vector<double>{0.375, 0.0, 0.125, 0.0});
    bn.update_usage({SplitCode{{1}}});
    CHECK(bn.usage()[0] == std::vector<double>{0.1875, 0.5, 0.0625, 0.0});
    CHECK(bn.restart_threshold() == doctest::Approx(0.0025));
}

TEST_CASE("invalid configurations are rejected") {
    BottleneckConfig cfg;
    cfg.codes = 0;
    CHECK_THROWS_AS(Bottleneck{cfg}, Error);
    cfg = {};
    cfg.ema_decay = 1.0;
    CHECK_THROWS_AS(Bottleneck{cfg}, Error);
    cfg = {};
    cfg.beta = -1.0;
    CHECK_THROWS_AS(Bottleneck{cfg}, Error);
}

}
