#include <cmath>

#include "doctest.h"
#include "error.hpp"
#include "eval.hpp"
#include "oracles.hpp"

using namespace svq;
using namespace svq::testing;

namespace {

struct Pipeline {
    CorpusSplit split;
    AeModel model;
    std::vector<EmbedRecord> train_records;
};

const Pipeline& tiny_pipeline() {
    static const Pipeline p = [] {
        CorpusSpec s;
        s.n_utterances = 40;
        s.t_min = 6;
        s.t_max = 10;
        s.frame_dim = 4;
        s.embed_dim = 5;
        Pipeline out;
        out.split = split_corpus(strip_factors(generate_corpus(s)), 0.25);
        AeConfig c;
        c.frame_dim = 4;
        c.hidden = 8;
        c.frames_per_step = 2;
        c.bottleneck.splits = 2;
        c.bottleneck.codes = 8;
        c.bottleneck.code_dim = 3;
        c.epochs = 3;
        c.batch_size = 8;
        c.lr = 1e-2;
        out.model = train_autoencoder(out.split.train, c).model;
        out.train_records = embed_corpus(out.model, out.split.train);
        return out;
    }();
    return p;
}

PredictorModel tiny_predictor(const ClusterMap& map) {
    PredictorConfig c;
    c.embed_dim = 5;
    c.hidden = 4;
    c.attn_dim = 4;
    c.splits = map.splits();
    c.groups = map.groups();
    return PredictorModel(c);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("domain centroid codes equal the brute-force argmin") {
    const auto& p = tiny_pipeline();
    const auto codes = domain_centroid_codes(p.model, p.train_records);
    REQUIRE(codes.size() == 3);
    for (std::uint16_t d = 0; d < 3; ++d) {
        std::vector<std::vector<double>> summaries;
        for (const auto& r : p.train_records)
            if (r.domain == d) summaries.push_back(r.summary);
        if (summaries.empty()) continue;
        CHECK(codes[d].indices == brute_centroid_code(summaries, p.model.codebooks()));
    }
}

TEST_CASE("a domain without utterances falls back to the global mean") {
    const auto& p = tiny_pipeline();
    std::vector<EmbedRecord> only0;
    std::vector<std::vector<double>> all;
    for (const auto& r : p.train_records) {
        all.push_back(r.summary);
        if (r.domain == 0) only0.push_back(r);
    }
    std::vector<std::vector<double>> all0;
    for (const auto& r : only0) all0.push_back(r.summary);
    const auto codes = domain_centroid_codes(p.model, only0);
    CHECK(codes[0].indices == brute_centroid_code(all0, p.model.codebooks()));
    CHECK(codes[2].indices == brute_centroid_code(all0, p.model.codebooks()));
    CHECK_THROWS_AS(domain_centroid_codes(p.model, std::vector<EmbedRecord>{}), Error);
}

TEST_CASE("evaluation reports consistent errors and gap closure") {
    const auto& p = tiny_pipeline();
    const auto centroids = domain_centroid_codes(p.model, p.train_records);
    const ClusterMap map = build_cluster_map(p.model.codebooks(), 3, 1);
    const PredictorModel pred = tiny_predictor(map);
    const EvalReport r = evaluate(p.model, p.split.heldout, centroids, pred, map);
    CHECK(r.n_heldout == p.split.heldout.size());
    double oracle = 0.0;
    for (const auto& u : p.split.heldout) oracle += p.model.reconstruction_mse(u, p.model.embed(u).latent);
    CHECK(r.mse_oracle == doctest::Approx(oracle / static_cast<double>(r.n_heldout)));
    const double gap = r.mse_centroid - r.mse_oracle;
    if (gap > 0.0)
        CHECK(r.gap_closure == doctest::Approx((r.mse_centroid - r.mse_predicted) / gap * 100.0));
    else
        CHECK(r.gap_closure == 0.0);
    CHECK(r.accuracy.split.size() == 2);
    const std::string text = format_report(r);
    CHECK(text.find("gap_closure_percent") != std::string::npos);
}

TEST_CASE("evaluation rejects mismatched inputs") {
    const auto& p = tiny_pipeline();
    const auto centroids = domain_centroid_codes(p.model, p.train_records);
    const ClusterMap map = build_cluster_map(p.model.codebooks(), 3, 1);
    const PredictorModel pred = tiny_predictor(map);
    CHECK_THROWS_AS(evaluate(p.model, {}, centroids, pred, map), Error);
    CHECK_THROWS_AS(evaluate(p.model, p.split.heldout, std::span(centroids).first(2), pred, map), Error);
    ClusterMap wrong = map;
    wrong.representatives.pop_back();
    wrong.assignment.pop_back();
    CHECK_THROWS_AS(evaluate(p.model, p.split.heldout, centroids, pred, wrong), Error);
}

}
