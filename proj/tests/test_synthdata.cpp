#include <cmath>

#include "doctest.h"
#include "error.hpp"
#include "oracles.hpp"
#include "synthdata.hpp"

using namespace svq;
using namespace svq::testing;

namespace {

CorpusSpec small_spec() {
    CorpusSpec s;
    s.n_utterances = 60;
    s.t_min = 8;
    s.t_max = 16;
    return s;
}

// Mean of R² over factors for a linear probe from the position-averaged context.
double context_probe_r2(double rho) {
    CorpusSpec s;
    s.predictability = rho;
    s.n_utterances = 2000;
    s.t_min = s.t_max = 2;
    const auto gen = generate_corpus(s);
    std::vector<std::vector<double>> x;
    for (const auto& g : gen) {
        const Tensor2& c = g.utterance.context;
        std::vector<double> mean(c.cols(), 0.0);
        for (std::size_t m = 0; m < c.rows(); ++m)
            for (std::size_t e = 0; e < c.cols(); ++e) mean[e] += c(m, e) / static_cast<double>(c.rows());
        x.push_back(mean);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < s.n_factors; ++k) {
        std::vector<double> y;
        for (const auto& g : gen) y.push_back(g.style_factors[k]);
        total += ols_r2(x, y);
    }
    return total / static_cast<double>(s.n_factors);
}

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("same spec and seed give identical corpora") {
    const auto a = encode_corpus(strip_factors(generate_corpus(small_spec())));
    const auto b = encode_corpus(strip_factors(generate_corpus(small_spec())));
    CHECK(a == b);
    CorpusSpec other = small_spec();
    other.seed = 43;
    CHECK(encode_corpus(strip_factors(generate_corpus(other))) != a);
}

TEST_CASE("utterance i does not depend on corpus size") {
    CorpusSpec big = small_spec();
    big.n_utterances = 120;
    const auto a = generate_corpus(small_spec());
    const auto b = generate_corpus(big);
    CHECK(a[37].utterance.frames == b[37].utterance.frames);
    CHECK(a[37].style_factors == b[37].style_factors);
}

TEST_CASE("noiseless frames are a function of factors, domain and length") {
    CorpusSpec s = small_spec();
    s.frame_noise = 0.0;
    s.context_noise = 0.0;
    s.predictability = 1.0;
    CorpusGenerator gen(s);
    const auto g = gen.generate(5);
    const Tensor2& f = g.utterance.frames;
    for (std::size_t t = 0; t < f.rows(); ++t)
        for (std::size_t j = 0; j < f.cols(); ++j)
            CHECK(f(t, j) == static_cast<double>(static_cast<float>(gen.frame_value(g.style_factors, j, t, f.rows()))));
    const auto base = gen.project(g.style_factors);
    for (std::size_t m = 0; m < g.utterance.context.rows(); ++m)
        CHECK(g.utterance.context(m, 0) == static_cast<double>(static_cast<float>(base[0])));
}

TEST_CASE("shapes respect the spec ranges") {
    const CorpusSpec s = small_spec();
    for (const auto& g : generate_corpus(s)) {
        const auto& u = g.utterance;
        CHECK(u.length() >= s.t_min);
        CHECK(u.length() <= s.t_max);
        CHECK(u.frames.cols() == s.frame_dim);
        CHECK(u.context.rows() >= s.m_min);
        CHECK(u.context.rows() <= s.m_max);
        CHECK(u.context.cols() == s.embed_dim);
        CHECK(u.domain < s.n_domains);
        CHECK(g.style_factors.size() == s.n_factors);
        CHECK_FALSE(u.gold_code.has_value());
    }
}

TEST_CASE("invalid specs are rejected") {
    CorpusSpec s;
    s.predictability = 1.5;
    CHECK_THROWS_AS(CorpusGenerator{s}, Error);
    s = {};
    s.t_min = 10;
    s.t_max = 5;
    CHECK_THROWS_AS(CorpusGenerator{s}, Error);
    s = {};
    s.n_domains = 0;
    CHECK_THROWS_AS(CorpusGenerator{s}, Error);
}

TEST_CASE("stats count every utterance and separate domains") {
    CorpusSpec s = small_spec();
    s.n_utterances = 600;
    const auto gen = generate_corpus(s);
    const auto table = factor_table(gen);
    const auto corpus = strip_factors(gen);
    const auto st = corpus_stats(corpus, &table);
    std::size_t total = 0;
    for (auto c : st.domain_counts) total += c;
    CHECK(total == 600);
    CHECK(st.factor_means[0] != st.factor_means[1]);
    CHECK(st.min_length >= s.t_min);
    CHECK(st.max_energy >= st.mean_energy);
    CHECK_THROWS_AS(corpus_stats(std::span<const Utterance>{}), Error);
    CHECK(format_stats(st).find("600") != std::string::npos);
}

TEST_CASE("factor means converge to the domain means") {
    CorpusSpec s;
    s.n_utterances = 10000;
    s.t_min = s.t_max = 2;
    s.m_min = s.m_max = 1;
    s.frame_noise = 0.0;
    s.context_noise = 0.0;
    CorpusGenerator gen(s);
    const auto all = generate_corpus(s);
    const auto st = corpus_stats(strip_factors(all), nullptr);
    const auto table = factor_table(all);
    const auto with = corpus_stats(strip_factors(all), &table);
    for (std::size_t d = 0; d < s.n_domains; ++d) {
        const double bound = 5.0 * s.factor_spread / std::sqrt(static_cast<double>(st.domain_counts[d]));
        for (std::size_t k = 0; k < s.n_factors; ++k)
            CHECK(std::abs(with.factor_means[d][k] - gen.domain_mean(d)[k]) < bound);
    }
}

TEST_CASE("skew makes later domains rarer") {
    CorpusSpec s = small_spec();
    s.n_utterances = 900;
    s.domain_skew = 1.5;
    const auto st = corpus_stats(strip_factors(generate_corpus(s)));
    CHECK(st.domain_counts[0] > st.domain_counts[1]);
    CHECK(st.domain_counts[1] > st.domain_counts[2]);
}

TEST_CASE("pattern amplitude is linearly identifiable from the factors") {
    CorpusSpec s;
    s.n_utterances = 400;
    CorpusGenerator gen(s);
    std::vector<std::vector<double>> x;
    std::vector<double> amp;
    for (std::size_t i = 0; i < s.n_utterances; ++i) {
        const auto g = gen.generate(i);
        const Tensor2& f = g.utterance.frames;
        const double pace = gen.pace_of(g.style_factors);
        // Projection of the frames onto the unit-amplitude pattern at the true pace.
        double num = 0.0, den = 0.0;
        for (std::size_t t = 0; t < f.rows(); ++t)
            for (std::size_t j = 0; j < f.cols(); ++j) {
                const double p = gen.pattern_gain()[j] * gen.pattern(j, t, pace);
                num += f(t, j) * p;
                den += p * p;
            }
        x.push_back(g.style_factors);
        amp.push_back(num / den);
    }
    CHECK(ols_r2(x, amp) > 0.95);
}

TEST_CASE("context predictability grows with rho and vanishes at zero") {
    const double r0 = context_probe_r2(0.0), r5 = context_probe_r2(0.5), r1 = context_probe_r2(1.0);
    CHECK(r0 < 0.05);
    CHECK(r0 < r5);
    CHECK(r5 < r1);
}

TEST_CASE("held-out split takes the tail") {
    const auto corpus = strip_factors(generate_corpus(small_spec()));
    const auto sp = split_corpus(corpus, 0.1);
    CHECK(sp.heldout.size() == 6);
    CHECK(sp.train.size() == 54);
    CHECK(sp.heldout.front().id == 54);
    CHECK_THROWS_AS(split_corpus(corpus, 1.5), Error);
}

}
