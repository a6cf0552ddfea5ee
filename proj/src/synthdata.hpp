#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "quantizer.hpp"
#include "tensor.hpp"

namespace svq {

struct Utterance {
    std::uint64_t id = 0;
    std::uint16_t domain = 0;
    Tensor2 frames;              // T×F
    Tensor2 context;             // M×E
    std::optional<SplitCode> gold_code;

    std::size_t length() const { return frames.rows(); }
    void validate() const;
};

using Corpus = std::vector<Utterance>;

// Style-factor roles, in order: pace (period scaling), energy (pattern amplitude),
// offset (constant shift), slope (linear trend). Factors past the fourth add a
// constant spectral tilt each.
struct CorpusSpec {
    std::size_t n_utterances = 2000;
    std::size_t n_domains = 3;
    std::size_t n_factors = 4;
    std::size_t frame_dim = 16;
    std::size_t t_min = 20;
    std::size_t t_max = 60;
    std::size_t m_min = 4;
    std::size_t m_max = 12;
    std::size_t embed_dim = 32;
    double frame_noise = 0.1;
    double context_noise = 0.2;
    double predictability = 0.9;  // ρ
    double domain_shift = 1.0;    // scale of the per-domain factor means
    double factor_spread = 1.0;   // std of factors around their domain mean
    double domain_skew = 0.0;     // domain d drawn with weight exp(−skew·d)
    std::uint64_t seed = 42;

    void validate() const;
};

struct GeneratedUtterance {
    Utterance utterance;
    std::vector<double> style_factors;  // hidden ground truth, never part of Utterance
};

// Per-id ground-truth factors, persisted apart from the corpus.
struct FactorTable {
    std::size_t n_factors = 0;
    std::vector<std::uint64_t> ids;
    std::vector<std::vector<double>> factors;
};

// Fixed (seeded) generating process shared by every utterance of a corpus.
class CorpusGenerator {
public:
    explicit CorpusGenerator(CorpusSpec spec);

    const CorpusSpec& spec() const { return spec_; }
    // Utterance i is a pure function of (spec, i).
    GeneratedUtterance generate(std::size_t index) const;

    // Noise-free frame value for dimension j at time t of a T-frame utterance.
    double frame_value(std::span<const double> factors, std::size_t j, std::size_t t, std::size_t length) const;
    // The oscillating basis pattern of dimension j at pace multiplier `pace`, unit amplitude.
    double pattern(std::size_t j, std::size_t t, double pace) const;
    double pace_of(std::span<const double> factors) const;
    double amplitude_of(std::span<const double> factors) const;
    const std::vector<double>& pattern_gain() const { return gain_; }
    const std::vector<double>& domain_mean(std::size_t d) const { return domain_means_[d]; }
    // Context embedding of a noise-free latent mixture z (n_factors) before per-position noise.
    std::vector<double> project(std::span<const double> z) const;

private:
    CorpusSpec spec_;
    std::vector<double> period_, phase_, gain_, offset_dir_, slope_dir_;
    std::vector<std::vector<double>> extra_dirs_;
    std::vector<std::vector<double>> domain_means_;
    std::vector<double> domain_cdf_;
    Tensor2 projection_;  // n_factors × E
};

std::vector<GeneratedUtterance> generate_corpus(const CorpusSpec& spec);
Corpus strip_factors(const std::vector<GeneratedUtterance>& generated);
FactorTable factor_table(const std::vector<GeneratedUtterance>& generated);

struct CorpusStats {
    std::size_t n_utterances = 0;
    std::vector<std::size_t> domain_counts;
    std::vector<std::vector<double>> factor_means;  // per domain; empty without factors
    double frame_mean = 0.0;
    double frame_std = 0.0;
    double mean_energy = 0.0;  // mean over utterances of the mean squared frame value
    double min_energy = 0.0;
    double max_energy = 0.0;
    std::size_t min_length = 0;
    std::size_t max_length = 0;
};

CorpusStats corpus_stats(std::span<const Utterance> corpus, const FactorTable* factors = nullptr);
std::string format_stats(const CorpusStats& stats);

// Deterministic held-out split: the last ⌈fraction·n⌉ utterances are held out.
struct CorpusSplit {
    Corpus train;
    Corpus heldout;
};
CorpusSplit split_corpus(const Corpus& corpus, double heldout_fraction);

// "SVQD" corpus and "SVQF" factor sidecar, little-endian.
std::string encode_corpus(std::span<const Utterance> corpus);
Corpus decode_corpus(std::string_view bytes);
std::string encode_factors(const FactorTable& table);
FactorTable decode_factors(std::string_view bytes);

}  // namespace svq
