#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bottleneck.hpp"
#include "layers.hpp"
#include "params.hpp"
#include "synthdata.hpp"

namespace svq {

struct AeConfig {
    std::size_t frame_dim = 16;
    std::size_t hidden = 64;
    std::size_t n_domains = 3;
    std::size_t domain_dim = 8;
    std::size_t frames_per_step = 5;  // r
    BottleneckConfig bottleneck;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    // Probability of feeding the ground-truth previous frame group to the decoder
    // during training; the rest of the time it consumes its own previous output.
    double teacher_forcing = 0.0;
    std::uint64_t seed = 42;

    void validate() const;
    // "key = value" lines; parse_ae_config(to_text()) reproduces the config exactly.
    std::string to_text() const;
};

AeConfig parse_ae_config(const std::string& text);

struct EpochMetrics {
    std::size_t epoch = 0;
    double total_loss = 0.0;
    double recon_mse = 0.0;
    double kl = 0.0;
    double codebook_loss = 0.0;
    double commitment_loss = 0.0;
    std::vector<double> perplexity;       // per split, from this epoch's code counts
    std::vector<std::size_t> restarted;   // per split, codes restarted at epoch end
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Per-utterance output of the frozen encoder + bottleneck.
struct EmbedRecord {
    std::uint64_t id = 0;
    std::uint16_t domain = 0;
    std::vector<double> summary;
    std::vector<double> latent;
    std::variant<SplitCode, GaussianLatent> code;
};

class AeModel {
public:
    AeModel() = default;
    // Fresh model with seeded initialization.
    explicit AeModel(const AeConfig& cfg);

    const AeConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    Bottleneck& bottleneck() { return bottleneck_; }
    const Bottleneck& bottleneck() const { return bottleneck_; }

    std::size_t latent_width() const { return cfg_.bottleneck.width(); }
    SplitCodebookSet codebooks() const { return bottleneck_.codebooks(params_); }

    // Tape-level pieces, batched over rows.
    Var encode(Tape& tape, std::span<const Tensor2* const> frames) const;
    // Emits steps·r frames per row as one B×(steps·r·F) matrix laid out group by group.
    // With `targets` (B×(steps·r·F)) and teacher forcing enabled, previous groups come from targets.
    Var decode(Tape& tape, Var latent, std::span<const std::uint16_t> domains, std::size_t steps,
               const Tensor2* targets, Rng* forcing_rng) const;

    std::vector<double> encode_sequence(const Tensor2& frames) const;
    Tensor2 decode_sequence(std::span<const double> latent, std::uint16_t domain, std::size_t steps) const;
    // Eval-mode encoder + bottleneck.
    EmbedRecord embed(const Utterance& u) const;
    // Mean squared error of the free-running reconstruction from `latent` over u's frames.
    double reconstruction_mse(const Utterance& u, std::span<const double> latent) const;

    // Rounds parameters and usage statistics to float32, the precision of the model file.
    void freeze();

    std::string encode_file() const;
    static AeModel decode_file(std::string_view bytes);

private:
    void build_layout();

    AeConfig cfg_;
    ParamStore params_;
    Bottleneck bottleneck_;
    GruParams enc_gru_;
    LinearParams enc_proj_;
    GruParams dec_gru_;
    LinearParams dec_init_;
    LinearParams dec_out_;
};

struct TrainResult {
    AeModel model;
    std::vector<EpochMetrics> history;
};

TrainResult train_autoencoder(const Corpus& corpus, const AeConfig& cfg, const EpochCallback& on_epoch = {});

std::vector<EmbedRecord> embed_corpus(const AeModel& model, const Corpus& corpus);

// Decoder step count covering `frames` frames.
std::size_t steps_for(std::size_t frames, std::size_t frames_per_step);

// "SVQC" codebook file.
std::string encode_codebooks(const SplitCodebookSet& set);
SplitCodebookSet decode_codebooks(std::string_view bytes);

// "SVQE" embedding file (eval-mode encoder outputs per utterance).
std::string encode_embeddings(std::span<const EmbedRecord> records);
std::vector<EmbedRecord> decode_embeddings(std::string_view bytes);

}  // namespace svq
