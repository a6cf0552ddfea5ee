#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "clustering.hpp"
#include "layers.hpp"
#include "params.hpp"
#include "quantizer.hpp"

namespace svq {

struct PredictorConfig {
    std::size_t embed_dim = 32;    // E
    std::size_t hidden = 32;       // per direction in the encoder, and the decoder state
    std::size_t attn_dim = 32;
    std::size_t n_domains = 3;
    std::size_t domain_dim = 8;
    std::size_t target_dim = 8;    // previous-target embedding width
    std::size_t splits = 4;        // S decoding steps
    std::size_t groups = 8;        // G targets per split
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double lr = 3e-3;
    std::uint64_t seed = 42;

    void validate() const;
    std::string to_text() const;
};

PredictorConfig parse_predictor_config(const std::string& text);

struct PredictorExample {
    const Tensor2* context = nullptr;  // M×E
    std::uint16_t domain = 0;
    std::vector<std::uint32_t> targets;  // S cluster ids
};

struct PredictionRecord {
    std::vector<std::uint32_t> cluster_ids;
    SplitCode split_code;
    Tensor2 attention;  // S×M
};

struct PredictorEpoch {
    std::size_t epoch = 0;
    double train_loss = 0.0;  // mean summed-over-splits cross-entropy per example
    std::vector<double> val_split_accuracy;
    double val_exact_accuracy = 0.0;
};

class PredictorModel {
public:
    PredictorModel() = default;
    explicit PredictorModel(const PredictorConfig& cfg);

    const PredictorConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // Forward GRU states in the first H columns, backward states in the last H.
    Var encode_context(Tape& tape, const Tensor2& embeddings) const;
    Tensor2 encode_context(const Tensor2& embeddings) const;

    struct Step {
        Var logits;   // 1×G
        Var hidden;   // 1×H
        Var weights;  // 1×M
    };
    // One decoding step for split `split`; y_prev = G is the start token.
    Step decoder_step(Tape& tape, std::size_t split, std::uint16_t domain, Var enc_states, std::uint32_t y_prev,
                      Var h_prev) const;

    // Teacher-forced cross-entropy summed over splits.
    Var loss(Tape& tape, const PredictorExample& ex) const;

    // Greedy decoding; cluster ids only (no map required).
    std::vector<std::uint32_t> predict_clusters(const Tensor2& embeddings, std::uint16_t domain,
                                                Tensor2* attention = nullptr) const;
    PredictionRecord predict_codes(const Tensor2& embeddings, std::uint16_t domain, const ClusterMap& map) const;

    void freeze();

    // "SVQP" file; records the hash of the cluster map the targets came from.
    std::string encode_file(std::uint64_t cluster_map_hash) const;
    static PredictorModel decode_file(std::string_view bytes, std::uint64_t* cluster_map_hash = nullptr);

private:
    void build_layout();
    void check_domain(std::uint16_t domain) const;

    PredictorConfig cfg_;
    ParamStore params_;
    GruParams enc_fwd_, enc_bwd_, dec_gru_;
    AttentionParams attn_;
};

struct PredictorAccuracy {
    std::vector<double> split;
    double exact = 0.0;
};

PredictorAccuracy predictor_accuracy(const PredictorModel& model, std::span<const PredictorExample> examples);

struct PredictorTrainResult {
    PredictorModel model;
    std::vector<PredictorEpoch> history;
    PredictorAccuracy validation;  // of the final model; empty when no validation set
};

using PredictorCallback = std::function<void(const PredictorEpoch&)>;

PredictorTrainResult train_predictor(std::span<const PredictorExample> train, std::span<const PredictorExample> val,
                                     const PredictorConfig& cfg, const PredictorCallback& on_epoch = {});

}  // namespace svq
