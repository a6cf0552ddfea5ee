#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "params.hpp"
#include "quantizer.hpp"
#include "tape.hpp"

namespace svq {

enum class BottleneckMode { Vae, Vq, Svq };

std::string to_string(BottleneckMode mode);
BottleneckMode parse_bottleneck_mode(const std::string& s);

struct GaussianLatent {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> z;
};

// KL weight: 0 until delay_steps, linear over ramp_steps, then max_weight.
struct AnnealSchedule {
    std::int64_t delay_steps = 500;
    std::int64_t ramp_steps = 2000;
    double max_weight = 1.0;
};

double kl_weight(const AnnealSchedule& schedule, std::int64_t step);

// z = mu + sigma ⊙ eps.
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma,
                                   std::span<const double> eps);
std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma, Rng& rng);

// KL(N(mu, sigma²) ‖ N(0, I)) = ½ Σ (mu² + sigma² − 1 − ln sigma²).
double kl_divergence(std::span<const double> mu, std::span<const double> sigma);

struct BottleneckConfig {
    BottleneckMode mode = BottleneckMode::Svq;
    std::size_t vae_dim = 32;
    std::size_t splits = 4;   // ignored (forced to 1) in vq mode
    std::size_t codes = 64;
    std::size_t code_dim = 8;
    double beta = kDefaultCommitmentBeta;
    AnnealSchedule anneal;
    bool restarts = true;
    double restart_ratio = 0.01;  // threshold = restart_ratio / K
    double ema_decay = 0.99;
    double codebook_init_scale = 1.0;

    std::size_t effective_splits() const { return mode == BottleneckMode::Vq ? 1 : splits; }
    // Width of the summary fed in and of the latent handed to the decoder.
    std::size_t width() const { return mode == BottleneckMode::Vae ? vae_dim : effective_splits() * code_dim; }
    bool quantized() const { return mode != BottleneckMode::Vae; }
    void validate() const;
};

struct BottleneckOutput {
    std::vector<double> latent;
    std::map<std::string, double> aux_losses;
    std::variant<SplitCode, GaussianLatent> diagnostics;
};

// Tape-level result for a B-row batch of summaries.
struct BottleneckTapeOutput {
    Var latent;
    Var aux_loss;         // weighted sum of the mode's auxiliary terms
    Var kl;               // vae
    Var codebook_loss;    // vq/svq
    Var commitment_loss;  // vq/svq
    std::vector<SplitCode> codes;
    Tensor2 mu;
    Tensor2 sigma;
};

// Owns the bottleneck's parameters inside a shared ParamStore plus the usage statistics
// that the quantized modes keep outside gradient descent.
class Bottleneck {
public:
    Bottleneck() = default;
    explicit Bottleneck(BottleneckConfig cfg);

    const BottleneckConfig& config() const { return cfg_; }
    void init(ParamStore& store, Rng& rng);

    // train: sample eps ~ N(0, I) for vae; eval uses z = mu. kl_step feeds the anneal schedule.
    BottleneckTapeOutput forward(Tape& tape, const ParamStore& store, Var summary, bool train, std::int64_t kl_step,
                                 Rng& rng) const;
    BottleneckOutput forward(std::span<const double> summary, const ParamStore& store, bool train, std::int64_t kl_step,
                             Rng& rng) const;

    static std::string codebook_param(std::size_t split);
    SplitCodebookSet codebooks(const ParamStore& store) const;
    // Writes codes and usage back (used after restarts and when loading a model).
    void set_codebooks(ParamStore& store, const SplitCodebookSet& set);

    // Folds one batch's per-split code counts into the usage averages.
    void update_usage(const std::vector<SplitCode>& batch_codes);
    double restart_threshold() const;
    std::vector<std::vector<double>>& usage() { return usage_; }
    const std::vector<std::vector<double>>& usage() const { return usage_; }

private:
    BottleneckConfig cfg_;
    std::vector<std::vector<double>> usage_;
};

}  // namespace svq
