#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace svq {

// K codes of dimensionality D plus the per-code usage average that drives restarts.
struct Codebook {
    Tensor2 codes;                  // K×D
    std::vector<double> ema_usage;  // K entries, each ≥ 0

    std::size_t size() const { return codes.rows(); }
    std::size_t dim() const { return codes.cols(); }
    void validate() const;
};

// S codebooks sharing K and D. S = 1 is a plain VQ codebook.
struct SplitCodebookSet {
    std::vector<Codebook> books;

    std::size_t splits() const { return books.size(); }
    std::size_t codes() const { return books.empty() ? 0 : books.front().size(); }
    std::size_t dim() const { return books.empty() ? 0 : books.front().dim(); }
    std::size_t width() const { return splits() * dim(); }
    void validate() const;
};

struct SplitCode {
    std::vector<std::uint32_t> indices;
    friend bool operator==(const SplitCode&, const SplitCode&) = default;
};

struct NearestCode {
    std::size_t index = 0;
    double squared_distance = 0.0;
};

struct SplitQuantized {
    SplitCode code;
    std::vector<double> reconstruction;
};

struct QuantizerLosses {
    double codebook_loss = 0.0;
    double commitment_loss = 0.0;
    double beta = 0.25;
};

constexpr double kDefaultCommitmentBeta = 0.25;

// Codes drawn from uniform(−1/√D, 1/√D); usage starts at zero.
Codebook make_codebook(std::size_t codes, std::size_t dim, Rng& rng, double init_scale = 1.0);
SplitCodebookSet make_codebook_set(std::size_t splits, std::size_t codes, std::size_t dim, Rng& rng,
                                   double init_scale = 1.0);

// Squared-L2 argmin over the codebook; ties resolve to the lowest index.
NearestCode nearest_code(std::span<const double> query, const Codebook& cb);

SplitQuantized split_quantize(std::span<const double> vec, const SplitCodebookSet& set);
std::vector<double> dequantize(const SplitCode& code, const SplitCodebookSet& set);

// codebook ‖sg(z)−c‖², commitment β‖z−sg(c)‖² (values only; see quantize_on_tape for gradients).
QuantizerLosses quantizer_losses(std::span<const double> encoder_out, std::span<const double> reconstruction,
                                 double beta = kDefaultCommitmentBeta);

// exp(H(usage)) of the normalized usage distribution, in [1, K].
double perplexity(std::span<const double> usage);

// Replaces every code whose ema_usage is below `threshold` with a uniformly drawn row of
// `batch_outputs` and resets its usage to the mean usage 1/K. Returns the restarted indices.
std::vector<std::size_t> random_restart(Codebook& cb, const Tensor2& batch_outputs, double threshold, Rng& rng);

// S·log2(K) bits.
double capacity_bits(std::size_t splits, std::size_t codes);

// Nearest-neighbor lookup of the mean of one domain's encoder outputs.
SplitCode centroid_code(std::span<const std::vector<double>> latents, const SplitCodebookSet& set);

// Quantization of a B×(S·D) batch recorded on a tape.
//   latent           forward value = selected codes, gradient passed straight to `encoded`
//   codebook_loss    Σ‖sg(z)−c‖² / B, reaches codebook params only
//   commitment_loss  β·Σ‖z−sg(c)‖² / B, reaches the encoder only
struct TapeQuantized {
    Var latent;
    Var codebook_loss;
    Var commitment_loss;
    std::vector<SplitCode> codes;  // one per batch row
};

TapeQuantized quantize_on_tape(Tape& tape, Var encoded, std::span<const Var> codebooks, double beta);

}  // namespace svq
