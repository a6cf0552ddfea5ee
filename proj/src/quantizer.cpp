#include "quantizer.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace svq {

void Codebook::validate() const {
    require(size() >= 1 && dim() >= 1, ErrorKind::InvalidArgument,
            "codebook needs K >= 1 and D >= 1, got " + codes.shape_str());
    require(codes.all_finite(), ErrorKind::Numeric, "codebook contains non-finite codes");
    require(ema_usage.size() == size(), ErrorKind::Shape,
            "codebook usage length " + std::to_string(ema_usage.size()) + " != K " + std::to_string(size()));
    for (double u : ema_usage) require(u >= 0.0 && std::isfinite(u), ErrorKind::Numeric, "codebook usage must be finite and >= 0");
}

void SplitCodebookSet::validate() const {
    require(!books.empty(), ErrorKind::InvalidArgument, "codebook set needs at least one split");
    for (const auto& b : books) {
        b.validate();
        require(b.size() == codes() && b.dim() == dim(), ErrorKind::Shape,
                "all splits must share K and D; got " + b.codes.shape_str() + " vs " + books.front().codes.shape_str());
    }
}

Codebook make_codebook(std::size_t codes, std::size_t dim, Rng& rng, double init_scale) {
    require(codes >= 1 && dim >= 1, ErrorKind::InvalidArgument, "codebook needs K >= 1 and D >= 1");
    Codebook cb;
    cb.codes = Tensor2(codes, dim);
    const double bound = init_scale / std::sqrt(static_cast<double>(dim));
    for (double& x : cb.codes.data()) x = uniform(rng, -bound, bound);
    cb.ema_usage.assign(codes, 0.0);
    return cb;
}

SplitCodebookSet make_codebook_set(std::size_t splits, std::size_t codes, std::size_t dim, Rng& rng,
                                   double init_scale) {
    require(splits >= 1, ErrorKind::InvalidArgument, "split count must be >= 1");
    SplitCodebookSet set;
    for (std::size_t s = 0; s < splits; ++s) set.books.push_back(make_codebook(codes, dim, rng, init_scale));
    return set;
}

NearestCode nearest_code(std::span<const double> query, const Codebook& cb) {
    require(query.size() == cb.dim(), ErrorKind::Shape,
            "query length " + std::to_string(query.size()) + " != code dimension " + std::to_string(cb.dim()));
    NearestCode best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t k = 0; k < cb.size(); ++k) {
        const double d = squared_distance(query, cb.codes.row_span(k));
        if (d < best.squared_distance) best = {k, d};
    }
    return best;
}

SplitQuantized split_quantize(std::span<const double> vec, const SplitCodebookSet& set) {
    require(vec.size() == set.width(), ErrorKind::Shape,
            "vector length " + std::to_string(vec.size()) + " != S*D " + std::to_string(set.width()));
    const std::size_t d = set.dim();
    SplitQuantized out;
    out.code.indices.reserve(set.splits());
    out.reconstruction.reserve(vec.size());
    for (std::size_t s = 0; s < set.splits(); ++s) {
        const auto hit = nearest_code(vec.subspan(s * d, d), set.books[s]);
        out.code.indices.push_back(static_cast<std::uint32_t>(hit.index));
        const auto row = set.books[s].codes.row_span(hit.index);
        out.reconstruction.insert(out.reconstruction.end(), row.begin(), row.end());
    }
    return out;
}

std::vector<double> dequantize(const SplitCode& code, const SplitCodebookSet& set) {
    require(code.indices.size() == set.splits(), ErrorKind::Shape,
            "code has " + std::to_string(code.indices.size()) + " indices for " + std::to_string(set.splits()) + " splits");
    std::vector<double> out;
    out.reserve(set.width());
    for (std::size_t s = 0; s < set.splits(); ++s) {
        require(code.indices[s] < set.codes(), ErrorKind::InvalidArgument,
                "code index " + std::to_string(code.indices[s]) + " out of range [0, " + std::to_string(set.codes()) +
                    ") in split " + std::to_string(s));
        const auto row = set.books[s].codes.row_span(code.indices[s]);
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

QuantizerLosses quantizer_losses(std::span<const double> encoder_out, std::span<const double> reconstruction,
                                 double beta) {
    require(encoder_out.size() == reconstruction.size(), ErrorKind::Shape,
            "encoder output length " + std::to_string(encoder_out.size()) + " != reconstruction length " +
                std::to_string(reconstruction.size()));
    const double sq = squared_distance(encoder_out, reconstruction);
    return {sq, beta * sq, beta};
}

double perplexity(std::span<const double> usage) {
    double total = 0.0;
    for (double u : usage) {
        require(u >= 0.0 && std::isfinite(u), ErrorKind::InvalidArgument, "usage values must be finite and >= 0");
        total += u;
    }
    require(total > 0.0, ErrorKind::InvalidArgument, "perplexity of an all-zero usage vector");
    double entropy = 0.0;
    for (double u : usage) {
        if (u <= 0.0) continue;
        const double p = u / total;
        entropy -= p * std::log(p);
    }
    return std::exp(entropy);
}

std::vector<std::size_t> random_restart(Codebook& cb, const Tensor2& batch_outputs, double threshold, Rng& rng) {
    require(batch_outputs.rows() > 0, ErrorKind::InvalidArgument, "random restart needs a non-empty batch");
    require(batch_outputs.cols() == cb.dim(), ErrorKind::Shape,
            "restart batch width " + std::to_string(batch_outputs.cols()) + " != code dimension " + std::to_string(cb.dim()));
    const double reset_usage = 1.0 / static_cast<double>(cb.size());
    std::vector<std::size_t> restarted;
    for (std::size_t k = 0; k < cb.size(); ++k) {
        if (cb.ema_usage[k] >= threshold) continue;
        const std::size_t pick = uniform_index(rng, batch_outputs.rows());
        auto dst = cb.codes.row_span(k);
        const auto src = batch_outputs.row_span(pick);
        std::copy(src.begin(), src.end(), dst.begin());
        cb.ema_usage[k] = std::max(reset_usage, threshold);
        restarted.push_back(k);
    }
    return restarted;
}

double capacity_bits(std::size_t splits, std::size_t codes) {
    return static_cast<double>(splits) * std::log2(static_cast<double>(codes));
}

SplitCode centroid_code(std::span<const std::vector<double>> latents, const SplitCodebookSet& set) {
    require(!latents.empty(), ErrorKind::InvalidArgument, "centroid code of an empty domain");
    std::vector<double> mean(set.width(), 0.0);
    for (const auto& l : latents) {
        require(l.size() == mean.size(), ErrorKind::Shape,
                "latent length " + std::to_string(l.size()) + " != S*D " + std::to_string(mean.size()));
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += l[i];
    }
    for (double& m : mean) m /= static_cast<double>(latents.size());
    return split_quantize(mean, set).code;
}

TapeQuantized quantize_on_tape(Tape& tape, Var encoded, std::span<const Var> codebooks, double beta) {
    const Tensor2& ev = tape.value(encoded);
    require(!codebooks.empty(), ErrorKind::InvalidArgument, "quantization needs at least one codebook");
    const std::size_t d = tape.value(codebooks[0]).cols();
    require(ev.cols() == codebooks.size() * d, ErrorKind::Shape,
            "encoder width " + std::to_string(ev.cols()) + " != S*D " + std::to_string(codebooks.size() * d));
    const std::size_t batch = ev.rows();
    TapeQuantized out;
    out.codes.assign(batch, SplitCode{std::vector<std::uint32_t>(codebooks.size())});

    std::vector<Var> parts;
    Var cb_loss, commit;
    for (std::size_t s = 0; s < codebooks.size(); ++s) {
        const Tensor2& table = tape.value(codebooks[s]);
        require(table.cols() == d, ErrorKind::Shape, "all codebooks must share D");
        Codebook view{table, std::vector<double>(table.rows(), 0.0)};
        Var z = tape.slice_cols(encoded, s * d, d);
        std::vector<std::size_t> idx(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            idx[b] = nearest_code(tape.value(z).row_span(b), view).index;
            out.codes[b].indices[s] = static_cast<std::uint32_t>(idx[b]);
        }
        Var c = tape.gather_rows(codebooks[s], std::move(idx));
        parts.push_back(tape.straight_through(z, c));
        Var cl = tape.sum(tape.square(tape.sub(tape.stop_gradient(z), c)));
        Var ml = tape.sum(tape.square(tape.sub(z, tape.stop_gradient(c))));
        cb_loss = cb_loss.valid() ? tape.add(cb_loss, cl) : cl;
        commit = commit.valid() ? tape.add(commit, ml) : ml;
    }
    const double inv_b = 1.0 / static_cast<double>(batch);
    out.latent = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
    out.codebook_loss = tape.scale(cb_loss, inv_b);
    out.commitment_loss = tape.scale(commit, beta * inv_b);
    return out;
}

}  // namespace svq
