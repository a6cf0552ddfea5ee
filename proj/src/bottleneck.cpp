#include "bottleneck.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"
#include "layers.hpp"

namespace svq {

namespace {

const LinearParams kMuHead{"bn.mu", 0, 0};
const LinearParams kLogSigmaHead{"bn.logsigma", 0, 0};

LinearParams head(const LinearParams& base, std::size_t width) {
    LinearParams p = base;
    p.input = width;
    p.output = width;
    return p;
}

void check_sigma(std::span<const double> mu, std::span<const double> sigma) {
    require(mu.size() == sigma.size(), ErrorKind::Shape,
            "mu length " + std::to_string(mu.size()) + " != sigma length " + std::to_string(sigma.size()));
    for (double s : sigma)
        require(s > 0.0 && std::isfinite(s), ErrorKind::InvalidArgument, "sigma must be positive, got " + std::to_string(s));
}

}  // namespace

std::string to_string(BottleneckMode mode) {
    switch (mode) {
        case BottleneckMode::Vae: return "vae";
        case BottleneckMode::Vq: return "vq";
        case BottleneckMode::Svq: return "svq";
    }
    return "?";
}

BottleneckMode parse_bottleneck_mode(const std::string& s) {
    if (s == "vae") return BottleneckMode::Vae;
    if (s == "vq") return BottleneckMode::Vq;
    if (s == "svq") return BottleneckMode::Svq;
    fail(ErrorKind::InvalidArgument, "unknown bottleneck mode '" + s + "' (expected vae, vq or svq)");
}

double kl_weight(const AnnealSchedule& schedule, std::int64_t step) {
    if (step < schedule.delay_steps) return 0.0;
    if (schedule.ramp_steps <= 0) return schedule.max_weight;
    const double frac = static_cast<double>(step - schedule.delay_steps) / static_cast<double>(schedule.ramp_steps);
    return schedule.max_weight * std::min(1.0, frac);
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma,
                                   std::span<const double> eps) {
    check_sigma(mu, sigma);
    require(eps.size() == mu.size(), ErrorKind::Shape, "eps length must match mu");
    std::vector<double> z(mu.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + sigma[i] * eps[i];
    return z;
}

std::vector<double> reparameterize(std::span<const double> mu, std::span<const double> sigma, Rng& rng) {
    check_sigma(mu, sigma);
    std::vector<double> eps(mu.size());
    for (double& e : eps) e = normal(rng);
    return reparameterize(mu, sigma, eps);
}

double kl_divergence(std::span<const double> mu, std::span<const double> sigma) {
    check_sigma(mu, sigma);
    double kl = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double s2 = sigma[i] * sigma[i];
        kl += mu[i] * mu[i] + s2 - 1.0 - std::log(s2);
    }
    return 0.5 * kl;
}

void BottleneckConfig::validate() const {
    require(vae_dim >= 1 && splits >= 1 && codes >= 1 && code_dim >= 1, ErrorKind::InvalidArgument,
            "bottleneck sizes must be positive");
    require(beta >= 0.0, ErrorKind::InvalidArgument, "commitment beta must be >= 0");
    require(ema_decay >= 0.0 && ema_decay < 1.0, ErrorKind::InvalidArgument, "usage decay must be in [0, 1)");
    require(anneal.max_weight > 0.0 && anneal.max_weight <= 1.0, ErrorKind::InvalidArgument,
            "KL max weight must be in (0, 1]");
    require(anneal.delay_steps >= 0 && anneal.ramp_steps >= 0, ErrorKind::InvalidArgument,
            "anneal steps must be >= 0");
}

Bottleneck::Bottleneck(BottleneckConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.quantized()) usage_.assign(cfg_.effective_splits(), std::vector<double>(cfg_.codes, 0.0));
}

void Bottleneck::init(ParamStore& store, Rng& rng) {
    if (!cfg_.quantized()) {
        head(kMuHead, cfg_.vae_dim).init(store, rng);
        head(kLogSigmaHead, cfg_.vae_dim).init(store, rng);
        return;
    }
    const auto set = make_codebook_set(cfg_.effective_splits(), cfg_.codes, cfg_.code_dim, rng, cfg_.codebook_init_scale);
    for (std::size_t s = 0; s < set.splits(); ++s) store.add(codebook_param(s), set.books[s].codes);
}

std::string Bottleneck::codebook_param(std::size_t split) { return "bn.codebook." + std::to_string(split); }

SplitCodebookSet Bottleneck::codebooks(const ParamStore& store) const {
    require(cfg_.quantized(), ErrorKind::State, "vae bottleneck has no codebooks");
    SplitCodebookSet set;
    for (std::size_t s = 0; s < cfg_.effective_splits(); ++s)
        set.books.push_back(Codebook{store.at(codebook_param(s)).value, usage_[s]});
    return set;
}

void Bottleneck::set_codebooks(ParamStore& store, const SplitCodebookSet& set) {
    require(cfg_.quantized(), ErrorKind::State, "vae bottleneck has no codebooks");
    set.validate();
    require(set.splits() == cfg_.effective_splits() && set.codes() == cfg_.codes && set.dim() == cfg_.code_dim,
            ErrorKind::Shape, "codebook set does not match bottleneck configuration");
    for (std::size_t s = 0; s < set.splits(); ++s) {
        Param& p = store.contains(codebook_param(s)) ? store.at(codebook_param(s))
                                                     : store.add(codebook_param(s), set.books[s].codes);
        p.value = set.books[s].codes;
        usage_[s] = set.books[s].ema_usage;
    }
}

void Bottleneck::update_usage(const std::vector<SplitCode>& batch_codes) {
    if (batch_codes.empty()) return;
    const double inv = 1.0 / static_cast<double>(batch_codes.size());
    for (std::size_t s = 0; s < usage_.size(); ++s) {
        std::vector<double> frac(cfg_.codes, 0.0);
        for (const auto& c : batch_codes) frac[c.indices[s]] += inv;
        for (std::size_t k = 0; k < cfg_.codes; ++k)
            usage_[s][k] = cfg_.ema_decay * usage_[s][k] + (1.0 - cfg_.ema_decay) * frac[k];
    }
}

double Bottleneck::restart_threshold() const { return cfg_.restart_ratio / static_cast<double>(cfg_.codes); }

BottleneckTapeOutput Bottleneck::forward(Tape& tape, const ParamStore& store, Var summary, bool train, std::int64_t kl_step,
                                         Rng& rng) const {
    // Copied out: later pushes may reallocate the tape's node storage.
    const std::size_t rows = tape.value(summary).rows(), cols = tape.value(summary).cols();
    require(cols == cfg_.width(), ErrorKind::Shape,
            to_string(cfg_.mode) + " bottleneck expects summary width " + std::to_string(cfg_.width()) + ", got " +
                std::to_string(cols));
    BottleneckTapeOutput out;
    if (!cfg_.quantized()) {
        Var mu = linear(tape, store, head(kMuHead, cfg_.vae_dim), summary);
        Var logsig = linear(tape, store, head(kLogSigmaHead, cfg_.vae_dim), summary);
        Var sigma = tape.exp(logsig);
        Tensor2 eps(rows, cfg_.vae_dim);
        if (train)
            for (double& e : eps.data()) e = normal(rng);
        out.latent = tape.add(mu, tape.mul(sigma, tape.constant(std::move(eps))));
        // ½ Σ (mu² + σ² − 1 − 2 log σ), averaged over the batch.
        Var terms = tape.sub(tape.add(tape.square(mu), tape.square(sigma)), tape.scale(logsig, 2.0));
        Var kl = tape.scale(tape.add_scalar(tape.sum(terms), -static_cast<double>(rows * cols)),
                            0.5 / static_cast<double>(rows));
        out.kl = kl;
        out.aux_loss = tape.scale(kl, kl_weight(cfg_.anneal, kl_step));
        out.mu = tape.value(mu);
        out.sigma = tape.value(sigma);
        return out;
    }
    std::vector<Var> books;
    for (std::size_t s = 0; s < cfg_.effective_splits(); ++s) books.push_back(tape.param(store, codebook_param(s)));
    auto q = quantize_on_tape(tape, summary, books, cfg_.beta);
    out.latent = q.latent;
    out.codebook_loss = q.codebook_loss;
    out.commitment_loss = q.commitment_loss;
    out.aux_loss = tape.add(q.codebook_loss, q.commitment_loss);
    out.codes = std::move(q.codes);
    return out;
}

BottleneckOutput Bottleneck::forward(std::span<const double> summary, const ParamStore& store, bool train,
                                     std::int64_t kl_step, Rng& rng) const {
    Tape tape;
    Var s = tape.constant(Tensor2::from_external(1, summary.size(), {summary.begin(), summary.end()}));
    auto r = forward(tape, store, s, train, kl_step, rng);
    BottleneckOutput out;
    out.latent = tape.value(r.latent).data();
    if (cfg_.quantized()) {
        out.aux_losses["codebook"] = tape.value(r.codebook_loss)[0];
        out.aux_losses["commitment"] = tape.value(r.commitment_loss)[0];
        out.diagnostics = r.codes.front();
    } else {
        out.aux_losses["kl"] = tape.value(r.kl)[0];
        out.aux_losses["kl_weighted"] = tape.value(r.aux_loss)[0];
        out.diagnostics = GaussianLatent{r.mu.data(), r.sigma.data(), out.latent};
    }
    return out;
}

}  // namespace svq
