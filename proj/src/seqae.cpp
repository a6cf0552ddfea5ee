#include "seqae.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include "error.hpp"
#include "io.hpp"
#include "log.hpp"

namespace svq {

namespace {

constexpr std::uint16_t kModelVersion = 1;
constexpr std::uint16_t kCodebookVersion = 1;
constexpr std::uint16_t kEmbeddingVersion = 1;
constexpr const char* kDomainTable = "dom.embed";

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

// Everything except the codebooks, which travel in their own section.
std::vector<std::string> dense_param_names(const ParamStore& store) {
    std::vector<std::string> names;
    for (const auto& [name, _] : store.params())
        if (name.rfind("bn.codebook.", 0) != 0) names.push_back(name);
    return names;
}

}  // namespace

std::size_t steps_for(std::size_t frames, std::size_t frames_per_step) {
    return (frames + frames_per_step - 1) / frames_per_step;
}

void AeConfig::validate() const {
    require(frame_dim > 0 && hidden > 0 && n_domains > 0 && domain_dim > 0 && frames_per_step > 0 && epochs > 0 &&
                batch_size > 0,
            ErrorKind::InvalidArgument, "autoencoder sizes must be positive");
    require(lr > 0.0, ErrorKind::InvalidArgument, "learning rate must be positive");
    require(teacher_forcing >= 0.0 && teacher_forcing <= 1.0, ErrorKind::InvalidArgument,
            "teacher forcing ratio must lie in [0, 1]");
    bottleneck.validate();
}

std::string AeConfig::to_text() const {
    std::ostringstream os;
    os << "frame_dim = " << frame_dim << "\n"
       << "hidden = " << hidden << "\n"
       << "n_domains = " << n_domains << "\n"
       << "domain_dim = " << domain_dim << "\n"
       << "frames_per_step = " << frames_per_step << "\n"
       << "mode = " << to_string(bottleneck.mode) << "\n"
       << "vae_dim = " << bottleneck.vae_dim << "\n"
       << "splits = " << bottleneck.splits << "\n"
       << "codes = " << bottleneck.codes << "\n"
       << "code_dim = " << bottleneck.code_dim << "\n"
       << "beta = " << fmt_double(bottleneck.beta) << "\n"
       << "anneal_delay = " << bottleneck.anneal.delay_steps << "\n"
       << "anneal_ramp = " << bottleneck.anneal.ramp_steps << "\n"
       << "anneal_max = " << fmt_double(bottleneck.anneal.max_weight) << "\n"
       << "restarts = " << (bottleneck.restarts ? 1 : 0) << "\n"
       << "restart_ratio = " << fmt_double(bottleneck.restart_ratio) << "\n"
       << "ema_decay = " << fmt_double(bottleneck.ema_decay) << "\n"
       << "codebook_init_scale = " << fmt_double(bottleneck.codebook_init_scale) << "\n"
       << "epochs = " << epochs << "\n"
       << "batch_size = " << batch_size << "\n"
       << "lr = " << fmt_double(lr) << "\n"
       << "teacher_forcing = " << fmt_double(teacher_forcing) << "\n"
       << "seed = " << seed << "\n";
    return os.str();
}

AeConfig parse_ae_config(const std::string& text) {
    const auto kv = parse_kv(text);
    AeConfig c;
    auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        require(it != kv.end(), ErrorKind::Format, std::string("model config is missing '") + key + "'");
        return it->second;
    };
    auto num = [&](const char* key) {
        try {
            return std::stoull(get(key));
        } catch (const std::logic_error&) {
            fail(ErrorKind::Format, std::string("model config value for '") + key + "' is not an integer");
        }
    };
    auto real = [&](const char* key) {
        try {
            return std::stod(get(key));
        } catch (const std::logic_error&) {
            fail(ErrorKind::Format, std::string("model config value for '") + key + "' is not a number");
        }
    };
    c.frame_dim = num("frame_dim");
    c.hidden = num("hidden");
    c.n_domains = num("n_domains");
    c.domain_dim = num("domain_dim");
    c.frames_per_step = num("frames_per_step");
    c.bottleneck.mode = parse_bottleneck_mode(get("mode"));
    c.bottleneck.vae_dim = num("vae_dim");
    c.bottleneck.splits = num("splits");
    c.bottleneck.codes = num("codes");
    c.bottleneck.code_dim = num("code_dim");
    c.bottleneck.beta = real("beta");
    c.bottleneck.anneal.delay_steps = static_cast<std::int64_t>(num("anneal_delay"));
    c.bottleneck.anneal.ramp_steps = static_cast<std::int64_t>(num("anneal_ramp"));
    c.bottleneck.anneal.max_weight = real("anneal_max");
    c.bottleneck.restarts = num("restarts") != 0;
    c.bottleneck.restart_ratio = real("restart_ratio");
    c.bottleneck.ema_decay = real("ema_decay");
    c.bottleneck.codebook_init_scale = real("codebook_init_scale");
    c.epochs = num("epochs");
    c.batch_size = num("batch_size");
    c.lr = real("lr");
    c.teacher_forcing = real("teacher_forcing");
    c.seed = num("seed");
    c.validate();
    return c;
}

AeModel::AeModel(const AeConfig& cfg) : cfg_(cfg), bottleneck_(cfg.bottleneck) {
    cfg_.validate();
    build_layout();
    Rng rng(derive_seed(cfg_.seed, 0));
    enc_gru_.init(params_, rng);
    enc_proj_.init(params_, rng);
    bottleneck_.init(params_, rng);
    params_.add(kDomainTable, init_uniform(cfg_.n_domains, cfg_.domain_dim, cfg_.domain_dim, rng));
    dec_init_.init(params_, rng);
    dec_gru_.init(params_, rng);
    dec_out_.init(params_, rng);
}

void AeModel::build_layout() {
    const std::size_t group = cfg_.frames_per_step * cfg_.frame_dim;
    const std::size_t latent = latent_width();
    enc_gru_ = {"enc.gru", cfg_.frame_dim, cfg_.hidden};
    enc_proj_ = {"enc.proj", cfg_.hidden, cfg_.bottleneck.width()};
    dec_init_ = {"dec.init", latent, cfg_.hidden};
    dec_gru_ = {"dec.gru", group + latent + cfg_.domain_dim, cfg_.hidden};
    dec_out_ = {"dec.out", cfg_.hidden, group};
}

Var AeModel::encode(Tape& tape, std::span<const Tensor2* const> frames) const {
    require(!frames.empty(), ErrorKind::InvalidArgument, "encode of an empty batch");
    const std::size_t batch = frames.size();
    std::size_t t_max = 0;
    for (const Tensor2* f : frames) {
        require(f->rows() >= 1, ErrorKind::InvalidArgument, "cannot encode an empty frame sequence");
        require(f->cols() == cfg_.frame_dim, ErrorKind::Shape,
                "frame dimension " + std::to_string(f->cols()) + " != configured " + std::to_string(cfg_.frame_dim));
        t_max = std::max(t_max, f->rows());
    }
    Var h = tape.constant(Tensor2(batch, cfg_.hidden));
    for (std::size_t t = 0; t < t_max; ++t) {
        Tensor2 x(batch, cfg_.frame_dim);
        std::vector<double> keep(batch, 1.0);
        bool ragged = false;
        for (std::size_t b = 0; b < batch; ++b) {
            if (t < frames[b]->rows()) {
                const auto src = frames[b]->row_span(t);
                std::copy(src.begin(), src.end(), x.row_span(b).begin());
            } else {
                keep[b] = 0.0;
                ragged = true;
            }
        }
        Var next = gru_step(tape, params_, enc_gru_, tape.constant(std::move(x)), h);
        if (ragged) {
            // Finished rows carry their last state forward unchanged.
            std::vector<double> hold(batch);
            for (std::size_t b = 0; b < batch; ++b) hold[b] = 1.0 - keep[b];
            next = tape.add(tape.row_scale(next, keep), tape.row_scale(h, std::move(hold)));
        }
        h = next;
    }
    return linear(tape, params_, enc_proj_, h);
}

Var AeModel::decode(Tape& tape, Var latent, std::span<const std::uint16_t> domains, std::size_t steps,
                    const Tensor2* targets, Rng* forcing_rng) const {
    const Tensor2& lv = tape.value(latent);
    require(lv.cols() == latent_width(), ErrorKind::Shape,
            "latent width " + std::to_string(lv.cols()) + " != configured " + std::to_string(latent_width()));
    require(domains.size() == lv.rows(), ErrorKind::Shape, "one domain id per latent row required");
    for (auto d : domains)
        require(d < cfg_.n_domains, ErrorKind::InvalidArgument,
                "unknown domain id " + std::to_string(d) + " (model has " + std::to_string(cfg_.n_domains) + ")");
    const std::size_t batch = lv.rows();
    const std::size_t group = cfg_.frames_per_step * cfg_.frame_dim;
    if (steps == 0) return tape.constant(Tensor2(batch, 0));
    if (targets)
        require(targets->rows() == batch && targets->cols() == steps * group, ErrorKind::Shape,
                "decoder targets " + targets->shape_str() + " do not match " + std::to_string(steps) + " steps");

    Var dom = tape.gather_rows(tape.param(params_, kDomainTable), {domains.begin(), domains.end()});
    Var cond = tape.concat_cols({latent, dom});
    Var h = tape.tanh(linear(tape, params_, dec_init_, latent));
    Var prev = tape.constant(Tensor2(batch, group));
    std::vector<Var> groups;
    groups.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        h = gru_step(tape, params_, dec_gru_, tape.concat_cols({prev, cond}), h);
        Var out = linear(tape, params_, dec_out_, h);
        groups.push_back(out);
        bool force = false;
        if (targets && forcing_rng && cfg_.teacher_forcing > 0.0)
            force = cfg_.teacher_forcing >= 1.0 || uniform(*forcing_rng, 0.0, 1.0) < cfg_.teacher_forcing;
        if (force) {
            Tensor2 truth(batch, group);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t j = 0; j < group; ++j) truth(b, j) = (*targets)(b, k * group + j);
            prev = tape.constant(std::move(truth));
        } else {
            prev = out;
        }
    }
    return groups.size() == 1 ? groups[0] : tape.concat_cols(groups);
}

std::vector<double> AeModel::encode_sequence(const Tensor2& frames) const {
    Tape tape;
    const Tensor2* batch[] = {&frames};
    return tape.value(encode(tape, batch)).data();
}

Tensor2 AeModel::decode_sequence(std::span<const double> latent, std::uint16_t domain, std::size_t steps) const {
    require(latent.size() == latent_width(), ErrorKind::Shape,
            "latent width " + std::to_string(latent.size()) + " != configured " + std::to_string(latent_width()));
    Tape tape;
    Var l = tape.constant(Tensor2::from_external(1, latent.size(), {latent.begin(), latent.end()}));
    const std::uint16_t doms[] = {domain};
    Var out = decode(tape, l, doms, steps, nullptr, nullptr);
    return Tensor2(steps * cfg_.frames_per_step, cfg_.frame_dim, tape.value(out).data());
}

EmbedRecord AeModel::embed(const Utterance& u) const {
    Tape tape;
    const Tensor2* batch[] = {&u.frames};
    Var summary = encode(tape, batch);
    Rng unused(0);
    auto bn = bottleneck_.forward(tape, params_, summary, false, params_.step(), unused);
    EmbedRecord r;
    r.id = u.id;
    r.domain = u.domain;
    r.summary = tape.value(summary).data();
    r.latent = tape.value(bn.latent).data();
    if (cfg_.bottleneck.quantized())
        r.code = bn.codes.front();
    else
        r.code = GaussianLatent{bn.mu.data(), bn.sigma.data(), r.latent};
    return r;
}

double AeModel::reconstruction_mse(const Utterance& u, std::span<const double> latent) const {
    require(u.frames.cols() == cfg_.frame_dim, ErrorKind::Shape, "frame dimension mismatch");
    const Tensor2 out = decode_sequence(latent, u.domain, steps_for(u.length(), cfg_.frames_per_step));
    double s = 0.0;
    for (std::size_t i = 0; i < u.frames.size(); ++i) {
        const double d = out[i] - u.frames[i];
        s += d * d;
    }
    return s / static_cast<double>(u.frames.size());
}

void AeModel::freeze() {
    for (auto& [_, p] : params_.params()) round_to_float(p.value);
    if (cfg_.bottleneck.quantized())
        for (auto& u : bottleneck_.usage()) round_to_float(u);
}

TrainResult train_autoencoder(const Corpus& corpus, const AeConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    require(!corpus.empty(), ErrorKind::InvalidArgument, "cannot train on an empty corpus");
    for (const auto& u : corpus) {
        u.validate();
        require(u.frames.cols() == cfg.frame_dim, ErrorKind::Shape,
                "utterance " + std::to_string(u.id) + " has frame dimension " + std::to_string(u.frames.cols()) +
                    ", config says " + std::to_string(cfg.frame_dim));
        require(u.domain < cfg.n_domains, ErrorKind::InvalidArgument,
                "utterance " + std::to_string(u.id) + " has domain " + std::to_string(u.domain) + " but config has " +
                    std::to_string(cfg.n_domains) + " domains");
    }

    TrainResult result{AeModel(cfg), {}};
    AeModel& model = result.model;
    ParamStore& params = model.params();
    Bottleneck& bn = model.bottleneck();
    const auto& bcfg = cfg.bottleneck;
    const std::size_t splits = bcfg.quantized() ? bcfg.effective_splits() : 0;
    const std::size_t r = cfg.frames_per_step;
    const std::size_t group = r * cfg.frame_dim;
    const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};

    Rng rng(derive_seed(cfg.seed, 1));
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        EpochMetrics m;
        m.epoch = epoch;
        std::vector<std::vector<double>> counts(splits, std::vector<double>(bcfg.codes, 0.0));
        std::vector<std::vector<double>> outputs(splits);
        std::size_t n_batches = 0;

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::size_t batch = end - start;
            std::vector<const Tensor2*> frames;
            std::vector<std::uint16_t> domains;
            std::size_t t_max = 0;
            for (std::size_t i = start; i < end; ++i) {
                const Utterance& u = corpus[order[i]];
                frames.push_back(&u.frames);
                domains.push_back(u.domain);
                t_max = std::max(t_max, u.length());
            }
            const std::size_t steps = steps_for(t_max, r);
            Tensor2 target(batch, steps * group), mask(batch, steps * group);
            for (std::size_t b = 0; b < batch; ++b) {
                const auto& f = frames[b]->data();
                std::copy(f.begin(), f.end(), target.row_span(b).begin());
                std::fill_n(mask.row_span(b).begin(), f.size(), 1.0);
            }

            Tape tape;
            Var summary = model.encode(tape, frames);
            auto out = bn.forward(tape, params, summary, true, params.step(), rng);
            Var recon = model.decode(tape, out.latent, domains, steps, &target, &rng);
            Var mse = tape.masked_mse(recon, target, mask);
            Var loss = tape.add(mse, out.aux_loss);
            const double lv = tape.value(loss)[0];
            require(std::isfinite(lv), ErrorKind::Numeric,
                    "non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                        std::to_string(n_batches) + " (reconstruction " + std::to_string(tape.value(mse)[0]) + ")");
            tape.backward(loss);
            adam_step(params, adam);

            m.total_loss += lv;
            m.recon_mse += tape.value(mse)[0];
            if (bcfg.quantized()) {
                m.codebook_loss += tape.value(out.codebook_loss)[0];
                m.commitment_loss += tape.value(out.commitment_loss)[0];
                bn.update_usage(out.codes);
                const Tensor2& sv = tape.value(summary);
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t s = 0; s < splits; ++s) {
                        counts[s][out.codes[b].indices[s]] += 1.0;
                        const auto row = sv.row_span(b).subspan(s * bcfg.code_dim, bcfg.code_dim);
                        outputs[s].insert(outputs[s].end(), row.begin(), row.end());
                    }
            } else {
                m.kl += tape.value(out.kl)[0];
            }
            ++n_batches;
        }

        const double nb = static_cast<double>(n_batches);
        m.total_loss /= nb;
        m.recon_mse /= nb;
        m.kl /= nb;
        m.codebook_loss /= nb;
        m.commitment_loss /= nb;
        for (std::size_t s = 0; s < splits; ++s) m.perplexity.push_back(perplexity(counts[s]));

        if (bcfg.quantized() && bcfg.restarts) {
            auto set = bn.codebooks(params);
            for (std::size_t s = 0; s < splits; ++s) {
                const std::size_t rows = outputs[s].size() / bcfg.code_dim;
                Tensor2 recent(rows, bcfg.code_dim, std::move(outputs[s]));
                const auto restarted = random_restart(set.books[s], recent, bn.restart_threshold(), rng);
                m.restarted.push_back(restarted.size());
                Param& p = params.at(Bottleneck::codebook_param(s));
                for (std::size_t k : restarted)
                    for (std::size_t j = 0; j < bcfg.code_dim; ++j) {
                        p.m(k, j) = 0.0;
                        p.v(k, j) = 0.0;
                    }
            }
            bn.set_codebooks(params, set);
        }

        log_info("train-ae epoch " + std::to_string(epoch) + " loss " + std::to_string(m.total_loss) + " mse " +
                 std::to_string(m.recon_mse));
        if (on_epoch) on_epoch(m);
        result.history.push_back(std::move(m));
    }
    model.freeze();
    return result;
}

std::vector<EmbedRecord> embed_corpus(const AeModel& model, const Corpus& corpus) {
    std::vector<EmbedRecord> records;
    records.reserve(corpus.size());
    for (const auto& u : corpus) {
        require(u.frames.cols() == model.config().frame_dim, ErrorKind::Shape,
                "utterance " + std::to_string(u.id) + " has frame dimension " + std::to_string(u.frames.cols()) +
                    ", model expects " + std::to_string(model.config().frame_dim));
        records.push_back(model.embed(u));
    }
    return records;
}

std::string encode_codebooks(const SplitCodebookSet& set) {
    set.validate();
    ByteWriter w;
    w.magic("SVQC");
    w.u16(kCodebookVersion);
    w.u16(static_cast<std::uint16_t>(set.splits()));
    w.u32(static_cast<std::uint32_t>(set.codes()));
    w.u32(static_cast<std::uint32_t>(set.dim()));
    for (const auto& b : set.books)
        for (double v : b.codes.data()) w.f32_from(v);
    for (const auto& b : set.books)
        for (double v : b.ema_usage) w.f32_from(v);
    return w.take();
}

SplitCodebookSet decode_codebooks(std::string_view bytes) {
    ByteReader r(bytes, "codebook file");
    r.expect_magic("SVQC");
    const std::size_t vat = r.offset();
    if (r.u16() != kCodebookVersion) r.corrupt_at(vat, "unsupported codebook version");
    const std::size_t hdr = r.offset();
    const std::uint16_t s = r.u16();
    const std::uint32_t k = r.u32();
    const std::uint32_t d = r.u32();
    if (s == 0 || k == 0 || d == 0) r.corrupt_at(hdr, "S, K and D must be positive");
    const std::uint64_t need = 4ull * s * k * d + 4ull * s * k;
    if (need != r.remaining())
        r.corrupt("payload is " + std::to_string(r.remaining()) + " bytes, header implies " + std::to_string(need));
    SplitCodebookSet set;
    set.books.resize(s);
    for (auto& b : set.books) {
        std::vector<double> codes(static_cast<std::size_t>(k) * d);
        for (double& v : codes) v = r.f32();
        b.codes = Tensor2(k, d, std::move(codes));
    }
    for (auto& b : set.books) {
        b.ema_usage.resize(k);
        for (double& v : b.ema_usage) {
            const std::size_t at = r.offset();
            v = r.f32();
            if (v < 0.0) r.corrupt_at(at, "negative usage value");
        }
    }
    return set;
}

std::string AeModel::encode_file() const {
    ByteWriter w;
    w.magic("SVQM");
    w.u16(kModelVersion);
    w.str(cfg_.to_text());
    write_param_blocks(w, params_, dense_param_names(params_));
    w.u8(cfg_.bottleneck.quantized() ? 1 : 0);
    if (cfg_.bottleneck.quantized()) w.str(encode_codebooks(codebooks()));
    return w.take();
}

AeModel AeModel::decode_file(std::string_view bytes) {
    ByteReader r(bytes, "model file");
    r.expect_magic("SVQM");
    const std::size_t vat = r.offset();
    if (r.u16() != kModelVersion) r.corrupt_at(vat, "unsupported model version");
    const std::size_t cfg_at = r.offset();
    AeConfig cfg;
    try {
        cfg = parse_ae_config(r.str());
    } catch (const Error& e) {
        r.corrupt_at(cfg_at, e.what());
    }
    AeModel model(cfg);
    read_param_blocks(r, model.params_, dense_param_names(model.params_));
    const std::size_t flag_at = r.offset();
    const std::uint8_t has_cb = r.u8();
    if (has_cb != (cfg.bottleneck.quantized() ? 1 : 0)) r.corrupt_at(flag_at, "codebook section flag disagrees with mode");
    if (has_cb) {
        const std::size_t cb_at = r.offset();
        const std::string cb = r.str();
        try {
            model.bottleneck_.set_codebooks(model.params_, decode_codebooks(cb));
        } catch (const Error& e) {
            r.corrupt_at(cb_at, e.what());
        }
    }
    if (!r.at_end()) r.corrupt("trailing bytes after model");
    return model;
}

std::string encode_embeddings(std::span<const EmbedRecord> records) {
    ByteWriter w;
    w.magic("SVQE");
    w.u16(kEmbeddingVersion);
    const bool quantized = records.empty() || std::holds_alternative<SplitCode>(records.front().code);
    w.u8(quantized ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(records.size()));
    const std::size_t sw = records.empty() ? 0 : records.front().summary.size();
    const std::size_t lw = records.empty() ? 0 : records.front().latent.size();
    w.u32(static_cast<std::uint32_t>(sw));
    w.u32(static_cast<std::uint32_t>(lw));
    for (const auto& rec : records) {
        require(rec.summary.size() == sw && rec.latent.size() == lw &&
                    std::holds_alternative<SplitCode>(rec.code) == quantized,
                ErrorKind::InvalidArgument, "embedding records must share widths and kind");
        w.u64(rec.id);
        w.u16(rec.domain);
        for (double v : rec.summary) w.f32_from(v);
        for (double v : rec.latent) w.f32_from(v);
        if (quantized) {
            const auto& c = std::get<SplitCode>(rec.code);
            w.u16(static_cast<std::uint16_t>(c.indices.size()));
            for (auto i : c.indices) w.u32(i);
        } else {
            const auto& g = std::get<GaussianLatent>(rec.code);
            for (double v : g.mu) w.f32_from(v);
            for (double v : g.sigma) w.f32_from(v);
        }
    }
    return w.take();
}

std::vector<EmbedRecord> decode_embeddings(std::string_view bytes) {
    ByteReader r(bytes, "embedding file");
    r.expect_magic("SVQE");
    const std::size_t vat = r.offset();
    if (r.u16() != kEmbeddingVersion) r.corrupt_at(vat, "unsupported embedding version");
    const bool quantized = r.u8() != 0;
    const std::uint32_t n = r.u32();
    const std::uint32_t sw = r.u32();
    const std::uint32_t lw = r.u32();
    std::vector<EmbedRecord> out;
    out.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        EmbedRecord rec;
        rec.id = r.u64();
        rec.domain = r.u16();
        rec.summary.resize(sw);
        rec.latent.resize(lw);
        for (double& v : rec.summary) v = r.f32();
        for (double& v : rec.latent) v = r.f32();
        if (quantized) {
            SplitCode c;
            const std::uint16_t s = r.u16();
            for (std::uint16_t k = 0; k < s; ++k) c.indices.push_back(r.u32());
            rec.code = std::move(c);
        } else {
            GaussianLatent g;
            g.mu.resize(lw);
            g.sigma.resize(lw);
            for (double& v : g.mu) v = r.f32();
            for (double& v : g.sigma) v = r.f32();
            g.z = rec.latent;
            rec.code = std::move(g);
        }
        out.push_back(std::move(rec));
    }
    if (!r.at_end()) r.corrupt("trailing bytes after last record");
    return out;
}

}  // namespace svq
