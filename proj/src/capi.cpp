#include "svq/svq.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>
#include <unordered_map>

#include "clustering.hpp"
#include "error.hpp"
#include "eval.hpp"
#include "inspect.hpp"
#include "io.hpp"
#include "predictor.hpp"
#include "seqae.hpp"
#include "synthdata.hpp"

struct svq_corpus {
    svq::Corpus corpus;
    std::optional<svq::FactorTable> factors;
};
struct svq_codebooks {
    svq::SplitCodebookSet set;
};
struct svq_ae_model {
    svq::AeModel model;
};
struct svq_embeddings {
    std::vector<svq::EmbedRecord> records;
};
struct svq_cluster_map {
    svq::ClusterMap map;
};
struct svq_predictor {
    svq::PredictorModel model;
};

namespace {

thread_local std::string g_last_error;

svq_status status_of(svq::ErrorKind k) {
    switch (k) {
        case svq::ErrorKind::InvalidArgument: return SVQ_ERR_INVALID_ARGUMENT;
        case svq::ErrorKind::Shape: return SVQ_ERR_SHAPE;
        case svq::ErrorKind::Io: return SVQ_ERR_IO;
        case svq::ErrorKind::Format: return SVQ_ERR_FORMAT;
        case svq::ErrorKind::Numeric: return SVQ_ERR_NUMERIC;
        case svq::ErrorKind::State: return SVQ_ERR_STATE;
    }
    return SVQ_ERR_INTERNAL;
}

template <class F>
svq_status guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return SVQ_OK;
    } catch (const svq::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return SVQ_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SVQ_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    svq::require(p != nullptr, svq::ErrorKind::InvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

svq::CorpusSpec to_spec(const svq_corpus_spec& c) {
    svq::CorpusSpec s;
    s.n_utterances = c.n_utterances;
    s.n_domains = c.n_domains;
    s.n_factors = c.n_factors;
    s.frame_dim = c.frame_dim;
    s.t_min = c.t_min;
    s.t_max = c.t_max;
    s.m_min = c.m_min;
    s.m_max = c.m_max;
    s.embed_dim = c.embed_dim;
    s.frame_noise = c.frame_noise;
    s.context_noise = c.context_noise;
    s.predictability = c.predictability;
    s.domain_shift = c.domain_shift;
    s.factor_spread = c.factor_spread;
    s.domain_skew = c.domain_skew;
    s.seed = c.seed;
    return s;
}

svq::AeConfig to_ae(const svq_ae_config& c) {
    svq::AeConfig a;
    a.frame_dim = c.frame_dim;
    a.hidden = c.hidden;
    a.n_domains = c.n_domains;
    a.domain_dim = c.domain_dim;
    a.frames_per_step = c.frames_per_step;
    switch (c.mode) {
        case SVQ_MODE_VAE: a.bottleneck.mode = svq::BottleneckMode::Vae; break;
        case SVQ_MODE_VQ: a.bottleneck.mode = svq::BottleneckMode::Vq; break;
        case SVQ_MODE_SVQ: a.bottleneck.mode = svq::BottleneckMode::Svq; break;
        default: svq::fail(svq::ErrorKind::InvalidArgument, "unknown bottleneck mode " + std::to_string(c.mode));
    }
    a.bottleneck.vae_dim = c.vae_dim;
    a.bottleneck.splits = c.splits;
    a.bottleneck.codes = c.codes;
    a.bottleneck.code_dim = c.code_dim;
    a.bottleneck.beta = c.beta;
    a.bottleneck.anneal.delay_steps = c.anneal_delay;
    a.bottleneck.anneal.ramp_steps = c.anneal_ramp;
    a.bottleneck.anneal.max_weight = c.anneal_max;
    a.bottleneck.restarts = c.restarts != 0;
    a.bottleneck.restart_ratio = c.restart_ratio;
    a.bottleneck.ema_decay = c.ema_decay;
    a.bottleneck.codebook_init_scale = c.codebook_init_scale;
    a.epochs = c.epochs;
    a.batch_size = c.batch_size;
    a.lr = c.lr;
    a.teacher_forcing = c.teacher_forcing;
    a.seed = c.seed;
    return a;
}

svq_ae_config from_ae(const svq::AeConfig& a) {
    svq_ae_config c;
    c.frame_dim = a.frame_dim;
    c.hidden = a.hidden;
    c.n_domains = a.n_domains;
    c.domain_dim = a.domain_dim;
    c.frames_per_step = a.frames_per_step;
    c.mode = a.bottleneck.mode == svq::BottleneckMode::Vae  ? SVQ_MODE_VAE
             : a.bottleneck.mode == svq::BottleneckMode::Vq ? SVQ_MODE_VQ
                                                            : SVQ_MODE_SVQ;
    c.vae_dim = a.bottleneck.vae_dim;
    c.splits = a.bottleneck.splits;
    c.codes = a.bottleneck.codes;
    c.code_dim = a.bottleneck.code_dim;
    c.beta = a.bottleneck.beta;
    c.anneal_delay = a.bottleneck.anneal.delay_steps;
    c.anneal_ramp = a.bottleneck.anneal.ramp_steps;
    c.anneal_max = a.bottleneck.anneal.max_weight;
    c.restarts = a.bottleneck.restarts ? 1 : 0;
    c.restart_ratio = a.bottleneck.restart_ratio;
    c.ema_decay = a.bottleneck.ema_decay;
    c.codebook_init_scale = a.bottleneck.codebook_init_scale;
    c.epochs = a.epochs;
    c.batch_size = a.batch_size;
    c.lr = a.lr;
    c.teacher_forcing = a.teacher_forcing;
    c.seed = a.seed;
    return c;
}

svq::PredictorConfig to_pred(const svq_predictor_config& c, const svq::ClusterMap& map, std::size_t n_domains) {
    svq::PredictorConfig p;
    p.embed_dim = c.embed_dim;
    p.hidden = c.hidden;
    p.attn_dim = c.attn_dim;
    p.n_domains = n_domains;
    p.domain_dim = c.domain_dim;
    p.target_dim = c.target_dim;
    p.splits = map.splits();
    p.groups = map.groups();
    p.epochs = c.epochs;
    p.batch_size = c.batch_size;
    p.lr = c.lr;
    p.seed = c.seed;
    return p;
}

// Cluster-id targets for every utterance of `corpus`, looked up by id in `emb`.
std::vector<svq::PredictorExample> examples_for(const svq::Corpus& corpus, const svq_embeddings& emb,
                                                const svq::ClusterMap& map) {
    std::unordered_map<std::uint64_t, const svq::EmbedRecord*> by_id;
    for (const auto& r : emb.records) by_id[r.id] = &r;
    std::vector<svq::SplitCode> codes;
    for (const auto& u : corpus) {
        auto it = by_id.find(u.id);
        svq::require(it != by_id.end(), svq::ErrorKind::InvalidArgument,
                     "no embedding for utterance " + std::to_string(u.id));
        svq::require(std::holds_alternative<svq::SplitCode>(it->second->code), svq::ErrorKind::State,
                     "embeddings come from a vae model; predictor targets need codes");
        codes.push_back(std::get<svq::SplitCode>(it->second->code));
    }
    const auto targets = svq::reduce_targets(codes, map);
    std::vector<svq::PredictorExample> out;
    for (std::size_t i = 0; i < corpus.size(); ++i) out.push_back({&corpus[i].context, corpus[i].domain, targets[i]});
    return out;
}

}  // namespace

extern "C" {

const char* svq_last_error(void) { return g_last_error.c_str(); }

const char* svq_status_name(svq_status status) {
    switch (status) {
        case SVQ_OK: return "ok";
        case SVQ_ERR_INVALID_ARGUMENT: return "invalid argument";
        case SVQ_ERR_SHAPE: return "shape mismatch";
        case SVQ_ERR_IO: return "i/o error";
        case SVQ_ERR_FORMAT: return "format error";
        case SVQ_ERR_NUMERIC: return "numeric error";
        case SVQ_ERR_STATE: return "invalid state";
        case SVQ_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void svq_string_free(char* s) { std::free(s); }

void svq_corpus_spec_default(svq_corpus_spec* spec) {
    if (!spec) return;
    const svq::CorpusSpec d;
    *spec = svq_corpus_spec{d.n_utterances, d.n_domains,   d.n_factors,     d.frame_dim,      d.t_min,
                            d.t_max,        d.m_min,       d.m_max,         d.embed_dim,      d.frame_noise,
                            d.context_noise, d.predictability, d.domain_shift, d.factor_spread, d.domain_skew,
                            d.seed};
}

svq_status svq_corpus_generate(const svq_corpus_spec* spec, svq_corpus** out) {
    return guard([&] {
        need(spec, "spec");
        need(out, "out");
        const auto gen = svq::generate_corpus(to_spec(*spec));
        *out = new svq_corpus{svq::strip_factors(gen), svq::factor_table(gen)};
    });
}

svq_status svq_corpus_load(const char* path, svq_corpus** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new svq_corpus{svq::decode_corpus(svq::read_file(path)), std::nullopt};
    });
}

svq_status svq_corpus_save(const svq_corpus* corpus, const char* path) {
    return guard([&] {
        need(corpus, "corpus");
        need(path, "path");
        svq::write_file_atomic(path, svq::encode_corpus(corpus->corpus));
    });
}

svq_status svq_corpus_save_factors(const svq_corpus* corpus, const char* path) {
    return guard([&] {
        need(corpus, "corpus");
        need(path, "path");
        svq::require(corpus->factors.has_value(), svq::ErrorKind::State,
                     "corpus has no style factors (only generated corpora carry them)");
        svq::write_file_atomic(path, svq::encode_factors(*corpus->factors));
    });
}

size_t svq_corpus_size(const svq_corpus* corpus) { return corpus ? corpus->corpus.size() : 0; }

void svq_corpus_dims(const svq_corpus* corpus, size_t* frame_dim, size_t* embed_dim, size_t* n_domains) {
    std::size_t f = 0, e = 0, d = 0;
    if (corpus && !corpus->corpus.empty()) {
        f = corpus->corpus.front().frames.cols();
        e = corpus->corpus.front().context.cols();
        for (const auto& u : corpus->corpus) d = std::max<std::size_t>(d, u.domain + 1u);
    }
    if (frame_dim) *frame_dim = f;
    if (embed_dim) *embed_dim = e;
    if (n_domains) *n_domains = d;
}

uint64_t svq_corpus_id(const svq_corpus* corpus, size_t index) {
    return corpus && index < corpus->corpus.size() ? corpus->corpus[index].id : 0;
}

uint16_t svq_corpus_domain(const svq_corpus* corpus, size_t index) {
    return corpus && index < corpus->corpus.size() ? corpus->corpus[index].domain : 0;
}

size_t svq_corpus_context_length(const svq_corpus* corpus, size_t index) {
    return corpus && index < corpus->corpus.size() ? corpus->corpus[index].context.rows() : 0;
}

svq_status svq_corpus_split(const svq_corpus* corpus, double heldout_fraction, svq_corpus** train,
                            svq_corpus** heldout) {
    return guard([&] {
        need(corpus, "corpus");
        need(train, "train");
        need(heldout, "heldout");
        auto split = svq::split_corpus(corpus->corpus, heldout_fraction);
        auto* a = new svq_corpus{std::move(split.train), std::nullopt};
        *heldout = new svq_corpus{std::move(split.heldout), std::nullopt};
        *train = a;
    });
}

svq_status svq_corpus_stats(const svq_corpus* corpus, char** text) {
    return guard([&] {
        need(corpus, "corpus");
        need(text, "text");
        const svq::FactorTable* f = corpus->factors ? &*corpus->factors : nullptr;
        *text = dup_string(svq::format_stats(svq::corpus_stats(corpus->corpus, f)));
    });
}

void svq_corpus_free(svq_corpus* corpus) { delete corpus; }

void svq_ae_config_default(svq_ae_config* cfg) {
    if (cfg) *cfg = from_ae(svq::AeConfig{});
}

svq_status svq_ae_train(const svq_corpus* corpus, const svq_ae_config* cfg, svq_epoch_callback on_epoch, void* user,
                        svq_ae_model** out) {
    return guard([&] {
        need(corpus, "corpus");
        need(cfg, "cfg");
        need(out, "out");
        svq::EpochCallback cb;
        if (on_epoch)
            cb = [&](const svq::EpochMetrics& m) {
                const svq_epoch_metrics c{m.epoch,           m.total_loss,         m.recon_mse,
                                          m.kl,              m.codebook_loss,      m.commitment_loss,
                                          m.perplexity.size(), m.perplexity.data(), m.restarted.data()};
                on_epoch(&c, user);
            };
        auto result = svq::train_autoencoder(corpus->corpus, to_ae(*cfg), cb);
        *out = new svq_ae_model{std::move(result.model)};
    });
}

svq_status svq_ae_load(const char* path, svq_ae_model** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new svq_ae_model{svq::AeModel::decode_file(svq::read_file(path))};
    });
}

svq_status svq_ae_save(const svq_ae_model* model, const char* path) {
    return guard([&] {
        need(model, "model");
        need(path, "path");
        svq::write_file_atomic(path, model->model.encode_file());
    });
}

svq_status svq_ae_get_config(const svq_ae_model* model, svq_ae_config* cfg) {
    return guard([&] {
        need(model, "model");
        need(cfg, "cfg");
        *cfg = from_ae(model->model.config());
    });
}

svq_status svq_ae_codebooks(const svq_ae_model* model, svq_codebooks** out) {
    return guard([&] {
        need(model, "model");
        need(out, "out");
        *out = new svq_codebooks{model->model.codebooks()};
    });
}

svq_status svq_ae_embed(const svq_ae_model* model, const svq_corpus* corpus, svq_embeddings** out) {
    return guard([&] {
        need(model, "model");
        need(corpus, "corpus");
        need(out, "out");
        *out = new svq_embeddings{svq::embed_corpus(model->model, corpus->corpus)};
    });
}

svq_status svq_ae_reconstruction_mse(const svq_ae_model* model, const svq_corpus* corpus, double* mse) {
    return guard([&] {
        need(model, "model");
        need(corpus, "corpus");
        need(mse, "mse");
        svq::require(!corpus->corpus.empty(), svq::ErrorKind::InvalidArgument, "corpus is empty");
        double total = 0.0;
        for (const auto& u : corpus->corpus) total += model->model.reconstruction_mse(u, model->model.embed(u).latent);
        *mse = total / static_cast<double>(corpus->corpus.size());
    });
}

void svq_ae_free(svq_ae_model* model) { delete model; }

svq_status svq_codebooks_load(const char* path, svq_codebooks** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        const std::string bytes = svq::read_file(path);
        if (bytes.starts_with("SVQM"))
            *out = new svq_codebooks{svq::AeModel::decode_file(bytes).codebooks()};
        else
            *out = new svq_codebooks{svq::decode_codebooks(bytes)};
    });
}

svq_status svq_codebooks_save(const svq_codebooks* cb, const char* path) {
    return guard([&] {
        need(cb, "codebooks");
        need(path, "path");
        svq::write_file_atomic(path, svq::encode_codebooks(cb->set));
    });
}

void svq_codebooks_shape(const svq_codebooks* cb, size_t* splits, size_t* codes, size_t* dim) {
    if (splits) *splits = cb ? cb->set.splits() : 0;
    if (codes) *codes = cb ? cb->set.codes() : 0;
    if (dim) *dim = cb ? cb->set.dim() : 0;
}

void svq_codebooks_free(svq_codebooks* cb) { delete cb; }

svq_status svq_embeddings_load(const char* path, svq_embeddings** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new svq_embeddings{svq::decode_embeddings(svq::read_file(path))};
    });
}

svq_status svq_embeddings_save(const svq_embeddings* emb, const char* path) {
    return guard([&] {
        need(emb, "embeddings");
        need(path, "path");
        svq::write_file_atomic(path, svq::encode_embeddings(emb->records));
    });
}

size_t svq_embeddings_size(const svq_embeddings* emb) { return emb ? emb->records.size() : 0; }

void svq_embeddings_free(svq_embeddings* emb) { delete emb; }

svq_status svq_centroid_codes(const svq_ae_model* model, const svq_corpus* train, const svq_embeddings* emb,
                              uint32_t* out, size_t capacity) {
    return guard([&] {
        need(model, "model");
        need(train, "train");
        need(emb, "embeddings");
        need(out, "out");
        std::unordered_map<std::uint64_t, const svq::EmbedRecord*> by_id;
        for (const auto& r : emb->records) by_id[r.id] = &r;
        std::vector<svq::EmbedRecord> picked;
        for (const auto& u : train->corpus) {
            auto it = by_id.find(u.id);
            svq::require(it != by_id.end(), svq::ErrorKind::InvalidArgument,
                         "no embedding for utterance " + std::to_string(u.id));
            picked.push_back(*it->second);
        }
        const auto codes = svq::domain_centroid_codes(model->model, picked);
        const std::size_t s = codes.front().indices.size();
        svq::require(capacity >= codes.size() * s, svq::ErrorKind::InvalidArgument,
                     "centroid buffer holds " + std::to_string(capacity) + " entries, need " +
                         std::to_string(codes.size() * s));
        for (std::size_t d = 0; d < codes.size(); ++d)
            std::copy(codes[d].indices.begin(), codes[d].indices.end(), out + d * s);
    });
}

svq_status svq_centroids_save(const char* path, const uint32_t* codes, size_t n_domains, size_t splits) {
    return guard([&] {
        need(path, "path");
        need(codes, "codes");
        std::vector<svq::SplitCode> c(n_domains);
        for (std::size_t d = 0; d < n_domains; ++d) c[d].indices.assign(codes + d * splits, codes + (d + 1) * splits);
        svq::write_file_atomic(path, svq::centroids_text(c));
    });
}

svq_status svq_centroids_load(const char* path, uint32_t* out, size_t capacity, size_t* n_domains, size_t* splits) {
    return guard([&] {
        need(path, "path");
        const auto codes = svq::parse_centroids(svq::read_file(path));
        const std::size_t s = codes.front().indices.size();
        if (n_domains) *n_domains = codes.size();
        if (splits) *splits = s;
        if (!out) return;
        svq::require(capacity >= codes.size() * s, svq::ErrorKind::InvalidArgument,
                     "centroid buffer holds " + std::to_string(capacity) + " entries, need " +
                         std::to_string(codes.size() * s));
        for (std::size_t d = 0; d < codes.size(); ++d)
            std::copy(codes[d].indices.begin(), codes[d].indices.end(), out + d * s);
    });
}

svq_status svq_cluster_elbow(const svq_codebooks* cb, const size_t* candidates, size_t n_candidates, double ratio,
                             uint64_t seed, size_t* k_out) {
    return guard([&] {
        need(cb, "codebooks");
        need(candidates, "candidates");
        need(k_out, "k_out");
        svq::ElbowConfig cfg;
        cfg.ratio = ratio;
        for (std::size_t s = 0; s < cb->set.splits(); ++s)
            k_out[s] = svq::select_k_elbow(cb->set.books[s].codes, {candidates, n_candidates}, svq::derive_seed(seed, s),
                                           cfg);
    });
}

svq_status svq_cluster_build(const svq_codebooks* cb, size_t k, uint64_t seed, svq_cluster_map** out) {
    return guard([&] {
        need(cb, "codebooks");
        need(out, "out");
        *out = new svq_cluster_map{svq::build_cluster_map(cb->set, k, seed)};
    });
}

svq_status svq_cluster_map_load(const char* path, svq_cluster_map** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new svq_cluster_map{svq::parse_cluster_map(svq::read_file(path))};
    });
}

svq_status svq_cluster_map_save(const svq_cluster_map* map, const char* path) {
    return guard([&] {
        need(map, "map");
        need(path, "path");
        svq::write_file_atomic(path, svq::cluster_map_text(map->map));
    });
}

void svq_cluster_map_shape(const svq_cluster_map* map, size_t* splits, size_t* groups) {
    if (splits) *splits = map ? map->map.splits() : 0;
    if (groups) *groups = map ? map->map.groups() : 0;
}

uint64_t svq_cluster_map_hash(const svq_cluster_map* map) { return map ? svq::cluster_map_hash(map->map) : 0; }

void svq_cluster_map_free(svq_cluster_map* map) { delete map; }

void svq_predictor_config_default(svq_predictor_config* cfg) {
    if (!cfg) return;
    const svq::PredictorConfig d;
    *cfg = svq_predictor_config{d.embed_dim, d.hidden, d.attn_dim, d.domain_dim, d.target_dim,
                                d.epochs,    d.batch_size, d.lr,   d.seed};
}

svq_status svq_predictor_train(const svq_corpus* train, const svq_corpus* val, const svq_embeddings* emb,
                               const svq_cluster_map* map, size_t n_domains, const svq_predictor_config* cfg,
                               svq_predictor_callback on_epoch, void* user, svq_predictor** out,
                               double* val_split_accuracy, double* val_exact) {
    return guard([&] {
        need(train, "train");
        need(emb, "embeddings");
        need(map, "map");
        need(cfg, "cfg");
        need(out, "out");
        const auto tr = examples_for(train->corpus, *emb, map->map);
        const auto va = val ? examples_for(val->corpus, *emb, map->map) : std::vector<svq::PredictorExample>{};
        svq::PredictorCallback cb;
        if (on_epoch)
            cb = [&](const svq::PredictorEpoch& e) {
                const svq_predictor_epoch c{e.epoch, e.train_loss, map->map.splits(),
                                            e.val_split_accuracy.empty() ? nullptr : e.val_split_accuracy.data(),
                                            e.val_exact_accuracy};
                on_epoch(&c, user);
            };
        auto result = svq::train_predictor(tr, va, to_pred(*cfg, map->map, n_domains), cb);
        if (val_split_accuracy)
            for (std::size_t s = 0; s < result.validation.split.size(); ++s) val_split_accuracy[s] = result.validation.split[s];
        if (val_exact) *val_exact = result.validation.exact;
        *out = new svq_predictor{std::move(result.model)};
    });
}

svq_status svq_predictor_init(const svq_cluster_map* map, size_t n_domains, const svq_predictor_config* cfg,
                              svq_predictor** out) {
    return guard([&] {
        need(map, "map");
        need(cfg, "cfg");
        need(out, "out");
        *out = new svq_predictor{svq::PredictorModel(to_pred(*cfg, map->map, n_domains))};
    });
}

svq_status svq_predictor_save(const svq_predictor* pred, const svq_cluster_map* map, const char* path) {
    return guard([&] {
        need(pred, "predictor");
        need(map, "map");
        need(path, "path");
        svq::write_file_atomic(path, pred->model.encode_file(svq::cluster_map_hash(map->map)));
    });
}

svq_status svq_predictor_load(const char* path, const svq_cluster_map* map, svq_predictor** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        std::uint64_t hash = 0;
        auto model = svq::PredictorModel::decode_file(svq::read_file(path), &hash);
        if (map)
            svq::require(hash == svq::cluster_map_hash(map->map), svq::ErrorKind::State,
                         std::string(path) + " was trained against a different cluster map");
        *out = new svq_predictor{std::move(model)};
    });
}

svq_status svq_predict(const svq_predictor* pred, const svq_cluster_map* map, const svq_corpus* corpus, size_t index,
                       uint32_t* cluster_ids, uint32_t* code, double* attention, size_t attention_capacity) {
    return guard([&] {
        need(pred, "predictor");
        need(map, "map");
        need(corpus, "corpus");
        svq::require(index < corpus->corpus.size(), svq::ErrorKind::InvalidArgument,
                     "utterance index " + std::to_string(index) + " out of range");
        const auto& u = corpus->corpus[index];
        const auto rec = pred->model.predict_codes(u.context, u.domain, map->map);
        if (cluster_ids) std::copy(rec.cluster_ids.begin(), rec.cluster_ids.end(), cluster_ids);
        if (code) std::copy(rec.split_code.indices.begin(), rec.split_code.indices.end(), code);
        if (attention) {
            svq::require(attention_capacity >= rec.attention.size(), svq::ErrorKind::InvalidArgument,
                         "attention buffer holds " + std::to_string(attention_capacity) + " values, need " +
                             std::to_string(rec.attention.size()));
            std::copy(rec.attention.data().begin(), rec.attention.data().end(), attention);
        }
    });
}

void svq_predictor_free(svq_predictor* pred) { delete pred; }

svq_status svq_evaluate(const svq_ae_model* model, const svq_corpus* heldout, const uint32_t* centroids,
                        size_t n_domains, const svq_predictor* pred, const svq_cluster_map* map,
                        svq_eval_report* report, char** text) {
    return guard([&] {
        need(model, "model");
        need(heldout, "heldout");
        need(centroids, "centroids");
        need(pred, "predictor");
        need(map, "map");
        const std::size_t s = map->map.splits();
        std::vector<svq::SplitCode> c(n_domains);
        for (std::size_t d = 0; d < n_domains; ++d) c[d].indices.assign(centroids + d * s, centroids + (d + 1) * s);
        const auto r = svq::evaluate(model->model, heldout->corpus, c, pred->model, map->map);
        if (report)
            *report = svq_eval_report{r.n_heldout,   r.mse_oracle, r.mse_centroid,     r.mse_predicted,
                                      r.gap_closure, r.oracle_best ? 1 : 0, r.accuracy.exact};
        if (text) *text = dup_string(svq::format_report(r));
    });
}

svq_status svq_export_projection(const svq_codebooks* cb, const svq_cluster_map* map, const char* path) {
    return guard([&] {
        need(cb, "codebooks");
        need(path, "path");
        const auto rows = svq::project_codebooks(cb->set, map ? &map->map : nullptr);
        svq::write_file_atomic(path, svq::projection_csv(rows));
    });
}

svq_status svq_inspect(const char* path, char** text) {
    return guard([&] {
        need(path, "path");
        need(text, "text");
        *text = dup_string(svq::describe_artifact(svq::read_file(path)));
    });
}

}  // extern "C"
