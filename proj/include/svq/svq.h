#ifndef SVQ_SVQ_H
#define SVQ_SVQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SVQ_API __declspec(dllexport)
#else
#define SVQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum svq_status {
    SVQ_OK = 0,
    SVQ_ERR_INVALID_ARGUMENT = 1,
    SVQ_ERR_SHAPE = 2,
    SVQ_ERR_IO = 3,
    SVQ_ERR_FORMAT = 4,
    SVQ_ERR_NUMERIC = 5,
    SVQ_ERR_STATE = 6,
    SVQ_ERR_INTERNAL = 7
} svq_status;

/* Message of the last failed call on this thread ("" if none). */
SVQ_API const char* svq_last_error(void);
SVQ_API const char* svq_status_name(svq_status status);
/* Frees strings returned through char** out-parameters. */
SVQ_API void svq_string_free(char* s);

typedef struct svq_corpus svq_corpus;
typedef struct svq_codebooks svq_codebooks;
typedef struct svq_ae_model svq_ae_model;
typedef struct svq_embeddings svq_embeddings;
typedef struct svq_cluster_map svq_cluster_map;
typedef struct svq_predictor svq_predictor;

/* ---- synthetic corpus ---- */

typedef struct svq_corpus_spec {
    size_t n_utterances;
    size_t n_domains;
    size_t n_factors;
    size_t frame_dim;
    size_t t_min, t_max;
    size_t m_min, m_max;
    size_t embed_dim;
    double frame_noise;
    double context_noise;
    double predictability;
    double domain_shift;
    double factor_spread;
    double domain_skew;
    uint64_t seed;
} svq_corpus_spec;

SVQ_API void svq_corpus_spec_default(svq_corpus_spec* spec);
/* The generated corpus also carries its hidden style factors (see svq_corpus_save_factors). */
SVQ_API svq_status svq_corpus_generate(const svq_corpus_spec* spec, svq_corpus** out);
SVQ_API svq_status svq_corpus_load(const char* path, svq_corpus** out);
SVQ_API svq_status svq_corpus_save(const svq_corpus* corpus, const char* path);
SVQ_API svq_status svq_corpus_save_factors(const svq_corpus* corpus, const char* path);
SVQ_API size_t svq_corpus_size(const svq_corpus* corpus);
/* Frame width F, context width E and 1 + the largest domain id; zeros for an empty corpus. */
SVQ_API void svq_corpus_dims(const svq_corpus* corpus, size_t* frame_dim, size_t* embed_dim, size_t* n_domains);
SVQ_API uint64_t svq_corpus_id(const svq_corpus* corpus, size_t index);
SVQ_API uint16_t svq_corpus_domain(const svq_corpus* corpus, size_t index);
SVQ_API size_t svq_corpus_context_length(const svq_corpus* corpus, size_t index);
/* The last ceil(fraction * n) utterances form the held-out part. */
SVQ_API svq_status svq_corpus_split(const svq_corpus* corpus, double heldout_fraction, svq_corpus** train,
                                    svq_corpus** heldout);
SVQ_API svq_status svq_corpus_stats(const svq_corpus* corpus, char** text);
SVQ_API void svq_corpus_free(svq_corpus* corpus);

/* ---- autoencoder ---- */

typedef enum svq_mode { SVQ_MODE_VAE = 0, SVQ_MODE_VQ = 1, SVQ_MODE_SVQ = 2 } svq_mode;

typedef struct svq_ae_config {
    size_t frame_dim;
    size_t hidden;
    size_t n_domains;
    size_t domain_dim;
    size_t frames_per_step;
    svq_mode mode;
    size_t vae_dim;
    size_t splits;
    size_t codes;
    size_t code_dim;
    double beta;
    int64_t anneal_delay;
    int64_t anneal_ramp;
    double anneal_max;
    int restarts;
    double restart_ratio;
    double ema_decay;
    double codebook_init_scale;
    size_t epochs;
    size_t batch_size;
    double lr;
    double teacher_forcing;
    uint64_t seed;
} svq_ae_config;

typedef struct svq_epoch_metrics {
    size_t epoch;
    double total_loss;
    double recon_mse;
    double kl;
    double codebook_loss;
    double commitment_loss;
    size_t n_splits; /* 0 in vae mode */
    const double* perplexity;
    const size_t* restarted;
} svq_epoch_metrics;

typedef void (*svq_epoch_callback)(const svq_epoch_metrics* metrics, void* user);

SVQ_API void svq_ae_config_default(svq_ae_config* cfg);
SVQ_API svq_status svq_ae_train(const svq_corpus* corpus, const svq_ae_config* cfg, svq_epoch_callback on_epoch,
                                void* user, svq_ae_model** out);
SVQ_API svq_status svq_ae_load(const char* path, svq_ae_model** out);
SVQ_API svq_status svq_ae_save(const svq_ae_model* model, const char* path);
SVQ_API svq_status svq_ae_get_config(const svq_ae_model* model, svq_ae_config* cfg);
/* Fails with SVQ_ERR_STATE for a vae model. */
SVQ_API svq_status svq_ae_codebooks(const svq_ae_model* model, svq_codebooks** out);
SVQ_API svq_status svq_ae_embed(const svq_ae_model* model, const svq_corpus* corpus, svq_embeddings** out);
/* Mean frame MSE of the free-running reconstruction of each utterance from its own code. */
SVQ_API svq_status svq_ae_reconstruction_mse(const svq_ae_model* model, const svq_corpus* corpus, double* mse);
SVQ_API void svq_ae_free(svq_ae_model* model);

/* ---- codebooks ---- */

SVQ_API svq_status svq_codebooks_load(const char* path, svq_codebooks** out);
SVQ_API svq_status svq_codebooks_save(const svq_codebooks* cb, const char* path);
SVQ_API void svq_codebooks_shape(const svq_codebooks* cb, size_t* splits, size_t* codes, size_t* dim);
SVQ_API void svq_codebooks_free(svq_codebooks* cb);

/* ---- embeddings ---- */

SVQ_API svq_status svq_embeddings_load(const char* path, svq_embeddings** out);
SVQ_API svq_status svq_embeddings_save(const svq_embeddings* emb, const char* path);
SVQ_API size_t svq_embeddings_size(const svq_embeddings* emb);
SVQ_API void svq_embeddings_free(svq_embeddings* emb);

/* Per-domain centroid codes from the embeddings of `train`'s utterances (matched by id).
   out holds n_domains * splits indices, domain-major; capacity is its length. */
SVQ_API svq_status svq_centroid_codes(const svq_ae_model* model, const svq_corpus* train, const svq_embeddings* emb,
                                      uint32_t* out, size_t capacity);
SVQ_API svq_status svq_centroids_save(const char* path, const uint32_t* codes, size_t n_domains, size_t splits);
SVQ_API svq_status svq_centroids_load(const char* path, uint32_t* out, size_t capacity, size_t* n_domains,
                                      size_t* splits);

/* ---- clustering ---- */

/* Elbow-selected cluster count for each split's codebook; k_out holds `splits` entries. */
SVQ_API svq_status svq_cluster_elbow(const svq_codebooks* cb, const size_t* candidates, size_t n_candidates,
                                     double ratio, uint64_t seed, size_t* k_out);
SVQ_API svq_status svq_cluster_build(const svq_codebooks* cb, size_t k, uint64_t seed, svq_cluster_map** out);
SVQ_API svq_status svq_cluster_map_load(const char* path, svq_cluster_map** out);
SVQ_API svq_status svq_cluster_map_save(const svq_cluster_map* map, const char* path);
SVQ_API void svq_cluster_map_shape(const svq_cluster_map* map, size_t* splits, size_t* groups);
SVQ_API uint64_t svq_cluster_map_hash(const svq_cluster_map* map);
SVQ_API void svq_cluster_map_free(svq_cluster_map* map);

/* ---- predictor ---- */

typedef struct svq_predictor_config {
    size_t embed_dim;
    size_t hidden;
    size_t attn_dim;
    size_t domain_dim;
    size_t target_dim;
    size_t epochs;
    size_t batch_size;
    double lr;
    uint64_t seed;
} svq_predictor_config;

typedef struct svq_predictor_epoch {
    size_t epoch;
    double train_loss;
    size_t n_splits;
    const double* val_split_accuracy; /* NULL without a validation set */
    double val_exact_accuracy;
} svq_predictor_epoch;

typedef void (*svq_predictor_callback)(const svq_predictor_epoch* epoch, void* user);

SVQ_API void svq_predictor_config_default(svq_predictor_config* cfg);
/* Targets are the cluster ids of each utterance's code in `emb` (matched by id). `val` may be NULL.
   val_split_accuracy (splits entries) and val_exact may be NULL. */
SVQ_API svq_status svq_predictor_train(const svq_corpus* train, const svq_corpus* val, const svq_embeddings* emb,
                                       const svq_cluster_map* map, size_t n_domains,
                                       const svq_predictor_config* cfg, svq_predictor_callback on_epoch, void* user,
                                       svq_predictor** out, double* val_split_accuracy, double* val_exact);
/* An untrained predictor with seeded initialization. */
SVQ_API svq_status svq_predictor_init(const svq_cluster_map* map, size_t n_domains, const svq_predictor_config* cfg,
                                      svq_predictor** out);
/* The saved file records the hash of `map`; loading checks it against `map` when map is not NULL. */
SVQ_API svq_status svq_predictor_save(const svq_predictor* pred, const svq_cluster_map* map, const char* path);
SVQ_API svq_status svq_predictor_load(const char* path, const svq_cluster_map* map, svq_predictor** out);
/* Greedy prediction for utterance `index` of `corpus`. cluster_ids and code hold `splits` entries;
   attention (splits x M, row-major) may be NULL, otherwise attention_capacity must cover splits*M. */
SVQ_API svq_status svq_predict(const svq_predictor* pred, const svq_cluster_map* map, const svq_corpus* corpus,
                               size_t index, uint32_t* cluster_ids, uint32_t* code, double* attention,
                               size_t attention_capacity);
SVQ_API void svq_predictor_free(svq_predictor* pred);

/* ---- evaluation ---- */

typedef struct svq_eval_report {
    size_t n_heldout;
    double mse_oracle;
    double mse_centroid;
    double mse_predicted;
    double gap_closure_percent;
    int oracle_best;
    double exact_accuracy;
} svq_eval_report;

SVQ_API svq_status svq_evaluate(const svq_ae_model* model, const svq_corpus* heldout, const uint32_t* centroids,
                                size_t n_domains, const svq_predictor* pred, const svq_cluster_map* map,
                                svq_eval_report* report, char** text);

/* CSV `split,code_index,cluster_id,x,y` of each split's codes on its top two principal axes. map may be NULL. */
SVQ_API svq_status svq_export_projection(const svq_codebooks* cb, const svq_cluster_map* map, const char* path);

/* Human-readable summary of any artifact file. */
SVQ_API svq_status svq_inspect(const char* path, char** text);

#ifdef __cplusplus
}
#endif

#endif
