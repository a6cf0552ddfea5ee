// svq: command-line pipeline over the svq C API.

#include <svq/svq.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#ifndef SVQ_GIT_DESCRIBE
#define SVQ_GIT_DESCRIBE "unknown"
#endif

namespace fs = std::filesystem;

namespace {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(svq_status st, const std::string& doing) {
    if (st != SVQ_OK)
        throw CliError(doing + ": " + svq_status_name(st) + ": " + svq_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Corpus = std::unique_ptr<svq_corpus, Deleter<svq_corpus, svq_corpus_free>>;
using Model = std::unique_ptr<svq_ae_model, Deleter<svq_ae_model, svq_ae_free>>;
using Codebooks = std::unique_ptr<svq_codebooks, Deleter<svq_codebooks, svq_codebooks_free>>;
using Embeddings = std::unique_ptr<svq_embeddings, Deleter<svq_embeddings, svq_embeddings_free>>;
using ClusterMap = std::unique_ptr<svq_cluster_map, Deleter<svq_cluster_map, svq_cluster_map_free>>;
using Predictor = std::unique_ptr<svq_predictor, Deleter<svq_predictor, svq_predictor_free>>;

std::string take_string(char* s) {
    std::string out = s ? s : "";
    svq_string_free(s);
    return out;
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw CliError("cannot open " + tmp + " for writing");
        f << text;
        if (!f.flush()) throw CliError("write failed: " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw CliError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

Corpus load_corpus(const std::string& path) {
    svq_corpus* c = nullptr;
    check(svq_corpus_load(path.c_str(), &c), "loading corpus " + path);
    return Corpus(c);
}

std::pair<Corpus, Corpus> split(const svq_corpus* c, double heldout) {
    svq_corpus *train = nullptr, *held = nullptr;
    check(svq_corpus_split(c, heldout, &train, &held), "splitting corpus");
    return {Corpus(train), Corpus(held)};
}

Model load_model(const std::string& path) {
    svq_ae_model* m = nullptr;
    check(svq_ae_load(path.c_str(), &m), "loading model " + path);
    return Model(m);
}

ClusterMap load_map(const std::string& path) {
    svq_cluster_map* m = nullptr;
    check(svq_cluster_map_load(path.c_str(), &m), "loading cluster map " + path);
    return ClusterMap(m);
}

Embeddings load_embeddings(const std::string& path) {
    svq_embeddings* e = nullptr;
    check(svq_embeddings_load(path.c_str(), &e), "loading embeddings " + path);
    return Embeddings(e);
}

Codebooks load_codebooks(const std::string& path) {
    svq_codebooks* c = nullptr;
    check(svq_codebooks_load(path.c_str(), &c), "loading codebooks " + path);
    return Codebooks(c);
}

std::string join(const std::vector<std::uint32_t>& v, char sep = ' ') {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? std::string(1, sep) : "") << v[i];
    return os.str();
}

struct Global {
    std::uint64_t seed = 42;
    std::string out = "svq_out";
    double heldout = 0.1;

    std::string path(const std::string& given, const char* name) const {
        return given.empty() ? (fs::path(out) / name).string() : given;
    }
};

struct GenData {
    svq_corpus_spec spec{};
};

struct TrainAe {
    std::string corpus, mode = "svq";
    svq_ae_config cfg{};
};

struct TrainPred {
    std::string corpus, model, embeddings, clusters;
    svq_predictor_config cfg{};
};

struct Paths {
    std::string corpus, model, embeddings, clusters, centroids, predictor, codebooks, file;
    long long index = -1;
    std::size_t k = 0, k_max = 32;
    double ratio = 0.15;
};

void epoch_line(const svq_epoch_metrics* m, void*) {
    std::fprintf(stderr, "epoch %zu  loss %.5f  mse %.5f", m->epoch, m->total_loss, m->recon_mse);
    if (m->n_splits == 0) std::fprintf(stderr, "  kl %.5f", m->kl);
    for (std::size_t s = 0; s < m->n_splits; ++s) std::fprintf(stderr, "  ppl%zu %.1f", s, m->perplexity[s]);
    std::fprintf(stderr, "\n");
}

void pred_epoch_line(const svq_predictor_epoch* e, void*) {
    std::fprintf(stderr, "epoch %zu  loss %.4f", e->epoch, e->train_loss);
    if (e->val_split_accuracy) {
        std::fprintf(stderr, "  exact %.3f  split", e->val_exact_accuracy);
        for (std::size_t s = 0; s < e->n_splits; ++s) std::fprintf(stderr, " %.3f", e->val_split_accuracy[s]);
    }
    std::fprintf(stderr, "\n");
}

std::vector<std::string> run_gen_data(const Global& g, GenData& o) {
    o.spec.seed = g.seed;
    svq_corpus* raw = nullptr;
    check(svq_corpus_generate(&o.spec, &raw), "generating corpus");
    Corpus c(raw);
    const std::string corpus = g.path("", "corpus.svqd"), factors = g.path("", "factors.svqf");
    check(svq_corpus_save(c.get(), corpus.c_str()), "writing " + corpus);
    check(svq_corpus_save_factors(c.get(), factors.c_str()), "writing " + factors);
    char* stats = nullptr;
    check(svq_corpus_stats(c.get(), &stats), "computing corpus statistics");
    std::cout << take_string(stats);
    return {corpus, factors};
}

std::vector<std::string> run_train_ae(const Global& g, TrainAe& o) {
    Corpus all = load_corpus(g.path(o.corpus, "corpus.svqd"));
    auto [train, held] = split(all.get(), g.heldout);
    std::size_t f = 0, d = 0;
    svq_corpus_dims(all.get(), &f, nullptr, &d);
    o.cfg.frame_dim = f;
    if (o.cfg.n_domains == 0) o.cfg.n_domains = d;
    if (o.mode == "vae") o.cfg.mode = SVQ_MODE_VAE;
    else if (o.mode == "vq") o.cfg.mode = SVQ_MODE_VQ;
    else o.cfg.mode = SVQ_MODE_SVQ;
    o.cfg.seed = g.seed;
    svq_ae_model* raw = nullptr;
    check(svq_ae_train(train.get(), &o.cfg, epoch_line, nullptr, &raw), "training autoencoder");
    Model m(raw);
    std::vector<std::string> written;
    const std::string model = g.path("", "model.svqm");
    check(svq_ae_save(m.get(), model.c_str()), "writing " + model);
    written.push_back(model);
    if (o.cfg.mode != SVQ_MODE_VAE) {
        svq_codebooks* cb = nullptr;
        check(svq_ae_codebooks(m.get(), &cb), "reading codebooks");
        Codebooks books(cb);
        const std::string path = g.path("", "codebooks.svqc");
        check(svq_codebooks_save(books.get(), path.c_str()), "writing " + path);
        written.push_back(path);
    }
    double mse = 0.0;
    check(svq_ae_reconstruction_mse(m.get(), held.get(), &mse), "scoring held-out reconstruction");
    std::cout << "heldout_reconstruction_mse = " << std::setprecision(6) << mse << "\n";
    return written;
}

std::vector<std::string> run_embed(const Global& g, Paths& o) {
    Model m = load_model(g.path(o.model, "model.svqm"));
    Corpus c = load_corpus(g.path(o.corpus, "corpus.svqd"));
    svq_embeddings* raw = nullptr;
    check(svq_ae_embed(m.get(), c.get(), &raw), "embedding corpus");
    Embeddings e(raw);
    const std::string path = g.path("", "embeddings.svqe");
    check(svq_embeddings_save(e.get(), path.c_str()), "writing " + path);
    std::cout << "embedded " << svq_embeddings_size(e.get()) << " utterances\n";
    return {path};
}

std::vector<std::string> run_centroid(const Global& g, Paths& o) {
    Model m = load_model(g.path(o.model, "model.svqm"));
    Corpus all = load_corpus(g.path(o.corpus, "corpus.svqd"));
    auto [train, held] = split(all.get(), g.heldout);
    Embeddings e = load_embeddings(g.path(o.embeddings, "embeddings.svqe"));
    svq_ae_config cfg;
    check(svq_ae_get_config(m.get(), &cfg), "reading model config");
    const std::size_t s = cfg.mode == SVQ_MODE_VQ ? 1 : cfg.splits;
    std::vector<std::uint32_t> codes(cfg.n_domains * s);
    check(svq_centroid_codes(m.get(), train.get(), e.get(), codes.data(), codes.size()), "computing centroid codes");
    const std::string path = g.path("", "centroids.txt");
    check(svq_centroids_save(path.c_str(), codes.data(), cfg.n_domains, s), "writing " + path);
    for (std::size_t d = 0; d < cfg.n_domains; ++d)
        std::cout << "domain " << d << ": "
                  << join(std::vector<std::uint32_t>(codes.begin() + d * s, codes.begin() + (d + 1) * s)) << "\n";
    return {path};
}

std::vector<std::string> run_cluster(const Global& g, Paths& o) {
    Codebooks cb = load_codebooks(g.path(o.codebooks, "codebooks.svqc"));
    std::size_t splits = 0, codes = 0;
    svq_codebooks_shape(cb.get(), &splits, &codes, nullptr);
    std::size_t k = o.k;
    if (k == 0) {
        std::vector<std::size_t> cands;
        for (std::size_t c = 1; c <= std::min(o.k_max, codes); ++c) cands.push_back(c);
        std::vector<std::size_t> per(splits);
        check(svq_cluster_elbow(cb.get(), cands.data(), cands.size(), o.ratio, g.seed, per.data()), "elbow selection");
        for (std::size_t s = 0; s < splits; ++s) {
            std::cout << "split " << s << " elbow k = " << per[s] << "\n";
            k = std::max(k, per[s]);
        }
    }
    svq_cluster_map* raw = nullptr;
    check(svq_cluster_build(cb.get(), k, g.seed, &raw), "clustering codebooks");
    ClusterMap map(raw);
    const std::string path = g.path("", "clusters.txt");
    check(svq_cluster_map_save(map.get(), path.c_str()), "writing " + path);
    std::cout << "clusters per split = " << k << "\n";
    return {path};
}

std::vector<std::string> run_train_pred(const Global& g, TrainPred& o) {
    Corpus all = load_corpus(g.path(o.corpus, "corpus.svqd"));
    auto [train, held] = split(all.get(), g.heldout);
    Model m = load_model(g.path(o.model, "model.svqm"));
    Embeddings e = load_embeddings(g.path(o.embeddings, "embeddings.svqe"));
    ClusterMap map = load_map(g.path(o.clusters, "clusters.txt"));
    svq_ae_config mc;
    check(svq_ae_get_config(m.get(), &mc), "reading model config");
    std::size_t embed = 0;
    svq_corpus_dims(all.get(), nullptr, &embed, nullptr);
    o.cfg.embed_dim = embed;
    o.cfg.seed = g.seed;
    std::size_t splits = 0;
    svq_cluster_map_shape(map.get(), &splits, nullptr);
    std::vector<double> acc(splits);
    double exact = 0.0;
    svq_predictor* raw = nullptr;
    check(svq_predictor_train(train.get(), svq_corpus_size(held.get()) ? held.get() : nullptr, e.get(), map.get(),
                              mc.n_domains, &o.cfg, pred_epoch_line, nullptr, &raw, acc.data(), &exact),
          "training predictor");
    Predictor p(raw);
    const std::string path = g.path("", "predictor.svqp");
    check(svq_predictor_save(p.get(), map.get(), path.c_str()), "writing " + path);
    std::cout << "heldout_exact_accuracy = " << exact << "\nheldout_split_accuracy =";
    for (double a : acc) std::cout << ' ' << a;
    std::cout << "\n";
    return {path};
}

std::vector<std::string> run_predict(const Global& g, Paths& o) {
    Corpus all = load_corpus(g.path(o.corpus, "corpus.svqd"));
    ClusterMap map = load_map(g.path(o.clusters, "clusters.txt"));
    svq_predictor* raw = nullptr;
    const std::string ppath = g.path(o.predictor, "predictor.svqp");
    check(svq_predictor_load(ppath.c_str(), map.get(), &raw), "loading predictor " + ppath);
    Predictor p(raw);
    std::size_t splits = 0;
    svq_cluster_map_shape(map.get(), &splits, nullptr);
    auto [train, held] = split(all.get(), g.heldout);
    const svq_corpus* target = held.get();
    std::vector<std::size_t> which;
    if (o.index >= 0) {
        target = all.get();
        which.push_back(static_cast<std::size_t>(o.index));
    } else {
        for (std::size_t i = 0; i < svq_corpus_size(held.get()); ++i) which.push_back(i);
    }
    std::ostringstream csv;
    csv << "id,domain,cluster_ids,code\n";
    for (std::size_t i : which) {
        std::vector<std::uint32_t> ids(splits), code(splits);
        const std::size_t m = svq_corpus_context_length(target, i);
        std::vector<double> att(splits * m);
        check(svq_predict(p.get(), map.get(), target, i, ids.data(), code.data(), att.data(), att.size()),
              "predicting utterance " + std::to_string(i));
        csv << svq_corpus_id(target, i) << ',' << svq_corpus_domain(target, i) << ',' << join(ids) << ','
            << join(code) << "\n";
        if (o.index >= 0) {
            std::cout << "cluster_ids = " << join(ids) << "\ncode = " << join(code) << "\nattention:\n"
                      << std::setprecision(4);
            for (std::size_t s = 0; s < splits; ++s) {
                std::cout << "  split " << s << ":";
                for (std::size_t j = 0; j < m; ++j) std::cout << ' ' << att[s * m + j];
                std::cout << "\n";
            }
        }
    }
    const std::string path = g.path("", "predictions.csv");
    write_text_atomic(path, csv.str());
    return {path};
}

std::vector<std::string> run_eval(const Global& g, Paths& o) {
    Model m = load_model(g.path(o.model, "model.svqm"));
    Corpus all = load_corpus(g.path(o.corpus, "corpus.svqd"));
    auto [train, held] = split(all.get(), g.heldout);
    ClusterMap map = load_map(g.path(o.clusters, "clusters.txt"));
    svq_predictor* raw = nullptr;
    const std::string ppath = g.path(o.predictor, "predictor.svqp");
    check(svq_predictor_load(ppath.c_str(), map.get(), &raw), "loading predictor " + ppath);
    Predictor p(raw);
    const std::string cpath = g.path(o.centroids, "centroids.txt");
    std::size_t domains = 0, splits = 0;
    check(svq_centroids_load(cpath.c_str(), nullptr, 0, &domains, &splits), "reading " + cpath);
    std::vector<std::uint32_t> centroids(domains * splits);
    check(svq_centroids_load(cpath.c_str(), centroids.data(), centroids.size(), nullptr, nullptr), "reading " + cpath);
    svq_eval_report rep{};
    char* text = nullptr;
    check(svq_evaluate(m.get(), held.get(), centroids.data(), domains, p.get(), map.get(), &rep, &text), "evaluating");
    const std::string report = take_string(text);
    std::cout << report;
    if (!rep.oracle_best) std::cerr << "warning: oracle codes are not the best reconstruction\n";
    const std::string path = g.path("", "eval.txt");
    write_text_atomic(path, report);
    return {path};
}

std::vector<std::string> run_projection(const Global& g, Paths& o) {
    Codebooks cb = load_codebooks(g.path(o.codebooks, "codebooks.svqc"));
    ClusterMap map;
    const std::string mpath = g.path(o.clusters, "clusters.txt");
    if (!o.clusters.empty() || fs::exists(mpath)) map = load_map(mpath);
    const std::string path = g.path("", "projection.csv");
    check(svq_export_projection(cb.get(), map.get(), path.c_str()), "exporting projection");
    return {path};
}

void write_manifest(const Global& g, const CLI::App& sub, const std::vector<std::string>& artifacts,
                    double seconds) {
    std::ostringstream os;
    os << "# svq run manifest; reusable with --config\n"
       << "seed = " << g.seed << "\n"
       << "out = \"" << g.out << "\"\n"
       << "heldout = " << g.heldout << "\n"
       << "# command: " << sub.get_name() << "\n"
       << "# git_describe: " << SVQ_GIT_DESCRIBE << "\n"
       << "# wall_time_seconds: " << std::fixed << std::setprecision(3) << seconds << "\n";
    for (const auto& a : artifacts) os << "# artifact: " << a << "\n";
    os << "[" << sub.get_name() << "]\n" << sub.config_to_str(true, false);
    write_text_atomic((fs::path(g.out) / (sub.get_name() + ".manifest")).string(), os.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"svq: split vector quantized sequence autoencoder pipeline"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "Read options from a config file ([subcommand] sections)");
    app.require_subcommand(1);
    app.fallthrough();

    Global g;
    app.add_option("--seed", g.seed, "Global seed for every stochastic step");
    app.add_option("--out", g.out, "Output directory for artifacts and manifests");
    app.add_option("--heldout", g.heldout, "Fraction of the corpus (its tail) held out from training")
        ->check(CLI::Range(0.0, 0.9));

    GenData gd;
    svq_corpus_spec_default(&gd.spec);
    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus and its factor sidecar");
    gen->add_option("--n-utterances", gd.spec.n_utterances);
    gen->add_option("--n-domains", gd.spec.n_domains);
    gen->add_option("--n-factors", gd.spec.n_factors);
    gen->add_option("--frame-dim", gd.spec.frame_dim);
    gen->add_option("--t-min", gd.spec.t_min);
    gen->add_option("--t-max", gd.spec.t_max);
    gen->add_option("--m-min", gd.spec.m_min);
    gen->add_option("--m-max", gd.spec.m_max);
    gen->add_option("--embed-dim", gd.spec.embed_dim);
    gen->add_option("--frame-noise", gd.spec.frame_noise);
    gen->add_option("--context-noise", gd.spec.context_noise);
    gen->add_option("--predictability", gd.spec.predictability, "Share of the context signal carried by the style factors");
    gen->add_option("--domain-shift", gd.spec.domain_shift);
    gen->add_option("--factor-spread", gd.spec.factor_spread);
    gen->add_option("--domain-skew", gd.spec.domain_skew);

    TrainAe ta;
    svq_ae_config_default(&ta.cfg);
    ta.cfg.n_domains = 0;
    auto* tae = app.add_subcommand("train-ae", "Train the autoencoder on the non-held-out utterances");
    tae->add_option("--corpus", ta.corpus, "Corpus file (default <out>/corpus.svqd)");
    tae->add_option("--mode", ta.mode)->check(CLI::IsMember({"vae", "vq", "svq"}));
    tae->add_option("--hidden", ta.cfg.hidden);
    tae->add_option("--n-domains", ta.cfg.n_domains, "0 = from the corpus");
    tae->add_option("--domain-dim", ta.cfg.domain_dim);
    tae->add_option("--frames-per-step", ta.cfg.frames_per_step);
    tae->add_option("--vae-dim", ta.cfg.vae_dim);
    tae->add_option("--splits", ta.cfg.splits);
    tae->add_option("--codes", ta.cfg.codes);
    tae->add_option("--code-dim", ta.cfg.code_dim);
    tae->add_option("--beta", ta.cfg.beta);
    tae->add_option("--anneal-delay", ta.cfg.anneal_delay);
    tae->add_option("--anneal-ramp", ta.cfg.anneal_ramp);
    tae->add_option("--anneal-max", ta.cfg.anneal_max);
    tae->add_option("--restarts", ta.cfg.restarts, "1 enables random restarts of unused codes");
    tae->add_option("--restart-ratio", ta.cfg.restart_ratio);
    tae->add_option("--ema-decay", ta.cfg.ema_decay);
    tae->add_option("--codebook-init-scale", ta.cfg.codebook_init_scale);
    tae->add_option("--epochs", ta.cfg.epochs);
    tae->add_option("--batch-size", ta.cfg.batch_size);
    tae->add_option("--lr", ta.cfg.lr);
    tae->add_option("--teacher-forcing", ta.cfg.teacher_forcing);

    Paths em;
    auto* emb = app.add_subcommand("embed", "Encode every utterance with the trained model");
    emb->add_option("--model", em.model, "Model file (default <out>/model.svqm)");
    emb->add_option("--corpus", em.corpus, "Corpus file (default <out>/corpus.svqd)");

    Paths ce;
    auto* cen = app.add_subcommand("centroid", "Per-domain centroid codes from training embeddings");
    cen->add_option("--model", ce.model);
    cen->add_option("--corpus", ce.corpus);
    cen->add_option("--embeddings", ce.embeddings);

    Paths cl;
    auto* clu = app.add_subcommand("cluster", "K-means over each codebook split");
    clu->add_option("--codebooks", cl.codebooks, "Codebook or model file (default <out>/codebooks.svqc)");
    clu->add_option("--k", cl.k, "Clusters per split; 0 = elbow selection (largest over splits)");
    clu->add_option("--k-max", cl.k_max, "Largest elbow candidate");
    clu->add_option("--ratio", cl.ratio, "Elbow relative-improvement threshold");

    TrainPred tp;
    svq_predictor_config_default(&tp.cfg);
    auto* tpr = app.add_subcommand("train-pred", "Train the code predictor on context embeddings");
    tpr->add_option("--corpus", tp.corpus);
    tpr->add_option("--model", tp.model);
    tpr->add_option("--embeddings", tp.embeddings);
    tpr->add_option("--clusters", tp.clusters);
    tpr->add_option("--hidden", tp.cfg.hidden);
    tpr->add_option("--attn-dim", tp.cfg.attn_dim);
    tpr->add_option("--domain-dim", tp.cfg.domain_dim);
    tpr->add_option("--target-dim", tp.cfg.target_dim);
    tpr->add_option("--epochs", tp.cfg.epochs);
    tpr->add_option("--batch-size", tp.cfg.batch_size);
    tpr->add_option("--lr", tp.cfg.lr);

    Paths pr;
    auto* pre = app.add_subcommand("predict", "Predict codes for held-out utterances (or one by index)");
    pre->add_option("--corpus", pr.corpus);
    pre->add_option("--predictor", pr.predictor);
    pre->add_option("--clusters", pr.clusters);
    pre->add_option("--index", pr.index, "Corpus index of a single utterance; -1 = all held-out");

    Paths ev;
    auto* eva = app.add_subcommand("eval", "Compare oracle, centroid and predicted codes on held-out utterances");
    eva->add_option("--model", ev.model);
    eva->add_option("--corpus", ev.corpus);
    eva->add_option("--predictor", ev.predictor);
    eva->add_option("--clusters", ev.clusters);
    eva->add_option("--centroids", ev.centroids);

    Paths pj;
    auto* prj = app.add_subcommand("export-projection", "Write per-split PCA coordinates of the codes as CSV");
    prj->add_option("--codebooks", pj.codebooks, "Codebook or model file (default <out>/codebooks.svqc)");
    prj->add_option("--clusters", pj.clusters, "Cluster map for the cluster_id column (default <out>/clusters.txt if present)");

    Paths in;
    auto* ins = app.add_subcommand("inspect", "Print header fields and statistics of an artifact");
    ins->add_option("file", in.file)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (sub == ins) {
            char* text = nullptr;
            check(svq_inspect(in.file.c_str(), &text), "inspecting " + in.file);
            std::cout << take_string(text);
            return 0;
        }
        std::error_code ec;
        fs::create_directories(g.out, ec);
        if (ec) throw CliError("cannot create output directory " + g.out + ": " + ec.message());
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<std::string> written;
        if (sub == gen) written = run_gen_data(g, gd);
        else if (sub == tae) written = run_train_ae(g, ta);
        else if (sub == emb) written = run_embed(g, em);
        else if (sub == cen) written = run_centroid(g, ce);
        else if (sub == clu) written = run_cluster(g, cl);
        else if (sub == tpr) written = run_train_pred(g, tp);
        else if (sub == pre) written = run_predict(g, pr);
        else if (sub == eva) written = run_eval(g, ev);
        else if (sub == prj) written = run_projection(g, pj);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(g, *sub, written, secs);
        for (const auto& w : written) std::cerr << "wrote " << w << "\n";
    } catch (const std::exception& e) {
        std::cerr << "svq: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
