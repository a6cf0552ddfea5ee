// One PASS/FAIL line per acceptance criterion. Arguments select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cli_pipeline.hpp"
#include "clustering.hpp"
#include "eval.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "predictor.hpp"
#include "seqae.hpp"

using namespace svq;
using namespace svq::testing;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// Trained models shared between criteria (6, 7 and 9 reuse the same runs).
struct Runs {
    std::optional<CorpusSplit> default_split;
    std::optional<AeModel> svq_model, vq_model;
    std::vector<std::pair<std::string, const AeModel*>> trained;  // every model, for criterion 9
    std::vector<std::pair<const AeModel*, const Corpus*>> trained_on;
    std::optional<AeModel> collapse_off, collapse_on;
    std::optional<Corpus> skewed;
    double svq_seconds = 0.0;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const CorpusSplit& default_split(Runs& runs) {
    if (!runs.default_split) runs.default_split = split_corpus(strip_factors(generate_corpus(CorpusSpec{})), 0.1);
    return *runs.default_split;
}

double heldout_mse(const AeModel& m, const Corpus& heldout) {
    double total = 0.0;
    for (const auto& u : heldout) total += m.reconstruction_mse(u, m.embed(u).latent);
    return total / static_cast<double>(heldout.size());
}

const AeModel& svq_model(Runs& runs) {
    if (!runs.svq_model) {
        const auto t0 = std::chrono::steady_clock::now();
        runs.svq_model = train_autoencoder(default_split(runs).train, AeConfig{}).model;
        runs.svq_seconds = seconds_since(t0);
        runs.trained.emplace_back("svq default", &*runs.svq_model);
        runs.trained_on.emplace_back(&*runs.svq_model, &default_split(runs).train);
    }
    return *runs.svq_model;
}

Outcome criterion1() {
    Rng rng(1);
    const Codebook cb = make_codebook(256, 8, rng);
    std::size_t mismatches = 0;
    std::vector<double> q(8);
    for (int i = 0; i < 10000; ++i) {
        for (double& v : q) v = uniform(rng, -0.6, 0.6);
        if (nearest_code(q, cb).index != brute_nearest(q, cb.codes)) ++mismatches;
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in 10000 queries"};
}

Outcome criterion2() {
    Rng rng(2);
    const auto set = make_codebook_set(3, 4, 2, rng);
    std::set<std::vector<double>> codes_seen;
    for (const auto& b : set.books)
        for (std::size_t k = 0; k < 4; ++k) codes_seen.insert({b.codes.row_span(k).begin(), b.codes.row_span(k).end()});
    std::set<std::vector<double>> recon;
    for (std::uint32_t a = 0; a < 4; ++a)
        for (std::uint32_t b = 0; b < 4; ++b)
            for (std::uint32_t c = 0; c < 4; ++c) recon.insert(dequantize(SplitCode{{a, b, c}}, set));
    const double bits = capacity_bits(3, 4), big = capacity_bits(8, 1024);
    const bool pass = codes_seen.size() == 12 && recon.size() == 64 && bits == 6.0 && big == 80.0;
    return {pass, std::to_string(recon.size()) + " distinct reconstructions, capacity_bits(3,4)=" + fmt("%g", bits) +
                      ", capacity_bits(8,1024)=" + fmt("%g", big)};
}

Outcome criterion3() {
    double worst = 0.0, st_gap = 0.0;
    std::string where;
    std::size_t checked = 0, skipped = 0;
    auto note = [&](const GradReport& r, const char* what) {
        checked += r.checked;
        skipped += r.skipped;
        if (r.max_rel > worst) {
            worst = r.max_rel;
            where = std::string(what) + " " + r.worst;
        }
    };
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        note(check_gru(seed), "gru");
        note(check_attention(seed), "attention");
        note(check_kl(seed), "kl");
        note(check_quantizer_losses(seed), "quantizer");
        st_gap = std::max(st_gap, straight_through_gap(seed));
    }
    const bool pass = worst < 1e-4 && st_gap == 0.0;
    return {pass, "100 seeds, " + std::to_string(checked) + " coordinates (" + std::to_string(skipped) +
                      " skipped at code flips), max rel err " + fmt("%.2e", worst) + (where.empty() ? "" : " at " + where) +
                      ", straight-through gap " + fmt("%g", st_gap)};
}

Outcome criterion4() {
    Rng rng(4);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        std::vector<double> mu(4), sigma(4);
        for (double& m : mu) m = (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.5, 2.0);
        for (double& s : sigma) s = uniform(rng, 0.25, 2.5);
        const double exact = kl_divergence(mu, sigma);
        const double mc = mc_kl(mu, sigma, 1000000, rng);
        worst = std::max(worst, std::abs(mc - exact) / exact);
    }
    return {worst < 0.01, "20 pairs, 1e6 samples each, max rel err " + fmt("%.4f", worst)};
}

// Skewed corpus: most utterances come from one domain.
AeModel train_collapse(Runs& runs, bool restarts, std::vector<double>* final_perplexity) {
    if (!runs.skewed) {
        CorpusSpec s;
        s.n_utterances = 800;
        s.domain_skew = 1.5;
        runs.skewed = strip_factors(generate_corpus(s));
    }
    AeConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = 15;
    cfg.bottleneck.restarts = restarts;
    auto r = train_autoencoder(*runs.skewed, cfg);
    *final_perplexity = r.history.back().perplexity;
    return std::move(r.model);
}

Outcome criterion5(Runs& runs) {
    std::vector<double> off, on;
    runs.collapse_off = train_collapse(runs, false, &off);
    runs.collapse_on = train_collapse(runs, true, &on);
    runs.trained.emplace_back("collapse without restarts", &*runs.collapse_off);
    runs.trained.emplace_back("collapse with restarts", &*runs.collapse_on);
    runs.trained_on.emplace_back(&*runs.collapse_off, &*runs.skewed);
    runs.trained_on.emplace_back(&*runs.collapse_on, &*runs.skewed);
    const double k = 64.0;
    bool pass = true;
    std::string off_s, on_s;
    for (double p : off) {
        pass &= p < 0.25 * k;
        off_s += fmt(" %.1f", p);
    }
    for (double p : on) {
        pass &= p >= 0.5 * k;
        on_s += fmt(" %.1f", p);
    }
    return {pass, "per-split perplexity without restarts" + off_s + " (< 16), with restarts" + on_s + " (>= 32)"};
}

Outcome criterion6(Runs& runs) {
    const auto& split = default_split(runs);
    const AeModel& svq = svq_model(runs);
    AeConfig vq_cfg;
    vq_cfg.bottleneck.mode = BottleneckMode::Vq;
    vq_cfg.bottleneck.code_dim = 32;
    runs.vq_model = train_autoencoder(split.train, vq_cfg).model;
    runs.trained.emplace_back("vq default", &*runs.vq_model);
    runs.trained_on.emplace_back(&*runs.vq_model, &split.train);
    const double m_svq = heldout_mse(svq, split.heldout), m_vq = heldout_mse(*runs.vq_model, split.heldout);
    const double lower = (m_vq - m_svq) / m_vq;
    return {lower >= 0.2, "held-out mse svq " + fmt("%.4f", m_svq) + " vs vq " + fmt("%.4f", m_vq) + ", " +
                              fmt("%.1f", lower * 100.0) + "% lower (>= 20%)"};
}

Outcome criterion7(Runs& runs, double* extra_seconds) {
    const auto& split = default_split(runs);
    const bool fresh = !runs.svq_model;
    const AeModel& model = svq_model(runs);
    if (fresh) *extra_seconds = 0.0;
    else *extra_seconds = runs.svq_seconds;

    const auto train_records = embed_corpus(model, split.train);
    const auto centroids = domain_centroid_codes(model, train_records);
    const auto set = model.codebooks();
    std::vector<std::size_t> candidates;
    for (std::size_t k = 1; k <= std::min<std::size_t>(32, set.codes()); ++k) candidates.push_back(k);
    std::size_t k = 1;
    std::string ks;
    for (std::size_t s = 0; s < set.splits(); ++s) {
        const std::size_t ks_s = select_k_elbow(set.books[s].codes, candidates, derive_seed(42, s));
        k = std::max(k, ks_s);
        ks += (s ? "," : "") + std::to_string(ks_s);
    }
    const ClusterMap map = build_cluster_map(set, k, 42);

    std::vector<std::vector<std::uint32_t>> targets;
    {
        std::vector<SplitCode> codes;
        for (const auto& r : train_records) codes.push_back(std::get<SplitCode>(r.code));
        targets = reduce_targets(codes, map);
    }
    std::vector<PredictorExample> examples;
    for (std::size_t i = 0; i < split.train.size(); ++i)
        examples.push_back({&split.train[i].context, split.train[i].domain, targets[i]});
    PredictorConfig pcfg;
    pcfg.splits = map.splits();
    pcfg.groups = map.groups();
    pcfg.epochs = 15;
    const auto pred = train_predictor(examples, {}, pcfg);
    const EvalReport r = evaluate(model, split.heldout, centroids, pred.model, map);
    return {r.gap_closure >= 25.0, "mse oracle " + fmt("%.4f", r.mse_oracle) + ", centroid " + fmt("%.4f", r.mse_centroid) +
                                       ", predicted " + fmt("%.4f", r.mse_predicted) + ", gap closure " +
                                       fmt("%.1f", r.gap_closure) + "% (>= 25%), k " + std::to_string(k) +
                                       " from per-split elbows " + ks};
}

Outcome criterion8() {
    const std::vector<std::size_t> candidates{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    bool pass = true;
    std::string detail;
    for (std::size_t k = 2; k <= 6; ++k) {
        std::size_t hits = 0;
        for (std::uint64_t trial = 0; trial < 100; ++trial) {
            const std::uint64_t seed = derive_seed(1000 * k, trial);
            const auto b = make_blobs(k, 40, 8, 6.0, 1.0, seed);
            hits += select_k_elbow(b.points, candidates, seed) == k;
        }
        pass &= hits >= 95;
        detail += (k > 2 ? ", " : "") + std::string("k=") + std::to_string(k) + " " + std::to_string(hits) + "/100";
    }
    return {pass, detail};
}

Outcome criterion9(Runs& runs) {
    if (runs.trained.empty()) return {false, "no trained runs available (select criteria 5, 6 or 7 as well)"};
    std::size_t checks = 0, bad = 0;
    for (const auto& [model, corpus] : runs.trained_on) {
        const auto set = model->codebooks();
        std::vector<std::vector<std::vector<double>>> by_domain(model->config().n_domains);
        for (const auto& u : *corpus) by_domain[u.domain].push_back(model->encode_sequence(u.frames));
        for (const auto& latents : by_domain) {
            if (latents.empty()) continue;
            const SplitCode got = centroid_code(latents, set);
            const auto want = brute_centroid_code(latents, set);
            ++checks;
            bool member = got.indices.size() == set.splits();
            for (auto idx : got.indices) member &= idx < set.codes();
            if (got.indices != want || !member) ++bad;
        }
    }
    return {bad == 0 && checks > 0, std::to_string(runs.trained_on.size()) + " trained runs, " + std::to_string(checks) +
                                        " domain centroids, " + std::to_string(bad) + " mismatches"};
}

Outcome criterion10() {
    namespace fs = std::filesystem;
    const fs::path a = fs::temp_directory_path() / "svq_accept_run_a", b = fs::temp_directory_path() / "svq_accept_run_b";
    fs::remove_all(a);
    fs::remove_all(b);
    std::string err = run_tiny_pipeline(a);
    if (err.empty()) err = run_tiny_pipeline(b);
    if (!err.empty()) return {false, "pipeline failed: " + err};
    const auto fa = artifact_bytes(a), fb = artifact_bytes(b);
    std::size_t differ = 0;
    std::string names;
    for (const auto& [name, bytes] : fa) {
        auto it = fb.find(name);
        if (it == fb.end() || it->second != bytes) {
            ++differ;
            names += " " + name;
        }
    }
    differ += fb.size() > fa.size() ? fb.size() - fa.size() : 0;
    fs::remove_all(a);
    fs::remove_all(b);
    return {differ == 0 && fa.size() >= 11, std::to_string(fa.size()) + " artifacts compared across two runs, " +
                                                 std::to_string(differ) + " differ" + names};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    auto want = [&](int n) { return selected.empty() || selected.count(n); };

    Runs runs;
    int failures = 0;
    auto report = [&](int n, const char* name, const std::function<Outcome(double*)>& f) {
        if (!want(n)) return;
        const auto t0 = std::chrono::steady_clock::now();
        double extra = 0.0;
        Outcome o;
        try {
            o = f(&extra);
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = seconds_since(t0) + extra;
        failures += !o.pass;
        std::printf("criterion %d: %s %s: %s [%.1fs]\n", n, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
        std::fflush(stdout);
    };

    report(1, "quantizer oracle equivalence", [](double*) { return criterion1(); });
    report(2, "capacity law", [](double*) { return criterion2(); });
    report(3, "gradient integrity", [](double*) { return criterion3(); });
    report(4, "kl correctness", [](double*) { return criterion4(); });
    report(8, "elbow recovery", [](double*) { return criterion8(); });
    report(10, "determinism", [](double*) { return criterion10(); });
    report(5, "collapse mitigation", [&](double*) { return criterion5(runs); });
    report(6, "svq beats vq at matched codebook size", [&](double*) { return criterion6(runs); });
    report(7, "predicted beats centroid", [&](double* extra) { return criterion7(runs, extra); });
    report(9, "centroid-code validity", [&](double*) { return criterion9(runs); });
    return failures == 0 ? 0 : 1;
}
