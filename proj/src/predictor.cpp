#include "predictor.hpp"

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

constexpr std::uint16_t kPredictorVersion = 1;
constexpr const char* kDomainTable = "pred.dom.embed";
constexpr const char* kTargetTable = "pred.prev.embed";

LinearParams out_head(const PredictorConfig& cfg, std::size_t split) {
    return {"pred.out." + std::to_string(split), cfg.hidden, cfg.groups};
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::uint32_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<std::uint32_t>(best);
}

}  // namespace

void PredictorConfig::validate() const {
    require(embed_dim > 0 && hidden > 0 && attn_dim > 0 && n_domains > 0 && domain_dim > 0 && target_dim > 0 &&
                splits > 0 && groups > 0 && epochs > 0 && batch_size > 0,
            ErrorKind::InvalidArgument, "predictor sizes must be positive");
    require(lr > 0.0, ErrorKind::InvalidArgument, "predictor learning rate must be positive");
}

std::string PredictorConfig::to_text() const {
    std::ostringstream os;
    os << std::setprecision(17) << "embed_dim = " << embed_dim << "\n"
       << "hidden = " << hidden << "\n"
       << "attn_dim = " << attn_dim << "\n"
       << "n_domains = " << n_domains << "\n"
       << "domain_dim = " << domain_dim << "\n"
       << "target_dim = " << target_dim << "\n"
       << "splits = " << splits << "\n"
       << "groups = " << groups << "\n"
       << "epochs = " << epochs << "\n"
       << "batch_size = " << batch_size << "\n"
       << "lr = " << lr << "\n"
       << "seed = " << seed << "\n";
    return os.str();
}

PredictorConfig parse_predictor_config(const std::string& text) {
    const auto kv = parse_kv(text);
    auto get = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        require(it != kv.end(), ErrorKind::Format, std::string("predictor config is missing '") + key + "'");
        return it->second;
    };
    auto num = [&](const char* key) {
        try {
            return std::stoull(get(key));
        } catch (const std::logic_error&) {
            fail(ErrorKind::Format, std::string("predictor config value for '") + key + "' is not an integer");
        }
    };
    PredictorConfig c;
    c.embed_dim = num("embed_dim");
    c.hidden = num("hidden");
    c.attn_dim = num("attn_dim");
    c.n_domains = num("n_domains");
    c.domain_dim = num("domain_dim");
    c.target_dim = num("target_dim");
    c.splits = num("splits");
    c.groups = num("groups");
    c.epochs = num("epochs");
    c.batch_size = num("batch_size");
    try {
        c.lr = std::stod(get("lr"));
    } catch (const std::logic_error&) {
        fail(ErrorKind::Format, "predictor config value for 'lr' is not a number");
    }
    c.seed = num("seed");
    c.validate();
    return c;
}

PredictorModel::PredictorModel(const PredictorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    build_layout();
    Rng rng(derive_seed(cfg_.seed, 0));
    enc_fwd_.init(params_, rng);
    enc_bwd_.init(params_, rng);
    attn_.init(params_, rng);
    params_.add(kDomainTable, init_uniform(cfg_.n_domains, cfg_.domain_dim, cfg_.domain_dim, rng));
    params_.add(kTargetTable, init_uniform(cfg_.groups + 1, cfg_.target_dim, cfg_.target_dim, rng));
    dec_gru_.init(params_, rng);
    for (std::size_t s = 0; s < cfg_.splits; ++s) out_head(cfg_, s).init(params_, rng);
}

void PredictorModel::build_layout() {
    const std::size_t h = cfg_.hidden;
    enc_fwd_ = {"pred.enc.fwd", cfg_.embed_dim, h};
    enc_bwd_ = {"pred.enc.bwd", cfg_.embed_dim, h};
    attn_ = {"pred.attn", 2 * h, h, cfg_.attn_dim};
    dec_gru_ = {"pred.dec.gru", cfg_.domain_dim + 2 * h + cfg_.target_dim, h};
}

void PredictorModel::check_domain(std::uint16_t domain) const {
    require(domain < cfg_.n_domains, ErrorKind::InvalidArgument,
            "unknown domain id " + std::to_string(domain) + " (predictor has " + std::to_string(cfg_.n_domains) + ")");
}

Var PredictorModel::encode_context(Tape& tape, const Tensor2& embeddings) const {
    require(embeddings.rows() >= 1, ErrorKind::InvalidArgument, "context sequence is empty");
    require(embeddings.cols() == cfg_.embed_dim, ErrorKind::Shape,
            "context width " + std::to_string(embeddings.cols()) + " != configured " + std::to_string(cfg_.embed_dim));
    const std::size_t m = embeddings.rows();
    std::vector<Var> xs(m);
    for (std::size_t i = 0; i < m; ++i)
        xs[i] = tape.constant(Tensor2(1, cfg_.embed_dim, {embeddings.row_span(i).begin(), embeddings.row_span(i).end()}));
    std::vector<Var> fwd(m), bwd(m);
    Var h = tape.constant(Tensor2(1, cfg_.hidden));
    for (std::size_t i = 0; i < m; ++i) fwd[i] = h = gru_step(tape, params_, enc_fwd_, xs[i], h);
    h = tape.constant(Tensor2(1, cfg_.hidden));
    for (std::size_t i = m; i-- > 0;) bwd[i] = h = gru_step(tape, params_, enc_bwd_, xs[i], h);
    return tape.concat_cols({tape.concat_rows(fwd), tape.concat_rows(bwd)});
}

Tensor2 PredictorModel::encode_context(const Tensor2& embeddings) const {
    Tape tape;
    return tape.value(encode_context(tape, embeddings));
}

PredictorModel::Step PredictorModel::decoder_step(Tape& tape, std::size_t split, std::uint16_t domain, Var enc_states,
                                                  std::uint32_t y_prev, Var h_prev) const {
    require(split < cfg_.splits, ErrorKind::InvalidArgument, "split index " + std::to_string(split) + " out of range");
    check_domain(domain);
    require(y_prev <= cfg_.groups, ErrorKind::InvalidArgument,
            "previous target id " + std::to_string(y_prev) + " exceeds start token " + std::to_string(cfg_.groups));
    const auto att = bahdanau_attend(tape, params_, attn_, h_prev, enc_states);
    Var dom = tape.gather_rows(tape.param(params_, kDomainTable), {domain});
    Var prev = tape.gather_rows(tape.param(params_, kTargetTable), {y_prev});
    Var h = gru_step(tape, params_, dec_gru_, tape.concat_cols({dom, att.context, prev}), h_prev);
    return {linear(tape, params_, out_head(cfg_, split), h), h, att.weights};
}

Var PredictorModel::loss(Tape& tape, const PredictorExample& ex) const {
    require(ex.context != nullptr, ErrorKind::InvalidArgument, "predictor example has no context");
    require(ex.targets.size() == cfg_.splits, ErrorKind::Shape,
            "target tuple has length " + std::to_string(ex.targets.size()) + ", expected " + std::to_string(cfg_.splits));
    for (auto t : ex.targets)
        require(t < cfg_.groups, ErrorKind::InvalidArgument,
                "target id " + std::to_string(t) + " outside [0, " + std::to_string(cfg_.groups) + ")");
    Var enc = encode_context(tape, *ex.context);
    Var h = tape.constant(Tensor2(1, cfg_.hidden));
    std::uint32_t prev = static_cast<std::uint32_t>(cfg_.groups);
    std::vector<Var> terms;
    for (std::size_t s = 0; s < cfg_.splits; ++s) {
        const Step st = decoder_step(tape, s, ex.domain, enc, prev, h);
        terms.push_back(tape.cross_entropy(st.logits, {ex.targets[s]}));
        h = st.hidden;
        prev = ex.targets[s];
    }
    Var total = terms[0];
    for (std::size_t s = 1; s < terms.size(); ++s) total = tape.add(total, terms[s]);
    return total;
}

std::vector<std::uint32_t> PredictorModel::predict_clusters(const Tensor2& embeddings, std::uint16_t domain,
                                                            Tensor2* attention) const {
    check_domain(domain);
    Tape tape;
    Var enc = encode_context(tape, embeddings);
    Var h = tape.constant(Tensor2(1, cfg_.hidden));
    std::uint32_t prev = static_cast<std::uint32_t>(cfg_.groups);
    std::vector<std::uint32_t> ids;
    if (attention) *attention = Tensor2(cfg_.splits, embeddings.rows());
    for (std::size_t s = 0; s < cfg_.splits; ++s) {
        const Step st = decoder_step(tape, s, domain, enc, prev, h);
        prev = argmax(tape.value(st.logits).row_span(0));
        ids.push_back(prev);
        h = st.hidden;
        if (attention) {
            const auto w = tape.value(st.weights).row_span(0);
            std::copy(w.begin(), w.end(), attention->row_span(s).begin());
        }
    }
    return ids;
}

PredictionRecord PredictorModel::predict_codes(const Tensor2& embeddings, std::uint16_t domain,
                                               const ClusterMap& map) const {
    require(map.splits() == cfg_.splits && map.groups() == cfg_.groups, ErrorKind::Shape,
            "cluster map (S=" + std::to_string(map.splits()) + ", G=" + std::to_string(map.groups()) +
                ") does not match predictor (S=" + std::to_string(cfg_.splits) + ", G=" + std::to_string(cfg_.groups) +
                ")");
    PredictionRecord r;
    r.cluster_ids = predict_clusters(embeddings, domain, &r.attention);
    r.split_code = map.representative_code(r.cluster_ids);
    return r;
}

void PredictorModel::freeze() {
    for (auto& [_, p] : params_.params()) round_to_float(p.value);
}

std::string PredictorModel::encode_file(std::uint64_t cluster_map_hash) const {
    ByteWriter w;
    w.magic("SVQP");
    w.u16(kPredictorVersion);
    w.str(cfg_.to_text());
    w.u64(cluster_map_hash);
    std::vector<std::string> names;
    for (const auto& [name, _] : params_.params()) names.push_back(name);
    write_param_blocks(w, params_, names);
    return w.take();
}

PredictorModel PredictorModel::decode_file(std::string_view bytes, std::uint64_t* cluster_map_hash) {
    ByteReader r(bytes, "predictor file");
    r.expect_magic("SVQP");
    const std::size_t vat = r.offset();
    if (r.u16() != kPredictorVersion) r.corrupt_at(vat, "unsupported predictor version");
    const std::size_t cfg_at = r.offset();
    PredictorConfig cfg;
    try {
        cfg = parse_predictor_config(r.str());
    } catch (const Error& e) {
        r.corrupt_at(cfg_at, e.what());
    }
    const std::uint64_t hash = r.u64();
    PredictorModel model(cfg);
    std::vector<std::string> names;
    for (const auto& [name, _] : model.params_.params()) names.push_back(name);
    read_param_blocks(r, model.params_, names);
    if (!r.at_end()) r.corrupt("trailing bytes after predictor");
    if (cluster_map_hash) *cluster_map_hash = hash;
    return model;
}

PredictorAccuracy predictor_accuracy(const PredictorModel& model, std::span<const PredictorExample> examples) {
    PredictorAccuracy acc;
    const std::size_t s_count = model.config().splits;
    acc.split.assign(s_count, 0.0);
    if (examples.empty()) return acc;
    std::size_t exact = 0;
    for (const auto& ex : examples) {
        const auto ids = model.predict_clusters(*ex.context, ex.domain);
        bool all = true;
        for (std::size_t s = 0; s < s_count; ++s) {
            if (ids[s] == ex.targets[s])
                acc.split[s] += 1.0;
            else
                all = false;
        }
        exact += all ? 1 : 0;
    }
    const double n = static_cast<double>(examples.size());
    for (double& a : acc.split) a /= n;
    acc.exact = static_cast<double>(exact) / n;
    return acc;
}

PredictorTrainResult train_predictor(std::span<const PredictorExample> train, std::span<const PredictorExample> val,
                                     const PredictorConfig& cfg, const PredictorCallback& on_epoch) {
    cfg.validate();
    require(!train.empty(), ErrorKind::InvalidArgument, "cannot train the predictor on an empty dataset");
    for (const auto* set : {&train, &val})
        for (const auto& ex : *set)
            require(ex.targets.size() == cfg.splits, ErrorKind::Shape,
                    "target tuple has length " + std::to_string(ex.targets.size()) + ", expected " +
                        std::to_string(cfg.splits));

    PredictorTrainResult result{PredictorModel(cfg), {}, {}};
    PredictorModel& model = result.model;
    const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
    Rng rng(derive_seed(cfg.seed, 1));
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        PredictorEpoch rec;
        rec.epoch = epoch;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            Tape tape;
            std::vector<Var> losses;
            for (std::size_t i = start; i < end; ++i) losses.push_back(model.loss(tape, train[order[i]]));
            Var total = tape.sum(tape.concat_cols(losses));
            Var mean = tape.scale(total, 1.0 / static_cast<double>(end - start));
            const double lv = tape.value(total)[0];
            require(std::isfinite(lv), ErrorKind::Numeric,
                    "non-finite predictor loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                        std::to_string(start));
            tape.backward(mean);
            adam_step(model.params(), adam);
            rec.train_loss += lv;
        }
        rec.train_loss /= static_cast<double>(train.size());
        if (!val.empty()) {
            const auto acc = predictor_accuracy(model, val);
            rec.val_split_accuracy = acc.split;
            rec.val_exact_accuracy = acc.exact;
        }
        log_info("train-pred epoch " + std::to_string(epoch) + " loss " + std::to_string(rec.train_loss) +
                 " exact " + std::to_string(rec.val_exact_accuracy));
        if (on_epoch) on_epoch(rec);
        result.history.push_back(std::move(rec));
    }
    model.freeze();
    if (!val.empty()) result.validation = predictor_accuracy(model, val);
    return result;
}

}  // namespace svq
