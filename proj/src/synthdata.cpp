#include "synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "error.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace svq {

namespace {

constexpr std::uint16_t kCorpusVersion = 1;
constexpr std::uint16_t kFactorVersion = 1;

enum Role : std::size_t { kPace = 0, kEnergy = 1, kOffset = 2, kSlope = 3 };

double factor_or_zero(std::span<const double> f, std::size_t role) { return role < f.size() ? f[role] : 0.0; }

}  // namespace

void Utterance::validate() const {
    require(frames.rows() >= 1 && frames.cols() >= 1, ErrorKind::InvalidArgument,
            "utterance " + std::to_string(id) + " has no frames");
    require(context.rows() >= 1 && context.cols() >= 1, ErrorKind::InvalidArgument,
            "utterance " + std::to_string(id) + " has no context embeddings");
    require(frames.all_finite() && context.all_finite(), ErrorKind::Numeric,
            "utterance " + std::to_string(id) + " contains non-finite values");
}

void CorpusSpec::validate() const {
    require(n_utterances > 0 && n_domains > 0 && n_factors > 0 && frame_dim > 0 && embed_dim > 0, ErrorKind::InvalidArgument,
            "corpus counts must be positive");
    require(n_domains <= 65535, ErrorKind::InvalidArgument, "at most 65535 domains");
    require(t_min >= 1 && t_min <= t_max, ErrorKind::InvalidArgument, "need 1 <= t_min <= t_max");
    require(m_min >= 1 && m_min <= m_max, ErrorKind::InvalidArgument, "need 1 <= m_min <= m_max");
    require(predictability >= 0.0 && predictability <= 1.0, ErrorKind::InvalidArgument, "predictability must lie in [0, 1]");
    require(frame_noise >= 0.0 && context_noise >= 0.0 && domain_shift >= 0.0 && factor_spread >= 0.0 && domain_skew >= 0.0,
            ErrorKind::InvalidArgument, "noise, shift, spread and skew must be >= 0");
}

CorpusGenerator::CorpusGenerator(CorpusSpec spec) : spec_(spec) {
    spec_.validate();
    Rng rng(derive_seed(spec_.seed, 0));
    const std::size_t f = spec_.frame_dim;
    for (std::size_t j = 0; j < f; ++j) {
        period_.push_back(uniform(rng, 6.0, 24.0));
        phase_.push_back(uniform(rng, 0.0, 2.0 * std::numbers::pi));
        gain_.push_back(uniform(rng, 0.5, 1.0));
        offset_dir_.push_back(0.5 * normal(rng));
        slope_dir_.push_back(0.5 * normal(rng));
    }
    for (std::size_t k = 4; k < spec_.n_factors; ++k) {
        std::vector<double> dir(f);
        for (double& x : dir) x = 0.5 * normal(rng);
        extra_dirs_.push_back(std::move(dir));
    }
    for (std::size_t d = 0; d < spec_.n_domains; ++d) {
        std::vector<double> mean(spec_.n_factors);
        for (double& x : mean) x = spec_.domain_shift * normal(rng);
        domain_means_.push_back(std::move(mean));
    }
    double total = 0.0;
    for (std::size_t d = 0; d < spec_.n_domains; ++d) {
        total += std::exp(-spec_.domain_skew * static_cast<double>(d));
        domain_cdf_.push_back(total);
    }
    for (double& c : domain_cdf_) c /= total;
    projection_ = Tensor2(spec_.n_factors, spec_.embed_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec_.n_factors));
    for (double& x : projection_.data()) x = scale * normal(rng);
}

double CorpusGenerator::pace_of(std::span<const double> factors) const {
    return std::exp(0.2 * factor_or_zero(factors, kPace));
}

double CorpusGenerator::amplitude_of(std::span<const double> factors) const {
    return std::max(0.1, 1.0 + 0.25 * factor_or_zero(factors, kEnergy));
}

double CorpusGenerator::pattern(std::size_t j, std::size_t t, double pace) const {
    return std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / (period_[j] * pace) + phase_[j]);
}

double CorpusGenerator::frame_value(std::span<const double> factors, std::size_t j, std::size_t t,
                                    std::size_t length) const {
    const double ramp = length > 1 ? 2.0 * static_cast<double>(t) / static_cast<double>(length - 1) - 1.0 : 0.0;
    double v = amplitude_of(factors) * gain_[j] * pattern(j, t, pace_of(factors));
    v += 0.5 * factor_or_zero(factors, kOffset) * offset_dir_[j];
    v += 0.5 * factor_or_zero(factors, kSlope) * slope_dir_[j] * ramp;
    for (std::size_t k = 4; k < factors.size(); ++k) v += 0.5 * factors[k] * extra_dirs_[k - 4][j];
    return v;
}

std::vector<double> CorpusGenerator::project(std::span<const double> z) const {
    std::vector<double> out(spec_.embed_dim, 0.0);
    for (std::size_t k = 0; k < z.size(); ++k)
        for (std::size_t e = 0; e < spec_.embed_dim; ++e) out[e] += z[k] * projection_(k, e);
    return out;
}

GeneratedUtterance CorpusGenerator::generate(std::size_t index) const {
    Rng rng(derive_seed(spec_.seed, index + 1));
    GeneratedUtterance g;
    Utterance& u = g.utterance;
    u.id = index;

    const double pick = uniform(rng, 0.0, 1.0);
    std::size_t d = 0;
    while (d + 1 < domain_cdf_.size() && pick >= domain_cdf_[d]) ++d;
    u.domain = static_cast<std::uint16_t>(d);

    g.style_factors.resize(spec_.n_factors);
    for (std::size_t k = 0; k < spec_.n_factors; ++k)
        g.style_factors[k] = domain_means_[d][k] + spec_.factor_spread * normal(rng);

    const std::size_t t_len = spec_.t_min + uniform_index(rng, spec_.t_max - spec_.t_min + 1);
    const std::size_t m_len = spec_.m_min + uniform_index(rng, spec_.m_max - spec_.m_min + 1);

    u.frames = Tensor2(t_len, spec_.frame_dim);
    for (std::size_t t = 0; t < t_len; ++t)
        for (std::size_t j = 0; j < spec_.frame_dim; ++j)
            u.frames(t, j) = frame_value(g.style_factors, j, t, t_len) + spec_.frame_noise * normal(rng);

    std::vector<double> mix(spec_.n_factors);
    const double rho = spec_.predictability;
    for (std::size_t k = 0; k < spec_.n_factors; ++k) mix[k] = rho * g.style_factors[k] + (1.0 - rho) * normal(rng);
    const auto base = project(mix);
    u.context = Tensor2(m_len, spec_.embed_dim);
    for (std::size_t m = 0; m < m_len; ++m)
        for (std::size_t e = 0; e < spec_.embed_dim; ++e) u.context(m, e) = base[e] + spec_.context_noise * normal(rng);

    round_to_float(u.frames);
    round_to_float(u.context);
    return g;
}

std::vector<GeneratedUtterance> generate_corpus(const CorpusSpec& spec) {
    CorpusGenerator gen(spec);
    std::vector<GeneratedUtterance> out;
    out.reserve(spec.n_utterances);
    for (std::size_t i = 0; i < spec.n_utterances; ++i) out.push_back(gen.generate(i));
    return out;
}

Corpus strip_factors(const std::vector<GeneratedUtterance>& generated) {
    Corpus c;
    c.reserve(generated.size());
    for (const auto& g : generated) c.push_back(g.utterance);
    return c;
}

FactorTable factor_table(const std::vector<GeneratedUtterance>& generated) {
    FactorTable t;
    t.n_factors = generated.empty() ? 0 : generated.front().style_factors.size();
    for (const auto& g : generated) {
        t.ids.push_back(g.utterance.id);
        std::vector<double> f = g.style_factors;
        round_to_float(f);
        t.factors.push_back(std::move(f));
    }
    return t;
}

CorpusStats corpus_stats(std::span<const Utterance> corpus, const FactorTable* factors) {
    require(!corpus.empty(), ErrorKind::InvalidArgument, "statistics of an empty corpus");
    CorpusStats s;
    s.n_utterances = corpus.size();
    std::size_t n_domains = 0;
    for (const auto& u : corpus) n_domains = std::max<std::size_t>(n_domains, u.domain + 1u);
    s.domain_counts.assign(n_domains, 0);

    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    s.min_energy = std::numeric_limits<double>::infinity();
    s.max_energy = 0.0;
    s.min_length = std::numeric_limits<std::size_t>::max();
    for (const auto& u : corpus) {
        ++s.domain_counts[u.domain];
        double e = 0.0;
        for (double v : u.frames.data()) {
            sum += v;
            sum_sq += v * v;
            e += v * v;
        }
        count += u.frames.size();
        e /= static_cast<double>(u.frames.size());
        s.mean_energy += e;
        s.min_energy = std::min(s.min_energy, e);
        s.max_energy = std::max(s.max_energy, e);
        s.min_length = std::min(s.min_length, u.length());
        s.max_length = std::max(s.max_length, u.length());
    }
    s.mean_energy /= static_cast<double>(corpus.size());
    s.frame_mean = sum / static_cast<double>(count);
    s.frame_std = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - s.frame_mean * s.frame_mean));

    if (factors) {
        require(factors->ids.size() == corpus.size(), ErrorKind::Shape, "factor table does not match corpus size");
        s.factor_means.assign(n_domains, std::vector<double>(factors->n_factors, 0.0));
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            require(factors->ids[i] == corpus[i].id, ErrorKind::InvalidArgument,
                    "factor table id " + std::to_string(factors->ids[i]) + " does not match utterance " +
                        std::to_string(corpus[i].id));
            for (std::size_t k = 0; k < factors->n_factors; ++k)
                s.factor_means[corpus[i].domain][k] += factors->factors[i][k];
        }
        for (std::size_t d = 0; d < n_domains; ++d)
            for (double& m : s.factor_means[d])
                if (s.domain_counts[d] > 0) m /= static_cast<double>(s.domain_counts[d]);
    }
    return s;
}

std::string format_stats(const CorpusStats& s) {
    std::ostringstream os;
    os << "utterances " << s.n_utterances << "\n";
    for (std::size_t d = 0; d < s.domain_counts.size(); ++d) {
        os << "domain " << d << " count " << s.domain_counts[d];
        if (d < s.factor_means.size()) {
            os << " factor_means";
            for (double m : s.factor_means[d]) os << " " << m;
        }
        os << "\n";
    }
    os << "length min " << s.min_length << " max " << s.max_length << "\n";
    os << "frame mean " << s.frame_mean << " std " << s.frame_std << "\n";
    os << "energy mean " << s.mean_energy << " min " << s.min_energy << " max " << s.max_energy << "\n";
    return os.str();
}

CorpusSplit split_corpus(const Corpus& corpus, double heldout_fraction) {
    require(heldout_fraction >= 0.0 && heldout_fraction < 1.0, ErrorKind::InvalidArgument,
            "held-out fraction must lie in [0, 1)");
    const auto n = corpus.size();
    const auto held = static_cast<std::size_t>(std::ceil(heldout_fraction * static_cast<double>(n)));
    CorpusSplit s;
    s.train.assign(corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(n - held));
    s.heldout.assign(corpus.begin() + static_cast<std::ptrdiff_t>(n - held), corpus.end());
    return s;
}

std::string encode_corpus(std::span<const Utterance> corpus) {
    ByteWriter w;
    w.magic("SVQD");
    w.u16(kCorpusVersion);
    w.u32(static_cast<std::uint32_t>(corpus.size()));
    for (const auto& u : corpus) {
        w.u64(u.id);
        w.u16(u.domain);
        w.u32(static_cast<std::uint32_t>(u.frames.rows()));
        w.u32(static_cast<std::uint32_t>(u.context.rows()));
        w.u32(static_cast<std::uint32_t>(u.frames.cols()));
        w.u32(static_cast<std::uint32_t>(u.context.cols()));
        for (double v : u.frames.data()) w.f32_from(v);
        for (double v : u.context.data()) w.f32_from(v);
        w.u8(u.gold_code ? 1 : 0);
        if (u.gold_code) {
            w.u16(static_cast<std::uint16_t>(u.gold_code->indices.size()));
            for (auto i : u.gold_code->indices) w.u32(i);
        }
    }
    return w.take();
}

Corpus decode_corpus(std::string_view bytes) {
    ByteReader r(bytes, "corpus file");
    r.expect_magic("SVQD");
    const std::size_t vat = r.offset();
    if (r.u16() != kCorpusVersion) r.corrupt_at(vat, "unsupported corpus version");
    const std::uint32_t n = r.u32();
    Corpus c;
    c.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        Utterance u;
        u.id = r.u64();
        u.domain = r.u16();
        const std::size_t dims_at = r.offset();
        const std::uint32_t t = r.u32(), m = r.u32(), f = r.u32(), e = r.u32();
        if (t == 0 || m == 0 || f == 0 || e == 0) r.corrupt_at(dims_at, "utterance with an empty dimension");
        if (static_cast<std::uint64_t>(t) * f * 4 + static_cast<std::uint64_t>(m) * e * 4 > r.remaining())
            r.corrupt_at(dims_at, "utterance dimensions exceed file size");
        std::vector<double> frames(static_cast<std::size_t>(t) * f), ctx(static_cast<std::size_t>(m) * e);
        for (double& v : frames) v = r.f32();
        for (double& v : ctx) v = r.f32();
        u.frames = Tensor2(t, f, std::move(frames));
        u.context = Tensor2(m, e, std::move(ctx));
        const std::size_t flag_at = r.offset();
        const std::uint8_t flag = r.u8();
        if (flag > 1) r.corrupt_at(flag_at, "gold-code flag must be 0 or 1");
        if (flag) {
            SplitCode code;
            const std::uint16_t s = r.u16();
            for (std::uint16_t k = 0; k < s; ++k) code.indices.push_back(r.u32());
            u.gold_code = std::move(code);
        }
        c.push_back(std::move(u));
    }
    if (!r.at_end()) r.corrupt("trailing bytes after last utterance");
    return c;
}

std::string encode_factors(const FactorTable& table) {
    ByteWriter w;
    w.magic("SVQF");
    w.u16(kFactorVersion);
    w.u32(static_cast<std::uint32_t>(table.ids.size()));
    w.u32(static_cast<std::uint32_t>(table.n_factors));
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
        w.u64(table.ids[i]);
        for (double v : table.factors[i]) w.f32_from(v);
    }
    return w.take();
}

FactorTable decode_factors(std::string_view bytes) {
    ByteReader r(bytes, "factor file");
    r.expect_magic("SVQF");
    const std::size_t vat = r.offset();
    if (r.u16() != kFactorVersion) r.corrupt_at(vat, "unsupported factor file version");
    FactorTable t;
    const std::uint32_t n = r.u32();
    t.n_factors = r.u32();
    for (std::uint32_t i = 0; i < n; ++i) {
        t.ids.push_back(r.u64());
        std::vector<double> f(t.n_factors);
        for (double& v : f) v = r.f32();
        t.factors.push_back(std::move(f));
    }
    if (!r.at_end()) r.corrupt("trailing bytes after last record");
    return t;
}

}  // namespace svq
