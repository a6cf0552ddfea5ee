#include "inspect.hpp"

#include <iomanip>
#include <sstream>

#include "error.hpp"
#include "eval.hpp"
#include "io.hpp"
#include "predictor.hpp"
#include "seqae.hpp"
#include "synthdata.hpp"

namespace svq {

namespace {

void describe_codebooks(std::ostringstream& os, const SplitCodebookSet& set) {
    os << "splits = " << set.splits() << "\ncodes = " << set.codes() << "\ncode_dim = " << set.dim()
       << "\ncapacity_bits = " << capacity_bits(set.splits(), set.codes()) << "\n";
    for (std::size_t s = 0; s < set.splits(); ++s) {
        double total = 0.0;
        for (double u : set.books[s].ema_usage) total += u;
        os << "split " << s << " usage_perplexity = ";
        if (total > 0.0)
            os << perplexity(set.books[s].ema_usage) << "\n";
        else
            os << "n/a\n";
    }
}

}  // namespace

std::string describe_artifact(std::string_view bytes) {
    std::ostringstream os;
    os << std::setprecision(6);
    const std::string_view magic = bytes.substr(0, 4);
    if (magic == "SVQD") {
        const Corpus c = decode_corpus(bytes);
        os << "kind = corpus\n" << format_stats(corpus_stats(c));
    } else if (magic == "SVQF") {
        const FactorTable t = decode_factors(bytes);
        os << "kind = factors\nrecords = " << t.ids.size() << "\nn_factors = " << t.n_factors << "\n";
    } else if (magic == "SVQC") {
        os << "kind = codebooks\n";
        describe_codebooks(os, decode_codebooks(bytes));
    } else if (magic == "SVQM") {
        const AeModel m = AeModel::decode_file(bytes);
        os << "kind = autoencoder\nparameters = " << m.params().count() << "\n" << m.config().to_text();
        if (m.config().bottleneck.quantized()) describe_codebooks(os, m.codebooks());
    } else if (magic == "SVQE") {
        const auto recs = decode_embeddings(bytes);
        os << "kind = embeddings\nrecords = " << recs.size() << "\n";
        if (!recs.empty())
            os << "summary_width = " << recs.front().summary.size() << "\nlatent_width = " << recs.front().latent.size()
               << "\nquantized = " << (std::holds_alternative<SplitCode>(recs.front().code) ? "true" : "false") << "\n";
    } else if (magic == "SVQP") {
        std::uint64_t hash = 0;
        const PredictorModel p = PredictorModel::decode_file(bytes, &hash);
        os << "kind = predictor\nparameters = " << p.params().count() << "\ncluster_map_hash = " << std::hex << hash
           << std::dec << "\n"
           << p.config().to_text();
    } else if (bytes.starts_with("svq-cluster-map")) {
        const ClusterMap m = parse_cluster_map(std::string(bytes));
        os << "kind = cluster_map\nk = " << m.k << "\nsplits = " << m.splits() << "\ncodes = " << m.codes
           << "\nseed = " << m.seed << "\nhash = " << std::hex << cluster_map_hash(m) << std::dec << "\n";
    } else if (bytes.starts_with("svq-centroids")) {
        const auto codes = parse_centroids(std::string(bytes));
        os << "kind = centroids\n" << centroids_text(codes);
    } else {
        fail(ErrorKind::Format, "unrecognized artifact (no known magic or header)");
    }
    return os.str();
}

}  // namespace svq
