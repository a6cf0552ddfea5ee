#include "eval.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "error.hpp"
#include "log.hpp"

namespace svq {

std::vector<SplitCode> domain_centroid_codes(const AeModel& model, std::span<const EmbedRecord> train_records) {
    require(model.config().bottleneck.quantized(), ErrorKind::State, "centroid codes need a vq or svq model");
    require(!train_records.empty(), ErrorKind::InvalidArgument, "centroid codes need at least one embedded utterance");
    const auto set = model.codebooks();
    std::vector<std::vector<std::vector<double>>> by_domain(model.config().n_domains);
    std::vector<std::vector<double>> all;
    for (const auto& r : train_records) {
        require(r.domain < by_domain.size(), ErrorKind::InvalidArgument,
                "embedding " + std::to_string(r.id) + " has unknown domain " + std::to_string(r.domain));
        by_domain[r.domain].push_back(r.summary);
        all.push_back(r.summary);
    }
    std::vector<SplitCode> out;
    for (std::size_t d = 0; d < by_domain.size(); ++d) {
        if (by_domain[d].empty()) log_warn("domain " + std::to_string(d) + " has no training utterances; using the global mean");
        out.push_back(centroid_code(by_domain[d].empty() ? all : by_domain[d], set));
    }
    return out;
}

std::string centroids_text(std::span<const SplitCode> codes) {
    require(!codes.empty(), ErrorKind::InvalidArgument, "no centroid codes to write");
    std::ostringstream os;
    os << "svq-centroids 1\n"
       << "domains " << codes.size() << "\n"
       << "splits " << codes.front().indices.size() << "\n";
    for (std::size_t d = 0; d < codes.size(); ++d) {
        require(codes[d].indices.size() == codes.front().indices.size(), ErrorKind::Shape,
                "centroid codes disagree on split count");
        os << "domain " << d;
        for (auto i : codes[d].indices) os << ' ' << i;
        os << "\n";
    }
    return os.str();
}

std::vector<SplitCode> parse_centroids(const std::string& text) {
    std::istringstream in(text);
    std::string key;
    long long version = 0, domains = 0, splits = 0;
    in >> key >> version;
    require(in && key == "svq-centroids" && version == 1, ErrorKind::Format, "not a centroid file (bad header)");
    in >> key >> domains;
    require(in && key == "domains" && domains > 0, ErrorKind::Format, "centroid file: bad 'domains' line");
    in >> key >> splits;
    require(in && key == "splits" && splits > 0, ErrorKind::Format, "centroid file: bad 'splits' line");
    std::vector<SplitCode> out(static_cast<std::size_t>(domains));
    for (long long d = 0; d < domains; ++d) {
        long long id = -1;
        in >> key >> id;
        require(in && key == "domain" && id == d, ErrorKind::Format,
                "centroid file: expected 'domain " + std::to_string(d) + "'");
        for (long long s = 0; s < splits; ++s) {
            long long v = -1;
            in >> v;
            require(in && v >= 0 && v <= 0xffffffffLL, ErrorKind::Format,
                    "centroid file: bad code index for domain " + std::to_string(d));
            out[d].indices.push_back(static_cast<std::uint32_t>(v));
        }
    }
    in >> key;
    require(!in, ErrorKind::Format, "centroid file: trailing content");
    return out;
}

EvalReport evaluate(const AeModel& model, std::span<const Utterance> heldout, std::span<const SplitCode> centroids,
                    const PredictorModel& predictor, const ClusterMap& map) {
    require(model.config().bottleneck.quantized(), ErrorKind::State, "evaluation needs a vq or svq model");
    require(!heldout.empty(), ErrorKind::InvalidArgument, "evaluation needs at least one held-out utterance");
    require(centroids.size() == model.config().n_domains, ErrorKind::Shape, "one centroid code per domain required");
    const auto set = model.codebooks();
    require(map.splits() == set.splits() && map.codes == set.codes(), ErrorKind::Shape,
            "cluster map does not match the model's codebooks");
    EvalReport r;
    r.n_heldout = heldout.size();
    std::vector<PredictorExample> examples;
    std::vector<SplitCode> oracle_codes;
    for (const auto& u : heldout) {
        const EmbedRecord e = model.embed(u);
        r.mse_oracle += model.reconstruction_mse(u, e.latent);
        r.mse_centroid += model.reconstruction_mse(u, dequantize(centroids[u.domain], set));
        const auto pred = predictor.predict_codes(u.context, u.domain, map);
        r.mse_predicted += model.reconstruction_mse(u, dequantize(pred.split_code, set));
        oracle_codes.push_back(std::get<SplitCode>(e.code));
    }
    const double n = static_cast<double>(heldout.size());
    r.mse_oracle /= n;
    r.mse_centroid /= n;
    r.mse_predicted /= n;
    const double gap = r.mse_centroid - r.mse_oracle;
    r.gap_closure = gap > 0.0 ? (r.mse_centroid - r.mse_predicted) / gap * 100.0 : 0.0;
    r.oracle_best = r.mse_oracle <= r.mse_centroid && r.mse_oracle <= r.mse_predicted;
    if (!r.oracle_best) log_warn("oracle codes do not give the lowest reconstruction error");

    const auto targets = reduce_targets(oracle_codes, map);
    for (std::size_t i = 0; i < heldout.size(); ++i)
        examples.push_back({&heldout[i].context, heldout[i].domain, targets[i]});
    r.accuracy = predictor_accuracy(predictor, examples);
    return r;
}

std::string format_report(const EvalReport& r) {
    std::ostringstream os;
    os << std::setprecision(6) << "heldout_utterances = " << r.n_heldout << "\n"
       << "mse_oracle = " << r.mse_oracle << "\n"
       << "mse_centroid = " << r.mse_centroid << "\n"
       << "mse_predicted = " << r.mse_predicted << "\n"
       << "gap_closure_percent = " << r.gap_closure << "\n"
       << "oracle_best = " << (r.oracle_best ? "true" : "false") << "\n"
       << "predictor_exact_accuracy = " << r.accuracy.exact << "\n"
       << "predictor_split_accuracy =";
    for (double a : r.accuracy.split) os << ' ' << a;
    os << "\n";
    return os.str();
}

Tensor2 pca_2d(const Tensor2& points) {
    require(points.rows() >= 1 && points.cols() >= 1, ErrorKind::InvalidArgument, "PCA needs a non-empty matrix");
    const Eigen::Index n = static_cast<Eigen::Index>(points.rows()), d = static_cast<Eigen::Index>(points.cols());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = points(i, j);
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(std::max<Eigen::Index>(1, n - 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    require(eig.info() == Eigen::Success, ErrorKind::Numeric, "PCA eigendecomposition failed");
    Tensor2 out(points.rows(), 2);
    for (int axis = 0; axis < 2 && axis < d; ++axis) {
        Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - axis);  // ascending eigenvalues
        Eigen::Index big = 0;
        v.cwiseAbs().maxCoeff(&big);
        if (v(big) < 0) v = -v;
        const Eigen::VectorXd proj = x * v;
        for (Eigen::Index i = 0; i < n; ++i) out(i, axis) = proj(i);
    }
    return out;
}

std::vector<ProjectionRow> project_codebooks(const SplitCodebookSet& set, const ClusterMap* map) {
    set.validate();
    if (map)
        require(map->splits() == set.splits() && map->codes == set.codes(), ErrorKind::Shape,
                "cluster map does not match the codebooks");
    std::vector<ProjectionRow> rows;
    for (std::size_t s = 0; s < set.splits(); ++s) {
        const Tensor2 xy = pca_2d(set.books[s].codes);
        for (std::size_t k = 0; k < set.codes(); ++k)
            rows.push_back({s, k, map ? static_cast<long long>(map->assignment[s][k]) : -1, xy(k, 0), xy(k, 1)});
    }
    return rows;
}

std::string projection_csv(std::span<const ProjectionRow> rows) {
    std::ostringstream os;
    os << "split,code_index,cluster_id,x,y\n" << std::setprecision(9);
    for (const auto& r : rows) os << r.split << ',' << r.code_index << ',' << r.cluster_id << ',' << r.x << ',' << r.y << "\n";
    return os.str();
}

}  // namespace svq
