#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "clustering.hpp"
#include "predictor.hpp"
#include "seqae.hpp"

namespace svq {

// Per-domain centroid codes from training-set encoder outputs; a domain with no
// training utterances falls back to the mean over all of them.
std::vector<SplitCode> domain_centroid_codes(const AeModel& model, std::span<const EmbedRecord> train_records);

// "svq-centroids 1" text: one line per domain with its S code indices.
std::string centroids_text(std::span<const SplitCode> codes);
std::vector<SplitCode> parse_centroids(const std::string& text);

struct EvalReport {
    std::size_t n_heldout = 0;
    double mse_oracle = 0.0;
    double mse_centroid = 0.0;
    double mse_predicted = 0.0;
    // (centroid − predicted) / (centroid − oracle) · 100; 0 when the denominator is not positive.
    double gap_closure = 0.0;
    bool oracle_best = true;
    PredictorAccuracy accuracy;  // predicted vs oracle cluster ids on the held-out set
};

// Decodes every held-out utterance from its own code, its domain's centroid code and
// the predictor's code, and compares frame MSE.
EvalReport evaluate(const AeModel& model, std::span<const Utterance> heldout, std::span<const SplitCode> centroids,
                    const PredictorModel& predictor, const ClusterMap& map);

std::string format_report(const EvalReport& r);

struct ProjectionRow {
    std::size_t split = 0;
    std::size_t code_index = 0;
    long long cluster_id = -1;  // -1 without a cluster map
    double x = 0.0;
    double y = 0.0;
};

// Top-two principal-component coordinates of the rows of `points` (N×2). Each axis is
// signed so that its largest-magnitude loading is positive.
Tensor2 pca_2d(const Tensor2& points);

std::vector<ProjectionRow> project_codebooks(const SplitCodebookSet& set, const ClusterMap* map);
std::string projection_csv(std::span<const ProjectionRow> rows);

}  // namespace svq
