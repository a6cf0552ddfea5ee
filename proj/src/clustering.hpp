#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "quantizer.hpp"
#include "tensor.hpp"

namespace svq {

struct KmeansResult {
    Tensor2 centroids;                 // k×D
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> inertia_trace;  // one entry per Lloyd iteration
};

// Lloyd's algorithm from k-means++ seeds. Stops when assignments stop changing or after
// max_iterations. An empty cluster takes the point farthest from its centroid in the
// largest cluster. Throws if inertia ever increases between iterations.
KmeansResult kmeans(const Tensor2& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations = 300);

// Lowest-inertia result over n_init independently seeded runs.
KmeansResult kmeans_best_of(const Tensor2& points, std::size_t k, std::uint64_t seed, std::size_t n_init);

struct ElbowConfig {
    double ratio = 0.15;
    std::size_t n_init = 3;
};

struct ElbowResult {
    std::size_t k = 0;
    std::vector<std::size_t> candidates;
    std::vector<double> inertias;
    bool fallback = false;  // no candidate met the ratio; picked the sharpest knee
};

// Picks the first candidate whose relative inertia improvement to the next candidate is
// below cfg.ratio. Candidates must be ascending, ≥ 1 and ≤ N.
ElbowResult elbow_scan(const Tensor2& points, std::span<const std::size_t> candidates, std::uint64_t seed,
                       const ElbowConfig& cfg = {});
std::size_t select_k_elbow(const Tensor2& points, std::span<const std::size_t> candidates, std::uint64_t seed,
                           const ElbowConfig& cfg = {});

// Per split: k-means over that codebook's codes, each cluster represented by its member
// code nearest the cluster mean.
struct ClusterMap {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t codes = 0;                                // K
    std::vector<std::vector<std::uint32_t>> representatives;  // [split][cluster] -> code index
    std::vector<std::vector<std::uint32_t>> assignment;       // [split][code] -> cluster

    std::size_t splits() const { return representatives.size(); }
    std::size_t groups() const { return k; }
    void validate() const;
    SplitCode representative_code(std::span<const std::uint32_t> cluster_ids) const;
    friend bool operator==(const ClusterMap&, const ClusterMap&) = default;
};

ClusterMap build_cluster_map(const SplitCodebookSet& set, std::size_t k, std::uint64_t seed);

std::vector<std::vector<std::uint32_t>> reduce_targets(std::span<const SplitCode> codes, const ClusterMap& map);

// Line-oriented text form; parse_cluster_map(cluster_map_text(m)) == m.
std::string cluster_map_text(const ClusterMap& map);
ClusterMap parse_cluster_map(const std::string& text);
std::uint64_t cluster_map_hash(const ClusterMap& map);

}  // namespace svq
