#include "clustering.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "error.hpp"
#include "io.hpp"
#include "rng.hpp"

namespace svq {

namespace {

// Nearest centroid, lowest index on ties.
std::pair<std::size_t, double> nearest(std::span<const double> x, const Tensor2& centroids) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
        const double d = squared_distance(x, centroids.row_span(c));
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return {best, best_d};
}

Tensor2 plus_plus_seeds(const Tensor2& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Tensor2 centroids(k, points.cols());
    auto put = [&](std::size_t c, std::size_t i) {
        const auto src = points.row_span(i);
        std::copy(src.begin(), src.end(), centroids.row_span(c).begin());
    };
    put(0, uniform_index(rng, n));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row_span(i), centroids.row_span(0));
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double d : d2) total += d;
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = uniform_index(rng, n);
        } else {
            double target = uniform(rng, 0.0, total);
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                if (d2[i] > 0.0 && target < d2[i]) {
                    pick = i;
                    break;
                }
                target -= d2[i];
            }
        }
        put(c, pick);
        for (std::size_t i = 0; i < n; ++i)
            d2[i] = std::min(d2[i], squared_distance(points.row_span(i), centroids.row_span(c)));
    }
    return centroids;
}

void assign(const Tensor2& points, const Tensor2& centroids, std::vector<std::size_t>& out) {
    for (std::size_t i = 0; i < points.rows(); ++i) out[i] = nearest(points.row_span(i), centroids).first;
}

// Gives every empty cluster the point farthest from its centroid in the current largest cluster.
void fill_empty(const Tensor2& points, const Tensor2& centroids, std::size_t k, std::vector<std::size_t>& a) {
    for (;;) {
        std::vector<std::size_t> count(k, 0);
        for (auto c : a) ++count[c];
        const auto empty = std::find(count.begin(), count.end(), 0);
        if (empty == count.end()) return;
        const std::size_t largest = std::max_element(count.begin(), count.end()) - count.begin();
        if (count[largest] < 2) return;  // k > distinct assignable points cannot happen when k ≤ N
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] != largest) continue;
            const double d = squared_distance(points.row_span(i), centroids.row_span(largest));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        a[far] = static_cast<std::size_t>(empty - count.begin());
    }
}

double update_means(const Tensor2& points, const std::vector<std::size_t>& a, Tensor2& centroids) {
    const std::size_t k = centroids.rows(), d = points.cols();
    Tensor2 sums(k, d);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++count[a[i]];
        const auto x = points.row_span(i);
        auto s = sums.row_span(a[i]);
        for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (count[c] == 0) continue;
        for (std::size_t j = 0; j < d; ++j) centroids(c, j) = sums(c, j) / static_cast<double>(count[c]);
    }
    double inertia = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) inertia += squared_distance(points.row_span(i), centroids.row_span(a[i]));
    return inertia;
}

std::vector<std::uint64_t> parse_list(std::istringstream& in) {
    std::vector<std::uint64_t> v;
    std::string tok;
    while (in >> tok) {
        require(tok.find_first_not_of("0123456789") == std::string::npos, ErrorKind::Format,
                "cluster map value '" + tok + "' is not a non-negative integer");
        try {
            v.push_back(std::stoull(tok));
        } catch (const std::out_of_range&) {
            fail(ErrorKind::Format, "cluster map value '" + tok + "' is too large");
        }
    }
    return v;
}

std::vector<std::uint32_t> narrow(const std::vector<std::uint64_t>& v) {
    std::vector<std::uint32_t> out;
    for (auto x : v) {
        require(x <= std::numeric_limits<std::uint32_t>::max(), ErrorKind::Format,
                "cluster map index out of range: " + std::to_string(x));
        out.push_back(static_cast<std::uint32_t>(x));
    }
    return out;
}

}  // namespace

KmeansResult kmeans(const Tensor2& points, std::size_t k, std::uint64_t seed, std::size_t max_iterations) {
    require(k >= 1, ErrorKind::InvalidArgument, "kmeans needs k >= 1");
    require(k <= points.rows(), ErrorKind::InvalidArgument,
            "kmeans k=" + std::to_string(k) + " exceeds point count " + std::to_string(points.rows()));
    require(points.all_finite(), ErrorKind::InvalidArgument, "kmeans input contains non-finite values");
    Rng rng(seed);
    KmeansResult r;
    r.centroids = plus_plus_seeds(points, k, rng);
    r.assignments.assign(points.rows(), 0);
    assign(points, r.centroids, r.assignments);
    fill_empty(points, r.centroids, k, r.assignments);
    r.inertia = update_means(points, r.assignments, r.centroids);
    r.inertia_trace.push_back(r.inertia);
    std::vector<std::size_t> next(points.rows());
    for (r.iterations = 1; r.iterations < max_iterations; ++r.iterations) {
        assign(points, r.centroids, next);
        fill_empty(points, r.centroids, k, next);
        if (next == r.assignments) break;
        r.assignments.swap(next);
        const double inertia = update_means(points, r.assignments, r.centroids);
        require(inertia <= r.inertia * (1.0 + 1e-12) + 1e-12, ErrorKind::State,
                "kmeans inertia increased from " + std::to_string(r.inertia) + " to " + std::to_string(inertia));
        r.inertia = inertia;
        r.inertia_trace.push_back(inertia);
    }
    return r;
}

KmeansResult kmeans_best_of(const Tensor2& points, std::size_t k, std::uint64_t seed, std::size_t n_init) {
    require(n_init >= 1, ErrorKind::InvalidArgument, "n_init must be >= 1");
    KmeansResult best;
    for (std::size_t i = 0; i < n_init; ++i) {
        KmeansResult r = kmeans(points, k, derive_seed(seed, i));
        if (i == 0 || r.inertia < best.inertia) best = std::move(r);
    }
    return best;
}

ElbowResult elbow_scan(const Tensor2& points, std::span<const std::size_t> candidates, std::uint64_t seed,
                       const ElbowConfig& cfg) {
    require(!candidates.empty(), ErrorKind::InvalidArgument, "elbow selection needs at least one candidate");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        require(candidates[i] >= 1 && candidates[i] <= points.rows(), ErrorKind::InvalidArgument,
                "elbow candidate " + std::to_string(candidates[i]) + " outside [1, " + std::to_string(points.rows()) + "]");
        require(i == 0 || candidates[i] > candidates[i - 1], ErrorKind::InvalidArgument,
                "elbow candidates must be strictly ascending");
    }
    ElbowResult r;
    r.candidates.assign(candidates.begin(), candidates.end());
    for (std::size_t k : candidates) r.inertias.push_back(kmeans_best_of(points, k, derive_seed(seed, k), cfg.n_init).inertia);

    const std::size_t n = candidates.size();
    std::vector<double> gain(n, 0.0);  // relative improvement from candidate i to i+1
    for (std::size_t i = 0; i + 1 < n; ++i)
        gain[i] = r.inertias[i] > 0.0 ? (r.inertias[i] - r.inertias[i + 1]) / r.inertias[i] : 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (gain[i] < cfg.ratio) {
            r.k = candidates[i];
            return r;
        }
    r.fallback = true;
    r.k = candidates.back();
    double sharpest = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double knee = gain[i - 1] - gain[i];
        if (knee > sharpest) {
            sharpest = knee;
            r.k = candidates[i];
        }
    }
    return r;
}

std::size_t select_k_elbow(const Tensor2& points, std::span<const std::size_t> candidates, std::uint64_t seed,
                           const ElbowConfig& cfg) {
    return elbow_scan(points, candidates, seed, cfg).k;
}

void ClusterMap::validate() const {
    require(k >= 1 && k <= codes, ErrorKind::InvalidArgument,
            "cluster map needs 1 <= k <= K, got k=" + std::to_string(k) + " K=" + std::to_string(codes));
    require(representatives.size() == assignment.size() && !representatives.empty(), ErrorKind::InvalidArgument,
            "cluster map split tables disagree");
    for (std::size_t s = 0; s < splits(); ++s) {
        require(representatives[s].size() == k && assignment[s].size() == codes, ErrorKind::InvalidArgument,
                "cluster map split " + std::to_string(s) + " has wrong table sizes");
        std::vector<bool> seen(codes, false);
        for (std::size_t c = 0; c < k; ++c) {
            const auto rep = representatives[s][c];
            require(rep < codes && !seen[rep], ErrorKind::InvalidArgument,
                    "cluster map split " + std::to_string(s) + " has an invalid or repeated representative");
            seen[rep] = true;
            require(assignment[s][rep] == c, ErrorKind::InvalidArgument,
                    "representative of cluster " + std::to_string(c) + " is not one of its members");
        }
        for (auto a : assignment[s])
            require(a < k, ErrorKind::InvalidArgument, "cluster map assignment out of range");
    }
}

SplitCode ClusterMap::representative_code(std::span<const std::uint32_t> cluster_ids) const {
    require(cluster_ids.size() == splits(), ErrorKind::Shape,
            "expected " + std::to_string(splits()) + " cluster ids, got " + std::to_string(cluster_ids.size()));
    SplitCode code;
    for (std::size_t s = 0; s < splits(); ++s) {
        require(cluster_ids[s] < k, ErrorKind::InvalidArgument, "unknown cluster id " + std::to_string(cluster_ids[s]));
        code.indices.push_back(representatives[s][cluster_ids[s]]);
    }
    return code;
}

ClusterMap build_cluster_map(const SplitCodebookSet& set, std::size_t k, std::uint64_t seed) {
    set.validate();
    require(k >= 1 && k <= set.codes(), ErrorKind::InvalidArgument,
            "cluster count " + std::to_string(k) + " must lie in [1, " + std::to_string(set.codes()) + "]");
    ClusterMap map;
    map.k = k;
    map.seed = seed;
    map.codes = set.codes();
    for (std::size_t s = 0; s < set.splits(); ++s) {
        const Tensor2& codes = set.books[s].codes;
        const KmeansResult km = kmeans(codes, k, derive_seed(seed, s));
        std::vector<std::uint32_t> reps(k, 0);
        std::vector<double> best(k, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < codes.rows(); ++i) {
            const std::size_t c = km.assignments[i];
            const double d = squared_distance(codes.row_span(i), km.centroids.row_span(c));
            if (d < best[c]) {
                best[c] = d;
                reps[c] = static_cast<std::uint32_t>(i);
            }
        }
        map.representatives.push_back(std::move(reps));
        map.assignment.emplace_back(km.assignments.begin(), km.assignments.end());
    }
    map.validate();
    return map;
}

std::vector<std::vector<std::uint32_t>> reduce_targets(std::span<const SplitCode> codes, const ClusterMap& map) {
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(codes.size());
    for (const auto& c : codes) {
        require(c.indices.size() == map.splits(), ErrorKind::Shape,
                "code has " + std::to_string(c.indices.size()) + " splits, cluster map has " +
                    std::to_string(map.splits()));
        std::vector<std::uint32_t> t(map.splits());
        for (std::size_t s = 0; s < map.splits(); ++s) {
            require(c.indices[s] < map.codes, ErrorKind::InvalidArgument,
                    "code index " + std::to_string(c.indices[s]) + " outside codebook of size " +
                        std::to_string(map.codes));
            t[s] = map.assignment[s][c.indices[s]];
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::string cluster_map_text(const ClusterMap& map) {
    map.validate();
    std::ostringstream os;
    os << "svq-cluster-map 1\n"
       << "k " << map.k << "\n"
       << "seed " << map.seed << "\n"
       << "splits " << map.splits() << "\n"
       << "codes " << map.codes << "\n";
    for (std::size_t s = 0; s < map.splits(); ++s) {
        os << "split " << s << "\n";
        for (std::size_t c = 0; c < map.k; ++c) os << "cluster " << c << " code " << map.representatives[s][c] << "\n";
        os << "assign";
        for (auto a : map.assignment[s]) os << ' ' << a;
        os << "\n";
    }
    return os.str();
}

ClusterMap parse_cluster_map(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() {
        for (;;) {
            require(static_cast<bool>(std::getline(in, line)), ErrorKind::Format, "cluster map ends early");
            ++line_no;
            if (!line.empty() && line[0] != '#') break;
        }
    };
    auto next = [&](const char* expect) {
        next_line();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        require(key == expect, ErrorKind::Format,
                "cluster map line " + std::to_string(line_no) + ": expected '" + expect + "', got '" + key + "'");
        return parse_list(ls);
    };
    auto scalar = [&](const char* key) {
        const auto v = next(key);
        require(v.size() == 1, ErrorKind::Format, "cluster map line " + std::to_string(line_no) + " needs one value");
        return v[0];
    };
    const auto version = next("svq-cluster-map");
    require(version.size() == 1 && version[0] == 1, ErrorKind::Format, "unsupported cluster map version");
    ClusterMap map;
    map.k = scalar("k");
    map.seed = scalar("seed");
    const std::size_t splits = scalar("splits");
    map.codes = scalar("codes");
    require(splits >= 1 && map.k >= 1 && map.k <= map.codes, ErrorKind::Format, "cluster map header is inconsistent");
    for (std::size_t s = 0; s < splits; ++s) {
        require(scalar("split") == s, ErrorKind::Format, "cluster map splits out of order");
        std::vector<std::uint32_t> reps;
        for (std::size_t c = 0; c < map.k; ++c) {
            std::string w3;
            std::uint64_t id = 0, code = 0;
            next_line();
            std::istringstream ls(line);
            std::string w1;
            const bool ok = static_cast<bool>(ls >> w1 >> id >> w3 >> code) && w1 == "cluster" && w3 == "code";
            std::string rest;
            require(ok && !(ls >> rest) && id == c && code <= std::numeric_limits<std::uint32_t>::max(),
                    ErrorKind::Format,
                    "cluster map line " + std::to_string(line_no) + ": expected 'cluster " + std::to_string(c) +
                        " code <index>'");
            reps.push_back(static_cast<std::uint32_t>(code));
        }
        map.representatives.push_back(std::move(reps));
        map.assignment.push_back(narrow(next("assign")));
    }
    try {
        map.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Format, std::string("cluster map is inconsistent: ") + e.what());
    }
    return map;
}

std::uint64_t cluster_map_hash(const ClusterMap& map) { return fnv1a64(cluster_map_text(map)); }

}  // namespace svq
