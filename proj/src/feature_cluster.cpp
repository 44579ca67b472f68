#include "fedcox/feature_cluster.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <boost/random/uniform_int_distribution.hpp>

namespace fedcox {

FeatureRegistry::FeatureRegistry(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (!index_.emplace(names_[i], i).second) {
            throw InputError("duplicate feature in registry: " + names_[i]);
        }
    }
}

FeatureRegistry FeatureRegistry::from_feature_lists(
    const std::vector<std::vector<std::string>>& lists) {
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& list : lists) {
        for (const auto& name : list) {
            if (seen.insert(name).second) names.push_back(name);
        }
    }
    return FeatureRegistry(std::move(names));
}

std::size_t FeatureRegistry::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw InputError("feature not in registry: " + name);
    return it->second;
}

FeaturePresenceVector build_presence_vector(const std::set<std::string>& features,
                                            const FeatureRegistry& registry,
                                            std::string center_id) {
    FeaturePresenceVector out{std::move(center_id), BitPattern(registry.size(), 0)};
    for (const auto& name : features) out.bits[registry.index_of(name)] = 1;
    return out;
}

int hamming_distance(const BitPattern& a, const BitPattern& b) {
    if (a.size() != b.size()) throw InputError("bit patterns differ in length");
    int d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
    return d;
}

int clustering_objective(const std::vector<FeaturePresenceVector>& vectors,
                         const std::vector<int>& labels, const std::vector<BitPattern>& centroids) {
    int total = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        total += hamming_distance(vectors[i].bits, centroids[static_cast<std::size_t>(labels[i])]);
    }
    return total;
}

BitPattern majority_centroid(const std::vector<FeaturePresenceVector>& vectors,
                             const std::vector<int>& labels, int cluster) {
    const std::size_t p = vectors.empty() ? 0 : vectors.front().bits.size();
    std::vector<int> ones(p, 0);
    int members = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (labels[i] != cluster) continue;
        ++members;
        for (std::size_t b = 0; b < p; ++b) ones[b] += vectors[i].bits[b];
    }
    BitPattern centroid(p, 0);
    for (std::size_t b = 0; b < p; ++b) centroid[b] = 2 * ones[b] >= members ? 1 : 0;
    return centroid;
}

namespace {

int nearest_centroid(const BitPattern& bits, const std::vector<BitPattern>& centroids) {
    int best = 0;
    int best_distance = hamming_distance(bits, centroids[0]);
    for (std::size_t j = 1; j < centroids.size(); ++j) {
        const int d = hamming_distance(bits, centroids[j]);
        if (d < best_distance) {
            best_distance = d;
            best = static_cast<int>(j);
        }
    }
    return best;
}

// Moves worst-fit vectors into empty clusters until none is empty.
void repair_empty_clusters(const std::vector<FeaturePresenceVector>& vectors,
                           std::vector<int>& labels, std::vector<BitPattern>& centroids) {
    const int c = static_cast<int>(centroids.size());
    for (;;) {
        std::vector<int> sizes(static_cast<std::size_t>(c), 0);
        for (int label : labels) ++sizes[static_cast<std::size_t>(label)];
        auto empty = std::find(sizes.begin(), sizes.end(), 0);
        if (empty == sizes.end()) return;

        int worst = -1;
        int worst_distance = -1;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            const auto label = static_cast<std::size_t>(labels[i]);
            if (sizes[label] < 2) continue;
            const int d = hamming_distance(vectors[i].bits, centroids[label]);
            if (d > worst_distance) {
                worst_distance = d;
                worst = static_cast<int>(i);
            }
        }
        const int target = static_cast<int>(std::distance(sizes.begin(), empty));
        labels[static_cast<std::size_t>(worst)] = target;
        centroids[static_cast<std::size_t>(target)] = vectors[static_cast<std::size_t>(worst)].bits;
    }
}

// Per-bit one counts and sizes of each cluster.
struct ClusterCounts {
    std::vector<std::vector<int>> ones;
    std::vector<int> size;

    ClusterCounts(const std::vector<FeaturePresenceVector>& vectors, const std::vector<int>& labels,
                  int c, std::size_t p)
        : ones(static_cast<std::size_t>(c), std::vector<int>(p, 0)),
          size(static_cast<std::size_t>(c), 0) {
        for (std::size_t i = 0; i < vectors.size(); ++i) add(vectors[i].bits, labels[i], 1);
    }

    void add(const BitPattern& bits, int cluster, int sign) {
        auto& row = ones[static_cast<std::size_t>(cluster)];
        for (std::size_t b = 0; b < bits.size(); ++b) row[b] += sign * bits[b];
        size[static_cast<std::size_t>(cluster)] += sign;
    }
};

// Change in the optimal-centroid objective if `bits` leaves `from` and joins `to`.
int move_delta(const ClusterCounts& counts, const BitPattern& bits, int from, int to) {
    const auto& a = counts.ones[static_cast<std::size_t>(from)];
    const auto& b = counts.ones[static_cast<std::size_t>(to)];
    const int na = counts.size[static_cast<std::size_t>(from)];
    const int nb = counts.size[static_cast<std::size_t>(to)];
    int delta = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        const int x = bits[k];
        delta += std::min(a[k] - x, na - 1 - (a[k] - x)) - std::min(a[k], na - a[k]);
        delta += std::min(b[k] + x, nb + 1 - (b[k] + x)) - std::min(b[k], nb - b[k]);
    }
    return delta;
}

// Single-vector moves that strictly lower the objective, taken in index order
// (best target per vector, lowest index on ties) until none is left.
bool improve_by_moves(const std::vector<FeaturePresenceVector>& vectors, std::vector<int>& labels,
                      int c) {
    ClusterCounts counts(vectors, labels, c, vectors.front().bits.size());
    bool any = false;
    for (bool moved = true; moved;) {
        moved = false;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            const int from = labels[i];
            if (counts.size[static_cast<std::size_t>(from)] < 2) continue;
            int best_delta = 0;
            int best_target = -1;
            for (int to = 0; to < c; ++to) {
                if (to == from) continue;
                const int delta = move_delta(counts, vectors[i].bits, from, to);
                if (delta < best_delta) {
                    best_delta = delta;
                    best_target = to;
                }
            }
            if (best_target < 0) continue;
            counts.add(vectors[i].bits, from, -1);
            counts.add(vectors[i].bits, best_target, 1);
            labels[i] = best_target;
            moved = any = true;
        }
    }
    return any;
}

}  // namespace

ClusterAssignment hamming_lloyd(const std::vector<FeaturePresenceVector>& vectors,
                                std::vector<BitPattern> centroids, int max_iterations) {
    if (centroids.empty() || centroids.size() > vectors.size()) {
        throw InputError("need between 1 and " + std::to_string(vectors.size()) + " centroids");
    }
    const int c = static_cast<int>(centroids.size());
    ClusterAssignment out;
    std::vector<int> labels(vectors.size(), -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        std::vector<int> next(vectors.size());
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            next[i] = nearest_centroid(vectors[i].bits, centroids);
        }
        repair_empty_clusters(vectors, next, centroids);
        out.objective_trace.push_back(clustering_objective(vectors, next, centroids));
        out.iterations = iter + 1;
        if (next == labels) break;
        labels = std::move(next);
        for (int j = 0; j < c; ++j) {
            centroids[static_cast<std::size_t>(j)] = majority_centroid(vectors, labels, j);
        }
    }
    out.labels = std::move(labels);
    out.centroids = std::move(centroids);
    out.objective = clustering_objective(vectors, out.labels, out.centroids);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        out.assignment[vectors[i].center_id] = out.labels[i];
    }
    return out;
}

ClusterAssignment hamming_kmeans(const std::vector<FeaturePresenceVector>& vectors, int c,
                                 std::uint64_t seed, const KMeansOptions& options) {
    if (c <= 0) throw InputError("cluster count must be positive");
    if (static_cast<std::size_t>(c) > vectors.size()) {
        throw InputError("cluster count " + std::to_string(c) + " exceeds number of vectors " +
                         std::to_string(vectors.size()));
    }
    if (options.restarts < 1 || options.max_iterations < 1) {
        throw InputError("k-means restarts and iterations must be >= 1");
    }
    const std::size_t p = vectors.front().bits.size();
    for (const auto& v : vectors) {
        if (v.bits.size() != p) throw InputError("presence vectors differ in length");
    }

    std::vector<std::size_t> canonical(vectors.size());
    std::iota(canonical.begin(), canonical.end(), std::size_t{0});
    std::sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
        if (vectors[a].bits != vectors[b].bits) return vectors[a].bits < vectors[b].bits;
        return vectors[a].center_id < vectors[b].center_id;
    });
    std::vector<FeaturePresenceVector> ordered;
    ordered.reserve(vectors.size());
    for (std::size_t idx : canonical) ordered.push_back(vectors[idx]);

    ClusterAssignment best;
    bool have_best = false;
    for (int restart = 0; restart < options.restarts; ++restart) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(restart)};
        std::mt19937_64 rng(seq);
        // Partial Fisher-Yates: the first c entries become the initial centroids.
        std::vector<std::size_t> pick(ordered.size());
        std::iota(pick.begin(), pick.end(), std::size_t{0});
        for (std::size_t j = 0; j < static_cast<std::size_t>(c); ++j) {
            boost::random::uniform_int_distribution<std::size_t> draw(j, pick.size() - 1);
            std::swap(pick[j], pick[draw(rng)]);
        }
        std::vector<BitPattern> init;
        for (std::size_t j = 0; j < static_cast<std::size_t>(c); ++j) {
            init.push_back(ordered[pick[j]].bits);
        }
        ClusterAssignment run = hamming_lloyd(ordered, std::move(init), options.max_iterations);
        // Lloyd fixed points are not always stable under single moves; alternate
        // the two until neither lowers the objective.
        while (improve_by_moves(ordered, run.labels, c)) {
            std::vector<BitPattern> centroids;
            for (int j = 0; j < c; ++j) centroids.push_back(majority_centroid(ordered, run.labels, j));
            auto trace = std::move(run.objective_trace);
            trace.push_back(clustering_objective(ordered, run.labels, centroids));
            const int iterations = run.iterations;
            run = hamming_lloyd(ordered, std::move(centroids), options.max_iterations);
            trace.insert(trace.end(), run.objective_trace.begin(), run.objective_trace.end());
            run.objective_trace = std::move(trace);
            run.iterations += iterations;
        }
        if (!have_best || run.objective < best.objective) {
            best = std::move(run);
            have_best = true;
        }
    }

    std::vector<int> labels(vectors.size());
    for (std::size_t k = 0; k < canonical.size(); ++k) labels[canonical[k]] = best.labels[k];
    best.labels = std::move(labels);
    return best;
}

}  // namespace fedcox
