#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedcox/errors.hpp"

namespace fedcox {

using BitPattern = std::vector<std::uint8_t>;

/// Ordered list of every feature name seen across a federation. Order is
/// fixed once built and defines bit positions in presence vectors.
class FeatureRegistry {
public:
    FeatureRegistry() = default;
    explicit FeatureRegistry(std::vector<std::string> names);

    // Union of the given feature lists, in first-seen order.
    static FeatureRegistry from_feature_lists(const std::vector<std::vector<std::string>>& lists);

    const std::vector<std::string>& names() const { return names_; }
    std::size_t size() const { return names_.size(); }
    // Throws InputError for unknown names.
    std::size_t index_of(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

private:
    std::vector<std::string> names_;
    std::map<std::string, std::size_t> index_;
};

struct FeaturePresenceVector {
    std::string center_id;
    BitPattern bits;
};

FeaturePresenceVector build_presence_vector(const std::set<std::string>& features,
                                            const FeatureRegistry& registry,
                                            std::string center_id = {});

int hamming_distance(const BitPattern& a, const BitPattern& b);

struct ClusterAssignment {
    std::map<std::string, int> assignment;
    // Cluster index per input vector, in input order.
    std::vector<int> labels;
    std::vector<BitPattern> centroids;
    int objective = 0;
    int iterations = 0;
    // Objective after each assignment step of the winning restart.
    std::vector<int> objective_trace;

    int cluster_count() const { return static_cast<int>(centroids.size()); }
};

// Sum over vectors of the Hamming distance to their cluster centroid.
int clustering_objective(const std::vector<FeaturePresenceVector>& vectors,
                         const std::vector<int>& labels, const std::vector<BitPattern>& centroids);

// Per-bit majority of the selected members; ties go to 1.
BitPattern majority_centroid(const std::vector<FeaturePresenceVector>& vectors,
                             const std::vector<int>& labels, int cluster);

struct KMeansOptions {
    int restarts = 10;
    int max_iterations = 100;

    bool operator==(const KMeansOptions&) const = default;
};

/// One Lloyd run from the given centroids: nearest-centroid assignment (ties to
/// the lowest index), empty clusters repaired with the worst-fit vector,
/// majority-vote centroid update, until the labels stop changing.
ClusterAssignment hamming_lloyd(const std::vector<FeaturePresenceVector>& vectors,
                                std::vector<BitPattern> centroids, int max_iterations);

/**
 * Hamming k-means over presence vectors. Runs `options.restarts` Lloyd
 * passes, each initialized with c distinct vectors sampled from a generator
 * seeded by (seed, restart index). Each pass alternates with exact
 * single-vector moves until neither lowers the objective; the lowest
 * objective wins (ties to the earliest restart). Vectors are processed in a
 * canonical order so the result does not depend on input order.
 */
ClusterAssignment hamming_kmeans(const std::vector<FeaturePresenceVector>& vectors, int c,
                                 std::uint64_t seed, const KMeansOptions& options = {});

}  // namespace fedcox
