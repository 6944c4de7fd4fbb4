#pragma once

// Plain Lloyd kMeans with medoid extraction, the baseline clusterer.

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "kms/core.hpp"

namespace kms {

struct KMeansOptions {
    std::size_t max_iterations = 100;
    /// Wall-clock budget, checked once per iteration. Unset means unbounded.
    std::optional<std::chrono::duration<double>> time_budget;
};

struct KMeansResult {
    std::vector<ClusterIndex> assignment;
    /// k x d, row-major.
    std::vector<double> means;
    std::vector<ObjectId> medoids;
    /// Assignment steps performed (eta).
    std::size_t iterations_used = 0;
    bool converged = false;
    /// Objective after every assignment step: sum of squared distances to the
    /// means the objects were assigned against.
    std::vector<double> objective_history;
    std::uint64_t distance_computations = 0;
    /// Empty clusters re-seeded during the run.
    std::size_t reseeded_clusters = 0;

    std::size_t k() const { return medoids.size(); }
};

/// Starts from k distinct random objects and alternates assignment and mean
/// update until no assignment changes, max_iterations, or the time budget.
/// An emptied cluster is re-seeded with the object farthest from its mean.
/// Each assignment step costs k*n distances and the medoid search n more,
/// so distance_computations = (iterations_used * k + 1) * n.
KMeansResult kmeans_cluster(const Dataset& dataset, std::size_t k, const KMeansOptions& options,
                            RandomSource& rng);

/// Medoid of every cluster: the member closest to the cluster mean, lower id
/// on ties.
std::vector<ObjectId> compute_medoids(const Dataset& dataset, std::span<const ClusterIndex> assignment,
                                      std::span<const double> means, std::size_t k);

/// One kMeans run per requested cluster count, medoids as prototypes. Run i
/// uses rng.child(i).
MultiLevelClustering kmeans_multilevel(const Dataset& dataset, std::span<const std::size_t> cluster_counts,
                                       const KMeansOptions& options, const RandomSource& rng,
                                       std::vector<KMeansResult>* runs = nullptr);

}  // namespace kms
