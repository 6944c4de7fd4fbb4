#include "kms/kmeans.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <stdexcept>

#include "kms/parallel.hpp"

namespace kms {

namespace {

using Clock = std::chrono::steady_clock;

std::span<const double> mean_row(std::span<const double> means, std::size_t j, std::size_t d) {
    return means.subspan(j * d, d);
}

}  // namespace

std::vector<ObjectId> compute_medoids(const Dataset& dataset, std::span<const ClusterIndex> assignment,
                                      std::span<const double> means, std::size_t k) {
    const std::size_t d = dataset.dim();
    std::vector<double> best(k, std::numeric_limits<double>::infinity());
    std::vector<ObjectId> medoids(k, std::numeric_limits<ObjectId>::max());
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        const ClusterIndex j = assignment[i];
        const double dist = squared_distance(dataset.row(static_cast<ObjectId>(i)), mean_row(means, j, d));
        if (dist < best[j]) {
            best[j] = dist;
            medoids[j] = static_cast<ObjectId>(i);
        }
    }
    return medoids;
}

KMeansResult kmeans_cluster(const Dataset& dataset, std::size_t k, const KMeansOptions& options,
                            RandomSource& rng) {
    const std::size_t n = dataset.size();
    const std::size_t d = dataset.dim();
    if (k < 1 || k > n)
        throw std::invalid_argument("kmeans cluster count " + std::to_string(k) + " outside [1, " +
                                    std::to_string(n) + "]");
    if (options.max_iterations < 1) throw std::invalid_argument("kmeans needs max_iterations >= 1");

    const auto start = Clock::now();
    KMeansResult res;
    res.means.resize(k * d);
    const auto seeds = rng.sample_without_replacement(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        const auto r = dataset.row(seeds[j]);
        std::copy(r.begin(), r.end(), res.means.begin() + static_cast<std::ptrdiff_t>(j * d));
    }

    res.assignment.assign(n, std::numeric_limits<ClusterIndex>::max());
    std::vector<double> own(n, 0.0);  // squared distance to assigned mean
    std::vector<std::size_t> counts(k, 0);

    for (;;) {
        if (res.iterations_used >= options.max_iterations) break;
        if (res.iterations_used > 0 && options.time_budget &&
            Clock::now() - start >= *options.time_budget)
            break;

        std::atomic<std::size_t> changed{0};
        parallel_for_blocks(n, [&](std::size_t begin, std::size_t end) {
            std::size_t local = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const auto xi = dataset.row(static_cast<ObjectId>(i));
                double best = std::numeric_limits<double>::infinity();
                ClusterIndex arg = 0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double dist = squared_distance(xi, mean_row(res.means, j, d));
                    if (dist < best) {
                        best = dist;
                        arg = static_cast<ClusterIndex>(j);
                    }
                }
                if (res.assignment[i] != arg) ++local;
                res.assignment[i] = arg;
                own[i] = best;
            }
            changed += local;
        });
        res.distance_computations += static_cast<std::uint64_t>(n) * k;
        ++res.iterations_used;

        std::fill(counts.begin(), counts.end(), 0);
        for (ClusterIndex a : res.assignment) ++counts[a];
        std::size_t repaired = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] != 0) continue;
            std::size_t far = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[res.assignment[i]] > 1 && (far == n || own[i] > own[far])) far = i;
            }
            if (far == n) throw InvariantError("no object available to re-seed an empty kmeans cluster");
            --counts[res.assignment[far]];
            res.assignment[far] = static_cast<ClusterIndex>(j);
            counts[j] = 1;
            own[far] = 0.0;
            const auto r = dataset.row(static_cast<ObjectId>(far));
            std::copy(r.begin(), r.end(), res.means.begin() + static_cast<std::ptrdiff_t>(j * d));
            ++repaired;
        }
        res.reseeded_clusters += repaired;

        double objective = 0.0;
        for (double v : own) objective += v;
        res.objective_history.push_back(objective);

        if (changed.load() == 0 && repaired == 0) {
            res.converged = true;
            break;
        }

        // Mean update, summed in object order for bit-stable results.
        std::fill(res.means.begin(), res.means.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = dataset.row(static_cast<ObjectId>(i));
            double* m = res.means.data() + static_cast<std::size_t>(res.assignment[i]) * d;
            for (std::size_t t = 0; t < d; ++t) m[t] += r[t];
        }
        for (std::size_t j = 0; j < k; ++j) {
            const double inv = 1.0 / static_cast<double>(counts[j]);
            for (std::size_t t = 0; t < d; ++t) res.means[j * d + t] *= inv;
        }
    }

    res.medoids = compute_medoids(dataset, res.assignment, res.means, k);
    res.distance_computations += n;
    return res;
}

MultiLevelClustering kmeans_multilevel(const Dataset& dataset, std::span<const std::size_t> cluster_counts,
                                       const KMeansOptions& options, const RandomSource& rng,
                                       std::vector<KMeansResult>* runs) {
    if (cluster_counts.empty()) throw std::invalid_argument("kmeans_multilevel needs at least one cluster count");
    MultiLevelClustering out;
    out.provenance.algorithm = "kmeans";
    out.provenance.seed = rng.seed();
    out.provenance.dataset_checksum = dataset.checksum();
    out.provenance.parameters["max_iterations"] = std::to_string(options.max_iterations);
    for (std::size_t r = 0; r < cluster_counts.size(); ++r) {
        RandomSource child = rng.child(r);
        KMeansResult run = kmeans_cluster(dataset, cluster_counts[r], options, child);
        ClusteringLevel level;
        level.k = cluster_counts[r];
        level.assignment = run.assignment;
        level.modal_objects = run.medoids;
        level.canonicalize();
        out.levels.push_back(std::move(level));
        if (runs) runs->push_back(std::move(run));
    }
    out.sort_levels();
    return out;
}

}  // namespace kms
