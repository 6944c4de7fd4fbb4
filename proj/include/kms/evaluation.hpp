#pragma once

// Clustering and classification quality (NMI, error, 1NN baselines,
// learning curves) and wall-clock scaling benchmarks.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kms/core.hpp"
#include "kms/labeling.hpp"

namespace kms {

/// Cluster x class co-occurrence counts over labeled objects.
struct ContingencyTable {
    std::vector<std::vector<std::size_t>> counts;  // [cluster][class]
    std::vector<std::size_t> cluster_totals;
    std::vector<std::size_t> class_totals;
    std::size_t total = 0;

    /// Cluster and class ids are arbitrary; they are mapped to dense rows and
    /// columns in ascending order. Objects with label kUnlabeled are skipped.
    static ContingencyTable build(std::span<const ClusterIndex> assignment, std::span<const ClassLabel> labels);
};

/// Mutual information between clustering and labels (natural log).
double mutual_information(const ContingencyTable& table);
double cluster_entropy(const ContingencyTable& table);
double class_entropy(const ContingencyTable& table);

/// I / min(H(clusters), H(classes)). Returns 1 when both entropies vanish
/// (one cluster, one class) and 0 when only one of them does.
double nmi(std::span<const ClusterIndex> assignment, std::span<const ClassLabel> labels);

/// Fraction of mismatches over objects where both entries are labeled.
/// nullopt when no object qualifies.
std::optional<double> classification_error(std::span<const ClassLabel> predictions,
                                           std::span<const ClassLabel> truth);

/// Label of the nearest training object (lower id on distance ties). With
/// leave_one_out, a query never matches itself.
std::vector<ClassLabel> nn1_classify(const Dataset& dataset, std::span<const ObjectId> train_ids,
                                     std::span<const ObjectId> query_ids, bool leave_one_out = false);

struct CurvePoint {
    double x = 0.0;
    std::optional<double> y;
    std::string series;
};

enum class LearningMethod { al, alc, aln, random_1nn };
LearningMethod parse_learning_method(const std::string& name);
std::string to_string(LearningMethod method);

struct LearningCurveOptions {
    std::size_t repetitions = 10;  // random baselines only
    std::uint64_t seed = 0;
    std::string series;  // defaults to the method name
};

/// One point per level: x = number of labeled objects, y = error over all
/// objects against ground truth. AL labels the prototypes of the level; ALC
/// starts there and propagates to the finest level; ALN labels the level
/// after nesting; random-1NN trains 1NN on as many random objects as the
/// level has clusters, averaged over repetitions.
std::vector<CurvePoint> learning_curve(const MultiLevelClustering& levels, LearningMethod method,
                                       const Dataset& dataset, const LearningCurveOptions& options = {});

/// Per-level NMI against ground truth, x = number of clusters.
std::vector<CurvePoint> nmi_curve(const MultiLevelClustering& levels, const Dataset& dataset,
                                  const std::string& series);

struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least-squares fit of log(y) against log(x).
LogLogFit fit_loglog(std::span<const double> xs, std::span<const double> ys);

struct BenchmarkResult {
    LogLogFit fit;
    std::vector<CurvePoint> points;  // x = size, y = seconds
};

/// Times `algorithm` on a random subset of each size (subset drawn outside
/// the timed region) after one discarded warm-up run on the smallest size,
/// then fits the log-log slope. Needs at least 3 distinct sizes.
BenchmarkResult timing_benchmark(const Dataset& dataset, std::span<const std::size_t> sizes,
                                 const std::function<void(const Dataset&)>& algorithm, RandomSource& rng,
                                 const std::string& series = "time");

}  // namespace kms
