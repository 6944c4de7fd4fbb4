#pragma once

// Shared data types for kNN mode seeking: datasets, distances,
// neighborhood schedules, multi-level clusterings and seeded randomness.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kms {

using ObjectId = std::uint32_t;
using ClusterIndex = std::uint32_t;

/// Class identifiers are dense in 1..r; 0 marks "no label".
using ClassLabel = std::int32_t;
inline constexpr ClassLabel kUnlabeled = 0;

class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// n objects x d features, row-major, with optional ground-truth labels.
///
/// Immutable after construction. Feature values must be finite; labels,
/// when present, lie in 1..num_classes(). `class_names` keeps the original
/// label spelling for reports (index c-1 names class c).
class Dataset {
public:
    Dataset(std::size_t n, std::size_t d, std::vector<double> features);
    Dataset(std::size_t n, std::size_t d, std::vector<double> features,
            std::vector<ClassLabel> labels, std::vector<std::string> class_names = {});

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }

    std::span<const double> row(ObjectId i) const {
        return {features_.data() + static_cast<std::size_t>(i) * d_, d_};
    }
    const std::vector<double>& features() const { return features_; }

    bool has_labels() const { return !labels_.empty(); }
    const std::vector<ClassLabel>& labels() const { return labels_; }
    ClassLabel label(ObjectId i) const { return labels_.at(i); }
    std::size_t num_classes() const { return num_classes_; }
    const std::vector<std::string>& class_names() const { return class_names_; }

    /// New dataset holding the given objects, in the given order.
    Dataset subset(std::span<const ObjectId> ids) const;

    /// FNV-1a over shape, feature bits and labels.
    std::uint64_t checksum() const;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<double> features_;
    std::vector<ClassLabel> labels_;
    std::size_t num_classes_ = 0;
    std::vector<std::string> class_names_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

/// Distances from object i to each candidate, in candidate order.
/// Throws std::out_of_range on an invalid id.
std::vector<double> euclidean_distances_row(const Dataset& dataset, ObjectId i,
                                            std::span<const ObjectId> candidates);

struct NeighborhoodSchedule {
    std::vector<std::size_t> sizes;
    double ratio = 1.21;
    std::size_t base = 2;
    double cap_fraction = 0.1;

    std::size_t max_size() const { return sizes.empty() ? 0 : sizes.back(); }
    std::size_t count() const { return sizes.size(); }

    /// Throws std::invalid_argument unless sizes are strictly increasing
    /// and every size is in [1, n].
    void validate(std::size_t n) const;

    static NeighborhoodSchedule explicit_sizes(std::vector<std::size_t> sizes);
};

/// Geometric neighborhood-size schedule.
///
/// Terms base*ratio^j are generated from the unrounded sequence while they
/// stay below n*cap_fraction; each term is rounded to the nearest integer
/// on its own and duplicates are dropped. Rounded values that reach the cap
/// are dropped too. When nothing survives the single size min(base, n) is
/// returned.
NeighborhoodSchedule build_schedule(std::size_t n, std::size_t base = 2, double ratio = 1.21,
                                    double cap_fraction = 0.1);

struct ClusteringLevel {
    std::size_t k = 0;
    std::vector<ClusterIndex> assignment;
    /// modal_objects[j] is the prototype (modal object or medoid) of cluster j.
    std::vector<ObjectId> modal_objects;
    /// Objects whose neighborhood had to be shrunk to fit their candidate cell.
    std::size_t clamped_objects = 0;

    std::size_t num_clusters() const { return modal_objects.size(); }
    std::size_t size() const { return assignment.size(); }

    /// Throws InvariantError if a cluster index is out of range, a cluster is
    /// empty, or a prototype is not a member of its cluster.
    void validate() const;

    /// Renumbers clusters so that indices follow ascending prototype id.
    void canonicalize();

    /// Member lists per cluster, members in ascending id order.
    std::vector<std::vector<ObjectId>> members() const;
};

struct Provenance {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> parameters;
    std::uint64_t dataset_checksum = 0;
};

struct MultiLevelClustering {
    std::vector<ClusteringLevel> levels;
    Provenance provenance;

    /// Orders levels by non-decreasing cluster count, ties by k descending.
    void sort_levels();
    bool is_sorted() const;
};

/// Seeded 64-bit generator. Child streams derive from (seed, stream id)
/// only, so parallel consumers see identical sequences for any worker count.
class RandomSource {
public:
    explicit RandomSource(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). Unbiased and portable across standard
    /// libraries (std::uniform_int_distribution is not).
    std::uint64_t uniform_index(std::uint64_t bound);
    /// Uniform double in [0, 1).
    double uniform_real();
    /// Standard normal via Box-Muller.
    double normal();

    /// m distinct ids drawn uniformly from 0..n-1, in draw order.
    std::vector<ObjectId> sample_without_replacement(std::size_t n, std::size_t m);

    RandomSource child(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::optional<double> spare_normal_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace kms
