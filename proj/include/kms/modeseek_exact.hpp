#pragma once

// Exact kNN mode seeking (MS): a density pass and an ascent-link pass over
// all n objects, each recomputing the n distances of one object at a time,
// followed by link resolution into one clustering per neighborhood size.

#include <cstdint>
#include <vector>

#include "kms/core.hpp"

namespace kms {

/// Relative floor applied to zero k-th neighbor distances (coincident
/// objects): s <- max(s, kDuplicateEpsilon * mean nonzero nearest-neighbor
/// distance).
inline constexpr double kDuplicateEpsilon = 1e-12;

/// f_i^k = 1 / s_ik per object and neighborhood size. Stored level-major.
class DensityTable {
public:
    DensityTable() = default;
    DensityTable(std::size_t n, std::vector<std::size_t> sizes);

    std::size_t size() const { return n_; }
    std::size_t levels() const { return sizes_.size(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }

    double at(ObjectId i, std::size_t level) const { return values_[level * n_ + i]; }
    double& at(ObjectId i, std::size_t level) { return values_[level * n_ + i]; }
    std::span<const double> level(std::size_t l) const { return {values_.data() + l * n_, n_}; }

    /// Distance floor used for coincident objects.
    double distance_floor = 0.0;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> sizes_;
    std::vector<double> values_;
};

/// u_i^k: highest-density object among the k nearest neighbors of i (self
/// included). Stored level-major.
class AscentLinkTable {
public:
    AscentLinkTable() = default;
    AscentLinkTable(std::size_t n, std::vector<std::size_t> sizes);

    std::size_t size() const { return n_; }
    std::size_t levels() const { return sizes_.size(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }

    ObjectId at(ObjectId i, std::size_t level) const { return links_[level * n_ + i]; }
    ObjectId& at(ObjectId i, std::size_t level) { return links_[level * n_ + i]; }
    std::span<const ObjectId> level(std::size_t l) const { return {links_.data() + l * n_, n_}; }
    std::span<ObjectId> level(std::size_t l) { return {links_.data() + l * n_, n_}; }

    /// Per level: objects whose neighborhood was clamped to their candidate set.
    std::vector<std::size_t> clamped;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> sizes_;
    std::vector<ObjectId> links_;
};

struct PassStats {
    std::uint64_t distance_computations = 0;
};

/// Strict total order used for ascent: higher density first, lower id on ties.
inline bool denser(double fa, ObjectId a, double fb, ObjectId b) {
    return fa > fb || (fa == fb && a < b);
}

DensityTable compute_densities(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                               PassStats* stats = nullptr);

/// Throws std::invalid_argument if `densities` was built for another schedule.
AscentLinkTable compute_ascent_links(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                     const DensityTable& densities, PassStats* stats = nullptr);

struct ResolveStats {
    /// Per input level: pointer-jumping rounds that changed at least one link.
    std::vector<std::size_t> rounds;
};

/// Replaces every link by the root of its ascent tree, level by level.
/// Roots become modal objects; clusters are numbered by ascending modal id.
/// Throws InvariantError if the links contain a cycle. Levels of the result
/// are sorted low to high resolution.
MultiLevelClustering resolve_modes(const AscentLinkTable& links, ResolveStats* stats = nullptr);

/// Both passes plus resolution, with provenance filled in.
MultiLevelClustering ms_cluster(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                PassStats* stats = nullptr);

}  // namespace kms
