#pragma once

// Fast kNN mode seeking (FMS). A random prototype set P splits the data into
// P-cells (nearest prototype) and overlapping Q-cells (objects having the
// prototype among their c nearest ones). Each object then searches its
// neighbors only inside the Q-cell of its own P-cell's prototype.

#include <cstdint>
#include <string>
#include <vector>

#include "kms/core.hpp"
#include "kms/modeseek_exact.hpp"

namespace kms {

inline constexpr std::size_t kDefaultComplexity = 6;

struct CellIndex {
    /// Surviving prototypes, ascending object id. Cells are indexed by
    /// position in this list.
    std::vector<ObjectId> prototypes;
    /// Effective complexity after clamping to the number of survivors.
    std::size_t c = 0;
    std::size_t requested_c = 0;
    /// round(sqrt(c * n)) capped at n, before pruning.
    std::size_t initial_prototypes = 0;
    /// Per object: cell index of its nearest surviving prototype.
    std::vector<std::uint32_t> p_assignment;
    /// Per cell: ids (ascending) of objects whose c nearest prototypes include it.
    std::vector<std::vector<ObjectId>> q_members;
    std::uint64_t distance_computations = 0;
    std::vector<std::string> warnings;

    std::size_t num_cells() const { return prototypes.size(); }
    std::span<const ObjectId> search_set(ObjectId i) const { return q_members[p_assignment[i]]; }
    /// Member ids (ascending) of every P-cell.
    std::vector<std::vector<ObjectId>> p_members() const;
};

/// Number of prototypes drawn before pruning: round(sqrt(c*n)), at most n.
std::size_t initial_prototype_count(std::size_t n, std::size_t c);

/// Samples prototypes, assigns every object to its c nearest ones, prunes
/// P-cells with fewer than n/(3m) members once and reassigns against the
/// survivors, then forms the Q-cells. c larger than the survivor count is
/// clamped (a warning is recorded).
CellIndex build_cell_index(const Dataset& dataset, std::size_t c, RandomSource& rng);

struct FmsStats {
    std::uint64_t index_distance_computations = 0;
    std::uint64_t pass_distance_computations = 0;
    std::vector<std::size_t> clamped_per_level;  // schedule order
    std::size_t cells = 0;

    std::uint64_t total_distance_computations() const {
        return index_distance_computations + pass_distance_computations;
    }
};

DensityTable fms_densities(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                           const CellIndex& index, PassStats* stats = nullptr);
AscentLinkTable fms_ascent_links(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                 const DensityTable& densities, const CellIndex& index,
                                 PassStats* stats = nullptr);

/// Full FMS run: index, both cell-restricted passes, link resolution.
/// Levels where a neighborhood exceeded an object's Q-cell report the
/// number of clamped objects in ClusteringLevel::clamped_objects.
MultiLevelClustering fms_cluster(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                 std::size_t c, RandomSource& rng, FmsStats* stats = nullptr);

}  // namespace kms
