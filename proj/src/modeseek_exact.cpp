#include "kms/modeseek_exact.hpp"

#include <bit>
#include <numeric>

#include "kms/parallel.hpp"
#include "mode_engine.hpp"

namespace kms {

DensityTable::DensityTable(std::size_t n, std::vector<std::size_t> sizes)
    : n_(n), sizes_(std::move(sizes)), values_(n_ * sizes_.size(), 0.0) {}

AscentLinkTable::AscentLinkTable(std::size_t n, std::vector<std::size_t> sizes)
    : n_(n), sizes_(std::move(sizes)), links_(n_ * sizes_.size(), 0) {}

namespace {

struct AllObjects {
    std::vector<ObjectId> ids;
    explicit AllObjects(std::size_t n) : ids(n) { std::iota(ids.begin(), ids.end(), 0); }
    std::vector<detail::CandidateGroup> groups() const { return {{ids, ids}}; }
};

ClusteringLevel resolve_level(std::span<const ObjectId> links, std::size_t k, std::size_t* rounds_out) {
    const std::size_t n = links.size();
    std::vector<ObjectId> cur(links.begin(), links.end());
    std::vector<ObjectId> next(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (cur[i] >= n) throw InvariantError("ascent link of object " + std::to_string(i) + " out of range");
    }
    // A forest of depth < n converges in ceil(log2 n) rounds of jumping.
    const std::size_t max_rounds = static_cast<std::size_t>(std::bit_width(n)) + 1;
    std::size_t rounds = 0;
    for (;;) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = cur[cur[i]];
            changed |= next[i] != cur[i];
        }
        if (!changed) break;
        cur.swap(next);
        if (++rounds > max_rounds)
            throw InvariantError("ascent links contain a cycle (no convergence after " +
                                 std::to_string(max_rounds) + " rounds)");
    }
    ClusteringLevel level;
    level.k = k;
    std::vector<ClusterIndex> index_of(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (cur[i] == i) {
            if (links[i] != i)
                throw InvariantError("ascent links contain a cycle through object " + std::to_string(i));
            index_of[i] = static_cast<ClusterIndex>(level.modal_objects.size());
            level.modal_objects.push_back(static_cast<ObjectId>(i));
        }
    }
    level.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) level.assignment[i] = index_of[cur[i]];
    if (rounds_out) *rounds_out = rounds;
    return level;
}

}  // namespace

DensityTable compute_densities(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                               PassStats* stats) {
    schedule.validate(dataset.size());
    AllObjects all(dataset.size());
    return detail::density_pass(dataset, schedule, all.groups(), false, stats);
}

AscentLinkTable compute_ascent_links(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                     const DensityTable& densities, PassStats* stats) {
    schedule.validate(dataset.size());
    AllObjects all(dataset.size());
    return detail::link_pass(dataset, schedule, densities, all.groups(), false, stats);
}

MultiLevelClustering resolve_modes(const AscentLinkTable& links, ResolveStats* stats) {
    MultiLevelClustering out;
    const std::size_t levels = links.levels();
    out.levels.resize(levels);
    std::vector<std::size_t> rounds(levels, 0);
    parallel_for_blocks(levels, [&](std::size_t begin, std::size_t end) {
        for (std::size_t l = begin; l < end; ++l) {
            out.levels[l] = resolve_level(links.level(l), links.sizes()[l], &rounds[l]);
            if (l < links.clamped.size()) out.levels[l].clamped_objects = links.clamped[l];
        }
    });
    if (stats) stats->rounds = rounds;
    out.sort_levels();
    return out;
}

MultiLevelClustering ms_cluster(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                PassStats* stats) {
    const auto densities = compute_densities(dataset, schedule, stats);
    const auto links = compute_ascent_links(dataset, schedule, densities, stats);
    auto result = resolve_modes(links);
    result.provenance.algorithm = "ms";
    result.provenance.dataset_checksum = dataset.checksum();
    result.provenance.parameters["schedule_sizes"] = std::to_string(schedule.count());
    return result;
}

}  // namespace kms
