#include "kms/modeseek_fast.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "kms/parallel.hpp"
#include "mode_engine.hpp"

namespace kms {

namespace {

/// Positions (into `protos`) of the c nearest prototypes of every object,
/// nearest first, ties by lower prototype id. Written row-major n x c.
void nearest_prototypes(const Dataset& dataset, std::span<const ObjectId> protos, std::size_t c,
                        std::span<const std::uint8_t> needs_update, std::vector<std::uint32_t>& out,
                        std::uint64_t& computed) {
    const std::size_t n = dataset.size();
    out.resize(n * c);
    std::atomic<std::uint64_t> count{0};
    parallel_for_blocks(n, [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, std::uint32_t>> dist(protos.size());
        std::uint64_t local = 0;
        for (std::size_t i = begin; i < end; ++i) {
            if (!needs_update.empty() && !needs_update[i]) continue;
            const auto xi = dataset.row(static_cast<ObjectId>(i));
            for (std::size_t p = 0; p < protos.size(); ++p)
                dist[p] = {squared_distance(xi, dataset.row(protos[p])), static_cast<std::uint32_t>(p)};
            local += protos.size();
            // Prototype positions follow ascending id, so pair order breaks
            // distance ties by lower id.
            auto mid = dist.begin() + static_cast<std::ptrdiff_t>(c);
            if (mid < dist.end()) std::nth_element(dist.begin(), mid, dist.end());
            std::sort(dist.begin(), mid);
            for (std::size_t r = 0; r < c; ++r) out[i * c + r] = dist[r].second;
        }
        count += local;
    });
    computed += count.load();
}

}  // namespace

std::size_t initial_prototype_count(std::size_t n, std::size_t c) {
    const auto m = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(c) * static_cast<double>(n))));
    return std::clamp<std::size_t>(m, 1, n);
}

std::vector<std::vector<ObjectId>> CellIndex::p_members() const {
    std::vector<std::vector<ObjectId>> out(num_cells());
    for (std::size_t i = 0; i < p_assignment.size(); ++i) out[p_assignment[i]].push_back(static_cast<ObjectId>(i));
    return out;
}

CellIndex build_cell_index(const Dataset& dataset, std::size_t c, RandomSource& rng) {
    if (c < 1) throw std::invalid_argument("complexity parameter c must be >= 1");
    const std::size_t n = dataset.size();
    CellIndex index;
    index.requested_c = c;
    const std::size_t m = initial_prototype_count(n, c);
    index.initial_prototypes = m;

    std::vector<ObjectId> protos = rng.sample_without_replacement(n, m);
    std::sort(protos.begin(), protos.end());

    std::size_t cc = std::min(c, protos.size());
    std::vector<std::uint32_t> nearest;
    nearest_prototypes(dataset, protos, cc, {}, nearest, index.distance_computations);

    // Single pruning round for undersized P-cells.
    std::vector<std::size_t> p_count(protos.size(), 0);
    for (std::size_t i = 0; i < n; ++i) ++p_count[nearest[i * cc]];
    const double threshold = static_cast<double>(n) / (3.0 * static_cast<double>(m));
    std::vector<std::uint32_t> new_pos(protos.size(), UINT32_MAX);
    std::vector<ObjectId> survivors;
    for (std::size_t p = 0; p < protos.size(); ++p) {
        if (static_cast<double>(p_count[p]) >= threshold) {
            new_pos[p] = static_cast<std::uint32_t>(survivors.size());
            survivors.push_back(protos[p]);
        }
    }

    if (survivors.size() < protos.size()) {
        // Objects whose c-nearest list avoided every pruned prototype keep the
        // same list among the survivors; only the others are recomputed.
        const std::size_t new_c = std::min(c, survivors.size());
        std::vector<std::uint8_t> affected(n, 0);
        std::vector<std::uint32_t> remapped(n * new_c);
        for (std::size_t i = 0; i < n; ++i) {
            bool hit = new_c != cc;
            for (std::size_t r = 0; r < cc && !hit; ++r) hit = new_pos[nearest[i * cc + r]] == UINT32_MAX;
            affected[i] = hit;
            if (!hit)
                for (std::size_t r = 0; r < new_c; ++r) remapped[i * new_c + r] = new_pos[nearest[i * cc + r]];
        }
        nearest_prototypes(dataset, survivors, new_c, affected, remapped, index.distance_computations);
        nearest.swap(remapped);
        protos.swap(survivors);
        cc = new_c;
    }
    if (cc < c)
        index.warnings.push_back("complexity c=" + std::to_string(c) + " exceeds the " +
                                 std::to_string(protos.size()) + " surviving prototypes; clamped to " +
                                 std::to_string(cc));

    index.c = cc;
    index.prototypes = std::move(protos);
    index.p_assignment.resize(n);
    index.q_members.assign(index.prototypes.size(), {});
    for (std::size_t i = 0; i < n; ++i) {
        index.p_assignment[i] = nearest[i * cc];
        for (std::size_t r = 0; r < cc; ++r) index.q_members[nearest[i * cc + r]].push_back(static_cast<ObjectId>(i));
    }
    return index;
}

namespace {
struct CellGroups {
    std::vector<std::vector<ObjectId>> members;
    std::vector<detail::CandidateGroup> groups;
    explicit CellGroups(const CellIndex& index) : members(index.p_members()) {
        for (std::size_t j = 0; j < members.size(); ++j)
            if (!members[j].empty()) groups.push_back({members[j], index.q_members[j]});
    }
};
}  // namespace

DensityTable fms_densities(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                           const CellIndex& index, PassStats* stats) {
    return detail::density_pass(dataset, schedule, CellGroups(index).groups, true, stats);
}

AscentLinkTable fms_ascent_links(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                 const DensityTable& densities, const CellIndex& index,
                                 PassStats* stats) {
    return detail::link_pass(dataset, schedule, densities, CellGroups(index).groups, true, stats);
}

MultiLevelClustering fms_cluster(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                                 std::size_t c, RandomSource& rng, FmsStats* stats) {
    schedule.validate(dataset.size());
    const CellIndex index = build_cell_index(dataset, c, rng);
    PassStats pass;
    const auto densities = fms_densities(dataset, schedule, index, &pass);
    const auto links = fms_ascent_links(dataset, schedule, densities, index, &pass);
    auto result = resolve_modes(links);
    result.provenance.algorithm = "fms";
    result.provenance.seed = rng.seed();
    result.provenance.dataset_checksum = dataset.checksum();
    result.provenance.parameters["c"] = std::to_string(c);
    result.provenance.parameters["effective_c"] = std::to_string(index.c);
    result.provenance.parameters["cells"] = std::to_string(index.num_cells());
    if (stats) {
        stats->index_distance_computations = index.distance_computations;
        stats->pass_distance_computations = pass.distance_computations;
        stats->clamped_per_level = links.clamped;
        stats->cells = index.num_cells();
    }
    return result;
}

}  // namespace kms
