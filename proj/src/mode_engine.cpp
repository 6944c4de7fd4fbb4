#include "mode_engine.hpp"

#include <algorithm>
#include <atomic>
#include <memory>
#include <stdexcept>
#include <string>

#include "kms/parallel.hpp"

namespace kms::detail {

namespace {

struct Neighbor {
    double dist;
    ObjectId id;
    std::uint32_t pos;  // index into the group's candidate list
};

inline bool closer(const Neighbor& a, const Neighbor& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
}

std::size_t effective_k(std::size_t k, std::size_t num_candidates, bool clamp) {
    if (k < num_candidates) return k;
    if (!clamp) {
        if (k == num_candidates) return k;
        throw std::invalid_argument("neighborhood size " + std::to_string(k) +
                                    " exceeds candidate count " + std::to_string(num_candidates));
    }
    return std::max<std::size_t>(1, num_candidates - 1);
}

/// Candidate feature rows of one group, copied contiguously.
void gather_rows(const Dataset& dataset, std::span<const ObjectId> candidates, std::vector<double>& rows) {
    const std::size_t d = dataset.dim();
    rows.resize(candidates.size() * d);
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const auto r = dataset.row(candidates[j]);
        std::copy(r.begin(), r.end(), rows.begin() + static_cast<std::ptrdiff_t>(j * d));
    }
}

/// Places ranked[p] for every p in `cuts` (ascending, all inside [lo, hi)
/// relative to `base`) by selecting the middle cut and recursing on each side.
void select_cuts(std::vector<Neighbor>::iterator lo, std::vector<Neighbor>::iterator hi,
                 std::vector<Neighbor>::iterator base, std::span<const std::size_t> cuts) {
    if (cuts.empty() || hi - lo < 2) return;
    const std::size_t mid = cuts.size() / 2;
    auto nth = base + static_cast<std::ptrdiff_t>(cuts[mid]);
    std::nth_element(lo, nth, hi, closer);
    select_cuts(lo, nth, base, cuts.first(mid));
    select_cuts(nth + 1, hi, base, cuts.subspan(mid + 1));
}

/// Computes the distances from object i to its candidates, self first, then
/// partially orders them so that for every position p in `cuts` (ascending)
/// ranked[p] is the (p+1)-th nearest and everything before it is no farther.
/// Returns the number of distances computed.
std::size_t rank_candidates(const Dataset& dataset, ObjectId i, std::span<const ObjectId> candidates,
                            std::span<const double> rows, std::span<const std::size_t> cuts,
                            std::vector<Neighbor>& ranked) {
    const std::size_t d = dataset.dim();
    ranked.clear();
    ranked.push_back({0.0, i, 0});
    const auto xi = dataset.row(i);
    bool self_seen = false;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (candidates[j] == i) {
            self_seen = true;
            ranked[0].pos = static_cast<std::uint32_t>(j);
            continue;
        }
        ranked.push_back({euclidean_distance(xi, rows.subspan(j * d, d)), candidates[j], static_cast<std::uint32_t>(j)});
    }
    if (!self_seen)
        throw InvariantError("candidate set of object " + std::to_string(i) +
                             " does not contain the object itself");
    std::size_t usable = 0;
    while (usable < cuts.size() && cuts[usable] < ranked.size()) ++usable;
    std::size_t skip = 0;
    while (skip < usable && cuts[skip] == 0) ++skip;
    select_cuts(ranked.begin() + 1, ranked.end(), ranked.begin(), cuts.subspan(skip, usable - skip));
    return ranked.size() - 1;
}

/// Distinct rank positions (k - 1) needed for a group, ascending.
std::vector<std::size_t> cut_positions(std::span<const std::size_t> keff, std::size_t extra) {
    std::vector<std::size_t> cuts;
    cuts.reserve(keff.size() + 1);
    for (std::size_t k : keff) cuts.push_back(k - 1);
    cuts.push_back(extra);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    return cuts;
}

/// Runs prepare(group, scratch) then body(group, begin, end, scratch) over
/// every group. A single group is split across workers; several groups are
/// distributed whole, each worker with its own scratch.
template <class Scratch, class Prepare, class Body>
void for_each_group(std::span<const CandidateGroup> groups, Prepare prepare, Body body) {
    if (groups.size() == 1) {
        Scratch shared;
        prepare(groups[0], shared);
        parallel_for_blocks(groups[0].objects.size(), [&](std::size_t begin, std::size_t end) {
            Scratch local = shared.fork();
            body(groups[0], begin, end, local);
        });
        return;
    }
    parallel_for_blocks(groups.size(), [&](std::size_t gb, std::size_t ge) {
        Scratch scratch;
        for (std::size_t g = gb; g < ge; ++g) {
            prepare(groups[g], scratch);
            body(groups[g], 0, groups[g].objects.size(), scratch);
        }
    });
}

/// Gathered buffers are shared read-only between workers of a single group;
/// the ranking buffer is per worker.
struct DensityScratch {
    std::shared_ptr<std::vector<double>> rows = std::make_shared<std::vector<double>>();
    std::vector<Neighbor> ranked;
    DensityScratch fork() const { return {rows, {}}; }
};

/// The two densest candidates of a group at one level.
struct TopTwo {
    ObjectId first = 0;
    ObjectId second = 0;
};

struct LinkScratch {
    std::shared_ptr<std::vector<double>> rows = std::make_shared<std::vector<double>>();
    std::shared_ptr<std::vector<double>> dens = std::make_shared<std::vector<double>>();
    std::shared_ptr<std::vector<TopTwo>> top = std::make_shared<std::vector<TopTwo>>();
    std::vector<Neighbor> ranked;
    std::vector<std::size_t> keff;
    std::vector<double> best_f;
    std::vector<ObjectId> best;
    LinkScratch fork() const { return {rows, dens, top, {}, {}, {}, {}}; }
};

void check_groups(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                  std::span<const CandidateGroup> groups) {
    schedule.validate(dataset.size());
    std::size_t covered = 0;
    for (const auto& g : groups) {
        covered += g.objects.size();
        for (ObjectId j : g.candidates)
            if (j >= dataset.size()) throw std::out_of_range("candidate id " + std::to_string(j) + " out of range");
    }
    if (covered != dataset.size())
        throw InvariantError("candidate groups cover " + std::to_string(covered) + " of " +
                             std::to_string(dataset.size()) + " objects");
}

}  // namespace

DensityTable density_pass(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                          std::span<const CandidateGroup> groups, bool clamp_to_candidates,
                          PassStats* stats) {
    check_groups(dataset, schedule, groups);
    const std::size_t n = dataset.size();
    const std::size_t levels = schedule.count();
    DensityTable table(n, schedule.sizes);
    // Nearest-other distance per object, for the coincident-object floor.
    std::vector<double> nearest(n, 0.0);
    std::atomic<std::uint64_t> computed{0};

    for_each_group<DensityScratch>(
        groups, [&](const CandidateGroup& g, DensityScratch& s) { gather_rows(dataset, g.candidates, *s.rows); },
        [&](const CandidateGroup& g, std::size_t begin, std::size_t end, DensityScratch& s) {
            std::uint64_t local = 0;
            std::vector<std::size_t> keff(levels);
            for (std::size_t l = 0; l < levels; ++l)
                keff[l] = effective_k(schedule.sizes[l], g.candidates.size(), clamp_to_candidates);
            const auto cuts = cut_positions(keff, 1);
            for (std::size_t t = begin; t < end; ++t) {
                const ObjectId id = g.objects[t];
                local += rank_candidates(dataset, id, g.candidates, *s.rows, cuts, s.ranked);
                nearest[id] = s.ranked.size() > 1 ? s.ranked[1].dist : 0.0;
                for (std::size_t l = 0; l < levels; ++l) table.at(id, l) = s.ranked[keff[l] - 1].dist;
            }
            computed += local;
        });

    double sum = 0.0;
    std::size_t count = 0;
    for (double d : nearest) {
        if (d > 0.0) {
            sum += d;
            ++count;
        }
    }
    const double mean_nearest = count > 0 ? sum / static_cast<double>(count) : 1.0;
    table.distance_floor = kDuplicateEpsilon * mean_nearest;
    for (std::size_t l = 0; l < levels; ++l) {
        for (std::size_t i = 0; i < n; ++i) {
            double& v = table.at(static_cast<ObjectId>(i), l);
            v = 1.0 / std::max(v, table.distance_floor);
        }
    }
    if (stats) stats->distance_computations += computed.load();
    return table;
}

AscentLinkTable link_pass(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                          const DensityTable& densities, std::span<const CandidateGroup> groups,
                          bool clamp_to_candidates, PassStats* stats) {
    check_groups(dataset, schedule, groups);
    if (densities.sizes() != schedule.sizes || densities.size() != dataset.size())
        throw std::invalid_argument("density table was computed for a different schedule or dataset");
    const std::size_t n = dataset.size();
    const std::size_t levels = schedule.count();
    AscentLinkTable table(n, schedule.sizes);
    std::vector<std::vector<std::uint8_t>> was_clamped(levels, std::vector<std::uint8_t>(n, 0));
    std::atomic<std::uint64_t> computed{0};

    auto prepare = [&](const CandidateGroup& g, LinkScratch& s) {
        gather_rows(dataset, g.candidates, *s.rows);
        // Candidate densities, one contiguous row of all levels per candidate.
        s.dens->resize(g.candidates.size() * levels);
        for (std::size_t j = 0; j < g.candidates.size(); ++j)
            for (std::size_t l = 0; l < levels; ++l) (*s.dens)[j * levels + l] = densities.at(g.candidates[j], l);
        // Levels whose neighborhood spans all candidates, or all but the
        // farthest, take their link from these.
        s.top->assign(levels, TopTwo{});
        for (std::size_t l = 0; l < levels; ++l) {
            std::size_t a = 0;
            std::size_t b = g.candidates.size();
            for (std::size_t j = 1; j < g.candidates.size(); ++j) {
                const double fj = (*s.dens)[j * levels + l];
                if (denser(fj, g.candidates[j], (*s.dens)[a * levels + l], g.candidates[a])) {
                    b = a;
                    a = j;
                } else if (b == g.candidates.size() ||
                           denser(fj, g.candidates[j], (*s.dens)[b * levels + l], g.candidates[b])) {
                    b = j;
                }
            }
            (*s.top)[l].first = g.candidates[a];
            (*s.top)[l].second = b < g.candidates.size() ? g.candidates[b] : g.candidates[a];
        }
    };

    auto body = [&](const CandidateGroup& g, std::size_t begin, std::size_t end, LinkScratch& s) {
        std::uint64_t local = 0;
        s.keff.resize(levels);
        s.best_f.resize(levels);
        s.best.resize(levels);
        for (std::size_t l = 0; l < levels; ++l)
            s.keff[l] = effective_k(schedule.sizes[l], g.candidates.size(), clamp_to_candidates);
        const auto cuts = cut_positions(s.keff, 0);
        const std::size_t num_c = g.candidates.size();
        std::size_t wide = 0;
        while (wide < levels && s.keff[wide] + 1 < num_c) ++wide;
        const double* dens = s.dens->data();
        for (std::size_t t = begin; t < end; ++t) {
            const ObjectId id = g.objects[t];
            local += rank_candidates(dataset, id, g.candidates, *s.rows, cuts, s.ranked);
            const double* own = dens + static_cast<std::size_t>(s.ranked[0].pos) * levels;
            for (std::size_t l = 0; l < levels; ++l) {
                was_clamped[l][id] = s.keff[l] != schedule.sizes[l];
                s.best_f[l] = own[l];
                s.best[l] = id;
            }
            // keff is non-decreasing in l, so the levels still open at rank r
            // form a suffix starting at `first`. Ranks are only ordered between
            // cut positions, which is enough because each cut is some keff.
            std::size_t first = 0;
            for (std::size_t r = 1; r < s.ranked.size(); ++r) {
                while (first < wide && s.keff[first] <= r) ++first;
                if (first == wide) break;
                const ObjectId cand = s.ranked[r].id;
                const double* fc = dens + static_cast<std::size_t>(s.ranked[r].pos) * levels;
                for (std::size_t l = first; l < wide; ++l) {
                    if (denser(fc[l], cand, s.best_f[l], s.best[l])) {
                        s.best_f[l] = fc[l];
                        s.best[l] = cand;
                    }
                }
            }
            const ObjectId farthest = s.ranked.back().id;
            for (std::size_t l = wide; l < levels; ++l) {
                const TopTwo& t2 = (*s.top)[l];
                s.best[l] = s.keff[l] >= num_c || t2.first != farthest ? t2.first : t2.second;
            }
            for (std::size_t l = 0; l < levels; ++l) table.at(id, l) = s.best[l];
        }
        computed += local;
    };
    for_each_group<LinkScratch>(groups, prepare, body);

    table.clamped.assign(levels, 0);
    for (std::size_t l = 0; l < levels; ++l)
        table.clamped[l] = static_cast<std::size_t>(std::count(was_clamped[l].begin(), was_clamped[l].end(), 1));
    if (stats) stats->distance_computations += computed.load();
    return table;
}

}  // namespace kms::detail
