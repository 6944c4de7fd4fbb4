#pragma once

// Two-pass density/link engine shared by MS and FMS. MS passes one group
// holding every object; FMS passes one group per P-cell with its Q-cell as
// candidates.

#include <span>

#include "kms/modeseek_exact.hpp"

namespace kms::detail {

/// Objects that share one candidate set. Every object must belong to exactly
/// one group and be a member of its group's candidates.
struct CandidateGroup {
    std::span<const ObjectId> objects;
    std::span<const ObjectId> candidates;
};

/// With clamp_to_candidates, a size k >= |candidates| is reduced to
/// max(1, |candidates| - 1) for that object; otherwise such a size is an
/// error. Each group's candidate rows (and, in the link pass, their
/// densities) are copied into contiguous buffers before its objects are
/// processed.
DensityTable density_pass(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                          std::span<const CandidateGroup> groups, bool clamp_to_candidates,
                          PassStats* stats);

AscentLinkTable link_pass(const Dataset& dataset, const NeighborhoodSchedule& schedule,
                          const DensityTable& densities, std::span<const CandidateGroup> groups,
                          bool clamp_to_candidates, PassStats* stats);

}  // namespace kms::detail
