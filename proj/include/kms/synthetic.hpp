#pragma once

// Seeded synthetic datasets for tests, benchmarks and demos.

#include "kms/core.hpp"

namespace kms {

struct MixtureSpec {
    std::size_t n = 1000;
    std::size_t d = 2;
    std::size_t components = 4;
    /// Classes the components are mapped onto (component j -> class j % classes + 1).
    std::size_t classes = 4;
    /// Component centers are uniform in [0, spread]^d.
    double spread = 10.0;
    double sigma = 1.0;
};

/// Gaussian mixture with equal weights; labels follow the generating component.
Dataset gaussian_mixture(const MixtureSpec& spec, RandomSource& rng);

/// Uniform points in [0, 1]^d, unlabeled.
Dataset uniform_points(std::size_t n, std::size_t d, RandomSource& rng);

}  // namespace kms
