#include "kms/synthetic.hpp"

#include <stdexcept>

namespace kms {

Dataset gaussian_mixture(const MixtureSpec& spec, RandomSource& rng) {
    if (spec.components < 1 || spec.classes < 1) throw std::invalid_argument("mixture needs components and classes");
    std::vector<double> centers(spec.components * spec.d);
    for (double& c : centers) c = rng.uniform_real() * spec.spread;
    std::vector<double> features(spec.n * spec.d);
    std::vector<ClassLabel> labels(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const std::size_t comp = rng.uniform_index(spec.components);
        for (std::size_t j = 0; j < spec.d; ++j)
            features[i * spec.d + j] = centers[comp * spec.d + j] + spec.sigma * rng.normal();
        labels[i] = static_cast<ClassLabel>(comp % spec.classes + 1);
    }
    std::vector<std::string> names;
    for (std::size_t c = 1; c <= spec.classes; ++c) names.push_back(std::to_string(c));
    return Dataset(spec.n, spec.d, std::move(features), std::move(labels), std::move(names));
}

Dataset uniform_points(std::size_t n, std::size_t d, RandomSource& rng) {
    std::vector<double> features(n * d);
    for (double& v : features) v = rng.uniform_real();
    return Dataset(n, d, std::move(features));
}

}  // namespace kms
