#include "kms/core.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>

namespace kms {

namespace {

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

}  // namespace

Dataset::Dataset(std::size_t n, std::size_t d, std::vector<double> features)
    : n_(n), d_(d), features_(std::move(features)) {
    if (n_ == 0 || d_ == 0) throw std::invalid_argument("dataset needs n >= 1 and d >= 1");
    if (features_.size() != n_ * d_)
        throw std::invalid_argument("feature buffer holds " + std::to_string(features_.size()) +
                                    " values, expected n*d = " + std::to_string(n_ * d_));
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (!std::isfinite(features_[i]))
            throw std::invalid_argument("non-finite feature at object " + std::to_string(i / d_) +
                                        ", column " + std::to_string(i % d_));
    }
    if (n_ > std::numeric_limits<ObjectId>::max())
        throw std::invalid_argument("dataset too large for 32-bit object ids");
}

Dataset::Dataset(std::size_t n, std::size_t d, std::vector<double> features,
                 std::vector<ClassLabel> labels, std::vector<std::string> class_names)
    : Dataset(n, d, std::move(features)) {
    if (labels.size() != n_)
        throw std::invalid_argument("label count " + std::to_string(labels.size()) +
                                    " does not match n = " + std::to_string(n_));
    ClassLabel max_label = 0;
    for (ClassLabel l : labels) {
        if (l < 1) throw std::invalid_argument("class labels must be >= 1");
        max_label = std::max(max_label, l);
    }
    labels_ = std::move(labels);
    num_classes_ = static_cast<std::size_t>(max_label);
    if (!class_names.empty() && class_names.size() < num_classes_)
        throw std::invalid_argument("fewer class names than classes");
    if (class_names.empty()) {
        for (std::size_t c = 1; c <= num_classes_; ++c) class_names.push_back(std::to_string(c));
    }
    num_classes_ = std::max(num_classes_, class_names.size());
    class_names_ = std::move(class_names);
}

Dataset Dataset::subset(std::span<const ObjectId> ids) const {
    std::vector<double> f;
    f.reserve(ids.size() * d_);
    for (ObjectId id : ids) {
        if (id >= n_) throw std::out_of_range("subset id " + std::to_string(id) + " out of range");
        auto r = row(id);
        f.insert(f.end(), r.begin(), r.end());
    }
    if (!has_labels()) return Dataset(ids.size(), d_, std::move(f));
    std::vector<ClassLabel> l;
    l.reserve(ids.size());
    for (ObjectId id : ids) l.push_back(labels_[id]);
    return Dataset(ids.size(), d_, std::move(f), std::move(l), class_names_);
}

std::uint64_t Dataset::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const std::uint64_t shape[2] = {n_, d_};
    h = fnv1a(h, shape, sizeof(shape));
    h = fnv1a(h, features_.data(), features_.size() * sizeof(double));
    if (!labels_.empty()) h = fnv1a(h, labels_.data(), labels_.size() * sizeof(ClassLabel));
    return h;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    // Four independent partial sums let the compiler vectorize without
    // reassociation; the summation order is fixed, so results are reproducible.
    const std::size_t d = a.size();
    const double* x = a.data();
    const double* y = b.data();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= d; j += 4) {
        const double t0 = x[j] - y[j];
        const double t1 = x[j + 1] - y[j + 1];
        const double t2 = x[j + 2] - y[j + 2];
        const double t3 = x[j + 3] - y[j + 3];
        s0 += t0 * t0;
        s1 += t1 * t1;
        s2 += t2 * t2;
        s3 += t3 * t3;
    }
    for (; j < d; ++j) {
        const double t = x[j] - y[j];
        s0 += t * t;
    }
    return (s0 + s1) + (s2 + s3);
}

std::vector<double> euclidean_distances_row(const Dataset& dataset, ObjectId i,
                                            std::span<const ObjectId> candidates) {
    if (i >= dataset.size())
        throw std::out_of_range("object id " + std::to_string(i) + " out of range");
    std::vector<double> out;
    out.reserve(candidates.size());
    const auto xi = dataset.row(i);
    for (ObjectId j : candidates) {
        if (j >= dataset.size())
            throw std::out_of_range("candidate id " + std::to_string(j) + " out of range");
        out.push_back(euclidean_distance(xi, dataset.row(j)));
    }
    return out;
}

void NeighborhoodSchedule::validate(std::size_t n) const {
    if (sizes.empty()) throw std::invalid_argument("empty neighborhood schedule");
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        if (sizes[l] < 1 || sizes[l] > n)
            throw std::invalid_argument("neighborhood size " + std::to_string(sizes[l]) +
                                        " outside [1, " + std::to_string(n) + "]");
        if (l > 0 && sizes[l] <= sizes[l - 1])
            throw std::invalid_argument("neighborhood sizes must be strictly increasing");
    }
}

NeighborhoodSchedule NeighborhoodSchedule::explicit_sizes(std::vector<std::size_t> sizes) {
    NeighborhoodSchedule s;
    s.sizes = std::move(sizes);
    s.base = s.sizes.empty() ? 0 : s.sizes.front();
    s.ratio = 0.0;
    s.cap_fraction = 0.0;
    return s;
}

NeighborhoodSchedule build_schedule(std::size_t n, std::size_t base, double ratio,
                                    double cap_fraction) {
    if (base < 1) throw std::invalid_argument("schedule base must be >= 1");
    if (!(ratio > 1.0)) throw std::invalid_argument("schedule ratio must be > 1");
    if (!(cap_fraction > 0.0 && cap_fraction <= 1.0))
        throw std::invalid_argument("schedule cap fraction must be in (0, 1]");
    if (n == 0) throw std::invalid_argument("schedule needs n >= 1");

    NeighborhoodSchedule s;
    s.base = base;
    s.ratio = ratio;
    s.cap_fraction = cap_fraction;

    const double cap = static_cast<double>(n) * cap_fraction;
    if (n >= base) {
        for (int j = 0;; ++j) {
            const double term = static_cast<double>(base) * std::pow(ratio, j);
            if (term >= cap) break;
            const auto k = static_cast<std::size_t>(std::llround(term));
            if (static_cast<double>(k) >= cap) break;
            if (s.sizes.empty() || k > s.sizes.back()) s.sizes.push_back(k);
        }
    }
    if (s.sizes.empty()) s.sizes.push_back(std::min(base, n));
    return s;
}

void ClusteringLevel::validate() const {
    const std::size_t m = num_clusters();
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] >= m)
            throw InvariantError("object " + std::to_string(i) + " has cluster index " +
                                 std::to_string(assignment[i]) + " >= " + std::to_string(m));
        ++counts[assignment[i]];
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (counts[j] == 0) throw InvariantError("cluster " + std::to_string(j) + " is empty");
        const ObjectId p = modal_objects[j];
        if (p >= assignment.size() || assignment[p] != j)
            throw InvariantError("prototype of cluster " + std::to_string(j) +
                                 " is not a member of it");
    }
}

void ClusteringLevel::canonicalize() {
    std::vector<ClusterIndex> order(num_clusters());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](ClusterIndex a, ClusterIndex b) { return modal_objects[a] < modal_objects[b]; });
    std::vector<ClusterIndex> remap(order.size());
    std::vector<ObjectId> protos(order.size());
    for (std::size_t j = 0; j < order.size(); ++j) {
        remap[order[j]] = static_cast<ClusterIndex>(j);
        protos[j] = modal_objects[order[j]];
    }
    for (auto& a : assignment) a = remap[a];
    modal_objects = std::move(protos);
}

std::vector<std::vector<ObjectId>> ClusteringLevel::members() const {
    std::vector<std::vector<ObjectId>> out(num_clusters());
    for (std::size_t i = 0; i < assignment.size(); ++i)
        out[assignment[i]].push_back(static_cast<ObjectId>(i));
    return out;
}

namespace {
bool level_before(const ClusteringLevel& a, const ClusteringLevel& b) {
    if (a.num_clusters() != b.num_clusters()) return a.num_clusters() < b.num_clusters();
    return a.k > b.k;
}
}  // namespace

void MultiLevelClustering::sort_levels() {
    std::stable_sort(levels.begin(), levels.end(), level_before);
}

bool MultiLevelClustering::is_sorted() const {
    return std::is_sorted(levels.begin(), levels.end(), level_before);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t RandomSource::uniform_index(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_index bound must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

double RandomSource::uniform_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomSource::normal() {
    if (spare_normal_) {
        const double v = *spare_normal_;
        spare_normal_.reset();
        return v;
    }
    double u1;
    do {
        u1 = uniform_real();
    } while (u1 <= 0.0);
    const double u2 = uniform_real();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_normal_ = r * std::sin(theta);
    return r * std::cos(theta);
}

std::vector<ObjectId> RandomSource::sample_without_replacement(std::size_t n, std::size_t m) {
    if (m > n) throw std::invalid_argument("cannot sample more objects than available");
    std::vector<ObjectId> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + uniform_index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    return pool;
}

RandomSource RandomSource::child(std::uint64_t stream) const {
    return RandomSource(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

}  // namespace kms
