#include "doctest.h"

#include <set>
#include <thread>

#include "kms/core.hpp"
#include "kms/parallel.hpp"
#include "kms/synthetic.hpp"

using namespace kms;

TEST_SUITE_BEGIN("core");

TEST_CASE("dataset rejects malformed input") {
    CHECK_THROWS_AS(Dataset(0, 2, {}), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(2, 2, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(1, 2, {1, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(1, 1, {INFINITY}), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(2, 1, {1, 2}, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(2, 1, {1, 2}, {1}), std::invalid_argument);

    const Dataset ds(3, 1, {0, 1, 3}, {2, 1, 2});
    CHECK(ds.num_classes() == 2);
    CHECK(ds.class_names() == std::vector<std::string>{"1", "2"});
}

TEST_CASE("subset keeps rows and labels") {
    const Dataset ds(3, 2, {0, 0, 1, 1, 2, 2}, {1, 2, 3});
    const std::vector<ObjectId> ids = {2, 0};
    const Dataset sub = ds.subset(ids);
    CHECK(sub.size() == 2);
    CHECK(sub.row(0)[0] == 2.0);
    CHECK(sub.label(1) == 1);
    CHECK(sub.num_classes() == 3);
    CHECK(ds.checksum() != sub.checksum());
    CHECK(ds.checksum() == Dataset(3, 2, {0, 0, 1, 1, 2, 2}, {1, 2, 3}).checksum());
}

TEST_CASE("euclidean_distances_row") {
    const Dataset ds(3, 1, {0, 1, 3});
    const std::vector<ObjectId> all = {0, 1, 2};
    CHECK(euclidean_distances_row(ds, 0, all) == std::vector<double>{0, 1, 3});

    for (ObjectId i = 0; i < 3; ++i) {
        const std::vector<ObjectId> self = {i};
        CHECK(euclidean_distances_row(ds, i, self) == std::vector<double>{0});
    }
    CHECK_THROWS_AS(euclidean_distances_row(ds, 3, all), std::out_of_range);
    const std::vector<ObjectId> bad = {0, 7};
    CHECK_THROWS_AS(euclidean_distances_row(ds, 0, bad), std::out_of_range);
}

TEST_CASE("distances match a naive double loop") {
    RandomSource rng(11);
    const Dataset ds = uniform_points(100, 5, rng);
    std::vector<ObjectId> all(100);
    std::iota(all.begin(), all.end(), 0);
    for (ObjectId i = 0; i < 100; ++i) {
        const auto row = euclidean_distances_row(ds, i, all);
        for (ObjectId j = 0; j < 100; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < 5; ++t) {
                const double diff = ds.row(i)[t] - ds.row(j)[t];
                s += diff * diff;
            }
            const double naive = std::sqrt(s);
            CHECK(std::abs(row[j] - naive) <= 1e-12 * std::max(1.0, naive));
        }
    }
}

TEST_CASE("distance is symmetric with zero self-distance") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RandomSource rng(seed);
        const Dataset ds = uniform_points(40, 1 + seed * 3, rng);
        for (ObjectId i = 0; i < 40; ++i) {
            CHECK(euclidean_distance(ds.row(i), ds.row(i)) == 0.0);
            for (ObjectId j = 0; j < i; ++j)
                CHECK(euclidean_distance(ds.row(i), ds.row(j)) == euclidean_distance(ds.row(j), ds.row(i)));
        }
    }
}

TEST_CASE("build_schedule") {
    SUBCASE("powers of two under the cap") {
        CHECK(build_schedule(30, 2, 2.0, 1.0).sizes == std::vector<std::size_t>{2, 4, 8, 16});
    }
    SUBCASE("reported schedule lengths") {
        const auto s1 = build_schedule(100000);
        CHECK(s1.count() >= 41);
        CHECK(s1.count() <= 45);
        CHECK(s1.count() == 43);
        const auto s2 = build_schedule(1464656);
        CHECK(s2.count() >= 55);
        CHECK(s2.count() <= 59);
        CHECK(s2.sizes.front() == 2);
    }
    SUBCASE("n below base collapses to one size") {
        CHECK(build_schedule(1, 2, 1.21, 0.1).sizes == std::vector<std::size_t>{1});
        CHECK(build_schedule(15, 2, 1.21, 0.1).sizes == std::vector<std::size_t>{2});
    }
    SUBCASE("parameter errors") {
        CHECK_THROWS_AS(build_schedule(100, 0, 1.21, 0.1), std::invalid_argument);
        CHECK_THROWS_AS(build_schedule(100, 2, 1.0, 0.1), std::invalid_argument);
        CHECK_THROWS_AS(build_schedule(100, 2, 1.21, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(build_schedule(100, 2, 1.21, 1.5), std::invalid_argument);
    }
    SUBCASE("strictly increasing and below the cap") {
        for (std::size_t n : {20u, 57u, 100u, 999u, 5000u, 123457u}) {
            for (double ratio : {1.05, 1.21, 1.7, 3.0}) {
                for (double cap : {0.05, 0.1, 0.5, 1.0}) {
                    const auto s = build_schedule(n, 2, ratio, cap);
                    CHECK_NOTHROW(s.validate(n));
                    if (s.count() > 1 || s.sizes[0] < static_cast<double>(n) * cap)
                        CHECK(static_cast<double>(s.max_size()) < static_cast<double>(n) * cap);
                }
            }
        }
    }
}

TEST_CASE("schedule validation") {
    CHECK_THROWS_AS(NeighborhoodSchedule::explicit_sizes({}).validate(10), std::invalid_argument);
    CHECK_THROWS_AS(NeighborhoodSchedule::explicit_sizes({3, 3}).validate(10), std::invalid_argument);
    CHECK_THROWS_AS(NeighborhoodSchedule::explicit_sizes({0}).validate(10), std::invalid_argument);
    CHECK_THROWS_AS(NeighborhoodSchedule::explicit_sizes({11}).validate(10), std::invalid_argument);
    CHECK_NOTHROW(NeighborhoodSchedule::explicit_sizes({1, 10}).validate(10));
}

TEST_CASE("clustering level canonical form and validation") {
    ClusteringLevel level;
    level.assignment = {0, 0, 1, 1};
    level.modal_objects = {3, 0};
    CHECK_THROWS_AS(level.validate(), InvariantError);  // prototype 3 is in cluster 1
    level.modal_objects = {1, 2};
    CHECK_NOTHROW(level.validate());
    level.modal_objects = {2, 1};
    level.assignment = {1, 1, 0, 0};
    level.canonicalize();
    CHECK(level.modal_objects == std::vector<ObjectId>{1, 2});
    CHECK(level.assignment == std::vector<ClusterIndex>{0, 0, 1, 1});

    ClusteringLevel empty_cluster;
    empty_cluster.assignment = {0, 0};
    empty_cluster.modal_objects = {0, 1};
    CHECK_THROWS_AS(empty_cluster.validate(), InvariantError);
}

TEST_CASE("multi-level ordering") {
    MultiLevelClustering m;
    auto mk = [](std::size_t k, std::size_t clusters) {
        ClusteringLevel l;
        l.k = k;
        l.modal_objects.resize(clusters);
        return l;
    };
    m.levels = {mk(2, 5), mk(8, 1), mk(4, 5), mk(3, 9)};
    m.sort_levels();
    CHECK(m.is_sorted());
    CHECK(m.levels[0].k == 8);
    CHECK(m.levels[1].k == 4);
    CHECK(m.levels[2].k == 2);
    CHECK(m.levels[3].k == 3);
}

TEST_CASE("random source reproducibility") {
    RandomSource a(42), b(42), c(43);
    std::vector<std::uint64_t> va, vb, vc;
    for (int i = 0; i < 16; ++i) {
        va.push_back(a.next());
        vb.push_back(b.next());
        vc.push_back(c.next());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(RandomSource(42).child(3).next() == RandomSource(42).child(3).next());
    CHECK(RandomSource(42).child(3).next() != RandomSource(42).child(4).next());

    RandomSource s(5);
    const auto sample = s.sample_without_replacement(50, 20);
    CHECK(std::set<ObjectId>(sample.begin(), sample.end()).size() == 20);
    for (auto id : sample) CHECK(id < 50);
    CHECK_THROWS_AS(s.sample_without_replacement(3, 4), std::invalid_argument);

    RandomSource u(9);
    std::vector<std::size_t> hist(4, 0);
    for (int i = 0; i < 4000; ++i) ++hist[u.uniform_index(4)];
    for (auto h : hist) CHECK(h > 850);
}

TEST_CASE("parallel blocks cover the range once and propagate errors") {
    for (std::size_t workers : {1u, 2u, 5u}) {
        set_worker_count(workers);
        std::vector<int> hits(1001, 0);
        parallel_for_blocks(hits.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t i = b; i < e; ++i) ++hits[i];
        });
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
        CHECK_THROWS_AS(parallel_for_blocks(100, [](std::size_t b, std::size_t) {
                            if (b == 0) throw std::runtime_error("boom");
                        }),
                        std::runtime_error);
    }
    set_worker_count(0);
}

TEST_SUITE_END();
