#include "doctest.h"

#include <set>

#include "kms/modeseek_fast.hpp"
#include "kms/parallel.hpp"
#include "kms/synthetic.hpp"
#include "oracles.hpp"

using namespace kms;

TEST_SUITE_BEGIN("modeseek_fast");

TEST_CASE("initial prototype count") {
    CHECK(initial_prototype_count(366164, 6) == 1482);
    CHECK(initial_prototype_count(100, 1) == 10);
    CHECK(initial_prototype_count(10, 50) == 10);
    CHECK(initial_prototype_count(1, 6) == 1);
}

TEST_CASE("cell index structure") {
    RandomSource data_rng(1);
    MixtureSpec spec;
    spec.n = 3000;
    spec.d = 3;
    spec.components = 8;
    const Dataset ds = gaussian_mixture(spec, data_rng);
    RandomSource rng(2);
    const CellIndex idx = build_cell_index(ds, 6, rng);

    CHECK(idx.initial_prototypes == initial_prototype_count(3000, 6));
    CHECK(idx.c == 6);
    CHECK(std::is_sorted(idx.prototypes.begin(), idx.prototypes.end()));
    CHECK(std::set<ObjectId>(idx.prototypes.begin(), idx.prototypes.end()).size() == idx.num_cells());

    const auto p_cells = idx.p_members();
    std::size_t q_total = 0;
    for (std::size_t cell = 0; cell < idx.num_cells(); ++cell) {
        const auto& q = idx.q_members[cell];
        CHECK(std::is_sorted(q.begin(), q.end()));
        q_total += q.size();
        for (ObjectId i : p_cells[cell]) CHECK(std::binary_search(q.begin(), q.end(), i));
    }
    CHECK(q_total == 3000 * idx.c);
    for (ObjectId i = 0; i < 3000; ++i) {
        const auto s = idx.search_set(i);
        CHECK(std::binary_search(s.begin(), s.end(), i));
    }

    const double mean_q = static_cast<double>(q_total) / static_cast<double>(idx.num_cells());
    const double expected = 6.0 * 3000.0 / static_cast<double>(idx.initial_prototypes);
    CHECK(mean_q >= 0.5 * expected);
    CHECK(mean_q <= 2.0 * expected);
}

TEST_CASE("P-cell membership is the nearest surviving prototype") {
    RandomSource data_rng(5);
    const Dataset ds = uniform_points(800, 2, data_rng);
    RandomSource rng(6);
    const CellIndex idx = build_cell_index(ds, 4, rng);
    for (ObjectId i = 0; i < 800; ++i) {
        std::size_t best = 0;
        double best_d = squared_distance(ds.row(i), ds.row(idx.prototypes[0]));
        for (std::size_t p = 1; p < idx.num_cells(); ++p) {
            const double d = squared_distance(ds.row(i), ds.row(idx.prototypes[p]));
            if (d < best_d) {
                best_d = d;
                best = p;
            }
        }
        CHECK(idx.p_assignment[i] == best);
    }
}

TEST_CASE("complexity above the survivor count is clamped with a warning") {
    RandomSource data_rng(7);
    const Dataset ds = uniform_points(30, 2, data_rng);
    RandomSource rng(8);
    const CellIndex idx = build_cell_index(ds, 999, rng);
    CHECK(idx.initial_prototypes == 30);
    CHECK(idx.num_cells() == 30);
    CHECK(idx.c == 30);
    CHECK(idx.requested_c == 999);
    CHECK_FALSE(idx.warnings.empty());
    for (const auto& q : idx.q_members) CHECK(q.size() == 30);
    CHECK_THROWS_AS(build_cell_index(ds, 0, rng), std::invalid_argument);
}

TEST_CASE("c >= m reproduces exact mode seeking bit for bit") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        RandomSource data_rng(20 + seed);
        const std::size_t n = 100 + 150 * seed;
        const Dataset ds = uniform_points(n, 1 + seed, data_rng);
        const auto sched = build_schedule(n, 2, 1.21, 0.5);
        const auto exact_f = compute_densities(ds, sched);
        const auto exact_u = compute_ascent_links(ds, sched, exact_f);
        const auto exact = ms_cluster(ds, sched);

        RandomSource rng(seed);
        const CellIndex idx = build_cell_index(ds, n, rng);
        const auto f = fms_densities(ds, sched, idx);
        const auto u = fms_ascent_links(ds, sched, f, idx);
        for (std::size_t l = 0; l < sched.count(); ++l)
            for (ObjectId i = 0; i < n; ++i) {
                REQUIRE(f.at(i, l) == exact_f.at(i, l));
                REQUIRE(u.at(i, l) == exact_u.at(i, l));
            }

        RandomSource rng2(seed);
        const auto fast = fms_cluster(ds, sched, n, rng2);
        REQUIRE(fast.levels.size() == exact.levels.size());
        for (std::size_t l = 0; l < fast.levels.size(); ++l) {
            CHECK(fast.levels[l].assignment == exact.levels[l].assignment);
            CHECK(fast.levels[l].modal_objects == exact.levels[l].modal_objects);
            CHECK(fast.levels[l].clamped_objects == 0);
        }
    }
}

TEST_CASE("k = n under FMS is clamped and reported") {
    RandomSource data_rng(40);
    const Dataset ds = uniform_points(60, 2, data_rng);
    RandomSource rng(1);
    FmsStats stats;
    const auto m = fms_cluster(ds, NeighborhoodSchedule::explicit_sizes({2, 60}), 60, rng, &stats);
    REQUIRE(stats.clamped_per_level.size() == 2);
    CHECK(stats.clamped_per_level[0] == 0);
    CHECK(stats.clamped_per_level[1] == 60);
    for (const auto& l : m.levels) {
        CHECK_NOTHROW(l.validate());
        if (l.k == 60) CHECK(l.clamped_objects == 60);
    }
}

TEST_CASE("densities and links match a literal search over each search set") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        RandomSource data_rng(100 + seed);
        MixtureSpec spec;
        spec.n = 150 + 50 * seed;
        spec.d = 1 + seed % 3;
        spec.components = 4;
        Dataset ds = gaussian_mixture(spec, data_rng);
        if (seed % 2 == 1) {
            // Coincident objects exercise the distance floor and id ties.
            std::vector<double> values;
            for (ObjectId i = 0; i < ds.size(); ++i) values.insert(values.end(), ds.row(i).begin(), ds.row(i).end());
            for (std::size_t t = 0; t < ds.dim(); ++t) values[ds.dim() * 5 + t] = values[t];
            for (std::size_t t = 0; t < ds.dim(); ++t) values[ds.dim() * 9 + t] = values[t];
            ds = Dataset(ds.size(), ds.dim(), std::move(values));
        }
        const std::size_t c = 2 + seed % 3;
        const auto sched = NeighborhoodSchedule::explicit_sizes({1, 2, 3, 5, 8, 20, 40, 90, ds.size()});
        RandomSource rng(seed);
        const CellIndex index = build_cell_index(ds, c, rng);
        std::vector<std::vector<ObjectId>> search(ds.size());
        for (ObjectId i = 0; i < ds.size(); ++i) {
            const auto s = index.search_set(i);
            search[i].assign(s.begin(), s.end());
        }
        const auto expected = oracle::naive_restricted_mode_seek(ds, sched.sizes, search);
        for (std::size_t workers : {1u, 3u}) {
            set_worker_count(workers);
            const DensityTable f = fms_densities(ds, sched, index);
            const AscentLinkTable u = fms_ascent_links(ds, sched, f, index);
            for (std::size_t l = 0; l < sched.count(); ++l) {
                for (ObjectId i = 0; i < ds.size(); ++i) {
                    CHECK(f.at(i, l) == expected.density[l][i]);
                    CHECK(u.at(i, l) == expected.links[l][i]);
                }
            }
        }
        set_worker_count(0);
    }
}

TEST_CASE("distance count stays near 2 n sqrt(c n)") {
    RandomSource data_rng(50);
    MixtureSpec spec;
    spec.n = 20000;
    spec.d = 4;
    spec.components = 20;
    const Dataset ds = gaussian_mixture(spec, data_rng);
    const auto sched = build_schedule(ds.size());
    RandomSource rng(3);
    FmsStats stats;
    const auto m = fms_cluster(ds, sched, 6, rng, &stats);
    const double n = 20000.0;
    const double reference = 2.0 * n * std::sqrt(6.0 * n);
    const double total = static_cast<double>(stats.total_distance_computations());
    MESSAGE("distance computations " << total << " vs reference " << reference);
    CHECK(total <= 3.0 * reference);
    CHECK(total >= reference / 3.0);
    CHECK(stats.cells == std::stoul(m.provenance.parameters.at("cells")));
}

TEST_CASE("seeded runs are reproducible for any worker count") {
    RandomSource data_rng(60);
    const Dataset ds = uniform_points(2000, 3, data_rng);
    const auto sched = build_schedule(2000);
    set_worker_count(1);
    RandomSource r1(9);
    const auto a = fms_cluster(ds, sched, 6, r1);
    set_worker_count(4);
    RandomSource r2(9);
    const auto b = fms_cluster(ds, sched, 6, r2);
    set_worker_count(0);
    REQUIRE(a.levels.size() == b.levels.size());
    for (std::size_t l = 0; l < a.levels.size(); ++l) CHECK(a.levels[l].assignment == b.levels[l].assignment);
    CHECK(a.provenance.algorithm == "fms");
    CHECK(a.provenance.seed == 9);
    CHECK(a.provenance.parameters.at("c") == "6");

    RandomSource r3(10);
    const auto c = fms_cluster(ds, sched, 6, r3);
    bool any_diff = false;
    for (std::size_t l = 0; l < a.levels.size(); ++l) any_diff |= a.levels[l].assignment != c.levels[l].assignment;
    CHECK(any_diff);
}

TEST_SUITE_END();
