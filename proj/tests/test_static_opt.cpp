#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mla/errors.hpp"
#include "mla/oracle.hpp"
#include "mla/rng.hpp"
#include "mla/static_opt.hpp"

#include "test_support.hpp"

using namespace mla;

namespace {

Instance uniform_instance(int n, int T, double v = 1.0) {
    return Instance::from_weights(std::vector<double>(static_cast<size_t>(n), v), T);
}

// Independent reference: straight loop over all masks, no tie-break logic
// shared with the solver.
double enumerate_optimum(const Instance& instance) {
    double best = 0.0;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << instance.n); ++mask)
        best = std::max(best,
                        expected_max_load(instance, Assortment::from_mask(mask, instance.n)));
    return best;
}

}  // namespace

TEST_SUITE("static_opt") {

TEST_CASE("exact solve on a single product") {
    const auto instance = Instance::from_weights({0.8}, 5);
    const auto report = exact_solve(instance);
    CHECK(report.assortment.members == std::vector<int>{1});
    CHECK(std::fabs(report.value - 5.0 * 0.8 / 1.8) <= 1e-12);
    CHECK(report.candidates_evaluated == 2);
}

TEST_CASE("uniform weights, two customers: three products are optimal") {
    const auto instance = uniform_instance(10, 2);
    const auto report = exact_solve(instance);
    CHECK(report.assortment.size() == 3);
    CHECK(std::fabs(report.value - 1.125) <= 1e-12);
}

TEST_CASE("exact solve matches an independent enumeration") {
    Rng rng(51);
    for (int trial = 0; trial < 12; ++trial) {
        const auto instance = testutil::random_instance(rng, 8, 5);
        const auto report = exact_solve(instance);
        const double reference = enumerate_optimum(instance);
        CHECK(report.value == reference);
        CHECK(std::fabs(expected_max_load(instance, report.assortment) - report.value) <= 1e-12);
    }
}

TEST_CASE("exact solve refuses beyond the enumeration cap") {
    const auto instance = uniform_instance(17, 2);
    CHECK_THROWS_AS(exact_solve(instance), CapExceededError);
}

TEST_CASE("weight-ordered solver basics") {
    const auto single = Instance::from_weights({2.0}, 4);
    CHECK(best_weight_ordered(single).assortment.members == std::vector<int>{1});

    const auto uniform = uniform_instance(10, 2);
    CHECK(std::fabs(best_weight_ordered(uniform).value - exact_solve(uniform).value) <= 1e-12);
}

TEST_CASE("weight-ordered solver is a 1/2-approximation") {
    Rng rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        const auto instance = testutil::random_instance(rng, 9, 7);
        const double wo = best_weight_ordered(instance).value;
        const double opt = exact_solve(instance).value;
        CHECK(wo >= 0.5 * opt - 1e-12);
        CHECK(wo <= opt + 1e-12);
    }
}

TEST_CASE("block-based family: epsilon = 1 contains all singletons") {
    Rng rng(55);
    const auto instance = testutil::random_instance(rng, 7, 3);
    const auto family = enumerate_block_based(instance, 1.0);
    std::set<std::vector<int>> sets;
    for (const auto& S : family) sets.insert(S.members);
    for (int i = 1; i <= instance.n; ++i) CHECK(sets.count({i}) == 1);
}

TEST_CASE("block-based family members are valid and unique") {
    Rng rng(57);
    const auto instance = testutil::random_instance(rng, 9, 4);
    const auto family = enumerate_block_based(instance, 0.5);
    std::set<std::vector<int>> seen;
    for (const auto& S : family) {
        CHECK(std::is_sorted(S.members.begin(), S.members.end()));
        for (int i : S.members) {
            CHECK(i >= 1);
            CHECK(i <= instance.n);
        }
        CHECK(seen.insert(S.members).second);  // no duplicates
    }
}

TEST_CASE("block-based specs realize into the documented composition") {
    // descending weights 1.0, 0.9, ..., 0.1
    std::vector<double> w;
    for (int i = 0; i < 10; ++i) w.push_back(1.0 - 0.1 * i);
    const auto instance = Instance::from_weights(w, 2);

    BlockBasedSpec small;
    small.epsilon = 0.5;
    small.is_small_set = true;
    small.small_set = {4, 7};
    CHECK(realize_block_based(instance, small).members == std::vector<int>{4, 7});

    BlockBasedSpec spec;
    spec.epsilon = 0.5;
    spec.s1 = {1, 3};     // exactly 1/eps arbitrary products
    spec.s2_begin = 4;    // contiguous block right after S1
    spec.s2_end = 5;
    // grid anchored at c = 6 (v_c = 0.5): one class [0.25, 0.5] = {6, 7, 8}
    const auto classes = block_grid_classes(instance, 6, 0.5);
    REQUIRE(classes.size() == 1);
    CHECK(classes[0] == std::vector<int>{6, 7, 8});
    spec.class_counts = {2};  // the two largest indices of the class
    const auto realized = realize_block_based(instance, spec);
    CHECK(realized.members == std::vector<int>{1, 3, 4, 5, 7, 8});

    spec.class_counts = {5};
    CHECK_THROWS_AS(realize_block_based(instance, spec), std::domain_error);
    spec.class_counts = {1};
    spec.s2_begin = 5;  // gap after S1
    CHECK_THROWS_AS(realize_block_based(instance, spec), std::domain_error);
}

TEST_CASE("ptas equals exact when 1/eps covers the universe") {
    Rng rng(59);
    for (int trial = 0; trial < 6; ++trial) {
        const auto instance = testutil::random_instance(rng, 6, 4);
        const auto exact = exact_solve(instance);
        const auto ptas = ptas_solve(instance, 1.0 / instance.n);
        CHECK(ptas.value == exact.value);
        CHECK(ptas.assortment.members == exact.assortment.members);
    }
}

TEST_CASE("ptas guarantee on random instances") {
    Rng rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const auto instance = testutil::random_instance(rng, 9, 5);
        const auto exact = exact_solve(instance);
        const auto ptas = ptas_solve(instance, 0.5);
        CHECK(ptas.value >= 0.5 * exact.value - 1e-12);
        CHECK(ptas.value <= exact.value + 1e-12);
    }
}

TEST_CASE("ptas reproduces the uniform closed form") {
    const auto instance = uniform_instance(10, 2);
    const auto report = ptas_solve(instance, 0.25);
    CHECK(std::fabs(report.value - 1.125) <= 1e-12);
    CHECK(report.epsilon_effective == 0.25);
}

TEST_CASE("non-integral 1/eps rounds up and is reported") {
    CHECK(effective_epsilon(0.3) == 0.25);
    CHECK(effective_epsilon(0.5) == 0.5);
    CHECK(effective_epsilon(1.0) == 1.0);
    CHECK_THROWS_AS(effective_epsilon(0.0), std::domain_error);
    const auto instance = uniform_instance(4, 2);
    const auto report = ptas_solve(instance, 0.3);
    CHECK(report.epsilon_requested == 0.3);
    CHECK(report.epsilon_effective == 0.25);
}

TEST_CASE("merge combines weights and preserves the total") {
    const auto va = VirtualAssortment::of({1.0, 1.0});
    const auto merged = merge(va, 1, 2);
    CHECK(merged.weights == std::vector<double>{2.0});

    Rng rng(63);
    for (int trial = 0; trial < 20; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_u64() % 4);
        const auto w = VirtualAssortment::of(testutil::random_weights(rng, k, 0.1, 2.0));
        const int i = 1 + static_cast<int>(rng.next_u64() % k);
        int j = 1 + static_cast<int>(rng.next_u64() % k);
        if (j == i) j = (j % k) + 1;
        const auto out = merge(w, i, j);
        CHECK(out.weights.size() == w.weights.size() - 1);
        CHECK(std::fabs(out.total() - w.total()) <= 1e-12);
    }
    CHECK_THROWS_AS(merge(va, 1, 1), std::domain_error);
    CHECK_THROWS_AS(merge(va, 0, 1), std::domain_error);
}

TEST_CASE("merge never decreases the expected maximum load") {
    Rng rng(65);
    for (int trial = 0; trial < 25; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_u64() % 3);
        const int T = 1 + static_cast<int>(rng.next_u64() % 6);
        const auto w = VirtualAssortment::of(testutil::random_weights(rng, k, 0.1, 2.0));
        const auto merged = merge(w, 1, 2);
        const double before = expected_max_load_weights(w.weights, T);
        const double after = expected_max_load_weights(merged.weights, T);
        CHECK(after >= before - 1e-10);
    }
}

TEST_CASE("transfer endpoints and direction checks") {
    const auto va = VirtualAssortment::of({1.0, 0.4, 0.7});
    const auto same = transfer(va, 2, 1, 0.0);
    CHECK(same.weights == va.weights);

    const auto all = transfer(va, 2, 1, 0.4);  // moving everything = merge
    const auto merged = merge(va, 1, 2);
    auto a = all.weights;
    auto b = merged.weights;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);

    CHECK_THROWS_AS(transfer(va, 1, 2, 0.1), std::domain_error);   // toward the lighter
    CHECK_THROWS_AS(transfer(va, 2, 1, 0.5), std::domain_error);   // delta > v_from
    CHECK_THROWS_AS(transfer(va, 2, 1, -0.1), std::domain_error);  // negative delta
}

TEST_CASE("transfer is monotone along a delta grid") {
    Rng rng(67);
    for (int trial = 0; trial < 15; ++trial) {
        const int k = 2 + static_cast<int>(rng.next_u64() % 3);
        const int T = 1 + static_cast<int>(rng.next_u64() % 6);
        auto w = testutil::random_weights(rng, k, 0.1, 2.0);
        std::sort(w.begin(), w.end(), std::greater<double>());
        const auto va = VirtualAssortment::of(w);
        double previous = expected_max_load_weights(va.weights, T);
        for (int step = 1; step <= 10; ++step) {
            const double delta = w[1] * (static_cast<double>(step) / 10.0);
            const auto moved = transfer(va, 2, 1, delta);
            const double value = expected_max_load_weights(moved.weights, T);
            CHECK(value >= previous - 1e-10);
            previous = value;
        }
    }
}

TEST_CASE("a heavy singleton dominates any lighter-total assortment") {
    Rng rng(69);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> w{2.0};
        for (int i = 0; i < 5; ++i) w.push_back(0.05 + 0.25 * rng.next_double());
        const int T = 1 + static_cast<int>(rng.next_u64() % 6);
        const auto instance = Instance::from_weights(w, T);
        // any subset of the light products has total weight < v_1 = 2.0
        const auto S = testutil::random_subset(rng, 5, 5);
        std::vector<int> shifted;
        for (int i : S.members) shifted.push_back(i + 1);  // canonical 2..6 are the light ones
        double total = 0.0;
        for (int i : shifted) total += instance.weight(i);
        REQUIRE(total < instance.weight(1));
        const double light = expected_max_load(instance, Assortment::of(shifted, instance.n));
        const double heavy = expected_max_load(instance, Assortment::of({1}, instance.n));
        CHECK(light < heavy);
    }
}

TEST_CASE("many customers: the heaviest singleton wins eventually") {
    const auto weights = std::vector<double>{1.0, 0.5, 0.2};
    for (int T : {80, 120, 200}) {
        const auto instance = Instance::from_weights(weights, T);
        const auto report = exact_solve(instance);
        CHECK(report.assortment.members == std::vector<int>{1});
    }
}

TEST_CASE("parallel enumeration is bit-identical to the serial reference") {
    const auto instance = generate_instance(9, 6, 0.4, 0.2, 123);
    const auto serial = exact_solve(instance, Exec::Serial);
    const auto parallel = exact_solve(instance, Exec::Parallel);
    CHECK(serial.value == parallel.value);
    CHECK(serial.assortment.members == parallel.assortment.members);
}

}  // TEST_SUITE
