#include <doctest.h>

#include <cmath>

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

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("multinomial pmf examples") {
    const std::vector<double> half{0.5, 0.5};
    const std::vector<int> ones{1, 1};
    CHECK(std::fabs(multinomial_pmf(2, half, ones) - 0.5) <= 1e-14);

    const std::vector<double> probs{0.3, 0.2, 0.1};
    for (int i = 0; i < 3; ++i) {
        std::vector<int> counts{0, 0, 0};
        counts[static_cast<size_t>(i)] = 1;
        CHECK(std::fabs(multinomial_pmf(1, probs, counts) - probs[static_cast<size_t>(i)]) <=
              1e-14);
    }

    const std::vector<double> third{1.0 / 3, 1.0 / 3, 1.0 / 3};
    const std::vector<int> each{1, 1, 1};
    CHECK(std::fabs(multinomial_pmf(3, third, each) - 2.0 / 9.0) <= 1e-14);

    CHECK_THROWS_AS(multinomial_pmf(2, half, std::vector<int>{-1, 1}), std::domain_error);
    CHECK_THROWS_AS(multinomial_pmf(2, half, std::vector<int>{2, 1}), std::domain_error);
}

TEST_CASE("rectangular probability basics") {
    RectangularQuery q;
    q.T = 5;
    q.probs = {0.2, 0.3};
    q.lower = {0, 0};
    q.upper = {5, 5};
    CHECK(std::fabs(rectangular_probability(q) - 1.0) <= 1e-13);

    q.lower = {1, 2};
    q.upper = {1, 2};
    const std::vector<int> point{1, 2};
    CHECK(std::fabs(rectangular_probability(q) - multinomial_pmf(5, q.probs, point)) <= 1e-14);

    q.lower = {3, 3};
    q.upper = {5, 5};
    CHECK(rectangular_probability(q) == 0.0);  // sum of lower bounds exceeds T

    q.lower = {0, 6};
    CHECK_THROWS_AS(rectangular_probability(q), std::domain_error);
    q.lower = {0, 0};
    q.probs = {0.7, 0.7};
    CHECK_THROWS_AS(rectangular_probability(q), std::domain_error);
}

TEST_CASE("rectangular probability matches exhaustive summation") {
    RectangularQuery q;
    q.T = 3;
    q.probs = {0.2, 0.3, 0.5};
    q.lower = {0, 1, 0};
    q.upper = {1, 2, 3};
    double brute = 0.0;
    for (int a = q.lower[0]; a <= q.upper[0]; ++a)
        for (int b = q.lower[1]; b <= q.upper[1]; ++b)
            for (int c = q.lower[2]; c <= q.upper[2]; ++c) {
                if (a + b + c != q.T) continue;  // probs sum to 1: remainder must be 0
                brute += multinomial_pmf(q.T, q.probs, std::vector<int>{a, b, c});
            }
    CHECK(std::fabs(rectangular_probability(q) - brute) <= 1e-12);

    // randomized queries with a free remainder category
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 1 + static_cast<int>(rng.next_u64() % 4);
        const int T = 1 + static_cast<int>(rng.next_u64() % 6);
        RectangularQuery r;
        r.T = T;
        const double mass = 0.9 * rng.next_double() + 0.05;
        double raw_total = 0.0;
        for (int i = 0; i < k; ++i) {
            r.probs.push_back(0.1 + rng.next_double());
            raw_total += r.probs.back();
        }
        for (auto& p : r.probs) p *= mass / raw_total;
        for (int i = 0; i < k; ++i) {
            const int lo = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(T + 1));
            const int hi =
                lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(T - lo + 1));
            r.lower.push_back(lo);
            r.upper.push_back(hi);
        }
        // exhaustive reference over all compositions
        std::vector<int> counts(static_cast<size_t>(k), 0);
        double brute_sum = 0.0;
        while (true) {
            bool inside = true;
            for (int i = 0; i < k; ++i)
                inside = inside && counts[static_cast<size_t>(i)] >= r.lower[static_cast<size_t>(i)] &&
                         counts[static_cast<size_t>(i)] <= r.upper[static_cast<size_t>(i)];
            if (inside) brute_sum += multinomial_pmf(T, r.probs, counts);
            int pos = 0;
            int used = 0;
            for (int v : counts) used += v;
            while (pos < k) {
                if (used + 1 <= T) {
                    ++counts[static_cast<size_t>(pos)];
                    break;
                }
                used -= counts[static_cast<size_t>(pos)];
                counts[static_cast<size_t>(pos)] = 0;
                ++pos;
            }
            if (pos == k) break;
        }
        CHECK(std::fabs(rectangular_probability(r) - brute_sum) <= 1e-12);
    }
}

TEST_CASE("max load distribution: binomial and two-product cases") {
    const auto single = uniform_instance(1, 2);
    const auto dist = max_load_distribution(single, Assortment::of({1}, 1));
    REQUIRE(dist.pmf.size() == 3);
    CHECK(std::fabs(dist.pmf[0] - 0.25) <= 1e-14);
    CHECK(std::fabs(dist.pmf[1] - 0.50) <= 1e-14);
    CHECK(std::fabs(dist.pmf[2] - 0.25) <= 1e-14);

    const auto two = uniform_instance(2, 2);
    const auto dist2 = max_load_distribution(two, Assortment::of({1, 2}, 2));
    CHECK(std::fabs(dist2.pmf[0] - 1.0 / 9) <= 1e-14);
    CHECK(std::fabs(dist2.pmf[1] - 6.0 / 9) <= 1e-14);
    CHECK(std::fabs(dist2.pmf[2] - 2.0 / 9) <= 1e-14);

    CHECK_THROWS_AS(max_load_distribution(two, Assortment{}), std::domain_error);
}

TEST_CASE("max load pmf sums to one on random assortments") {
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const auto instance = testutil::random_instance(rng, 8, 12);
        const auto S = testutil::random_subset(rng, instance.n, instance.n);
        const auto dist = max_load_distribution(instance, S);
        long double total = 0.0L;
        for (double p : dist.pmf) {
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            total += p;
        }
        CHECK(std::fabs(static_cast<double>(total) - 1.0) <= 1e-9);
    }
}

TEST_CASE("partition identity: rectangular events reproduce the brute-force pmf") {
    Rng rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const auto instance = testutil::random_instance(rng, 4, 6);
        const auto S = testutil::random_subset(rng, instance.n, 4);
        const auto dist = max_load_distribution(instance, S);
        const auto brute = testutil::brute_max_load_pmf(gather_weights(instance, S), instance.T);
        for (size_t l = 0; l < brute.size(); ++l)
            CHECK(std::fabs(dist.pmf[l] - brute[l]) <= 1e-9);
    }
}

TEST_CASE("expected max load closed forms") {
    for (double v : {0.1, 1.0, 10.0}) {
        for (int T : {1, 2, 7, 31, 115, 200}) {
            const auto instance = Instance::from_weights({v}, T);
            const double value = expected_max_load(instance, Assortment::of({1}, 1));
            CHECK(std::fabs(value - T * v / (1.0 + v)) <= 1e-12);
        }
    }
    for (int k = 1; k <= 10; ++k) {
        const auto instance = uniform_instance(10, 2);
        std::vector<int> members;
        for (int i = 1; i <= k; ++i) members.push_back(i);
        const double value = expected_max_load(instance, Assortment::of(std::move(members), 10));
        const double closed = (k * k + 3.0 * k) / ((1.0 + k) * (1.0 + k));
        CHECK(std::fabs(value - closed) <= 1e-12);
    }
}

TEST_CASE("oracle agrees with brute force on random small instances") {
    Rng rng(29);
    for (int trial = 0; trial < 60; ++trial) {
        const auto instance = testutil::random_instance(rng, 4, 6);
        const auto S = testutil::random_subset(rng, instance.n, 4);
        const double oracle = expected_max_load(instance, S);
        const double brute = brute_force_expected_max_load(instance, S);
        CHECK(std::fabs(oracle - brute) <= 1e-9);
    }
    const auto empty_inst = uniform_instance(2, 3);
    CHECK(expected_max_load(empty_inst, Assortment{}) == 0.0);
    CHECK(brute_force_expected_max_load(empty_inst, Assortment{}) == 0.0);
}

TEST_CASE("brute force basics and refusal") {
    const auto instance = uniform_instance(1, 1);
    CHECK(std::fabs(brute_force_expected_max_load(instance, Assortment::of({1}, 1)) - 0.5) <=
          1e-14);

    const auto big = uniform_instance(12, 40);
    CHECK_THROWS_AS(brute_force_expected_max_load(big, Assortment::full(12)),
                    CapExceededError);
    try {
        brute_force_expected_max_load(big, Assortment::full(12));
    } catch (const CapExceededError& e) {
        CHECK(doctest::Contains("oracle").checkWith(e.what()));
    }
}

TEST_CASE("monte carlo estimate brackets the oracle value") {
    const auto instance = Instance::from_weights({1.2, 0.8, 0.4}, 6);
    const auto S = Assortment::full(3);
    const double exact = expected_max_load(instance, S);
    const auto est = monte_carlo_expected_max_load(instance, S, 100000, 1234);
    CHECK(std::fabs(est.mean - exact) <= 4.0 * est.stderror);
    CHECK(est.stderror > 0.0);

    const auto repeat = monte_carlo_expected_max_load(instance, S, 100000, 1234);
    CHECK(est.mean == repeat.mean);
    CHECK(est.stderror == repeat.stderror);

    const auto empty = monte_carlo_expected_max_load(instance, Assortment{}, 10, 1);
    CHECK(empty.mean == 0.0);
    CHECK(empty.stderror == 0.0);
}

TEST_CASE("probability sensitivity: scaling down loses at most the same factor") {
    // Multinomial vectors with p_W >= (1-eps) p_Y componentwise
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const int k = 1 + static_cast<int>(rng.next_u64() % 3);
        const int T = 1 + static_cast<int>(rng.next_u64() % 5);
        const double eps = 0.5 * rng.next_double();
        std::vector<double> p;
        double mass = 0.0;
        for (int i = 0; i < k; ++i) {
            p.push_back(rng.next_double() / k);
            mass += p.back();
        }
        REQUIRE(mass <= 1.0);
        std::vector<double> scaled;
        for (double x : p) scaled.push_back((1.0 - eps) * x);
        const double full = testutil::brute_multinomial_expected_max(T, p);
        const double down = testutil::brute_multinomial_expected_max(T, scaled);
        CHECK(down >= (1.0 - eps) * full - 1e-10);
    }
}

TEST_CASE("weight sensitivity: shrunken weights lose at most the same factor") {
    Rng rng(37);
    for (int trial = 0; trial < 25; ++trial) {
        const int k = 1 + static_cast<int>(rng.next_u64() % 4);
        const int T = 1 + static_cast<int>(rng.next_u64() % 5);
        const double eps = 0.5 * rng.next_double();
        const auto w = testutil::random_weights(rng, k, 0.1, 2.0);
        std::vector<double> shrunk;
        for (double v : w) shrunk.push_back(v * (1.0 - eps * rng.next_double()));
        const double full = expected_max_load_weights(w, T);
        const double down = expected_max_load_weights(shrunk, T);
        CHECK(down >= (1.0 - eps) * full - 1e-10);
    }
}

TEST_CASE("expected max load is bounded by expected total purchases") {
    Rng rng(41);
    for (int trial = 0; trial < 25; ++trial) {
        const auto instance = testutil::random_instance(rng, 8, 10);
        const auto S = testutil::random_subset(rng, instance.n, instance.n);
        double vs = 0.0;
        for (int i : S.members) vs += instance.weight(i);
        const double value = expected_max_load(instance, S);
        CHECK(value <= instance.T * vs / (1.0 + vs) + 1e-12);
        CHECK(value >= 0.0);
        CHECK(value <= instance.T + 1e-12);
    }
}

TEST_CASE("numerical stability at T = 200") {
    // binomial closed form, the only brute-force-checkable regime at scale
    for (double v : {0.1, 1.0, 10.0}) {
        const auto instance = Instance::from_weights({v}, 200);
        const double value = expected_max_load(instance, Assortment::of({1}, 1));
        CHECK(std::fabs(value - 200.0 * v / (1.0 + v)) <= 1e-6);
    }
    std::vector<double> w;
    for (int i = 0; i < 10; ++i) w.push_back(0.1 + 0.07 * i);
    const auto instance = Instance::from_weights(w, 200);
    const auto dist = max_load_distribution(instance, Assortment::full(10));
    long double total = 0.0L;
    for (double p : dist.pmf) total += p;
    CHECK(std::fabs(static_cast<double>(total) - 1.0) <= 1e-9);
}

TEST_CASE("parallel oracle path is bit-identical to the serial reference") {
    const auto instance = generate_instance(9, 40, 0.5, 0.25, 77);
    const auto S = Assortment::full(9);
    const double serial = expected_max_load(instance, S, Exec::Serial);
    const double parallel = expected_max_load(instance, S, Exec::Parallel);
    CHECK(serial == parallel);

    const auto est_s = monte_carlo_expected_max_load(instance, S, 20000, 3, Exec::Serial);
    const auto est_p = monte_carlo_expected_max_load(instance, S, 20000, 3, Exec::Parallel);
    CHECK(est_s.mean == est_p.mean);
    CHECK(est_s.stderror == est_p.stderror);
}

}  // TEST_SUITE
