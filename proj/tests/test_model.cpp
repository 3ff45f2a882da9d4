#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mla/errors.hpp"
#include "mla/model.hpp"
#include "mla/rng.hpp"

#include "test_support.hpp"

using namespace mla;

TEST_SUITE("model") {

TEST_CASE("choice probabilities match the MNL formula") {
    const std::vector<double> single{1.0};
    CHECK(choice_probability(single, 1) == doctest::Approx(0.5).epsilon(1e-15));

    const std::vector<double> empty{};
    CHECK(choice_probability(empty, kNoPurchase) == 1.0);

    const std::vector<double> pair{1.0, 2.0};
    CHECK(choice_probability(pair, 2) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(choice_probability(pair, 3), std::domain_error);
    CHECK_THROWS_AS(choice_probability(pair, -1), std::domain_error);
}

TEST_CASE("choice probabilities sum to one over S plus no-purchase") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto w = testutil::random_weights(rng, 1 + static_cast<int>(rng.next_u64() % 8),
                                                0.01, 5.0);
        double total = choice_probability(w, kNoPurchase);
        for (int i = 1; i <= static_cast<int>(w.size()); ++i) total += choice_probability(w, i);
        CHECK(std::fabs(total - 1.0) <= 1e-12);
    }
}

TEST_CASE("adding a product cannibalizes every fixed member") {
    Rng rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        auto w = testutil::random_weights(rng, 4, 0.05, 3.0);
        const double before = choice_probability(w, 2);
        w.push_back(0.5 + rng.next_double());
        const double after = choice_probability(w, 2);
        CHECK(after < before);
    }
}

TEST_CASE("generation: degenerate sigma gives constant weights") {
    const auto instance = generate_instance(6, 3, 0.7, 0.0, 42);
    for (double v : instance.weights) CHECK(v == 0.7);
    CHECK(instance.T == 3);
}

TEST_CASE("generation is deterministic per seed and strictly positive") {
    const auto a = generate_instance(10, 4, 0.3, 0.15, 7);
    const auto b = generate_instance(10, 4, 0.3, 0.15, 7);
    CHECK(a.weights == b.weights);
    CHECK(a.original_index == b.original_index);
    for (double v : a.weights) CHECK(v > 0.0);

    const auto c = generate_instance(10, 4, 0.3, 0.15, 8);
    CHECK(a.weights != c.weights);
}

TEST_CASE("rejection rate stays below 5% at sigma = mu/2") {
    Rng rng(99);
    std::uint64_t rejections = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) (void)rng.next_positive_normal(0.4, 0.2, &rejections);
    const double fraction =
        static_cast<double>(rejections) / static_cast<double>(draws + rejections);
    CHECK(fraction < 0.05);
}

TEST_CASE("generation rejects invalid parameters") {
    CHECK_THROWS_AS(generate_instance(5, 2, 0.5, -0.1, 1), std::domain_error);
    CHECK_THROWS_AS(generate_instance(0, 2, 0.5, 0.1, 1), std::domain_error);
    CHECK_THROWS_AS(generate_instance(5, 0, 0.5, 0.1, 1), std::domain_error);
    CHECK_THROWS_AS(generate_instance(5, 2, -0.5, 0.1, 1), std::domain_error);
}

TEST_CASE("canonicalization sorts weights and keeps the permutation") {
    const auto instance = Instance::from_weights({0.2, 1.5, 0.7, 1.5}, 3);
    CHECK(instance.weights == std::vector<double>{1.5, 1.5, 0.7, 0.2});
    // equal weights keep their original order
    CHECK(instance.original_index == std::vector<int>{2, 4, 3, 1});
    CHECK(instance.canonical_index == std::vector<int>{4, 1, 3, 2});
    const auto original = instance.original_order_weights();
    CHECK(original == std::vector<double>{0.2, 1.5, 0.7, 1.5});
}

TEST_CASE("instance JSON round-trips exactly") {
    const auto dir = std::filesystem::temp_directory_path() / "mla_model_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "roundtrip.json").string();

    const auto instance = generate_instance(7, 5, 0.3, 0.15, 21);
    save_instance(instance, path);
    const auto loaded = load_instance(path);
    CHECK(loaded.n == instance.n);
    CHECK(loaded.T == instance.T);
    CHECK(loaded.weights == instance.weights);
    CHECK(loaded.original_index == instance.original_index);
    CHECK(loaded.label == instance.label);
}

TEST_CASE("instance JSON rejects malformed input naming the field") {
    CHECK_THROWS_WITH_AS(instance_from_json_text(R"({"n": 2, "weights": [1.0, 2.0]})"),
                         doctest::Contains("\"T\""), ParseError);
    CHECK_THROWS_WITH_AS(instance_from_json_text(R"({"n": 2, "T": 1, "weights": [1.0, 0.0]})"),
                         doctest::Contains("weights[1]"), ParseError);
    CHECK_THROWS_WITH_AS(instance_from_json_text(R"({"n": 3, "T": 1, "weights": [1.0, 2.0]})"),
                         doctest::Contains("length"), ParseError);
    CHECK_THROWS_AS(instance_from_json_text("not json"), ParseError);
    CHECK_THROWS_AS(instance_from_json_text(R"({"n": 0, "T": 1, "weights": []})"), ParseError);
}

TEST_CASE("assortment validation and lexicographic order") {
    CHECK_THROWS_AS(Assortment::of({1, 1}, 3), std::domain_error);
    CHECK_THROWS_AS(Assortment::of({0}, 3), std::domain_error);
    CHECK_THROWS_AS(Assortment::of({4}, 3), std::domain_error);

    const auto a = Assortment::of({2, 3}, 3);
    const auto b = Assortment::of({1}, 3);
    // membership vectors: (0,1,1) precedes (1,0,0)
    CHECK(lex_before(a, b, 3));
    CHECK_FALSE(lex_before(b, a, 3));
    CHECK_FALSE(lex_before(a, a, 3));
    CHECK(lex_before(Assortment::of({}, 3), a, 3));

    CHECK(Assortment::from_mask(0b101, 3).members == std::vector<int>{1, 3});
    CHECK(Assortment::of({3, 1}, 3).mask() == 0b101);
}

TEST_CASE("uniform weight detection") {
    CHECK(Instance::from_weights({1.0, 1.0, 1.0}, 2).uniform_weights());
    CHECK_FALSE(Instance::from_weights({1.0, 1.0 + 1e-12}, 2).uniform_weights());
}

}  // TEST_SUITE
