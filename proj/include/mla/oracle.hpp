#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mla/exec.hpp"
#include "mla/model.hpp"

namespace mla {

/// Rectangular event {a <= L <= b} for a multinomial vector L with T trials
/// and category probabilities `probs`; the remainder category with mass
/// 1 - sum(probs) is unconstrained.
struct RectangularQuery {
    int T = 0;
    std::vector<double> probs;
    std::vector<int> lower;
    std::vector<int> upper;
};

/// Exact multinomial mass P(L = counts), remainder count T - sum(counts)
/// implicit. Computed in log space and exponentiated once.
double multinomial_pmf(int T, std::span<const double> probs, std::span<const int> counts);

/// P(a <= L <= b) by the trial-count convolution DP with binomial scaling:
/// categories are folded in one at a time, state = trials consumed so far,
/// inner loop over the count range of the current category. O(k*T*range)
/// per query. Infeasible bounds give 0.
double rectangular_probability(const RectangularQuery& q);

/// Distribution of the maximum load M(S); pmf[l] = P(M = l), l = 0..T.
struct MaxLoadDistribution {
    std::vector<double> pmf;
    double expectation() const;
};

/// P(M = l) for l >= 1 as a sum of |S| rectangular probabilities (product j
/// being the minimal-index one attaining load l), P(M = 0) in closed form.
MaxLoadDistribution max_load_distribution(const Instance& instance, const Assortment& S,
                                          Exec exec = Exec::Serial);
MaxLoadDistribution max_load_distribution_weights(std::span<const double> offered, int T,
                                                  Exec exec = Exec::Serial);

/// E(M(S)) = sum_l l * P(M = l); 0 for the empty assortment. Values lie in
/// [0, T].
double expected_max_load(const Instance& instance, const Assortment& S, Exec exec = Exec::Serial);
double expected_max_load_weights(std::span<const double> offered, int T, Exec exec = Exec::Serial);

inline constexpr std::uint64_t kBruteForceTermCap = 10'000'000;

/// Direct evaluation of the defining sum over all load compositions.
/// Refuses when (T + |S| choose |S|) exceeds `term_cap`.
double brute_force_expected_max_load(const Instance& instance, const Assortment& S,
                                     std::uint64_t term_cap = kBruteForceTermCap);
double brute_force_expected_max_load_weights(std::span<const double> offered, int T,
                                             std::uint64_t term_cap = kBruteForceTermCap);

struct MonteCarloEstimate {
    double mean = 0.0;
    double stderror = 0.0;
    std::uint64_t samples = 0;
};

/// Unbiased sample mean of the maximum load over simulated MNL choice
/// streams, with standard error. Deterministic per seed; sample i uses the
/// derived stream (seed, i), so the result is independent of scheduling.
MonteCarloEstimate monte_carlo_expected_max_load(const Instance& instance, const Assortment& S,
                                                 std::uint64_t samples, std::uint64_t seed,
                                                 Exec exec = Exec::Parallel);

}  // namespace mla
