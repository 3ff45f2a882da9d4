#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mla/exec.hpp"
#include "mla/model.hpp"

namespace mla {

struct StaticSolveReport {
    Assortment assortment;
    double value = 0.0;
    std::string method;
    std::uint64_t candidates_evaluated = 0;
    double wall_time_s = 0.0;
    double epsilon_requested = 0.0;  // PTAS only
    double epsilon_effective = 0.0;  // PTAS only
};

inline constexpr int kExactSolveDefaultCap = 16;
inline constexpr std::uint64_t kBlockFamilyCap = 5'000'000;

/// Oracle values for a batch of candidate assortments. The parallel path
/// writes into indexed slots, so results are identical to the serial path.
std::vector<double> evaluate_assortments(const Instance& instance,
                                         const std::vector<Assortment>& candidates, Exec exec);

/// Argmax over all 2^n assortments; ties resolve to the lexicographically
/// first membership vector. Refuses when n exceeds `max_products`.
StaticSolveReport exact_solve(const Instance& instance, Exec exec = Exec::Parallel,
                              int max_products = kExactSolveDefaultCap);

/// Best of the n weight-ordered prefixes {1..j}; guaranteed within factor
/// 1/2 of the static optimum.
StaticSolveReport best_weight_ordered(const Instance& instance, Exec exec = Exec::Parallel);

/// Largest epsilon of the form 1/m, m integer, that is <= epsilon (the
/// effective accuracy after rounding 1/epsilon up to an integer).
double effective_epsilon(double epsilon);

/// Structure of one block-based assortment: either an arbitrary set of at
/// most 1/eps products, or the union of exactly 1/eps arbitrary heavy
/// products S1, a contiguous index block S2 = {s2_begin..s2_end}, and
/// per-class selection counts over the multiplicative weight grid spanning
/// [eps*v_c, v_c] with c the first index past S2.
struct BlockBasedSpec {
    double epsilon = 1.0;
    bool is_small_set = false;
    std::vector<int> small_set;     // small-set form
    std::vector<int> s1;            // block form: exactly 1/eps indices
    int s2_begin = 0, s2_end = -1;  // inclusive; empty when s2_end < s2_begin
    std::vector<int> class_counts;  // N_l per grid class, lightest-first picks
};

/// Grid classes over [eps*v_c, v_c] among products c..n: C_1 closes at v_c,
/// later classes are half-open with boundary weights assigned to the higher
/// class, clipped at eps*v_c. Empty classes are dropped.
std::vector<std::vector<int>> block_grid_classes(const Instance& instance, int c, double epsilon);

/// Concrete assortment described by a spec (class counts resolve to the
/// members with the largest indices).
Assortment realize_block_based(const Instance& instance, const BlockBasedSpec& spec);

/// The block-based family: every assortment of size <= 1/eps, plus every
/// realized S1/S2/class-count spec. Duplicates are suppressed; deterministic
/// order.
std::vector<Assortment> enumerate_block_based(const Instance& instance, double epsilon,
                                              std::uint64_t family_cap = kBlockFamilyCap);

/// Best oracle value over the block-based family; value >= (1-eps) * OPT.
StaticSolveReport ptas_solve(const Instance& instance, double epsilon,
                             Exec exec = Exec::Parallel);

/// Replaces members i and j (1-based positions) by one product of weight
/// v_i + v_j. Never decreases the expected maximum load.
VirtualAssortment merge(const VirtualAssortment& va, int i, int j);

/// Moves delta weight from member `from_j` onto the heavier member `to_i`
/// (v_to >= v_from required, 0 <= delta <= v_from). Members whose weight
/// drops to zero are removed.
VirtualAssortment transfer(const VirtualAssortment& va, int from_j, int to_i, double delta);

}  // namespace mla
