#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "mla/exec.hpp"
#include "mla/model.hpp"
#include "mla/policy.hpp"

namespace mla {

struct InnerStepResult {
    double value = 0.0;
    Assortment assortment;
};

/// Bellman inner problem: maximize sum_{i in S} r_i * phi_i(S) over all
/// subsets. Optimal assortments are price-ordered prefixes under MNL, so a
/// sort plus prefix scan solves it in O(n log n). Value ties resolve to the
/// smaller set. Prices must be nonnegative.
InnerStepResult dp_inner_step(std::span<const double> prices, std::span<const double> weights);

struct LoadsHash {
    size_t operator()(const Loads& v) const {
        size_t h = 1469598103934665603ull;
        for (int x : v) {
            h ^= static_cast<size_t>(x) + 0x9E3779B97F4A7C15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

/// Memoized value function of the exact dynamic program, keyed by
/// (customers remaining, canonical load vector). Loads within equal-weight
/// product groups are sorted non-increasing; such products are
/// interchangeable, which shrinks the table.
class ExactDpTable {
public:
    using Level = std::unordered_map<Loads, long double, LoadsHash>;

    explicit ExactDpTable(const Instance& instance);

    Loads canonical(Loads loads) const;
    /// Canonicalizes and returns the permutation mapping canonical slot
    /// (0-based) back to the original position (0-based).
    std::pair<Loads, std::vector<int>> canonical_with_perm(const Loads& loads) const;

    std::optional<double> value(int t, const Loads& loads) const;
    const Level& level(int t) const { return levels_[static_cast<size_t>(t)]; }
    int horizon() const { return static_cast<int>(levels_.size()) - 1; }
    std::uint64_t state_count() const;

private:
    friend class ExactDpSolver;
    std::vector<std::pair<int, int>> groups_;  // equal-weight runs, 0-based [begin, end)
    std::vector<Level> levels_;                // index = customers remaining
};

struct ExactDpResult {
    double value = 0.0;
    std::shared_ptr<const ExactDpTable> table;
};

inline constexpr std::uint64_t kExactDpStateCap = 5'000'000;

/// Solves the dynamic program by top-down memoization; value = M_T(0).
/// Refuses when (T+n choose n)*T exceeds `state_cap`.
ExactDpResult exact_dp(const Instance& instance, std::uint64_t state_cap = kExactDpStateCap);

/// Policy that replays an exact DP solution (actions precomputed per
/// memoized state; equal-weight symmetry resolved per query).
std::shared_ptr<AdaptivePolicy> make_exact_dp_policy(const Instance& instance,
                                                     ExactDpResult solved);

enum class Regime { High, Low };

struct TruncationParams {
    double epsilon = 0.25;
    double tau = 0.0;            // 300 ln^2(nT) / eps^6 unless overridden
    std::int64_t beta = 0;       // ceil(tau / eps) unless overridden
    double light_cutoff = 0.0;   // eps^2 * v_max / n
    double large_T_guard = 0.0;  // 576 n^3 / eps^8
    Regime regime = Regime::Low;
    bool tau_overridden = false;
    bool beta_overridden = false;
    bool forced_low = false;
};

/// Computes all truncation parameters and assigns the weight regime:
/// High when T*alpha >= 12 ln(nT)/eps^3 or v_max >= 1/eps, else Low.
TruncationParams classify_regime(const Instance& instance, double epsilon);
TruncationParams classify_regime(const Instance& instance, double epsilon,
                                 std::optional<double> tau_override,
                                 std::optional<std::int64_t> beta_override, bool force_low);

/// Geometric weight buckets over the surviving universe; rounded weights are
/// bucket left endpoints, so (1-eps) v <= v/(1+eps) <= rounded <= v.
struct WeightClassing {
    double epsilon = 0.0;
    double v_min = 0.0;
    double v_max = 0.0;
    int buckets = 0;              // J + 1
    std::vector<int> products;    // canonical indices of the surviving universe
    std::vector<int> bucket;      // per products[] entry
    std::vector<double> weight;   // true weight per products[] entry
    std::vector<double> rounded;  // rounded weight per products[] entry
};

WeightClassing make_weight_classing(const Instance& instance,
                                    const std::vector<int>& surviving, double epsilon);

/// Counts N[j][m] of bucket-j products currently at load m; the reduced
/// DP's state key.
struct CompressedState {
    int buckets = 0;
    int load_cap = 0;  // columns 0..load_cap
    std::vector<int> counts;

    int at(int j, int m) const { return counts[static_cast<size_t>(j) * (load_cap + 1) + m]; }
    int& at(int j, int m) { return counts[static_cast<size_t>(j) * (load_cap + 1) + m]; }

    static CompressedState from_loads(const WeightClassing& classing, const Loads& loads,
                                      int load_cap);
    /// Deterministic expansion: within each bucket, products in index order
    /// receive the bucket's loads in non-increasing order.
    Loads representative_loads(const WeightClassing& classing, int n) const;
};

inline constexpr std::uint64_t kReducedDpStateCap = 2'000'000;

struct TruncatedBuild {
    std::shared_ptr<AdaptivePolicy> policy;
    TruncationParams params;
    /// Exact value of the policy the pipeline solved for: the reduced DP
    /// optimum over the rounded universe, or the binomial mean of the
    /// heaviest product in the High branch. Absent for the large-T full
    /// universe fallback, whose horizon puts the oracle out of reach.
    std::optional<double> solved_value;
    std::string mode;  // "high-static" | "low-full-universe" | "reduced-dp"
};

/// The quasi-polynomial truncated policy: drop light products, round weights
/// to bucket endpoints, solve the reduced DP over compressed states with the
/// capped boundary, and recover a true-weight policy through the coupling
/// adaptor. High-regime instances get the static heaviest-product policy;
/// Low-regime instances beyond the large-T guard get the static full
/// universe.
std::shared_ptr<AdaptivePolicy> build_truncated_policy(const Instance& instance, double epsilon,
                                                       const TruncationParams& params,
                                                       std::uint64_t state_cap = kReducedDpStateCap);
TruncatedBuild build_truncated_policy_detailed(const Instance& instance, double epsilon,
                                               const TruncationParams& params,
                                               std::uint64_t state_cap = kReducedDpStateCap);

/// Wraps a rounded-universe policy so it acts on true weights: each real
/// choice is propagated to a simulated rounded-universe trajectory with
/// probability phi_rounded/phi_real, the residual mass redistributed over
/// the products whose rounded choice probability exceeds the real one. The
/// recovered policy loses at most a (1-eps) factor. `beta_cap`, when given,
/// forces the empty offer once the realized maximum load reaches it.
std::shared_ptr<AdaptivePolicy> recover_policy(std::shared_ptr<const AdaptivePolicy> rounded,
                                               WeightClassing classing,
                                               std::optional<std::int64_t> beta_cap = std::nullopt);

struct AdaptivityGapReport {
    double opt_dp = 0.0;
    double opt_static = 0.0;
    double opt_weight_ordered = 0.0;
    double gap_ratio = 0.0;     // A_I = opt_dp / opt_static, in [1, 4]
    double gain_percent = 0.0;  // r_I = 100 (1 - 1/A_I)
};

/// Exact adaptive-versus-static comparison. Uniform-weight instances use the
/// weight-ordered optimum as the static optimum (same-size assortments are
/// equivalent), which keeps large uniform universes inside the caps.
AdaptivityGapReport adaptivity_gap(const Instance& instance, Exec exec = Exec::Parallel);

}  // namespace mla
