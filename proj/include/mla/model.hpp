#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mla {

/// Reserved marker for the no-purchase option.
inline constexpr int kNoPurchase = 0;

/// Product universe under the multinomial logit model together with the
/// customer count T. Weights are canonicalized at construction: sorted in
/// non-increasing order, ties broken by original position. All solver code
/// works in canonical indices (1-based); `original_index` maps back for
/// reporting.
struct Instance {
    int n = 0;
    int T = 0;
    std::vector<double> weights;       // canonical order, strictly positive
    std::vector<int> original_index;   // canonical pos (0-based) -> original index (1-based)
    std::vector<int> canonical_index;  // original pos (0-based) -> canonical index (1-based)
    std::string label;

    /// Validates and canonicalizes. `w` is in original (input) order.
    static Instance from_weights(std::vector<double> w, int T, std::string label = {});

    double weight(int canonical) const { return weights[static_cast<size_t>(canonical) - 1]; }
    double total_weight() const;
    std::vector<double> original_order_weights() const;
    bool uniform_weights() const;
};

/// Subset of canonical product indices in 1..n, sorted ascending, no
/// duplicates. May be empty.
struct Assortment {
    std::vector<int> members;

    static Assortment of(std::vector<int> idx, int n);
    static Assortment full(int n);
    static Assortment from_mask(std::uint64_t mask, int n);

    bool empty() const { return members.empty(); }
    int size() const { return static_cast<int>(members.size()); }
    bool contains(int i) const;
    std::uint64_t mask() const;

    bool operator==(const Assortment& other) const { return members == other.members; }
};

/// True when `a` precedes `b` in lexicographic order of the n-dimensional
/// binary membership vectors (entry 1 compared first). Used as the
/// deterministic tie-break among equal-value assortments.
bool lex_before(const Assortment& a, const Assortment& b, int n);

/// Weight multiset detached from any product universe; the argument type of
/// the merge/transfer operations and the weight-space oracle entry points.
struct VirtualAssortment {
    std::vector<double> weights;

    static VirtualAssortment of(std::vector<double> w);
    double total() const;
};

/// MNL choice probability of member `i` (1-based position inside the offered
/// weight multiset) or of the no-purchase marker 0:
/// v_i / (1 + sum of offered weights).
double choice_probability(std::span<const double> assortment_weights, int i);

/// Weights of the members of `S`, in member order.
std::vector<double> gather_weights(const Instance& instance, const Assortment& S);

/// Weights drawn i.i.d. from the positive part of Normal(mu, sigma) by
/// rejection; deterministic per seed. sigma == 0 gives all weights equal mu.
Instance generate_instance(int n, int T, double mu, double sigma, std::uint64_t seed,
                           std::uint64_t* rejections = nullptr);

/// Instance JSON: {"n": int, "T": int, "weights": [...], "label": optional}.
/// Weights are stored in original order, so save/load round-trips exactly.
Instance load_instance(const std::string& path);
void save_instance(const Instance& instance, const std::string& path);
Instance instance_from_json_text(const std::string& text);
std::string instance_to_json_text(const Instance& instance);

}  // namespace mla
