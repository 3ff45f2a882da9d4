#include "mla/static_opt.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>

#include <omp.h>

#include "mla/errors.hpp"
#include "mla/oracle.hpp"

namespace mla {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Index of the best value; exact value ties resolve to the lexicographically
// first membership vector. Serial scan over a deterministic value vector, so
// the outcome does not depend on how the values were produced.
size_t pick_best(const std::vector<Assortment>& candidates, const std::vector<double>& values,
                 int n) {
    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i) {
        if (values[i] > values[best] ||
            (values[i] == values[best] && lex_before(candidates[i], candidates[best], n))) {
            best = i;
        }
    }
    return best;
}

void append_subsets_up_to(const Instance& instance, int max_size,
                          std::set<std::vector<int>>& family) {
    std::vector<int> current;
    // Depth-first over index-increasing subsets of size <= max_size.
    auto recurse = [&](auto&& self, int next) -> void {
        family.insert(current);
        if (static_cast<int>(current.size()) == max_size) return;
        for (int i = next; i <= instance.n; ++i) {
            current.push_back(i);
            self(self, i + 1);
            current.pop_back();
        }
    };
    recurse(recurse, 1);
}

}  // namespace

std::vector<std::vector<int>> block_grid_classes(const Instance& instance, int c, double epsilon) {
    const double eps = effective_epsilon(epsilon);
    if (c < 1 || c > instance.n)
        throw std::domain_error("grid classes: anchor index out of range");
    const double vc = instance.weight(c);
    const double floor_weight = eps * vc;
    std::vector<std::vector<int>> classes;
    double hi = vc;
    bool first = true;
    size_t generated = 0;
    while (true) {
        const double lo = std::max((1.0 - eps) * hi, floor_weight);
        std::vector<int> members;
        for (int i = c; i <= instance.n; ++i) {
            const double v = instance.weight(i);
            if (v >= lo && (first ? v <= hi : v < hi)) members.push_back(i);
        }
        if (!members.empty()) classes.push_back(std::move(members));
        ++generated;
        if (lo <= floor_weight || generated > 100'000) break;
        hi = lo;
        first = false;
    }
    return classes;
}

Assortment realize_block_based(const Instance& instance, const BlockBasedSpec& spec) {
    if (spec.is_small_set) return Assortment::of(spec.small_set, instance.n);
    std::vector<int> members = spec.s1;
    std::sort(members.begin(), members.end());
    if (members.empty()) throw std::domain_error("block-based spec: S1 must be nonempty");
    const int a = members.back();
    const bool has_s2 = spec.s2_begin <= spec.s2_end;
    if (has_s2 && spec.s2_begin != a + 1)
        throw std::domain_error("block-based spec: S2 must start right after S1");
    for (int i = spec.s2_begin; i <= spec.s2_end; ++i) members.push_back(i);
    const int b = has_s2 ? spec.s2_end : a;
    if (!spec.class_counts.empty()) {
        if (b + 1 > instance.n)
            throw std::domain_error("block-based spec: no grid region past the blocks");
        const auto classes = block_grid_classes(instance, b + 1, spec.epsilon);
        if (spec.class_counts.size() > classes.size())
            throw std::domain_error("block-based spec: more class counts than grid classes");
        for (size_t l = 0; l < spec.class_counts.size(); ++l) {
            const int take = spec.class_counts[l];
            const auto& cls = classes[l];
            if (take < 0 || take > static_cast<int>(cls.size()))
                throw std::domain_error("block-based spec: class count out of range");
            for (int q = 0; q < take; ++q)
                members.push_back(cls[cls.size() - 1 - static_cast<size_t>(q)]);
        }
    }
    return Assortment::of(std::move(members), instance.n);
}

std::vector<double> evaluate_assortments(const Instance& instance,
                                         const std::vector<Assortment>& candidates, Exec exec) {
    std::vector<double> values(candidates.size(), 0.0);
    const bool par = exec == Exec::Parallel;
    std::atomic<bool> failed{false};
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (par)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(candidates.size()); ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            values[static_cast<size_t>(i)] =
                expected_max_load(instance, candidates[static_cast<size_t>(i)], Exec::Serial);
        } catch (...) {
#pragma omp critical
            {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);
    return values;
}

StaticSolveReport exact_solve(const Instance& instance, Exec exec, int max_products) {
    const auto start = Clock::now();
    if (instance.n > max_products)
        throw CapExceededError("exact solve: n = " + std::to_string(instance.n) +
                               " exceeds the enumeration cap of " + std::to_string(max_products));

    std::vector<Assortment> candidates;
    candidates.reserve(std::uint64_t{1} << instance.n);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << instance.n); ++mask)
        candidates.push_back(Assortment::from_mask(mask, instance.n));

    const auto values = evaluate_assortments(instance, candidates, exec);
    const size_t best = pick_best(candidates, values, instance.n);

    StaticSolveReport report;
    report.assortment = candidates[best];
    report.value = values[best];
    report.method = "exact";
    report.candidates_evaluated = candidates.size();
    report.wall_time_s = seconds_since(start);
    return report;
}

StaticSolveReport best_weight_ordered(const Instance& instance, Exec exec) {
    const auto start = Clock::now();
    std::vector<Assortment> candidates;
    candidates.reserve(instance.n);
    std::vector<int> prefix;
    for (int j = 1; j <= instance.n; ++j) {
        prefix.push_back(j);
        Assortment S;
        S.members = prefix;
        candidates.push_back(std::move(S));
    }
    const auto values = evaluate_assortments(instance, candidates, exec);
    const size_t best = pick_best(candidates, values, instance.n);

    StaticSolveReport report;
    report.assortment = candidates[best];
    report.value = values[best];
    report.method = "weight-ordered";
    report.candidates_evaluated = candidates.size();
    report.wall_time_s = seconds_since(start);
    return report;
}

double effective_epsilon(double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1.0)
        throw std::domain_error("epsilon must lie in (0, 1]");
    if (1.0 / epsilon > 1e6)
        throw CapExceededError("epsilon too small: the block-based family would be astronomical");
    const int inv = std::max(1, static_cast<int>(std::ceil(1.0 / epsilon - 1e-12)));
    return 1.0 / inv;
}

std::vector<Assortment> enumerate_block_based(const Instance& instance, double epsilon,
                                              std::uint64_t family_cap) {
    const double eps = effective_epsilon(epsilon);
    const int inv = static_cast<int>(std::lround(1.0 / eps));

    std::set<std::vector<int>> family;
    append_subsets_up_to(instance, std::min(inv, instance.n), family);

    const auto guard_cap = [&]() {
        if (family.size() > family_cap)
            throw CapExceededError("block-based family exceeds cap of " +
                                   std::to_string(family_cap) + " assortments");
    };

    if (instance.n > inv) {
        BlockBasedSpec spec;
        spec.epsilon = eps;
        // S1: every subset of exactly 1/eps products, enumerated by choosing
        // indices in increasing order.
        auto enumerate_s1 = [&](auto&& self, int next) -> void {
            if (static_cast<int>(spec.s1.size()) == inv) {
                const int a = spec.s1.back();
                for (int b = a; b <= instance.n; ++b) {  // b == a gives an empty S2
                    spec.s2_begin = a + 1;
                    spec.s2_end = b;
                    if (b == instance.n) {
                        spec.class_counts.clear();
                        family.insert(realize_block_based(instance, spec).members);
                        guard_cap();
                        continue;
                    }
                    const auto classes = block_grid_classes(instance, b + 1, eps);
                    spec.class_counts.assign(classes.size(), 0);
                    // one selection count per class
                    auto combos = [&](auto&& self2, size_t ci) -> void {
                        if (ci == classes.size()) {
                            family.insert(realize_block_based(instance, spec).members);
                            guard_cap();
                            return;
                        }
                        for (int take = 0; take <= static_cast<int>(classes[ci].size()); ++take) {
                            spec.class_counts[ci] = take;
                            self2(self2, ci + 1);
                        }
                        spec.class_counts[ci] = 0;
                    };
                    combos(combos, 0);
                }
                return;
            }
            for (int i = next; i <= instance.n; ++i) {
                spec.s1.push_back(i);
                self(self, i + 1);
                spec.s1.pop_back();
            }
        };
        enumerate_s1(enumerate_s1, 1);
    }

    std::vector<Assortment> result;
    result.reserve(family.size());
    for (const auto& members : family) {
        Assortment S;
        S.members = members;
        result.push_back(std::move(S));
    }
    return result;
}

StaticSolveReport ptas_solve(const Instance& instance, double epsilon, Exec exec) {
    const auto start = Clock::now();
    const auto family = enumerate_block_based(instance, epsilon);
    const auto values = evaluate_assortments(instance, family, exec);
    const size_t best = pick_best(family, values, instance.n);

    StaticSolveReport report;
    report.assortment = family[best];
    report.value = values[best];
    report.method = "ptas";
    report.candidates_evaluated = family.size();
    report.wall_time_s = seconds_since(start);
    report.epsilon_requested = epsilon;
    report.epsilon_effective = effective_epsilon(epsilon);
    return report;
}

VirtualAssortment merge(const VirtualAssortment& va, int i, int j) {
    const int k = static_cast<int>(va.weights.size());
    if (i < 1 || i > k || j < 1 || j > k || i == j)
        throw std::domain_error("merge: needs two distinct member positions in 1..k");
    VirtualAssortment out;
    out.weights.reserve(va.weights.size() - 1);
    for (int p = 1; p <= k; ++p)
        if (p != i && p != j) out.weights.push_back(va.weights[p - 1]);
    out.weights.push_back(va.weights[i - 1] + va.weights[j - 1]);
    return out;
}

VirtualAssortment transfer(const VirtualAssortment& va, int from_j, int to_i, double delta) {
    const int k = static_cast<int>(va.weights.size());
    if (from_j < 1 || from_j > k || to_i < 1 || to_i > k || from_j == to_i)
        throw std::domain_error("transfer: needs two distinct member positions in 1..k");
    const double v_from = va.weights[from_j - 1];
    const double v_to = va.weights[to_i - 1];
    if (v_to < v_from)
        throw std::domain_error("transfer: weight may only move toward the heavier product");
    if (delta < 0.0 || delta > v_from)
        throw std::domain_error("transfer: delta must lie in [0, v_from]");
    VirtualAssortment out = va;
    out.weights[to_i - 1] = v_to + delta;
    out.weights[from_j - 1] = v_from - delta;
    std::erase_if(out.weights, [](double v) { return v <= 0.0; });
    return out;
}

}  // namespace mla
