#include "mla/simulate.hpp"

#include <algorithm>
#include <ostream>

#include <json.hpp>
#include <omp.h>

#include <atomic>

#include "mla/rng.hpp"

namespace mla {

namespace {

// Cumulative-interval MNL draw: offered products in member order, the
// no-purchase option taking the tail of (0,1].
int draw_choice(const Instance& instance, const Assortment& S, double u) {
    double denom = 1.0;
    for (int p : S.members) denom += instance.weight(p);
    double cum = 0.0;
    for (int p : S.members) {
        cum += instance.weight(p) / denom;
        if (u < cum) return p;
    }
    return kNoPurchase;
}

}  // namespace

Trajectory simulate_policy(const Instance& instance, const AdaptivePolicy& policy,
                           std::uint64_t seed) {
    Rng stream(derive_seed(seed, 0));
    auto session = policy.start_session(derive_seed(seed, 1));

    Trajectory trajectory;
    trajectory.choices.reserve(static_cast<size_t>(instance.T));
    trajectory.offers.reserve(static_cast<size_t>(instance.T));
    trajectory.final_loads.assign(static_cast<size_t>(instance.n), 0);

    for (int remaining = instance.T; remaining >= 1; --remaining) {
        Assortment offer = session->next_offer(remaining, trajectory.final_loads);
        const double u = stream.next_double();
        const int choice = draw_choice(instance, offer, u);
        session->observe(choice);
        if (choice != kNoPurchase) ++trajectory.final_loads[static_cast<size_t>(choice) - 1];
        trajectory.offers.push_back(std::move(offer));
        trajectory.choices.push_back(choice);
    }
    trajectory.max_load =
        *std::max_element(trajectory.final_loads.begin(), trajectory.final_loads.end());
    return trajectory;
}

Trajectory simulate_static(const Instance& instance, const Assortment& S, std::uint64_t seed) {
    const StaticAssortmentPolicy policy(S, "simulate-static");
    return simulate_policy(instance, policy, seed);
}

ValueEstimate estimate_policy_value(const Instance& instance, const AdaptivePolicy& policy,
                                    std::uint64_t samples, std::uint64_t seed, Exec exec) {
    if (samples < 2) throw std::domain_error("estimate_policy_value: need at least two samples");

    std::uint64_t sum = 0, sum_sq = 0;
    const bool par = exec == Exec::Parallel;
    std::atomic<bool> failed{false};
    std::exception_ptr error;
#pragma omp parallel for schedule(static) reduction(+ : sum, sum_sq) if (par)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(samples); ++i) {
        if (failed.load(std::memory_order_relaxed)) continue;
        try {
            const auto trajectory = simulate_policy(
                instance, policy, derive_seed(seed, static_cast<std::uint64_t>(i)));
            const auto m = static_cast<std::uint64_t>(trajectory.max_load);
            sum += m;
            sum_sq += m * m;
        } catch (...) {
#pragma omp critical
            {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    }
    if (error) std::rethrow_exception(error);

    ValueEstimate est;
    est.samples = samples;
    const double n = static_cast<double>(samples);
    est.mean = static_cast<double>(sum) / n;
    const double var = (static_cast<double>(sum_sq) - n * est.mean * est.mean) / (n - 1.0);
    est.stderror = std::sqrt(std::max(var, 0.0) / n);
    return est;
}

ValueEstimate estimate_static_value(const Instance& instance, const Assortment& S,
                                    std::uint64_t samples, std::uint64_t seed, Exec exec) {
    const StaticAssortmentPolicy policy(S, "estimate-static");
    return estimate_policy_value(instance, policy, samples, seed, exec);
}

std::string trajectory_to_jsonl(const Trajectory& trajectory) {
    nlohmann::json j;
    j["choices"] = trajectory.choices;
    nlohmann::json offers = nlohmann::json::array();
    for (const auto& S : trajectory.offers) offers.push_back(S.members);
    j["offers"] = std::move(offers);
    j["final_loads"] = trajectory.final_loads;
    j["max_load"] = trajectory.max_load;
    return j.dump() + "\n";
}

void dump_trajectories(std::ostream& out, const Instance& instance, const AdaptivePolicy& policy,
                       std::uint64_t count, std::uint64_t seed) {
    for (std::uint64_t i = 0; i < count; ++i)
        out << trajectory_to_jsonl(simulate_policy(instance, policy, derive_seed(seed, i)));
}

}  // namespace mla
