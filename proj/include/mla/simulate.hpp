#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mla/exec.hpp"
#include "mla/model.hpp"
#include "mla/policy.hpp"

namespace mla {

/// One realized arrival stream: per-customer offer and choice, final loads,
/// and the maximum load.
struct Trajectory {
    std::vector<int> choices;  // canonical index or kNoPurchase, one per customer
    std::vector<Assortment> offers;
    Loads final_loads;
    int max_load = 0;
};

/// T i.i.d. MNL draws against the fixed assortment S. One uniform per
/// customer via the cumulative-interval method, so coupled simulations can
/// share the stream. Deterministic per seed.
Trajectory simulate_static(const Instance& instance, const Assortment& S, std::uint64_t seed);

/// Runs an adaptive policy: each step queries the policy session with the
/// running loads, draws the choice by MNL on the offered set, and reports it
/// back to the session. Customer draws use stream (seed, 0); the session
/// receives stream (seed, 1) for its own randomness.
Trajectory simulate_policy(const Instance& instance, const AdaptivePolicy& policy,
                           std::uint64_t seed);

struct ValueEstimate {
    double mean = 0.0;
    double stderror = 0.0;
    std::uint64_t samples = 0;
};

/// Sample mean and standard error of the maximum load over independent
/// trajectories; trajectory i uses the derived stream (seed, i). Integer
/// accumulation keeps the parallel reduction exact, so results do not
/// depend on scheduling.
ValueEstimate estimate_policy_value(const Instance& instance, const AdaptivePolicy& policy,
                                    std::uint64_t samples, std::uint64_t seed,
                                    Exec exec = Exec::Parallel);
ValueEstimate estimate_static_value(const Instance& instance, const Assortment& S,
                                    std::uint64_t samples, std::uint64_t seed,
                                    Exec exec = Exec::Parallel);

/// Debug dump format: one JSON object per line and trajectory.
std::string trajectory_to_jsonl(const Trajectory& trajectory);
void dump_trajectories(std::ostream& out, const Instance& instance, const AdaptivePolicy& policy,
                       std::uint64_t count, std::uint64_t seed);

}  // namespace mla
