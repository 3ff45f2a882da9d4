#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mla/model.hpp"

namespace mla {

/// Per-product purchase counts, canonical order, 0-based storage.
using Loads = std::vector<int>;

/// Per-trajectory decision stream of an adaptive policy. `next_offer` is
/// queried with the number of customers still to arrive (including the
/// current one) and the realized loads; `observe` then reports the arriving
/// customer's choice (canonical product index, or kNoPurchase). A session is
/// single-threaded; distinct sessions of the same policy may run
/// concurrently.
class PolicySession {
public:
    virtual ~PolicySession() = default;
    virtual Assortment next_offer(int t_remaining, const Loads& loads) = 0;
    virtual void observe(int choice) { (void)choice; }
};

/// Immutable decision table plus whatever per-trajectory state a session
/// needs. Policies offer the empty assortment for states outside their
/// table; they never fail on a reachable state.
class AdaptivePolicy {
public:
    virtual ~AdaptivePolicy() = default;
    virtual std::unique_ptr<PolicySession> start_session(std::uint64_t seed) const = 0;
    virtual std::string describe() const = 0;
    /// Decision-table export: list of (t, state key, offered assortment)
    /// entries plus any solver parameters.
    virtual std::string export_json_text() const = 0;
};

/// Fixed assortment wrapped as an adaptive policy. Sessions consume no
/// randomness, so a simulation of this policy reproduces the static
/// simulation of the same assortment draw for draw.
class StaticAssortmentPolicy : public AdaptivePolicy {
public:
    StaticAssortmentPolicy(Assortment offer, std::string role);
    std::unique_ptr<PolicySession> start_session(std::uint64_t seed) const override;
    std::string describe() const override;
    std::string export_json_text() const override;
    const Assortment& offer() const { return offer_; }

private:
    Assortment offer_;
    std::string role_;
};

}  // namespace mla
