#include "mla/dynamic_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "mla/errors.hpp"
#include "mla/oracle.hpp"
#include "mla/rng.hpp"
#include "mla/static_opt.hpp"

namespace mla {

namespace {

struct InnerItem {
    double price;
    double weight;
    int tag;
};

struct InnerScan {
    long double value = 0.0L;
    size_t prefix_len = 0;
};

// Price-ordered prefix scan. Accumulators in extended precision so the DP
// does not shed digits over long horizons.
InnerScan inner_scan(std::vector<InnerItem>& items) {
    std::stable_sort(items.begin(), items.end(),
                     [](const InnerItem& a, const InnerItem& b) { return a.price > b.price; });
    InnerScan best;
    long double num = 0.0L;
    long double den = 1.0L;
    for (size_t i = 0; i < items.size(); ++i) {
        num += static_cast<long double>(items[i].price) * items[i].weight;
        den += items[i].weight;
        const long double val = num / den;
        if (val > best.value) {
            best.value = val;
            best.prefix_len = i + 1;
        }
    }
    return best;
}

long double binomial_saturating(int top, int bottom) {
    long double c = 1.0L;
    for (int i = 1; i <= bottom; ++i) {
        c *= static_cast<long double>(top - bottom + i) / static_cast<long double>(i);
        if (c > 1e18L) return 1e18L;
    }
    return c;
}

}  // namespace

InnerStepResult dp_inner_step(std::span<const double> prices, std::span<const double> weights) {
    if (prices.size() != weights.size())
        throw std::domain_error("inner step: prices and weights must have equal length");
    std::vector<InnerItem> items;
    items.reserve(prices.size());
    for (size_t i = 0; i < prices.size(); ++i) {
        if (prices[i] < 0.0 || !std::isfinite(prices[i]))
            throw std::domain_error("inner step: prices must be nonnegative");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
            throw std::domain_error("inner step: weights must be strictly positive");
        items.push_back({prices[i], weights[i], static_cast<int>(i) + 1});
    }
    const auto scan = inner_scan(items);
    std::vector<int> chosen;
    chosen.reserve(scan.prefix_len);
    for (size_t i = 0; i < scan.prefix_len; ++i) chosen.push_back(items[i].tag);
    InnerStepResult result;
    result.value = static_cast<double>(scan.value);
    result.assortment = Assortment::of(std::move(chosen), static_cast<int>(prices.size()));
    return result;
}

// ---------------------------------------------------------------------------
// Exact dynamic program
// ---------------------------------------------------------------------------

ExactDpTable::ExactDpTable(const Instance& instance) {
    int start = 0;
    for (int i = 1; i <= instance.n; ++i) {
        if (i == instance.n || instance.weights[i] != instance.weights[start]) {
            groups_.push_back({start, i});
            start = i;
        }
    }
    levels_.resize(static_cast<size_t>(instance.T) + 1);
}

Loads ExactDpTable::canonical(Loads loads) const {
    for (auto [b, e] : groups_)
        std::sort(loads.begin() + b, loads.begin() + e, std::greater<int>());
    return loads;
}

std::pair<Loads, std::vector<int>> ExactDpTable::canonical_with_perm(const Loads& loads) const {
    std::vector<int> perm(loads.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (auto [b, e] : groups_) {
        std::sort(perm.begin() + b, perm.begin() + e, [&](int x, int y) {
            if (loads[x] != loads[y]) return loads[x] > loads[y];
            return x < y;
        });
    }
    Loads canon(loads.size());
    for (size_t s = 0; s < loads.size(); ++s) canon[s] = loads[perm[s]];
    return {std::move(canon), std::move(perm)};
}

std::optional<double> ExactDpTable::value(int t, const Loads& loads) const {
    if (t < 0 || t >= static_cast<int>(levels_.size())) return std::nullopt;
    const Loads key = canonical(loads);
    const auto& level = levels_[static_cast<size_t>(t)];
    if (auto it = level.find(key); it != level.end()) return static_cast<double>(it->second);
    return std::nullopt;
}

std::uint64_t ExactDpTable::state_count() const {
    std::uint64_t total = 0;
    for (const auto& level : levels_) total += level.size();
    return total;
}

class ExactDpSolver {
public:
    ExactDpSolver(const Instance& instance, ExactDpTable& table)
        : instance_(instance), table_(table) {}

    long double solve(int t, Loads loads) {
        loads = table_.canonical(std::move(loads));
        auto& level = table_.levels_[static_cast<size_t>(t)];
        if (auto it = level.find(loads); it != level.end()) return it->second;

        long double val;
        if (t == 0) {
            val = *std::max_element(loads.begin(), loads.end());
        } else {
            const long double base = solve(t - 1, loads);
            std::vector<InnerItem> items;
            items.reserve(loads.size());
            for (int i = 0; i < instance_.n; ++i) {
                Loads next = loads;
                ++next[i];
                const long double succ = solve(t - 1, std::move(next));
                // max absorbs 1-ulp monotonicity drift
                const double price = std::max(0.0, static_cast<double>(succ - base));
                items.push_back({price, instance_.weights[i], i + 1});
            }
            val = base + inner_scan(items).value;
        }
        level.emplace(std::move(loads), val);
        return val;
    }

private:
    const Instance& instance_;
    ExactDpTable& table_;
};

ExactDpResult exact_dp(const Instance& instance, std::uint64_t state_cap) {
    const long double bound =
        binomial_saturating(instance.T + instance.n, instance.n) * instance.T;
    if (bound > static_cast<long double>(state_cap))
        throw CapExceededError(
            "exact dp: state space bound (T+n choose n)*T exceeds the cap of " +
            std::to_string(state_cap) + " states; consider the truncated solver");

    auto table = std::make_shared<ExactDpTable>(instance);
    ExactDpSolver solver(instance, *table);
    const long double value = solver.solve(instance.T, Loads(static_cast<size_t>(instance.n), 0));

    ExactDpResult result;
    result.value = static_cast<double>(value);
    result.table = std::move(table);
    return result;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

namespace {

class FixedOfferSession : public PolicySession {
public:
    explicit FixedOfferSession(const Assortment& offer) : offer_(offer) {}
    Assortment next_offer(int, const Loads&) override { return offer_; }

private:
    Assortment offer_;
};

}  // namespace

StaticAssortmentPolicy::StaticAssortmentPolicy(Assortment offer, std::string role)
    : offer_(std::move(offer)), role_(std::move(role)) {}

std::unique_ptr<PolicySession> StaticAssortmentPolicy::start_session(std::uint64_t) const {
    return std::make_unique<FixedOfferSession>(offer_);
}

std::string StaticAssortmentPolicy::describe() const { return "static[" + role_ + "]"; }

std::string StaticAssortmentPolicy::export_json_text() const {
    nlohmann::json j;
    j["type"] = "static";
    j["role"] = role_;
    j["offer"] = offer_.members;
    return j.dump(2) + "\n";
}

namespace {

using ActionLevel = std::unordered_map<Loads, Assortment, LoadsHash>;

class ExactDpPolicy : public AdaptivePolicy {
public:
    ExactDpPolicy(const Instance& instance, ExactDpResult solved)
        : instance_(instance), table_(std::move(solved.table)), value_(solved.value) {
        const int T = instance_.T;
        actions_.resize(static_cast<size_t>(T) + 1);
        for (int t = 1; t <= T; ++t) {
            const auto& level = table_->level(t);
            const auto& prev = table_->level(t - 1);
            for (const auto& [state, stored] : level) {
                (void)stored;
                const auto base_it = prev.find(state);
                if (base_it == prev.end())
                    throw std::logic_error("exact dp policy: missing base state");
                const long double base = base_it->second;
                std::vector<InnerItem> items;
                items.reserve(state.size());
                for (int i = 0; i < instance_.n; ++i) {
                    Loads next = state;
                    ++next[i];
                    const auto child = prev.find(table_->canonical(std::move(next)));
                    if (child == prev.end())
                        throw std::logic_error("exact dp policy: missing child state");
                    const double price =
                        std::max(0.0, static_cast<double>(child->second - base));
                    items.push_back({price, instance_.weights[i], i + 1});
                }
                const auto scan = inner_scan(items);
                std::vector<int> chosen;
                chosen.reserve(scan.prefix_len);
                for (size_t q = 0; q < scan.prefix_len; ++q) chosen.push_back(items[q].tag);
                actions_[static_cast<size_t>(t)].emplace(
                    state, Assortment::of(std::move(chosen), instance_.n));
            }
        }
    }

    double value() const { return value_; }
    const ExactDpTable& table() const { return *table_; }

    std::unique_ptr<PolicySession> start_session(std::uint64_t) const override;

    std::string describe() const override { return "exact-dp"; }

    std::string export_json_text() const override {
        nlohmann::json entries = nlohmann::json::array();
        for (int t = 1; t < static_cast<int>(actions_.size()); ++t) {
            std::vector<std::pair<Loads, Assortment>> sorted(actions_[t].begin(),
                                                             actions_[t].end());
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [state, offer] : sorted)
                entries.push_back({{"t", t}, {"state", state}, {"offer", offer.members}});
        }
        nlohmann::json j;
        j["type"] = "exact-dp";
        j["value"] = value_;
        j["entries"] = std::move(entries);
        return j.dump(2) + "\n";
    }

private:
    friend class ExactDpSession;
    Instance instance_;
    std::shared_ptr<const ExactDpTable> table_;
    double value_;
    std::vector<ActionLevel> actions_;
};

class ExactDpSession : public PolicySession {
public:
    explicit ExactDpSession(const ExactDpPolicy& policy) : policy_(policy) {}

    Assortment next_offer(int t, const Loads& loads) override {
        if (t < 1 || t >= static_cast<int>(policy_.actions_.size())) return Assortment{};
        auto [canon, perm] = policy_.table_->canonical_with_perm(loads);
        const auto& level = policy_.actions_[static_cast<size_t>(t)];
        const auto it = level.find(canon);
        if (it == level.end()) return Assortment{};
        // Actions are stored against canonical states; equal-weight products
        // map back through the sorting permutation.
        std::vector<int> members;
        members.reserve(it->second.members.size());
        for (int slot : it->second.members) members.push_back(perm[slot - 1] + 1);
        std::sort(members.begin(), members.end());
        Assortment out;
        out.members = std::move(members);
        return out;
    }

private:
    const ExactDpPolicy& policy_;
};

std::unique_ptr<PolicySession> ExactDpPolicy::start_session(std::uint64_t) const {
    return std::make_unique<ExactDpSession>(*this);
}

}  // namespace

std::shared_ptr<AdaptivePolicy> make_exact_dp_policy(const Instance& instance,
                                                     ExactDpResult solved) {
    if (!solved.table) throw std::domain_error("exact dp policy: missing solved table");
    return std::make_shared<ExactDpPolicy>(instance, std::move(solved));
}

// ---------------------------------------------------------------------------
// Regime classification and weight classing
// ---------------------------------------------------------------------------

TruncationParams classify_regime(const Instance& instance, double epsilon) {
    return classify_regime(instance, epsilon, std::nullopt, std::nullopt, false);
}

TruncationParams classify_regime(const Instance& instance, double epsilon,
                                 std::optional<double> tau_override,
                                 std::optional<std::int64_t> beta_override, bool force_low) {
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        throw std::domain_error("classify_regime: epsilon must lie in (0, 1)");
    TruncationParams p;
    p.epsilon = epsilon;
    const double v_max = instance.weights.front();
    const double alpha = v_max / (1.0 + v_max);
    const double log_nT =
        std::log(static_cast<double>(instance.n) * static_cast<double>(instance.T));
    p.tau = 300.0 * log_nT * log_nT / std::pow(epsilon, 6);
    p.light_cutoff = epsilon * epsilon * v_max / instance.n;
    p.large_T_guard = 576.0 * std::pow(static_cast<double>(instance.n), 3) / std::pow(epsilon, 8);
    const bool high = instance.T * alpha >= 12.0 * log_nT / std::pow(epsilon, 3) ||
                      v_max >= 1.0 / epsilon;
    p.regime = high ? Regime::High : Regime::Low;

    if (tau_override) {
        if (!(*tau_override > 0.0)) throw std::domain_error("classify_regime: tau override must be > 0");
        p.tau = *tau_override;
        p.tau_overridden = true;
    }
    const long double beta_ld = std::ceil(static_cast<long double>(p.tau) / epsilon);
    p.beta = beta_ld > 4e18L ? static_cast<std::int64_t>(4e18)
                             : static_cast<std::int64_t>(beta_ld);
    p.beta = std::max<std::int64_t>(p.beta, 1);
    if (beta_override) {
        if (*beta_override < 1) throw std::domain_error("classify_regime: beta override must be >= 1");
        p.beta = *beta_override;
        p.beta_overridden = true;
    }
    if (force_low) {
        p.regime = Regime::Low;
        p.forced_low = true;
    }
    return p;
}

WeightClassing make_weight_classing(const Instance& instance, const std::vector<int>& surviving,
                                    double epsilon) {
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        throw std::domain_error("weight classing: epsilon must lie in (0, 1)");
    const Assortment survivors = Assortment::of(surviving, instance.n);
    if (survivors.empty()) throw std::domain_error("weight classing: surviving universe is empty");

    WeightClassing c;
    c.epsilon = epsilon;
    c.products = survivors.members;
    c.v_min = instance.weight(c.products.front());
    c.v_max = c.v_min;
    for (int p : c.products) {
        c.v_min = std::min(c.v_min, instance.weight(p));
        c.v_max = std::max(c.v_max, instance.weight(p));
    }
    const double log_step = std::log1p(epsilon);
    int J = static_cast<int>(std::floor(std::log(c.v_max / c.v_min) / log_step + 1e-12));
    J = std::max(J, 0);
    c.buckets = J + 1;

    const auto endpoint = [&](int j) { return c.v_min * std::pow(1.0 + epsilon, j); };
    for (int p : c.products) {
        const double v = instance.weight(p);
        int j = static_cast<int>(std::floor(std::log(v / c.v_min) / log_step + 1e-12));
        j = std::clamp(j, 0, J);
        while (j > 0 && endpoint(j) > v * (1.0 + 1e-12)) --j;
        while (j < J && endpoint(j + 1) <= v * (1.0 + 1e-12)) ++j;
        c.bucket.push_back(j);
        c.weight.push_back(v);
        c.rounded.push_back(std::min(endpoint(j), v));
    }
    return c;
}

CompressedState CompressedState::from_loads(const WeightClassing& classing, const Loads& loads,
                                            int load_cap) {
    CompressedState st;
    st.buckets = classing.buckets;
    st.load_cap = load_cap;
    st.counts.assign(static_cast<size_t>(st.buckets) * (load_cap + 1), 0);
    for (size_t idx = 0; idx < classing.products.size(); ++idx) {
        const int p = classing.products[idx];
        const int m = std::min(loads[static_cast<size_t>(p) - 1], load_cap);
        ++st.at(classing.bucket[idx], m);
    }
    return st;
}

Loads CompressedState::representative_loads(const WeightClassing& classing, int n) const {
    Loads loads(static_cast<size_t>(n), 0);
    for (int j = 0; j < buckets; ++j) {
        std::vector<int> bucket_loads;
        for (int m = load_cap; m >= 0; --m)
            for (int q = 0; q < at(j, m); ++q) bucket_loads.push_back(m);
        size_t next = 0;
        for (size_t idx = 0; idx < classing.products.size() && next < bucket_loads.size(); ++idx) {
            if (classing.bucket[idx] != j) continue;
            loads[static_cast<size_t>(classing.products[idx]) - 1] = bucket_loads[next++];
        }
    }
    return loads;
}

// ---------------------------------------------------------------------------
// Reduced dynamic program over compressed states
// ---------------------------------------------------------------------------

namespace {

using StateKey = std::vector<std::uint64_t>;

struct StateKeyHash {
    size_t operator()(const StateKey& v) const {
        size_t h = 1469598103934665603ull;
        for (std::uint64_t x : v) {
            h ^= static_cast<size_t>(x) + 0x9E3779B97F4A7C15ull;
            h *= 1099511628211ull;
        }
        return h;
    }
};

struct CellOffer {
    int bucket;
    int load;
    int take;
};

StateKey pack_state(const CompressedState& st) {
    StateKey key;
    for (int j = 0; j < st.buckets; ++j)
        for (int m = 0; m <= st.load_cap; ++m)
            if (const int c = st.at(j, m); c > 0)
                key.push_back((static_cast<std::uint64_t>(j) << 40) |
                              (static_cast<std::uint64_t>(m) << 20) |
                              static_cast<std::uint64_t>(c));
    return key;
}

int max_loaded(const CompressedState& st) {
    for (int m = st.load_cap; m >= 0; --m)
        for (int j = 0; j < st.buckets; ++j)
            if (st.at(j, m) > 0) return m;
    return 0;
}

class ReducedDp {
public:
    using ValueLevel = std::unordered_map<StateKey, long double, StateKeyHash>;
    using OfferLevel = std::unordered_map<StateKey, std::vector<CellOffer>, StateKeyHash>;

    ReducedDp(const Instance& instance, const WeightClassing& classing, std::int64_t beta,
              std::uint64_t state_cap)
        : T_(instance.T), beta_(beta), state_cap_(state_cap), classing_(classing) {
        load_cap_ = static_cast<int>(std::min<std::int64_t>(beta, T_));
        bucket_weight_.assign(static_cast<size_t>(classing.buckets), 0.0);
        for (size_t idx = 0; idx < classing.products.size(); ++idx)
            bucket_weight_[static_cast<size_t>(classing.bucket[idx])] = classing.rounded[idx];
        values_.resize(static_cast<size_t>(T_) + 1);
        offers_.resize(static_cast<size_t>(T_) + 1);
    }

    int load_cap() const { return load_cap_; }

    long double solve(int t, CompressedState& state) {
        const int top = max_loaded(state);
        if (beta_ <= load_cap_ && top >= beta_) return static_cast<long double>(beta_);
        if (t == 0) return top;

        StateKey key = pack_state(state);
        auto& level = values_[static_cast<size_t>(t)];
        if (auto it = level.find(key); it != level.end()) return it->second;

        const long double base = solve(t - 1, state);
        std::vector<InnerItem> items;
        std::vector<std::pair<int, int>> cells;
        for (int j = 0; j < state.buckets; ++j) {
            for (int m = 0; m <= state.load_cap; ++m) {
                const int count = state.at(j, m);
                if (count == 0) continue;
                --state.at(j, m);
                ++state.at(j, m + 1);
                const long double succ = solve(t - 1, state);
                ++state.at(j, m);
                --state.at(j, m + 1);
                const double price = std::max(0.0, static_cast<double>(succ - base));
                const int tag = static_cast<int>(cells.size());
                cells.emplace_back(j, m);
                for (int q = 0; q < count; ++q)
                    items.push_back({price, bucket_weight_[static_cast<size_t>(j)], tag});
            }
        }
        const auto scan = inner_scan(items);
        std::vector<int> take(cells.size(), 0);
        for (size_t q = 0; q < scan.prefix_len; ++q) ++take[static_cast<size_t>(items[q].tag)];
        std::vector<CellOffer> offer;
        for (size_t ci = 0; ci < cells.size(); ++ci)
            if (take[ci] > 0) offer.push_back({cells[ci].first, cells[ci].second, take[ci]});

        const long double value = base + scan.value;
        ++states_;
        if (states_ > state_cap_)
            throw CapExceededError("reduced dp: compressed state count exceeds the cap of " +
                                   std::to_string(state_cap_));
        level.emplace(key, value);
        offers_[static_cast<size_t>(t)].emplace(std::move(key), std::move(offer));
        return value;
    }

    std::vector<OfferLevel> take_offers() { return std::move(offers_); }
    std::uint64_t state_count() const { return states_; }

private:
    int T_;
    std::int64_t beta_;
    int load_cap_;
    std::uint64_t state_cap_;
    std::uint64_t states_ = 0;
    const WeightClassing& classing_;
    std::vector<double> bucket_weight_;
    std::vector<ValueLevel> values_;
    std::vector<OfferLevel> offers_;
};

/// Optimal truncated policy over the rounded universe; decisions are keyed
/// by compressed states of whatever loads it is queried with.
class ReducedDpPolicy : public AdaptivePolicy {
public:
    ReducedDpPolicy(const Instance& instance, const WeightClassing& classing, std::int64_t beta,
                    std::uint64_t state_cap)
        : n_(instance.n), T_(instance.T), beta_(beta), classing_(classing) {
        ReducedDp dp(instance, classing_, beta, state_cap);
        load_cap_ = dp.load_cap();
        CompressedState root =
            CompressedState::from_loads(classing_, Loads(static_cast<size_t>(n_), 0), load_cap_);
        value_ = static_cast<double>(dp.solve(T_, root));
        offers_ = dp.take_offers();
        states_ = dp.state_count();
    }

    double value() const { return value_; }
    std::uint64_t state_count() const { return states_; }
    std::int64_t beta() const { return beta_; }
    const WeightClassing& classing() const { return classing_; }

    std::unique_ptr<PolicySession> start_session(std::uint64_t) const override;

    std::string describe() const override { return "reduced-dp"; }

    std::string export_json_text() const override {
        nlohmann::json entries = nlohmann::json::array();
        for (size_t t = 1; t < offers_.size(); ++t) {
            std::vector<std::pair<StateKey, std::vector<CellOffer>>> sorted(offers_[t].begin(),
                                                                            offers_[t].end());
            std::sort(sorted.begin(), sorted.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            for (const auto& [key, offer] : sorted) {
                nlohmann::json cells = nlohmann::json::array();
                for (const auto& cell : offer)
                    cells.push_back({{"bucket", cell.bucket}, {"load", cell.load}, {"take", cell.take}});
                entries.push_back({{"t", t}, {"state", key}, {"offer", std::move(cells)}});
            }
        }
        nlohmann::json j;
        j["type"] = "reduced-dp";
        j["value"] = value_;
        j["beta"] = beta_;
        j["entries"] = std::move(entries);
        return j.dump(2) + "\n";
    }

    Assortment offer_for(int t, const Loads& loads) const {
        if (t < 1 || t > T_) return Assortment{};
        CompressedState st = CompressedState::from_loads(classing_, loads, load_cap_);
        if (beta_ <= load_cap_ && max_loaded(st) >= beta_) return Assortment{};
        const auto& level = offers_[static_cast<size_t>(t)];
        const auto it = level.find(pack_state(st));
        if (it == level.end()) return Assortment{};
        std::vector<int> members;
        for (const auto& cell : it->second) {
            // lowest-index-first among the bucket's products at this load
            int remaining = cell.take;
            for (size_t idx = 0; idx < classing_.products.size() && remaining > 0; ++idx) {
                if (classing_.bucket[idx] != cell.bucket) continue;
                const int p = classing_.products[idx];
                const int m = std::min(loads[static_cast<size_t>(p) - 1], load_cap_);
                if (m != cell.load) continue;
                members.push_back(p);
                --remaining;
            }
        }
        std::sort(members.begin(), members.end());
        Assortment out;
        out.members = std::move(members);
        return out;
    }

private:
    int n_;
    int T_;
    std::int64_t beta_;
    int load_cap_ = 0;
    double value_ = 0.0;
    std::uint64_t states_ = 0;
    WeightClassing classing_;
    std::vector<ReducedDp::OfferLevel> offers_;
};

class ReducedDpSession : public PolicySession {
public:
    explicit ReducedDpSession(const ReducedDpPolicy& policy) : policy_(policy) {}
    Assortment next_offer(int t, const Loads& loads) override {
        return policy_.offer_for(t, loads);
    }

private:
    const ReducedDpPolicy& policy_;
};

std::unique_ptr<PolicySession> ReducedDpPolicy::start_session(std::uint64_t) const {
    return std::make_unique<ReducedDpSession>(*this);
}

// ---------------------------------------------------------------------------
// Policy recovery through the rounded-universe coupling
// ---------------------------------------------------------------------------

class RecoveredPolicy : public AdaptivePolicy {
public:
    RecoveredPolicy(std::shared_ptr<const AdaptivePolicy> rounded, WeightClassing classing,
                    std::optional<std::int64_t> beta_cap)
        : rounded_(std::move(rounded)), classing_(std::move(classing)), beta_cap_(beta_cap) {
        int max_index = 0;
        for (int p : classing_.products) max_index = std::max(max_index, p);
        true_weight_.assign(static_cast<size_t>(max_index) + 1, 0.0);
        rounded_weight_.assign(static_cast<size_t>(max_index) + 1, 0.0);
        for (size_t idx = 0; idx < classing_.products.size(); ++idx) {
            true_weight_[static_cast<size_t>(classing_.products[idx])] = classing_.weight[idx];
            rounded_weight_[static_cast<size_t>(classing_.products[idx])] = classing_.rounded[idx];
        }
    }

    std::unique_ptr<PolicySession> start_session(std::uint64_t seed) const override;

    std::string describe() const override {
        return "recovered[" + rounded_->describe() + "]";
    }

    std::string export_json_text() const override {
        nlohmann::json j;
        j["type"] = "recovered";
        j["epsilon"] = classing_.epsilon;
        if (beta_cap_) j["beta_cap"] = *beta_cap_;
        j["classing"] = {{"v_min", classing_.v_min},
                         {"v_max", classing_.v_max},
                         {"buckets", classing_.buckets},
                         {"products", classing_.products},
                         {"bucket", classing_.bucket},
                         {"rounded", classing_.rounded}};
        j["rounded_policy"] = nlohmann::json::parse(rounded_->export_json_text());
        return j.dump(2) + "\n";
    }

private:
    friend class RecoveredSession;
    std::shared_ptr<const AdaptivePolicy> rounded_;
    WeightClassing classing_;
    std::optional<std::int64_t> beta_cap_;
    std::vector<double> true_weight_;
    std::vector<double> rounded_weight_;
};

class RecoveredSession : public PolicySession {
public:
    RecoveredSession(const RecoveredPolicy& policy, std::uint64_t seed)
        : policy_(policy),
          rounded_session_(policy.rounded_->start_session(derive_seed(seed, 1))),
          rng_(derive_seed(seed, 0)) {
        int max_index = 0;
        for (int p : policy_.classing_.products) max_index = std::max(max_index, p);
        sim_loads_.assign(static_cast<size_t>(max_index), 0);
    }

    Assortment next_offer(int t, const Loads& loads) override {
        queried_ = false;
        if (policy_.beta_cap_) {
            const int real_max =
                loads.empty() ? 0 : *std::max_element(loads.begin(), loads.end());
            if (real_max >= *policy_.beta_cap_) return Assortment{};
        }
        Loads sim(loads.size(), 0);
        for (size_t i = 0; i < sim_loads_.size() && i < sim.size(); ++i) sim[i] = sim_loads_[i];
        pending_ = rounded_session_->next_offer(t, sim);
        queried_ = true;
        return pending_;
    }

    void observe(int choice) override {
        if (!queried_) return;  // we offered the empty set ourselves
        const int sim_choice = couple_choice(choice);
        rounded_session_->observe(sim_choice);
        if (sim_choice != kNoPurchase) ++sim_loads_[static_cast<size_t>(sim_choice) - 1];
    }

private:
    // Propagates the real customer's choice onto the simulated rounded
    // trajectory: kept with probability phi_rounded/phi_real, otherwise
    // redistributed over the options whose rounded choice probability
    // exceeds the real one.
    int couple_choice(int choice) {
        const auto& members = pending_.members;
        if (members.empty()) return kNoPurchase;

        double denom_real = 1.0;
        double denom_rounded = 1.0;
        for (int p : members) {
            denom_real += policy_.true_weight_[static_cast<size_t>(p)];
            denom_rounded += policy_.rounded_weight_[static_cast<size_t>(p)];
        }
        const auto phi_real = [&](int x) {
            return x == kNoPurchase ? 1.0 / denom_real
                                    : policy_.true_weight_[static_cast<size_t>(x)] / denom_real;
        };
        const auto phi_rounded = [&](int x) {
            return x == kNoPurchase
                       ? 1.0 / denom_rounded
                       : policy_.rounded_weight_[static_cast<size_t>(x)] / denom_rounded;
        };

        const double tight_limit = 1.0 / (1.0 - policy_.classing_.epsilon) * (1.0 + 1e-9);
        for (int p : members) {
            if (phi_rounded(p) / phi_real(p) > tight_limit)
                throw NumericInvariantError(
                    "policy recovery: delta-tightness violated for product " + std::to_string(p));
        }

        const bool up = phi_rounded(choice) >= phi_real(choice);
        if (up) return choice;

        const double keep = phi_rounded(choice) / phi_real(choice);
        if (rng_.next_double() < keep) return choice;

        // Redistribute over the up-set, no-purchase option first.
        double alpha = 0.0;
        for (int p : members)
            if (phi_rounded(p) < phi_real(p)) alpha += phi_real(p) - phi_rounded(p);
        if (!(alpha > 0.0))
            throw NumericInvariantError("policy recovery: empty redistribution mass");
        const double u = rng_.next_double();
        double cum = 0.0;
        int fallback = kNoPurchase;
        for (int x : up_candidates()) {
            const double px = (phi_rounded(x) - phi_real(x)) / alpha;
            if (px <= 0.0) continue;
            cum += px;
            fallback = x;
            if (u < cum) return x;
        }
        return fallback;  // absorbs sub-ulp shortfall of the cumulative mass
    }

    std::vector<int> up_candidates() const {
        std::vector<int> cand;
        cand.push_back(kNoPurchase);
        for (int p : pending_.members) cand.push_back(p);
        return cand;
    }

    const RecoveredPolicy& policy_;
    std::unique_ptr<PolicySession> rounded_session_;
    Rng rng_;
    Loads sim_loads_;
    Assortment pending_;
    bool queried_ = false;
};

std::unique_ptr<PolicySession> RecoveredPolicy::start_session(std::uint64_t seed) const {
    return std::make_unique<RecoveredSession>(*this, seed);
}

}  // namespace

std::shared_ptr<AdaptivePolicy> recover_policy(std::shared_ptr<const AdaptivePolicy> rounded,
                                               WeightClassing classing,
                                               std::optional<std::int64_t> beta_cap) {
    if (!rounded) throw std::domain_error("recover_policy: missing rounded policy");
    return std::make_shared<RecoveredPolicy>(std::move(rounded), std::move(classing), beta_cap);
}

TruncatedBuild build_truncated_policy_detailed(const Instance& instance, double epsilon,
                                               const TruncationParams& params,
                                               std::uint64_t state_cap) {
    if (std::fabs(epsilon - params.epsilon) > 1e-12)
        throw std::domain_error("truncated policy: epsilon does not match the params");
    TruncatedBuild build;
    build.params = params;

    if (params.regime == Regime::High) {
        Assortment heaviest = Assortment::of({1}, instance.n);
        // binomial mean, exact
        build.solved_value =
            instance.T * instance.weights.front() / (1.0 + instance.weights.front());
        build.policy =
            std::make_shared<StaticAssortmentPolicy>(std::move(heaviest), "high-regime-heaviest");
        build.mode = "high-static";
        return build;
    }

    if (static_cast<double>(instance.T) >= params.large_T_guard) {
        build.policy = std::make_shared<StaticAssortmentPolicy>(Assortment::full(instance.n),
                                                                "low-regime-large-T-universe");
        build.mode = "low-full-universe";
        return build;
    }

    std::vector<int> surviving;
    for (int i = 1; i <= instance.n; ++i)
        if (instance.weight(i) > params.light_cutoff) surviving.push_back(i);
    WeightClassing classing = make_weight_classing(instance, surviving, epsilon);

    auto reduced = std::make_shared<ReducedDpPolicy>(instance, classing, params.beta, state_cap);
    build.solved_value = reduced->value();
    build.policy = recover_policy(reduced, std::move(classing), params.beta);
    build.mode = "reduced-dp";
    return build;
}

std::shared_ptr<AdaptivePolicy> build_truncated_policy(const Instance& instance, double epsilon,
                                                       const TruncationParams& params,
                                                       std::uint64_t state_cap) {
    return build_truncated_policy_detailed(instance, epsilon, params, state_cap).policy;
}

// ---------------------------------------------------------------------------
// Adaptivity gap
// ---------------------------------------------------------------------------

AdaptivityGapReport adaptivity_gap(const Instance& instance, Exec exec) {
    AdaptivityGapReport report;
    report.opt_dp = exact_dp(instance).value;
    const auto wo = best_weight_ordered(instance, exec);
    report.opt_weight_ordered = wo.value;
    // Same-size assortments are interchangeable under identical weights, so
    // the weight-ordered optimum is the static optimum there; this keeps
    // large uniform universes inside the exhaustive-solver cap.
    report.opt_static =
        instance.uniform_weights() ? wo.value : exact_solve(instance, exec).value;

    double ratio = report.opt_dp / report.opt_static;
    if (ratio < 1.0 && ratio > 1.0 - 1e-9) ratio = 1.0;
    if (ratio < 1.0 || ratio > 4.0 + 1e-9)
        throw NumericInvariantError("adaptivity gap ratio " + std::to_string(ratio) +
                                    " outside [1, 4]");
    report.gap_ratio = ratio;
    report.gain_percent = 100.0 * (1.0 - 1.0 / ratio);
    return report;
}

}  // namespace mla
