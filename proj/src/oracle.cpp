#include "mla/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <omp.h>

#include "mla/errors.hpp"
#include "mla/rng.hpp"

namespace mla {

namespace {

// Compensated accumulation; the oracle sums thousands of nonnegative terms
// and the acceptance tolerances sit close to double precision.
struct Kahan {
    long double sum = 0.0L;
    long double carry = 0.0L;
    void add(long double x) {
        const long double y = x - carry;
        const long double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

// Pascal triangle in extended precision, rows 0..T.
class BinomialTable {
public:
    explicit BinomialTable(int T) : T_(T), c_(static_cast<size_t>(T + 1) * (T + 2) / 2) {
        for (int s = 0; s <= T; ++s) {
            c_[offset(s)] = 1.0L;
            c_[offset(s) + s] = 1.0L;
            for (int l = 1; l < s; ++l)
                c_[offset(s) + l] = c_[offset(s - 1) + l - 1] + c_[offset(s - 1) + l];
        }
    }
    long double choose(int s, int l) const { return c_[offset(s) + l]; }

private:
    static size_t offset(int s) { return static_cast<size_t>(s) * (s + 1) / 2; }
    int T_;
    std::vector<long double> c_;
};

// Trial-count convolution DP for rectangular probabilities. Categories are
// folded in one at a time; after category i, W[s] holds the total mass
//   sum over (l_1..l_i), a_j <= l_j <= b_j, sum l_j = s  of
//   s!/(l_1!..l_i!) * prod p_j^{l_j},
// which stays in [0,1], so the whole computation runs in linear space with
// no rescaling. The binomial factors realize the factorial scaling.
class RectangularEvaluator {
public:
    RectangularEvaluator(int T, std::vector<long double> probs)
        : T_(T), probs_(std::move(probs)), table_(T) {
        long double total = 0.0L;
        for (long double p : probs_) total += p;
        remainder_ = total < 1.0L ? 1.0L - total : 0.0L;
    }

    int categories() const { return static_cast<int>(probs_.size()); }

    double evaluate(std::span<const int> lower, std::span<const int> upper) const {
        const int k = categories();
        long long sum_lower = 0, sum_upper = 0;
        for (int i = 0; i < k; ++i) {
            sum_lower += lower[i];
            sum_upper += upper[i];
        }
        if (sum_lower > T_) return 0.0;

        std::vector<long double> prev(static_cast<size_t>(T_) + 1, 0.0L);
        std::vector<long double> cur(static_cast<size_t>(T_) + 1, 0.0L);
        std::vector<long double> powers(static_cast<size_t>(T_) + 1, 0.0L);
        prev[0] = 1.0L;
        int reachable = 0;  // max trial count representable after folded categories
        for (int i = 0; i < k; ++i) {
            const int a = lower[i];
            const int b = std::min(upper[i], T_);
            powers[0] = 1.0L;
            for (int l = 1; l <= b; ++l) powers[l] = powers[l - 1] * probs_[i];
            const int limit = std::min(T_, reachable + b);
            std::fill(cur.begin(), cur.end(), 0.0L);
            for (int s = a; s <= limit; ++s) {
                long double acc = 0.0L;
                const int lmax = std::min(b, s);
                for (int l = a; l <= lmax; ++l) {
                    const long double w = prev[s - l];
                    if (w != 0.0L) acc += table_.choose(s, l) * powers[l] * w;
                }
                cur[s] = acc;
            }
            std::swap(prev, cur);
            reachable = limit;
        }

        const int s_min = static_cast<int>(std::min<long long>(sum_lower, T_));
        const int s_max = static_cast<int>(std::min<long long>(sum_upper, T_));
        Kahan total;
        if (remainder_ == 0.0L) {
            if (s_max == T_) total.add(prev[T_]);
        } else {
            std::vector<long double> rem_pow(static_cast<size_t>(T_) + 1, 0.0L);
            rem_pow[0] = 1.0L;
            for (int d = 1; d <= T_; ++d) rem_pow[d] = rem_pow[d - 1] * remainder_;
            for (int s = s_min; s <= s_max; ++s)
                total.add(table_.choose(T_, s) * rem_pow[T_ - s] * prev[s]);
        }
        return static_cast<double>(std::clamp(total.sum, 0.0L, 1.0L));
    }

private:
    int T_;
    std::vector<long double> probs_;
    long double remainder_;
    BinomialTable table_;
};

void validate_query(int T, std::span<const double> probs, std::span<const int> lower,
                    std::span<const int> upper) {
    if (T < 0) throw std::domain_error("rectangular probability: T must be >= 0");
    if (lower.size() != probs.size() || upper.size() != probs.size())
        throw std::domain_error("rectangular probability: bound vectors must match probs length");
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0 || !std::isfinite(p))
            throw std::domain_error("rectangular probability: probabilities must be nonnegative");
        total += p;
    }
    if (total > 1.0 + 1e-12)
        throw std::domain_error("rectangular probability: probabilities sum to more than 1");
    for (size_t i = 0; i < probs.size(); ++i) {
        if (lower[i] < 0 || upper[i] < lower[i] || upper[i] > T)
            throw std::domain_error("rectangular probability: bounds must satisfy 0 <= a <= b <= T");
    }
}

std::vector<long double> mnl_probabilities(std::span<const double> offered) {
    long double denom = 1.0L;
    for (double v : offered) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::domain_error("oracle: offered weights must be strictly positive");
        denom += static_cast<long double>(v);
    }
    std::vector<long double> probs(offered.size());
    for (size_t i = 0; i < offered.size(); ++i) probs[i] = static_cast<long double>(offered[i]) / denom;
    return probs;
}

long double composition_count(int T, int k) {
    // (T + k choose k), saturating.
    long double c = 1.0L;
    for (int i = 1; i <= k; ++i) {
        c *= static_cast<long double>(T + i) / static_cast<long double>(i);
        if (c > 1e18L) return 1e18L;
    }
    return c;
}

}  // namespace

double multinomial_pmf(int T, std::span<const double> probs, std::span<const int> counts) {
    if (T < 0) throw std::domain_error("multinomial pmf: T must be >= 0");
    if (counts.size() != probs.size())
        throw std::domain_error("multinomial pmf: counts must match probs length");
    long long used = 0;
    for (int c : counts) {
        if (c < 0) throw std::domain_error("multinomial pmf: counts must be nonnegative");
        used += c;
    }
    if (used > T) throw std::domain_error("multinomial pmf: counts sum to more than T");
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw std::domain_error("multinomial pmf: probabilities must be nonnegative");
        total += p;
    }
    if (total > 1.0 + 1e-12)
        throw std::domain_error("multinomial pmf: probabilities sum to more than 1");

    const int rem = static_cast<int>(T - used);
    const double p0 = std::max(0.0, 1.0 - total);
    double log_mass = std::lgamma(T + 1.0) - std::lgamma(rem + 1.0);
    for (size_t i = 0; i < probs.size(); ++i) {
        if (counts[i] == 0) continue;
        if (probs[i] == 0.0) return 0.0;
        log_mass += counts[i] * std::log(probs[i]) - std::lgamma(counts[i] + 1.0);
    }
    if (rem > 0) {
        if (p0 == 0.0) return 0.0;
        log_mass += rem * std::log(p0);
    }
    return std::clamp(std::exp(log_mass), 0.0, 1.0);
}

double rectangular_probability(const RectangularQuery& q) {
    validate_query(q.T, q.probs, q.lower, q.upper);
    if (q.probs.empty()) return 1.0;
    std::vector<long double> probs(q.probs.begin(), q.probs.end());
    RectangularEvaluator eval(q.T, std::move(probs));
    return eval.evaluate(q.lower, q.upper);
}

double MaxLoadDistribution::expectation() const {
    Kahan e;
    for (size_t l = 1; l < pmf.size(); ++l) e.add(static_cast<long double>(l) * pmf[l]);
    return static_cast<double>(e.sum);
}

MaxLoadDistribution max_load_distribution_weights(std::span<const double> offered, int T,
                                                  Exec exec) {
    if (offered.empty())
        throw std::domain_error("max load distribution: empty assortment (point mass at 0)");
    if (T < 1) throw std::domain_error("max load distribution: T must be >= 1");
    const int k = static_cast<int>(offered.size());
    auto probs = mnl_probabilities(offered);
    long double no_purchase = 1.0L;
    for (long double p : probs) no_purchase -= p;
    no_purchase = std::max(no_purchase, 0.0L);

    const RectangularEvaluator eval(T, probs);

    // P(M = l) partitions into k rectangular events, product j being the
    // minimal-index one attaining load l. All T*k cells are independent.
    std::vector<double> cell(static_cast<size_t>(T) * k, 0.0);
    const bool par = exec == Exec::Parallel;
#pragma omp parallel for collapse(2) schedule(dynamic) if (par)
    for (int l = 1; l <= T; ++l) {
        for (int j = 1; j <= k; ++j) {
            std::vector<int> lower(k, 0), upper(k, 0);
            for (int i = 1; i <= k; ++i) upper[i - 1] = i < j ? l - 1 : l;
            lower[j - 1] = l;
            cell[static_cast<size_t>(l - 1) * k + (j - 1)] = eval.evaluate(lower, upper);
        }
    }

    MaxLoadDistribution dist;
    dist.pmf.assign(static_cast<size_t>(T) + 1, 0.0);
    dist.pmf[0] = static_cast<double>(std::pow(no_purchase, static_cast<long double>(T)));
    Kahan total;
    total.add(dist.pmf[0]);
    for (int l = 1; l <= T; ++l) {
        Kahan row;
        for (int j = 0; j < k; ++j) row.add(cell[static_cast<size_t>(l - 1) * k + j]);
        dist.pmf[l] = static_cast<double>(std::clamp(row.sum, 0.0L, 1.0L));
        total.add(row.sum);
    }
    if (std::fabs(static_cast<double>(total.sum) - 1.0) > 1e-9)
        throw NumericInvariantError("max load distribution: pmf mass deviates from 1 by " +
                                    std::to_string(std::fabs(static_cast<double>(total.sum) - 1.0)));
    return dist;
}

MaxLoadDistribution max_load_distribution(const Instance& instance, const Assortment& S,
                                          Exec exec) {
    const auto w = gather_weights(instance, S);
    return max_load_distribution_weights(w, instance.T, exec);
}

double expected_max_load_weights(std::span<const double> offered, int T, Exec exec) {
    if (offered.empty()) return 0.0;
    return max_load_distribution_weights(offered, T, exec).expectation();
}

double expected_max_load(const Instance& instance, const Assortment& S, Exec exec) {
    if (S.empty()) return 0.0;
    const auto w = gather_weights(instance, S);
    return expected_max_load_weights(w, instance.T, exec);
}

double brute_force_expected_max_load_weights(std::span<const double> offered, int T,
                                             std::uint64_t term_cap) {
    if (offered.empty()) return 0.0;
    const int k = static_cast<int>(offered.size());
    if (composition_count(T, k) > static_cast<long double>(term_cap))
        throw CapExceededError(
            "brute force: (T + |S| choose |S|) exceeds the term cap; use the rectangular oracle");

    auto probs_ld = mnl_probabilities(offered);
    std::vector<double> probs(probs_ld.begin(), probs_ld.end());

    std::vector<int> counts(static_cast<size_t>(k), 0);
    Kahan expectation;
    // Odometer over all load compositions with sum <= T; the remainder goes
    // to the no-purchase option.
    while (true) {
        int used = std::accumulate(counts.begin(), counts.end(), 0);
        const int max_load = *std::max_element(counts.begin(), counts.end());
        expectation.add(static_cast<long double>(max_load) *
                        multinomial_pmf(T, probs, counts));
        int pos = 0;
        while (pos < k) {
            if (used - counts[pos] + (counts[pos] + 1) <= T) {
                ++counts[pos];
                break;
            }
            used -= counts[pos];
            counts[pos] = 0;
            ++pos;
        }
        if (pos == k) break;
    }
    return static_cast<double>(expectation.sum);
}

double brute_force_expected_max_load(const Instance& instance, const Assortment& S,
                                     std::uint64_t term_cap) {
    if (S.empty()) return 0.0;
    const auto w = gather_weights(instance, S);
    return brute_force_expected_max_load_weights(w, instance.T, term_cap);
}

MonteCarloEstimate monte_carlo_expected_max_load(const Instance& instance, const Assortment& S,
                                                 std::uint64_t samples, std::uint64_t seed,
                                                 Exec exec) {
    if (samples < 1) throw std::domain_error("monte carlo: need at least one sample");
    MonteCarloEstimate est;
    est.samples = samples;
    if (S.empty()) return est;

    const auto w = gather_weights(instance, S);
    auto probs_ld = mnl_probabilities(w);
    std::vector<double> probs(probs_ld.begin(), probs_ld.end());
    const int k = static_cast<int>(probs.size());
    const int T = instance.T;

    // Integer sums make the reduction exact and scheduling-invariant.
    std::uint64_t sum = 0, sum_sq = 0;
    const bool par = exec == Exec::Parallel;
#pragma omp parallel for schedule(static) reduction(+ : sum, sum_sq) if (par)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(samples); ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        std::vector<int> loads(static_cast<size_t>(k), 0);
        for (int t = 0; t < T; ++t) {
            const double u = rng.next_double();
            double cum = 0.0;
            for (int j = 0; j < k; ++j) {
                cum += probs[j];
                if (u < cum) {
                    ++loads[j];
                    break;
                }
            }
        }
        const std::uint64_t m =
            static_cast<std::uint64_t>(*std::max_element(loads.begin(), loads.end()));
        sum += m;
        sum_sq += m * m;
    }

    const double n = static_cast<double>(samples);
    est.mean = static_cast<double>(sum) / n;
    if (samples > 1) {
        const double var =
            (static_cast<double>(sum_sq) - n * est.mean * est.mean) / (n - 1.0);
        est.stderror = std::sqrt(std::max(var, 0.0) / n);
    }
    return est;
}

}  // namespace mla
