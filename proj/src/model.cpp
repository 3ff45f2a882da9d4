#include "mla/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mla/errors.hpp"
#include "mla/rng.hpp"

namespace mla {

Instance Instance::from_weights(std::vector<double> w, int T, std::string label) {
    const int n = static_cast<int>(w.size());
    if (n < 1) throw std::domain_error("instance: need at least one product");
    if (T < 1) throw std::domain_error("instance: need at least one customer");
    for (int i = 0; i < n; ++i) {
        if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
            throw std::domain_error("instance: weights[" + std::to_string(i) +
                                    "] must be strictly positive and finite");
        }
    }

    std::vector<int> order(w.size());
    std::iota(order.begin(), order.end(), 0);
    // Non-increasing weight, ties kept in original order.
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return w[a] > w[b]; });

    Instance instance;
    instance.n = n;
    instance.T = T;
    instance.label = std::move(label);
    instance.weights.resize(w.size());
    instance.original_index.resize(w.size());
    instance.canonical_index.resize(w.size());
    for (int c = 0; c < n; ++c) {
        instance.weights[c] = w[order[c]];
        instance.original_index[c] = order[c] + 1;
        instance.canonical_index[order[c]] = c + 1;
    }
    return instance;
}

double Instance::total_weight() const {
    double s = 0.0;
    for (double v : weights) s += v;
    return s;
}

std::vector<double> Instance::original_order_weights() const {
    std::vector<double> w(weights.size());
    for (int c = 0; c < n; ++c) w[original_index[c] - 1] = weights[c];
    return w;
}

bool Instance::uniform_weights() const {
    for (double v : weights)
        if (v != weights.front()) return false;
    return true;
}

Assortment Assortment::of(std::vector<int> idx, int n) {
    std::sort(idx.begin(), idx.end());
    for (size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 1 || idx[i] > n)
            throw std::domain_error("assortment: index " + std::to_string(idx[i]) +
                                    " out of range 1.." + std::to_string(n));
        if (i > 0 && idx[i] == idx[i - 1])
            throw std::domain_error("assortment: duplicate index " + std::to_string(idx[i]));
    }
    Assortment S;
    S.members = std::move(idx);
    return S;
}

Assortment Assortment::full(int n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 1);
    Assortment S;
    S.members = std::move(idx);
    return S;
}

Assortment Assortment::from_mask(std::uint64_t mask, int n) {
    Assortment S;
    for (int i = 1; i <= n; ++i)
        if (mask & (std::uint64_t{1} << (i - 1))) S.members.push_back(i);
    return S;
}

bool Assortment::contains(int i) const {
    return std::binary_search(members.begin(), members.end(), i);
}

std::uint64_t Assortment::mask() const {
    std::uint64_t m = 0;
    for (int i : members) m |= std::uint64_t{1} << (i - 1);
    return m;
}

bool lex_before(const Assortment& a, const Assortment& b, int n) {
    size_t ia = 0, ib = 0;
    for (int i = 1; i <= n; ++i) {
        const bool xa = ia < a.members.size() && a.members[ia] == i;
        const bool xb = ib < b.members.size() && b.members[ib] == i;
        if (xa != xb) return !xa;  // 0 before 1 at the first differing entry
        if (xa) ++ia;
        if (xb) ++ib;
    }
    return false;
}

VirtualAssortment VirtualAssortment::of(std::vector<double> w) {
    for (double v : w)
        if (!(v > 0.0) || !std::isfinite(v))
            throw std::domain_error("virtual assortment: weights must be strictly positive");
    VirtualAssortment va;
    va.weights = std::move(w);
    return va;
}

double VirtualAssortment::total() const {
    double s = 0.0;
    for (double v : weights) s += v;
    return s;
}

double choice_probability(std::span<const double> assortment_weights, int i) {
    double denom = 1.0;
    for (double v : assortment_weights) denom += v;
    if (i == kNoPurchase) return 1.0 / denom;
    if (i < 1 || i > static_cast<int>(assortment_weights.size()))
        throw std::domain_error("choice probability: index " + std::to_string(i) +
                                " is not a member of the assortment");
    return assortment_weights[static_cast<size_t>(i) - 1] / denom;
}

std::vector<double> gather_weights(const Instance& instance, const Assortment& S) {
    std::vector<double> w;
    w.reserve(S.members.size());
    for (int i : S.members) {
        if (i < 1 || i > instance.n)
            throw std::domain_error("assortment index out of range for instance");
        w.push_back(instance.weight(i));
    }
    return w;
}

Instance generate_instance(int n, int T, double mu, double sigma, std::uint64_t seed,
                           std::uint64_t* rejections) {
    if (n < 1 || T < 1) throw std::domain_error("generate_instance: n and T must be >= 1");
    if (!(mu > 0.0)) throw std::domain_error("generate_instance: mu must be > 0");
    if (sigma < 0.0) throw std::domain_error("generate_instance: sigma must be >= 0");
    Rng rng(seed);
    std::vector<double> w(static_cast<size_t>(n));
    for (auto& v : w) v = rng.next_positive_normal(mu, sigma, rejections);
    std::ostringstream label;
    label << "gen(n=" << n << ",T=" << T << ",mu=" << mu << ",sigma=" << sigma
          << ",seed=" << seed << ")";
    return Instance::from_weights(std::move(w), T, label.str());
}

namespace {

Instance instance_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ParseError("instance JSON: top level must be an object");
    for (const char* field : {"n", "T", "weights"})
        if (!j.contains(field))
            throw ParseError(std::string("instance JSON: missing field \"") + field + "\"");
    if (!j["n"].is_number_integer()) throw ParseError("instance JSON: field \"n\" must be an integer");
    if (!j["T"].is_number_integer()) throw ParseError("instance JSON: field \"T\" must be an integer");
    if (!j["weights"].is_array()) throw ParseError("instance JSON: field \"weights\" must be an array");

    const int n = j["n"].get<int>();
    const int T = j["T"].get<int>();
    if (n < 1) throw ParseError("instance JSON: field \"n\" must be >= 1");
    if (T < 1) throw ParseError("instance JSON: field \"T\" must be >= 1");
    const auto& warr = j["weights"];
    if (static_cast<int>(warr.size()) != n)
        throw ParseError("instance JSON: field \"weights\" must have length n = " + std::to_string(n));
    std::vector<double> w;
    w.reserve(warr.size());
    for (size_t i = 0; i < warr.size(); ++i) {
        if (!warr[i].is_number())
            throw ParseError("instance JSON: weights[" + std::to_string(i) + "] must be a number");
        const double v = warr[i].get<double>();
        if (!(v > 0.0) || !std::isfinite(v))
            throw ParseError("instance JSON: weights[" + std::to_string(i) +
                             "] must be strictly positive and finite");
        w.push_back(v);
    }
    std::string label;
    if (j.contains("label")) {
        if (!j["label"].is_string()) throw ParseError("instance JSON: field \"label\" must be a string");
        label = j["label"].get<std::string>();
    }
    return Instance::from_weights(std::move(w), T, std::move(label));
}

}  // namespace

Instance instance_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("instance JSON: ") + e.what());
    }
    return instance_from_json(j);
}

std::string instance_to_json_text(const Instance& instance) {
    nlohmann::json j;
    j["n"] = instance.n;
    j["T"] = instance.T;
    j["weights"] = instance.original_order_weights();
    if (!instance.label.empty()) j["label"] = instance.label;
    return j.dump(2) + "\n";
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open instance file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return instance_from_json_text(buffer.str());
}

void save_instance(const Instance& instance, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write instance file: " + path);
    out << instance_to_json_text(instance);
}

}  // namespace mla
