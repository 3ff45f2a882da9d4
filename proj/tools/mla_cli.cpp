// Command-line harness for maximum load assortment optimization: instance
// generation, oracle evaluation, static and dynamic solvers, adaptivity-gap
// reports, and experiment sweeps. Canonical JSON/CSV goes to stdout or
// --out; timing notes go to stderr so repeated runs stay byte-identical.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mla/dynamic_opt.hpp"
#include "mla/errors.hpp"
#include "mla/model.hpp"
#include "mla/oracle.hpp"
#include "mla/simulate.hpp"
#include "mla/static_opt.hpp"
#include "mla/sweep.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitCap = 3;
constexpr int kExitNumeric = 4;

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw mla::ParseError("cannot write output file: " + out_path);
    out << text;
}

std::vector<int> parse_index_list(const std::string& text) {
    std::vector<int> indices;
    if (text.empty() || text == "none") return indices;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t pos = 0;
            const int v = std::stoi(item, &pos);
            if (pos != item.size()) throw std::invalid_argument(item);
            indices.push_back(v);
        } catch (const std::exception&) {
            throw std::domain_error("cannot parse assortment entry '" + item + "'");
        }
    }
    return indices;
}

// --assortment lists use the instance file's original product numbering.
mla::Assortment to_canonical_assortment(const mla::Instance& instance, const std::string& text) {
    std::vector<int> canonical;
    for (int original : parse_index_list(text)) {
        if (original < 1 || original > instance.n)
            throw std::domain_error("assortment index " + std::to_string(original) +
                                    " out of range 1.." + std::to_string(instance.n));
        canonical.push_back(instance.canonical_index[static_cast<size_t>(original) - 1]);
    }
    return mla::Assortment::of(std::move(canonical), instance.n);
}

std::vector<int> to_original_indices(const mla::Instance& instance, const mla::Assortment& S) {
    std::vector<int> original;
    original.reserve(S.members.size());
    for (int c : S.members) original.push_back(instance.original_index[static_cast<size_t>(c) - 1]);
    std::sort(original.begin(), original.end());
    return original;
}

nlohmann::json static_report_json(const mla::Instance& instance,
                                  const mla::StaticSolveReport& report) {
    nlohmann::json j;
    j["method"] = report.method;
    j["assortment"] = to_original_indices(instance, report.assortment);
    j["value"] = report.value;
    j["candidates_evaluated"] = report.candidates_evaluated;
    if (report.method == "ptas") {
        j["epsilon_requested"] = report.epsilon_requested;
        j["epsilon_effective"] = report.epsilon_effective;
    }
    std::fprintf(stderr, "%s solve: %.3f s\n", report.method.c_str(), report.wall_time_s);
    return j;
}

nlohmann::json params_json(const mla::TruncationParams& p) {
    nlohmann::json j;
    j["epsilon"] = p.epsilon;
    j["tau"] = p.tau;
    j["beta"] = p.beta;
    j["light_cutoff"] = p.light_cutoff;
    j["large_T_guard"] = p.large_T_guard;
    j["regime"] = p.regime == mla::Regime::High ? "high" : "low";
    j["tau_overridden"] = p.tau_overridden;
    j["beta_overridden"] = p.beta_overridden;
    j["forced_low"] = p.forced_low;
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"maximum load assortment optimization under the MNL choice model"};
    app.require_subcommand(1);

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate a random instance");
    int gen_n = 10, gen_T = 2;
    double gen_mu = 0.3;
    std::string gen_sigma = "half-mu";
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::string gen_label;
    gen->add_option("--n", gen_n, "number of products")->required();
    gen->add_option("--T", gen_T, "number of customers")->required();
    gen->add_option("--mu", gen_mu, "mean of the weight distribution")->required();
    gen->add_option("--sigma", gen_sigma, "stddev, or 'half-mu'");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--out", gen_out, "output path (default stdout)");
    gen->add_option("--label", gen_label, "instance label");

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "expected maximum load of given assortments");
    std::string eval_instance;
    std::vector<std::string> eval_assortments;
    eval->add_option("--instance", eval_instance, "instance JSON path")->required();
    eval->add_option("--assortment", eval_assortments,
                     "comma-separated product indices (repeatable; 'none' for the empty set)")
        ->required();

    // ---- solve-static ----
    auto* sstat = app.add_subcommand("solve-static", "solve the static problem");
    std::string sstat_instance, sstat_method = "exact", sstat_out;
    double sstat_epsilon = 0.25;
    sstat->add_option("--instance", sstat_instance, "instance JSON path")->required();
    sstat->add_option("--method", sstat_method, "exact | weight-ordered | ptas");
    sstat->add_option("--epsilon", sstat_epsilon, "accuracy parameter for ptas");
    sstat->add_option("--out", sstat_out, "report path (default stdout)");

    // ---- solve-dynamic ----
    auto* sdyn = app.add_subcommand("solve-dynamic", "solve the dynamic problem");
    std::string sdyn_instance, sdyn_method = "exact", sdyn_out, sdyn_policy_out;
    double sdyn_epsilon = 0.25;
    std::uint64_t sdyn_seed = 0;
    std::uint64_t sdyn_reps = 100000;
    std::optional<double> sdyn_tau;
    std::optional<std::int64_t> sdyn_beta;
    bool sdyn_force_low = false;
    sdyn->add_option("--instance", sdyn_instance, "instance JSON path")->required();
    sdyn->add_option("--method", sdyn_method, "exact | truncated");
    sdyn->add_option("--epsilon", sdyn_epsilon, "accuracy parameter for truncated");
    sdyn->add_option("--seed", sdyn_seed, "simulation seed");
    sdyn->add_option("--reps", sdyn_reps, "simulation trajectories for the value estimate");
    sdyn->add_option("--override-tau", sdyn_tau, "test override for tau");
    sdyn->add_option("--override-beta", sdyn_beta, "test override for beta");
    sdyn->add_flag("--force-low", sdyn_force_low, "treat the instance as low-regime");
    sdyn->add_option("--out", sdyn_out, "report path (default stdout)");
    sdyn->add_option("--policy-out", sdyn_policy_out, "policy export path");

    // ---- gap ----
    auto* gap = app.add_subcommand("gap", "adaptivity gap report");
    std::string gap_instance, gap_out;
    gap->add_option("--instance", gap_instance, "instance JSON path")->required();
    gap->add_option("--out", gap_out, "report path (default stdout)");

    // ---- sweep ----
    auto* sweep = app.add_subcommand("sweep", "experiment sweep over T or mu");
    std::string sweep_param = "T", sweep_grid, sweep_sigma = "half-mu", sweep_method = "size";
    std::string sweep_out, sweep_format = "csv";
    int sweep_n = 10, sweep_T = 2;
    double sweep_mu = 0.3;
    int sweep_reps = 1000;
    std::uint64_t sweep_seed = 0;
    bool sweep_smoke = false;
    sweep->add_option("--param", sweep_param, "varied parameter: T | mu")->required();
    sweep->add_option("--grid", sweep_grid, "comma-separated grid values")->required();
    sweep->add_option("--n", sweep_n, "number of products");
    sweep->add_option("--T", sweep_T, "fixed T (mu sweeps)");
    sweep->add_option("--mu", sweep_mu, "fixed mu (T sweeps)");
    sweep->add_option("--sigma", sweep_sigma, "stddev, or 'half-mu'");
    sweep->add_option("--method", sweep_method, "per-cell statistic: size | gap");
    sweep->add_option("--reps", sweep_reps, "replications per cell");
    sweep->add_flag("--smoke", sweep_smoke, "CI scale: at most 20 replications per cell");
    sweep->add_option("--seed", sweep_seed, "master seed");
    sweep->add_option("--out", sweep_out, "output path (default stdout)");
    sweep->add_option("--format", sweep_format, "csv | json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (gen->parsed()) {
        const double sigma = gen_sigma == "half-mu" ? gen_mu / 2.0 : std::stod(gen_sigma);
        const auto instance =
            mla::generate_instance(gen_n, gen_T, gen_mu, sigma, gen_seed);
        auto text = mla::instance_to_json_text(instance);
        if (!gen_label.empty()) {
            auto relabeled = instance;
            relabeled.label = gen_label;
            text = mla::instance_to_json_text(relabeled);
        }
        write_output(text, gen_out);
        return 0;
    }

    if (eval->parsed()) {
        const auto instance = mla::load_instance(eval_instance);
        for (const auto& spec : eval_assortments) {
            const auto S = to_canonical_assortment(instance, spec);
            const double value = mla::expected_max_load(instance, S, mla::Exec::Parallel);
            std::printf("%.12g\n", value);
        }
        return 0;
    }

    if (sstat->parsed()) {
        const auto instance = mla::load_instance(sstat_instance);
        mla::StaticSolveReport report;
        if (sstat_method == "exact")
            report = mla::exact_solve(instance);
        else if (sstat_method == "weight-ordered")
            report = mla::best_weight_ordered(instance);
        else if (sstat_method == "ptas")
            report = mla::ptas_solve(instance, sstat_epsilon);
        else
            throw std::domain_error("unknown static method: " + sstat_method);
        write_output(static_report_json(instance, report).dump(2) + "\n", sstat_out);
        return 0;
    }

    if (sdyn->parsed()) {
        const auto instance = mla::load_instance(sdyn_instance);
        nlohmann::json j;
        std::string policy_export;
        if (sdyn_method == "exact") {
            auto solved = mla::exact_dp(instance);
            j["method"] = "exact";
            j["value"] = solved.value;
            j["states"] = solved.table->state_count();
            if (!sdyn_policy_out.empty()) {
                auto policy = mla::make_exact_dp_policy(instance, std::move(solved));
                policy_export = policy->export_json_text();
            }
        } else if (sdyn_method == "truncated") {
            const auto params = mla::classify_regime(instance, sdyn_epsilon, sdyn_tau, sdyn_beta,
                                                     sdyn_force_low);
            const auto build = mla::build_truncated_policy_detailed(instance, sdyn_epsilon, params);
            const auto estimate =
                mla::estimate_policy_value(instance, *build.policy, sdyn_reps, sdyn_seed);
            j["method"] = "truncated";
            j["mode"] = build.mode;
            j["params"] = params_json(build.params);
            if (build.solved_value) j["solved_value"] = *build.solved_value;
            j["simulated_value"] = estimate.mean;
            j["simulated_stderr"] = estimate.stderror;
            j["reps"] = estimate.samples;
            if (!sdyn_policy_out.empty()) {
                nlohmann::json wrapped;
                wrapped["params"] = params_json(build.params);
                wrapped["policy"] = nlohmann::json::parse(build.policy->export_json_text());
                policy_export = wrapped.dump(2) + "\n";
            }
        } else {
            throw std::domain_error("unknown dynamic method: " + sdyn_method);
        }
        write_output(j.dump(2) + "\n", sdyn_out);
        if (!sdyn_policy_out.empty()) write_output(policy_export, sdyn_policy_out);
        return 0;
    }

    if (gap->parsed()) {
        const auto instance = mla::load_instance(gap_instance);
        const auto report = mla::adaptivity_gap(instance);
        nlohmann::json j;
        j["opt_dp"] = report.opt_dp;
        j["opt_static"] = report.opt_static;
        j["opt_weight_ordered"] = report.opt_weight_ordered;
        j["adaptivity_ratio"] = report.gap_ratio;
        j["gain_percent"] = report.gain_percent;
        write_output(j.dump(2) + "\n", gap_out);
        return 0;
    }

    if (sweep->parsed()) {
        mla::SweepConfig config;
        if (sweep_param == "T")
            config.param = mla::SweepParam::T;
        else if (sweep_param == "mu")
            config.param = mla::SweepParam::Mu;
        else
            throw std::domain_error("unknown sweep parameter: " + sweep_param);
        std::stringstream ss(sweep_grid);
        std::string item;
        while (std::getline(ss, item, ',')) config.grid.push_back(std::stod(item));
        config.n = sweep_n;
        config.T = sweep_T;
        config.mu = sweep_mu;
        config.sigma = sweep_sigma == "half-mu" ? -1.0 : std::stod(sweep_sigma);
        config.replications = sweep_reps;
        config.smoke = sweep_smoke;
        config.seed = sweep_seed;
        if (sweep_method == "size")
            config.metric = mla::SweepMetric::AssortmentSize;
        else if (sweep_method == "gap")
            config.metric = mla::SweepMetric::GapPercent;
        else
            throw std::domain_error("unknown sweep method: " + sweep_method);

        const auto cells = mla::run_sweep(config);
        if (sweep_format == "csv")
            write_output(mla::sweep_csv(config, cells), sweep_out);
        else if (sweep_format == "json")
            write_output(mla::sweep_json(config, cells), sweep_out);
        else
            throw std::domain_error("unknown sweep format: " + sweep_format);
        return 0;
    }

    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const mla::CapExceededError& e) {
        std::fprintf(stderr, "refused: %s\n", e.what());
        return kExitCap;
    } catch (const mla::NumericInvariantError& e) {
        std::fprintf(stderr, "numeric invariant violated: %s\n", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
}
