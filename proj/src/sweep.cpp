#include "mla/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "mla/dynamic_opt.hpp"
#include "mla/errors.hpp"
#include "mla/model.hpp"
#include "mla/rng.hpp"
#include "mla/static_opt.hpp"

namespace mla {

namespace {

// Type-7 (linear interpolation) sample quantile over sorted values.
double quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct CellSetting {
    int T;
    double mu;
    double sigma;
};

CellSetting cell_setting(const SweepConfig& config, double grid_value) {
    CellSetting s{};
    if (config.param == SweepParam::T) {
        const double rounded = std::round(grid_value);
        if (std::fabs(grid_value - rounded) > 1e-9 || rounded < 1.0)
            throw std::domain_error("sweep: grid values for T must be positive integers");
        s.T = static_cast<int>(rounded);
        s.mu = config.mu;
    } else {
        if (!(grid_value > 0.0)) throw std::domain_error("sweep: grid values for mu must be > 0");
        s.T = config.T;
        s.mu = grid_value;
    }
    s.sigma = config.sigma < 0.0 ? s.mu / 2.0 : config.sigma;
    return s;
}

double replicate_value(const SweepConfig& config, const CellSetting& setting,
                       std::uint64_t seed) {
    const Instance instance = generate_instance(config.n, setting.T, setting.mu, setting.sigma, seed);
    switch (config.metric) {
        case SweepMetric::AssortmentSize:
            return static_cast<double>(exact_solve(instance, Exec::Serial).assortment.size());
        case SweepMetric::GapPercent:
            return adaptivity_gap(instance, Exec::Serial).gain_percent;
    }
    throw std::logic_error("sweep: unknown metric");
}

std::string format_stat(const SweepConfig& config, double v) {
    char buf[64];
    if (config.metric == SweepMetric::GapPercent)
        std::snprintf(buf, sizeof buf, "%.2f", v);
    else
        std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::vector<CellSummary> run_sweep(const SweepConfig& config, Exec exec) {
    if (config.grid.empty()) throw std::domain_error("sweep: grid must be nonempty");
    if (config.replications < 1) throw std::domain_error("sweep: replications must be >= 1");
    const int reps = config.smoke ? std::min(config.replications, 20) : config.replications;

    std::vector<CellSummary> cells(config.grid.size());
    for (size_t ci = 0; ci < config.grid.size(); ++ci) {
        CellSummary& cell = cells[ci];
        cell.param_value = config.grid[ci];
        cell.replications = reps;

        CellSetting setting;
        try {
            setting = cell_setting(config, config.grid[ci]);
            // Probe the first replication serially: a cap refusal marks the
            // whole cell skipped instead of failing the sweep.
            (void)replicate_value(config, setting, derive_seed(config.seed, ci, 0));
        } catch (const CapExceededError& e) {
            cell.skipped = true;
            cell.reason = e.what();
            continue;
        }

        std::vector<double> values(static_cast<size_t>(reps), 0.0);
        const bool par = exec == Exec::Parallel;
        bool failed = false;
        std::string failure;
#pragma omp parallel for schedule(dynamic) if (par)
        for (int r = 0; r < reps; ++r) {
            try {
                values[static_cast<size_t>(r)] =
                    replicate_value(config, setting, derive_seed(config.seed, ci, static_cast<std::uint64_t>(r)));
            } catch (const std::exception& e) {
#pragma omp critical
                {
                    failed = true;
                    failure = e.what();
                }
            }
        }
        if (failed) {
            cell.skipped = true;
            cell.reason = failure;
            continue;
        }

        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        double mean = 0.0;
        for (double v : sorted) mean += v;
        mean /= static_cast<double>(sorted.size());
        cell.min = sorted.front();
        cell.q1 = quantile(sorted, 0.25);
        cell.median = quantile(sorted, 0.5);
        cell.mean = mean;
        cell.q3 = quantile(sorted, 0.75);
        cell.max = sorted.back();
    }
    return cells;
}

std::string sweep_csv(const SweepConfig& config, const std::vector<CellSummary>& cells) {
    std::string out = "param,value,reps,min,q1,median,mean,q3,max,skipped,reason\n";
    const std::string param = config.param == SweepParam::T ? "T" : "mu";
    for (const auto& cell : cells) {
        char head[96];
        std::snprintf(head, sizeof head, "%s,%.12g,%d,", param.c_str(), cell.param_value,
                      cell.replications);
        out += head;
        if (cell.skipped) {
            out += ",,,,,,1," + csv_quote(cell.reason) + "\n";
        } else {
            out += format_stat(config, cell.min) + "," + format_stat(config, cell.q1) + "," +
                   format_stat(config, cell.median) + "," + format_stat(config, cell.mean) + "," +
                   format_stat(config, cell.q3) + "," + format_stat(config, cell.max) + ",0,\n";
        }
    }
    return out;
}

std::string sweep_json(const SweepConfig& config, const std::vector<CellSummary>& cells) {
    nlohmann::json j;
    j["param"] = config.param == SweepParam::T ? "T" : "mu";
    j["metric"] = config.metric == SweepMetric::GapPercent ? "gap" : "size";
    j["n"] = config.n;
    j["replications"] = cells.empty() ? 0 : cells.front().replications;
    j["seed"] = config.seed;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& cell : cells) {
        nlohmann::json row;
        row["value"] = cell.param_value;
        row["reps"] = cell.replications;
        row["skipped"] = cell.skipped;
        if (cell.skipped) {
            row["reason"] = cell.reason;
        } else {
            row["min"] = cell.min;
            row["q1"] = cell.q1;
            row["median"] = cell.median;
            row["mean"] = cell.mean;
            row["q3"] = cell.q3;
            row["max"] = cell.max;
        }
        rows.push_back(std::move(row));
    }
    j["cells"] = std::move(rows);
    return j.dump(2) + "\n";
}

}  // namespace mla
