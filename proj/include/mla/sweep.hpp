#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mla/exec.hpp"

namespace mla {

enum class SweepParam { T, Mu };
enum class SweepMetric { AssortmentSize, GapPercent };

/// Experiment grid: one cell per grid value of the varied parameter, with
/// `replications` random instances per cell. Instance seeds derive from
/// (seed, cell index, replication index), so parallel execution and rerun
/// order never change the results.
struct SweepConfig {
    SweepParam param = SweepParam::T;
    std::vector<double> grid;
    int n = 10;
    int T = 2;            // fixed T when param == Mu
    double mu = 0.3;      // fixed mu when param == T
    double sigma = -1.0;  // explicit value; negative selects the half-mu rule
    int replications = 1000;
    bool smoke = false;  // scales replications down to 20 for CI runs
    std::uint64_t seed = 0;
    SweepMetric metric = SweepMetric::AssortmentSize;
};

struct CellSummary {
    double param_value = 0.0;
    int replications = 0;
    double min = 0.0, q1 = 0.0, median = 0.0, mean = 0.0, q3 = 0.0, max = 0.0;
    bool skipped = false;
    std::string reason;
};

/// Runs the sweep. Cells whose solves exceed a size cap come back as skipped
/// rows carrying the refusal reason.
std::vector<CellSummary> run_sweep(const SweepConfig& config, Exec exec = Exec::Parallel);

/// Stable CSV schema: header row, RFC-4180 quoting, one row per cell.
/// Gap-percent statistics print with 2 decimals, sizes with 12 significant
/// digits.
std::string sweep_csv(const SweepConfig& config, const std::vector<CellSummary>& cells);
std::string sweep_json(const SweepConfig& config, const std::vector<CellSummary>& cells);

}  // namespace mla
