#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subta/harness.hpp"
#include "subta/metrics.hpp"

namespace subta {

/// Cross product of tasks x modes x seeds, one trial each.
struct BatchSpec {
    std::vector<std::string> tasks;
    std::vector<AssistMode> modes{AssistMode::M1, AssistMode::M2, AssistMode::M3};
    std::uint64_t first_seed = 1;
    int seeds = 20;
    double sigma_pos = 0.015;
    double sigma_rot_deg = 5.0;
    Thresholds th;
    double time_limit = 120.0;

    /// Trial configs in a fixed order: task, then mode, then seed.
    std::vector<TrialConfig> configs() const;
};

struct TrialOutcome {
    TrialConfig config;
    TrialMetrics metrics;
    int ticks = 0;
};

std::vector<TrialOutcome> run_batch_serial(const BatchSpec& spec, const GoalLibrary& lib,
                                           const SimulationOptions& opts = {});
/// Same results as the serial run, trials spread over OpenMP threads
/// (0 = runtime default).
std::vector<TrialOutcome> run_batch(const BatchSpec& spec, const GoalLibrary& lib,
                                    const SimulationOptions& opts = {}, int threads = 0);

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
    int n = 0;
};

Stat stat_of(const std::vector<double>& xs);

/// One row of the summary table. `task` is "Overall" for the per-mode pool.
struct CellSummary {
    std::string task;
    AssistMode mode = AssistMode::M1;
    int trials = 0;
    double success_rate = 0.0;
    Stat time;
    Stat progress;
    Stat position;     // m, trials with at least one placed block
    Stat orientation;  // deg
};

/// Rows per task and mode in first-seen order, then one "Overall" row per mode.
std::vector<CellSummary> summarize(const std::vector<TrialOutcome>& outcomes);

std::string format_table(const std::vector<CellSummary>& rows);
nlohmann::json to_json(const CellSummary& c);

}  // namespace subta
