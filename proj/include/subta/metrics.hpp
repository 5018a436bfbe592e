#pragma once

#include <map>
#include <optional>
#include <vector>

#include "subta/harness.hpp"

namespace subta {

struct CorrectnessTolerance {
    double position = 0.02;  // m
    double orientation_deg = 10.0;
};

struct BlockError {
    BlockId block = 0;
    BlockId goal_node = 0;
    double position = 0.0;         // m
    double orientation_deg = 0.0;  // deg
    bool edges_match = false;
    bool correct = false;
};

struct TrialMetrics {
    double time = 0.0;  // s, to success or the limit
    bool success = false;
    double progress = 0.0;
    std::vector<BlockError> blocks;
    std::optional<BlockId> anchor;
    std::optional<double> mean_position_error;
    std::optional<double> mean_orientation_error;
};

/// Metrics of one placement outcome: `placed` is the final graph with poses,
/// `placements` the block ids in the order they were first put down.
TrialMetrics compute_metrics(const SceneGraph& placed, const std::vector<BlockId>& placements,
                             const SceneGraph& goal, const CorrectnessTolerance& tol = {},
                             const GedOptions& ged_opts = {});

/// Uses the logged final graph and placement events; picks the closest goal
/// variant of the trial's task.
TrialMetrics compute_metrics(const TrialLog& log, const GoalLibrary& lib, const CorrectnessTolerance& tol = {});

}  // namespace subta
