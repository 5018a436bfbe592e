#pragma once

#include <map>
#include <string>
#include <vector>

#include "subta/planner.hpp"

namespace subta {

/// A reference assembly posed block by block in its own frame (the first
/// block sits at the origin on the table plane z = 0).
struct Assembly {
    std::string task;
    std::string variant;
    std::map<BlockId, Pose> poses;
};

/// Arch, Frame, Horse, Snake and Tuningfork-ly.
const std::vector<Assembly>& builtin_assemblies();
const Assembly& builtin_assembly(const std::string& task);

SceneGraph goal_graph(const Assembly& a, const BlockShape& shape = {}, const Tolerances& tol = {});

GoalLibrary builtin_goal_library(const BlockShape& shape = {}, const Tolerances& tol = {});

/// Writes `<dir>/<task>/<variant>.json` for every built-in assembly.
void export_goal_library(const std::string& dir, const BlockShape& shape = {},
                         const Tolerances& tol = {});

}  // namespace subta
