#include <algorithm>
#include <filesystem>

#include "subta/planner.hpp"
#include "subta/tasks.hpp"

namespace subta {

void GoalLibrary::add(const std::string& task, GoalVariant variant) {
    if (!satisfies_invariants(variant.graph)) {
        throw GraphError("goal graph " + task + "/" + variant.name + " violates graph invariants");
    }
    goals_[task].push_back(std::move(variant));
}

bool GoalLibrary::has_task(const std::string& task) const {
    auto it = goals_.find(task);
    return it != goals_.end() && !it->second.empty();
}

const std::vector<GoalVariant>& GoalLibrary::variants(const std::string& task) const {
    auto it = goals_.find(task);
    if (it == goals_.end()) {
        throw GraphError("no goal graphs for task '" + task + "'");
    }
    return it->second;
}

std::vector<std::string> GoalLibrary::tasks() const {
    std::vector<std::string> out;
    for (const auto& label : task_labels()) {
        if (has_task(label)) {
            out.push_back(label);
        }
    }
    for (const auto& [task, _] : goals_) {
        if (!task_index(task)) {
            out.push_back(task);
        }
    }
    return out;
}

GoalLibrary GoalLibrary::load_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw GraphError("goal directory not found: " + dir);
    }
    GoalLibrary lib;
    std::vector<fs::path> task_dirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) {
            task_dirs.push_back(entry.path());
        }
    }
    std::sort(task_dirs.begin(), task_dirs.end());
    for (const auto& td : task_dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(td)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            lib.add(td.filename().string(),
                    {f.stem().string(), load_scene_graph(f.string())});
        }
    }
    return lib;
}

GoalChoice select_goal(const std::map<std::string, double>& task_probs, const SceneGraph& current,
                       const GoalLibrary& lib, const GedOptions& opts, double threshold) {
    if (lib.empty()) {
        throw GraphError("goal library is empty");
    }
    const auto order = lib.tasks();
    std::string best;
    double best_p = threshold;
    for (const auto& task : order) {
        auto it = task_probs.find(task);
        if (it != task_probs.end() && it->second > best_p) {
            best_p = it->second;
            best = task;
        }
    }
    GoalChoice choice;
    if (best.empty()) {
        return choice;
    }
    choice.decided = true;
    choice.task = best;
    const auto& variants = lib.variants(best);
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const double d = ged(current, variants[v].graph, opts).distance;
        if (v == 0 || d < choice.distance) {
            choice.distance = d;
            choice.variant = v;
        }
    }
    return choice;
}

}  // namespace subta
