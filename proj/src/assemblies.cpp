#include "subta/assemblies.hpp"

#include <filesystem>

namespace subta {

namespace {

constexpr double kHalfPi = kPi / 2.0;

// Resting heights of the block center for each orientation class.
constexpr double kStandZ = 0.045;
constexpr double kSideLieZ = 0.015;
constexpr double kLieZ = 0.0075;

Pose block(OriClass cls, double yaw, double x, double y, double z) {
    return {Vec3(x, y, z), orientation_for(cls, yaw)};
}

std::vector<Assembly> make_assemblies() {
    std::vector<Assembly> out;

    // Two pillars and a lintel.
    out.push_back({"Arch",
                   "default",
                   {{1, block(OriClass::Stand, 0.0, 0.0, 0.0, kStandZ)},
                    {2, block(OriClass::Stand, 0.0, 0.06, 0.0, kStandZ)},
                    {3, block(OriClass::Lie, 0.0, 0.03, 0.0, 2 * kStandZ + kLieZ)}}});

    // Two flat rails bridged by two cross pieces at either end.
    out.push_back({"Frame",
                   "default",
                   {{1, block(OriClass::Lie, 0.0, 0.0, 0.0, kLieZ)},
                    {2, block(OriClass::Lie, 0.0, 0.0, -0.06, kLieZ)},
                    {3, block(OriClass::Lie, kHalfPi, 0.027, -0.03, 3 * kLieZ)},
                    {4, block(OriClass::Lie, kHalfPi, -0.027, -0.03, 3 * kLieZ)}}});

    // Legs, body, neck and head; B5 lies centered across the standing neck.
    out.push_back({"Horse",
                   "default",
                   {{1, block(OriClass::SideLie, 0.0, 0.0, 0.0, kSideLieZ)},
                    {2, block(OriClass::SideLie, 0.0, 0.0, -0.06, kSideLieZ)},
                    {3, block(OriClass::Lie, kHalfPi, 0.0, -0.03, 2 * kSideLieZ + kLieZ)},
                    {4, block(OriClass::Stand, kHalfPi, 0.0, -0.003, 2 * kSideLieZ + 2 * kLieZ + kStandZ)},
                    {5, block(OriClass::Lie, kPi, 0.0, -0.003,
                              2 * kSideLieZ + 2 * kLieZ + 2 * kStandZ + kLieZ)}}});

    // Flat blocks stacked with alternating left/right offsets.
    out.push_back({"Snake",
                   "default",
                   {{1, block(OriClass::Lie, 0.0, 0.0, 0.0, kLieZ)},
                    {2, block(OriClass::Lie, 0.0, 0.027, 0.0, 3 * kLieZ)},
                    {3, block(OriClass::Lie, 0.0, 0.0, 0.0, 5 * kLieZ)},
                    {4, block(OriClass::Lie, 0.0, 0.027, 0.0, 7 * kLieZ)},
                    {5, block(OriClass::Lie, 0.0, 0.0, 0.0, 9 * kLieZ)}}});

    // Handle, cross piece and two prongs, all lying.
    out.push_back({"Tuningfork-ly",
                   "default",
                   {{1, block(OriClass::Lie, 0.0, 0.0, 0.0, kLieZ)},
                    {2, block(OriClass::Lie, kHalfPi, 0.027, 0.0, 3 * kLieZ)},
                    {3, block(OriClass::Lie, kPi, 0.027, 0.027, 5 * kLieZ)},
                    {4, block(OriClass::Lie, kPi, 0.027, -0.027, 5 * kLieZ)}}});
    return out;
}

}  // namespace

const std::vector<Assembly>& builtin_assemblies() {
    static const std::vector<Assembly> all = make_assemblies();
    return all;
}

const Assembly& builtin_assembly(const std::string& task) {
    for (const auto& a : builtin_assemblies()) {
        if (a.task == task) {
            return a;
        }
    }
    throw GraphError("no built-in assembly for task '" + task + "'");
}

SceneGraph goal_graph(const Assembly& a, const BlockShape& shape, const Tolerances& tol) {
    return build_scene_graph(a.poses, shape, tol);
}

GoalLibrary builtin_goal_library(const BlockShape& shape, const Tolerances& tol) {
    GoalLibrary lib;
    for (const auto& a : builtin_assemblies()) {
        lib.add(a.task, {a.variant, goal_graph(a, shape, tol)});
    }
    return lib;
}

void export_goal_library(const std::string& dir, const BlockShape& shape, const Tolerances& tol) {
    namespace fs = std::filesystem;
    for (const auto& a : builtin_assemblies()) {
        const fs::path task_dir = fs::path(dir) / a.task;
        fs::create_directories(task_dir);
        save_scene_graph(goal_graph(a, shape, tol), (task_dir / (a.variant + ".json")).string());
    }
}

}  // namespace subta
