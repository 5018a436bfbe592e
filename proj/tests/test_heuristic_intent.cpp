#include <doctest.h>

#include "subta/assemblies.hpp"
#include "subta/behaviors.hpp"
#include "subta/heuristic_intent.hpp"

using namespace subta;

namespace {

const BlockShape kShape;

SceneGraph prefix_graph(const Assembly& a, std::size_t n) {
    std::map<BlockId, Pose> poses;
    for (const auto& [id, p] : a.poses) {
        if (poses.size() == n) break;
        poses[id] = p;
    }
    return build_scene_graph(poses, kShape, Tolerances{});
}

std::size_t argmax(const std::array<double, kTaskCount>& p) {
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

}  // namespace

TEST_CASE("prefix distance is zero along the goal's own build order") {
    for (const auto& a : builtin_assemblies()) {
        const SceneGraph goal = goal_graph(a);
        for (std::size_t n = 0; n <= a.poses.size(); ++n) {
            CAPTURE(a.task);
            CAPTURE(n);
            CHECK(prefix_distance(prefix_graph(a, n), goal) == 0.0);
        }
    }
}

TEST_CASE("task evidence picks the task being built once two blocks are down") {
    const GoalLibrary lib = builtin_goal_library();
    for (const auto& a : builtin_assemblies()) {
        const std::size_t truth = *task_index(a.task);
        const auto empty = task_evidence(SceneGraph{}, lib);
        CHECK(empty[truth] < 0.5);
        for (std::size_t n = 2; n <= a.poses.size(); ++n) {
            CAPTURE(a.task);
            CAPTURE(n);
            const auto p = task_evidence(prefix_graph(a, n), lib);
            CHECK(argmax(p) == truth);
            CHECK(p[truth] > 0.5);
        }
    }
    // Tasks without goal graphs never gain evidence.
    const auto p = task_evidence(prefix_graph(builtin_assembly("Arch"), 3), lib);
    CHECK(p[*task_index("Tower")] == 0.0);
    CHECK(p[*task_index("Bridge")] == 0.0);
}

TEST_CASE("hand actions from motion relative to blocks") {
    const std::map<BlockId, Pose> blocks{{1, Pose::from_yaw(Vec3(0.4, 0, kShape.short_half()), 0)},
                                         {2, Pose::from_yaw(Vec3(0.4, 0.2, kShape.short_half()), 0)}};
    const Vec3 grasp = grasp_pose(blocks.at(1), kShape).position();
    HandObservation h;

    h.pose = Pose::from_translation(grasp + Vec3(0, 0, 0.2));
    h.velocity = Vec3(0, 0, -0.2);
    CHECK(dominant_action(h, blocks, {}) == Action::PickUp);

    h.pose = Pose::from_translation(grasp + Vec3(0, 0, 0.01));
    h.velocity = Vec3::Zero();
    CHECK(dominant_action(h, blocks, {}) == Action::PickUp);
    CHECK(dominant_action(h, blocks, {1}) == Action::Idle);

    h.pose = Pose::from_translation(grasp + Vec3(0, 0, 0.05));
    h.velocity = Vec3(0, 0, 0.2);
    CHECK(dominant_action(h, blocks, {}) == Action::Withdraw);

    h.pose = Pose::from_translation(Vec3(0, -0.5, 0.5));
    h.velocity = Vec3::Zero();
    CHECK(dominant_action(h, blocks, {}) == Action::Idle);

    const auto probs = hand_action_probs(h, blocks, {});
    CHECK(probs[0] == doctest::Approx(0.8));
    double sum = 0.0;
    for (double p : probs) sum += p;
    CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("held blocks map to carry or the placement class") {
    std::map<BlockId, Pose> blocks{{1, Pose::from_yaw(Vec3(0.4, 0, kShape.short_half()), 0)}};
    HandObservation h;
    h.held = 2;

    blocks[2] = Pose::from_yaw(Vec3(0.2, 0.2, 0.15), 0);
    h.velocity = Vec3(0.1, 0, 0);
    CHECK(dominant_action(h, blocks, {}) == Action::PickUp);

    blocks[2] = Pose::from_yaw(Vec3(0.2, 0.2, kShape.short_half() + 0.01), 0);
    CHECK(dominant_action(h, blocks, {}) == Action::Lie);

    blocks[2] = Pose(Vec3(0.2, 0.2, kShape.long_half() + 0.01), orientation_for(OriClass::Stand, 0));
    CHECK(dominant_action(h, blocks, {}) == Action::Stand);

    blocks[2] = Pose::from_yaw(Vec3(0.4, 0, 3 * kShape.short_half() + 0.02), kPi / 2);
    CHECK(dominant_action(h, blocks, {}) == Action::LieOnBlock);

    blocks[2] = Pose(Vec3(0.4, 0, 2 * kShape.short_half() + kShape.medium_half() + 0.01),
                     orientation_for(OriClass::SideLie, 0));
    CHECK(dominant_action(h, blocks, {}) == Action::SideLieOnBlock);

    // Still high but descending quickly: placement intent.
    blocks[2] = Pose::from_yaw(Vec3(0.2, 0.2, 0.15), 0);
    h.velocity = Vec3(0, 0, -0.2);
    CHECK(dominant_action(h, blocks, {}) == Action::Lie);
}

TEST_CASE("estimator caches task evidence per graph") {
    const GoalLibrary lib = builtin_goal_library();
    HeuristicIntent est(lib);
    const auto& a = builtin_assembly("Horse");
    const SceneGraph g = prefix_graph(a, 3);
    HandObservation l;
    HandObservation r;
    l.pose = Pose::from_translation(Vec3(0, 0.5, 0.3));
    r.pose = Pose::from_translation(Vec3(0, -0.5, 0.3));
    const auto e1 = est.estimate(l, r, a.poses, g);
    const auto e2 = est.estimate(l, r, a.poses, g);
    CHECK(e1.task_probs == e2.task_probs);
    CHECK(argmax(e1.task_probs) == *task_index("Horse"));
    CHECK(e1.left_best() == Action::Idle);
}
