#include <doctest.h>

#include <cstring>
#include <random>

#include "subta/behaviors.hpp"
#include "subta/world.hpp"
#include "support/pick_place.hpp"

using namespace subta;
using subta::testing::nominal_pick_place;
using subta::testing::tick;

namespace {

using B = BehaviorId;
using K = FeedbackEvent::Kind;

const BlockShape kShape;

Pose random_pose(std::mt19937_64& rng, double spread = 0.3) {
    std::uniform_real_distribution<double> u(-spread, spread);
    std::normal_distribution<double> n;
    Quat q(n(rng), n(rng), n(rng), n(rng));
    return {Vec3(u(rng), u(rng), u(rng)), q.normalized()};
}

Pose above(const Pose& p, double dz) { return {p.position() + Vec3(0, 0, dz), p.orientation()}; }

std::map<BlockId, Pose> one_block() { return {{1, Pose::from_yaw(Vec3(0.4, 0.0, kShape.short_half()), 0.3)}}; }

}  // namespace

TEST_CASE("nine rows in order with their user-control cells") {
    CHECK(kBehaviorCount == 9);
    CHECK(static_cast<int>(B::ReleaseObject) == 8);
    CHECK(control_level_of(B::ApproachObject) == ControlLevel::Free6DoF);
    CHECK(control_level_of(B::SnapToObject) == ControlLevel::Frozen);
    CHECK(control_level_of(B::AlignWithObject) == ControlLevel::Nullspace);
    CHECK(control_level_of(B::GraspObject) == ControlLevel::Locked);
    CHECK(control_level_of(B::AlignWithSurface) == ControlLevel::OnPlane);
    CHECK(control_level_of(B::UnsnapSurface) == ControlLevel::AutoDrive);
    CHECK(control_level_of(B::ApproachSurface) == ControlLevel::Free6DoF);
    CHECK(control_level_of(B::SnapToSurface) == ControlLevel::Frozen);
    CHECK(control_level_of(B::ReleaseObject) == ControlLevel::Locked);
    CHECK(parse_mode("m3") == AssistMode::M3);
    CHECK_FALSE(parse_mode("m4").has_value());
    CHECK_THROWS(BehaviorMachine(Hand::Left, BehaviorConfig{Thresholds{0.0, 0.04, 0.06}}));
}

TEST_CASE("hand 4 cm from a block snaps with a highlight") {
    World w(one_block());
    BehaviorMachine m(Hand::Right);
    const Pose grasp = grasp_pose(w.blocks().at(1), kShape);
    w.set_hand(Hand::Right, above(grasp, 0.04));
    ControllerInput in{Hand::Right, above(grasp, 0.04), false, false};
    const auto r = tick(m, w, in, AssistMode::M2);
    CHECK(r.state == B::SnapToObject);
    CHECK(r.command.level == ControlLevel::Frozen);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0] == FeedbackEvent{K::ObjectHighlight, 1, {}});
    // The end effector is being driven to the grasp pose.
    CHECK(position_distance(r.command.pose, grasp) < 0.04 - 1e-6);
}

TEST_CASE("beyond the snap distance nothing happens") {
    World w(one_block());
    BehaviorMachine m(Hand::Right);
    const Pose grasp = grasp_pose(w.blocks().at(1), kShape);
    w.set_hand(Hand::Right, above(grasp, 0.07));
    const auto r = tick(m, w, {Hand::Right, above(grasp, 0.07)}, AssistMode::M2);
    CHECK(r.state == B::ApproachObject);
    CHECK(r.events.empty());
}

TEST_CASE("button press in the grasp manifold closes with a haptic click") {
    World w(one_block());
    BehaviorMachine m(Hand::Right);
    const Pose grasp = grasp_pose(w.blocks().at(1), kShape);
    w.set_hand(Hand::Right, above(grasp, 0.03));
    StepResult r;
    for (int i = 0; i < 20 && m.state() != B::AlignWithObject; ++i) {
        r = tick(m, w, {Hand::Right, w.hand(Hand::Right)}, AssistMode::M2);
    }
    REQUIRE(m.state() == B::AlignWithObject);
    r = tick(m, w, {Hand::Right, w.hand(Hand::Right), true, false}, AssistMode::M2);
    CHECK(r.state == B::GraspObject);
    CHECK(r.command.gripper == Gripper::Close);
    CHECK(r.command.level == ControlLevel::Locked);
    CHECK(r.events == std::vector<FeedbackEvent>{{K::HapticClick, 0, {}}});
    CHECK(w.held(Hand::Right) == BlockId{1});
}

TEST_CASE("low pick-up intention keeps the hand free") {
    World w(one_block());
    BehaviorMachine m(Hand::Left);
    const Pose grasp = grasp_pose(w.blocks().at(1), kShape);
    w.set_hand(Hand::Left, above(grasp, 0.02));
    IntentEstimate intent;
    intent.left_action.fill(0.1);
    intent.left_action[static_cast<int>(Action::PickUp)] = 0.2;
    auto r = tick(m, w, {Hand::Left, above(grasp, 0.02)}, AssistMode::M2, &intent);
    CHECK(r.state == B::ApproachObject);
    intent.left_action[static_cast<int>(Action::PickUp)] = 0.6;
    r = tick(m, w, {Hand::Left, above(grasp, 0.02)}, AssistMode::M2, &intent);
    CHECK(r.state == B::SnapToObject);
}

TEST_CASE("M1 is a bitwise pass-through in every state") {
    std::mt19937_64 rng(4);
    World w(default_supply());
    BehaviorMachine m(Hand::Right);
    // Leave row 1 first so pass-through is checked from a non-initial state.
    const Pose grasp = grasp_pose(w.blocks().at(1), kShape);
    w.set_hand(Hand::Right, grasp);
    tick(m, w, {Hand::Right, grasp}, AssistMode::M2);
    REQUIRE(m.state() == B::SnapToObject);
    for (int i = 0; i < 2000; ++i) {
        ControllerInput in{Hand::Right, random_pose(rng), (rng() & 1) != 0, (rng() & 3) == 0};
        const auto r = m.step(in, w.view(Hand::Right), nullptr, std::nullopt, AssistMode::M1);
        const auto a = in.target.to_array();
        const auto b = r.command.pose.to_array();
        REQUIRE(std::memcmp(a.data(), b.data(), sizeof(a)) == 0);
        REQUIRE(r.command.level == ControlLevel::Free6DoF);
        REQUIRE(r.events.empty());
        REQUIRE(r.command.gripper ==
                (in.finger_open ? Gripper::Open : in.grasp_button ? Gripper::Close : Gripper::Hold));
    }
}

TEST_CASE("nominal pick and place visits rows 1 to 9 in order") {
    for (AssistMode mode : {AssistMode::M2, AssistMode::M3}) {
        World w(default_supply());
        BehaviorMachine m(Hand::Right);
        const Pose place = Pose::from_yaw(Vec3(0.45, 0.05, kShape.short_half()), 0.0);
        std::optional<PlanTarget> plan;
        if (mode == AssistMode::M3) plan = PlanTarget{{3}, place};
        const auto trace = nominal_pick_place(m, w, 3, place, mode, plan);
        REQUIRE(trace.completed);
        CHECK(trace.visited == std::vector<B>{B::ApproachObject, B::SnapToObject, B::AlignWithObject,
                                              B::GraspObject, B::AlignWithSurface, B::UnsnapSurface,
                                              B::ApproachSurface, B::SnapToSurface, B::ReleaseObject,
                                              B::ApproachObject});
        CHECK_FALSE(w.held(Hand::Right).has_value());
        CHECK(position_distance(w.blocks().at(3), place) < 0.002);
        CHECK(geodesic_angle_deg(w.blocks().at(3).orientation(), place.orientation()) < 0.5);
    }
}

TEST_CASE("M3 snaps to the planned block and highlights it") {
    World w(default_supply());
    BehaviorMachine m(Hand::Right);
    const Pose g1 = grasp_pose(w.blocks().at(1), kShape);
    const Pose g2 = grasp_pose(w.blocks().at(2), kShape);
    // Closer to B1, but B2 is the planned block and also within reach.
    const Pose hand(g1.position() + 0.45 * (g2.position() - g1.position()) + Vec3(0, 0, 0.02), g1.orientation());
    w.set_hand(Hand::Right, hand);
    PlanTarget plan{{2}, Pose::from_translation(Vec3(0.45, 0, kShape.short_half()))};
    auto r = tick(m, w, {Hand::Right, hand}, AssistMode::M3, nullptr, plan);
    REQUIRE(r.state == B::SnapToObject);
    CHECK(m.object() == BlockId{2});
    CHECK(r.events == std::vector<FeedbackEvent>{{K::ObjectHighlight, 2, {}}});

    World w2(default_supply());
    BehaviorMachine m2(Hand::Right);
    w2.set_hand(Hand::Right, hand);
    r = tick(m2, w2, {Hand::Right, hand}, AssistMode::M2, nullptr, plan);
    CHECK(m2.object() == BlockId{1});
}

TEST_CASE("a block claimed by the other hand is not snapped") {
    World w(one_block());
    BehaviorMachine right(Hand::Right);
    BehaviorMachine left(Hand::Left);
    const Pose grasp = grasp_pose(w.blocks().at(1), kShape);
    w.set_hand(Hand::Right, grasp);
    w.set_hand(Hand::Left, grasp);
    tick(right, w, {Hand::Right, grasp}, AssistMode::M2);
    REQUIRE(right.object() == BlockId{1});
    const auto r = left.step({Hand::Left, grasp}, w.view(Hand::Left, right.object()), nullptr, {}, AssistMode::M2);
    CHECK(r.state == B::ApproachObject);
}

TEST_CASE("a held id missing from the world faults with a locked command") {
    std::map<BlockId, Pose> blocks = one_block();
    BehaviorMachine m(Hand::Right);
    WorldView v{&blocks, BlockId{4}, {}};
    const auto r = m.step({Hand::Right, Pose()}, v, nullptr, {}, AssistMode::M2);
    CHECK(r.fault);
    CHECK(m.faulted());
    CHECK(r.command.level == ControlLevel::Locked);
    m.reset();
    CHECK_FALSE(m.faulted());
}

TEST_CASE("fuzzed inputs never produce a transition outside the trigger table") {
    std::mt19937_64 rng(99);
    std::array<std::array<int, kBehaviorCount>, kBehaviorCount> seen{};
    for (int episode = 0; episode < 200; ++episode) {
        World w(default_supply());
        BehaviorMachine m(episode % 2 ? Hand::Left : Hand::Right);
        const Hand h = m.hand();
        std::uniform_int_distribution<BlockId> pick(1, 5);
        std::uniform_real_distribution<double> u(0, 1);
        const AssistMode mode = episode % 3 == 0 ? AssistMode::M3 : AssistMode::M2;
        const std::optional<PlanTarget> plan =
            mode == AssistMode::M3 ? std::optional<PlanTarget>(PlanTarget{{pick(rng)}, random_pose(rng)})
                                   : std::nullopt;
        IntentEstimate intent;
        for (int t = 0; t < 400; ++t) {
            ControllerInput in;
            in.hand = h;
            const Pose hand = w.hand(h);
            const double r = u(rng);
            if (r < 0.4) {
                in.target = snap_trajectory(hand, grasp_pose(w.blocks().at(pick(rng)), kShape), 0.03, 20);
            } else if (r < 0.6) {
                in.target = above(hand, std::normal_distribution<double>(0, 0.05)(rng));
            } else if (r < 0.8) {
                in.target = hand;
            } else {
                in.target = random_pose(rng);
                in.target = Pose(in.target.position() + Vec3(0.45, 0, 0.3), in.target.orientation());
            }
            in.grasp_button = u(rng) < 0.3;
            in.finger_open = u(rng) < 0.15;
            intent.left_action.fill(0.0);
            intent.right_action.fill(0.0);
            const double pickup = u(rng);
            intent.left_action[static_cast<int>(Action::PickUp)] = pickup;
            intent.right_action[static_cast<int>(Action::PickUp)] = pickup;
            const IntentEstimate* ip = u(rng) < 0.5 ? &intent : nullptr;

            const B before = m.state();
            const auto held_before = w.held(h);
            const auto res = tick(m, w, in, mode, ip, plan);
            const B after = res.state;
            REQUIRE(transition_allowed(before, after));
            REQUIRE_FALSE(res.fault);
            ++seen[static_cast<std::size_t>(before)][static_cast<std::size_t>(after)];
            REQUIRE(res.command.level == control_level_of(after));

            // Trigger-specific conditions.
            if (before == B::ApproachObject && after == B::SnapToObject) {
                REQUIRE(m.object().has_value());
                const double d = position_distance(in.target, grasp_pose(w.blocks().at(*m.object()), kShape));
                REQUIRE(d < m.config().th.delta1);
                if (ip) REQUIRE(pickup > 0.5);
            }
            if (before == B::AlignWithObject && after == B::GraspObject) REQUIRE(in.grasp_button);
            if (before == B::GraspObject && after == B::AlignWithSurface) REQUIRE(held_before.has_value());
            if (before == B::SnapToSurface && after == B::ReleaseObject) REQUIRE(in.finger_open);
            if (before == B::ReleaseObject && after == B::ApproachObject) REQUIRE_FALSE(held_before.has_value());

            // Feedback only on entering a row whose cell has one.
            if (before == after) {
                REQUIRE(res.events.empty());
            } else {
                switch (after) {
                    case B::SnapToObject:
                        REQUIRE(res.events.size() == 1);
                        REQUIRE(res.events[0].kind == K::ObjectHighlight);
                        REQUIRE(w.blocks().count(res.events[0].object));
                        break;
                    case B::GraspObject:
                        REQUIRE(res.events.size() == 1);
                        REQUIRE(res.events[0].kind == K::HapticClick);
                        break;
                    case B::AlignWithSurface:
                    case B::SnapToSurface:
                        REQUIRE(res.events.size() == 1);
                        REQUIRE(res.events[0].kind == K::PlaneHighlight);
                        if (res.events[0].surface.block) REQUIRE(w.blocks().count(*res.events[0].surface.block));
                        break;
                    default:
                        REQUIRE(res.events.empty());
                }
            }
        }
    }
    // The fuzzer reached every forward transition.
    for (int s = 0; s < kBehaviorCount; ++s) {
        const int next = (s + 1) % kBehaviorCount;
        CAPTURE(s);
        CHECK(seen[static_cast<std::size_t>(s)][static_cast<std::size_t>(next)] > 0);
    }
}

TEST_CASE("snap trajectory converges monotonically without overshoot") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const Pose target = random_pose(rng);
        Pose cur = random_pose(rng);
        double prev_d = position_distance(cur, target) + geodesic_angle_deg(cur.orientation(), target.orientation());
        int steps = 0;
        while (!(cur == target) && steps < 10000) {
            cur = snap_trajectory(cur, target, 0.01, 3.0);
            const double d = position_distance(cur, target) + geodesic_angle_deg(cur.orientation(), target.orientation());
            REQUIRE(d < prev_d);
            prev_d = d;
            ++steps;
        }
        REQUIRE(cur == target);
    }
    const Pose a = Pose::from_translation(Vec3(0, 0, 0));
    const Pose b = Pose::from_translation(Vec3(0.005, 0, 0));
    CHECK(snap_trajectory(a, a, 0.01, 1) == a);
    CHECK(snap_trajectory(a, b, 0.01, 1) == b);
}

TEST_CASE("plane constraint keeps contact and yaw only") {
    const Pose plane = Pose::from_yaw(Vec3(0.4, 0.1, 0.03), 0.7);
    const Pose in_plane = compose(plane, Pose::from_yaw(Vec3(0.02, -0.01, 0), 0.4));
    CHECK(position_distance(plane_constrain(in_plane, plane), in_plane) < 1e-12);
    CHECK(geodesic_angle_deg(plane_constrain(in_plane, plane).orientation(), in_plane.orientation()) < 1e-9);

    const Pose lifted = above(in_plane, 0.02);
    CHECK(plane_constrain(lifted, plane).position().z() == doctest::Approx(0.03));

    const Quat tilt = quat_from_axis_angle(Vec3(1, 1, 0).normalized(), deg2rad(20));
    const Pose tilted(in_plane.position(), in_plane.orientation() * tilt);
    const Pose out = plane_constrain(tilted, plane);
    const Vec3 z = out.rotation().col(2);
    CHECK(std::acos(std::clamp(z.z(), -1.0, 1.0)) < 1e-6);
    // Yaw survives: the swing-twist twist of the commanded rotation.
    const Quat yaw = twist_about(relative_pose(plane, tilted).orientation(), Vec3::UnitZ());
    CHECK(geodesic_angle_deg(relative_pose(plane, out).orientation(), yaw) < 1e-6);
}

TEST_CASE("grasp manifold allows twist and slide only") {
    const Pose obj = Pose::from_yaw(Vec3(0.4, 0, kShape.short_half()), 0.5);
    const Pose g = grasp_pose(obj, kShape);
    CHECK(position_distance(grasp_manifold_motion(g, obj, kShape), g) < 1e-12);

    const Pose twisted(g.position(), g.orientation() * quat_from_axis_angle(Vec3::UnitZ(), 0.6));
    const Pose tw = grasp_manifold_motion(twisted, obj, kShape);
    CHECK(position_distance(tw, twisted) < 1e-12);
    CHECK(geodesic_angle_deg(tw.orientation(), twisted.orientation()) < 1e-9);

    // Sideways push into the block and a downward push are both projected out.
    const Pose pushed(g.position() + Vec3(0.01, 0.02, -0.03), g.orientation());
    const Pose p = grasp_manifold_motion(pushed, obj, kShape);
    const Vec3 local = obj.inverse().transform(p.position());
    const double signed_top = local.z() - kShape.short_half();
    CHECK(signed_top >= -1e-12);
    CHECK(std::hypot(local.x(), local.y()) < 1e-12);

    const Pose up = above(g, 0.05);
    CHECK(grasp_manifold_motion(up, obj, kShape).position().z() ==
          doctest::Approx(g.position().z() + 0.02));
}

TEST_CASE("grasp pose is top-centre with x along the heading") {
    const Pose lie = Pose::from_yaw(Vec3(0.3, 0.1, kShape.short_half()), 0.3);
    const Pose g = grasp_pose(lie, kShape);
    CHECK(g.position().z() == doctest::Approx(2 * kShape.short_half()));
    CHECK(g.rotation().col(0).dot(lie.rotation().col(0)) == doctest::Approx(1.0));
}

TEST_CASE("surface snap lands on the table or into a slot on a block") {
    std::map<BlockId, Pose> blocks{{1, Pose::from_yaw(Vec3(0.4, 0, kShape.short_half()), 0.0)}};
    const Quat small_tilt = quat_from_axis_angle(Vec3::UnitX(), deg2rad(4));
    const Pose held_far(Vec3(0.2, 0.2, 0.07), quat_from_axis_angle(Vec3::UnitZ(), 0.2) * small_tilt);
    const Pose t = surface_snap_pose(held_far, 2, blocks, kShape, 0.6);
    CHECK(t.position().z() == doctest::Approx(kShape.short_half()));
    CHECK(t.position().x() == doctest::Approx(0.2));
    CHECK(classify_orientation(t, kShape) == OriClass::Lie);
    CHECK(std::abs(t.rotation()(2, 2)) == doctest::Approx(1.0));

    // Held roughly perpendicular above the left end of B1.
    const Pose held_top(Vec3(0.4 + 0.025, 0.004, 0.06), quat_from_axis_angle(Vec3::UnitZ(), kPi / 2 + 0.1));
    const Pose s = surface_snap_pose(held_top, 2, blocks, kShape, 0.6);
    CHECK(s.position().z() == doctest::Approx(3 * kShape.short_half()));
    CHECK(s.position().x() == doctest::Approx(0.4 + 0.6 * kShape.long_half()));
    CHECK(s.position().y() == doctest::Approx(0.0));
    std::map<BlockId, Pose> both = blocks;
    both[2] = s;
    const SceneGraph g = build_scene_graph(both, kShape, Tolerances{});
    REQUIRE(g.support_parents(2).size() == 1);
    const auto rel = g.relation(1, 2);
    REQUIRE(rel.has_value());
    CHECK(rel->attr.ori_front == FrontRel::Perpendicular);
    CHECK(rel->attr.pos_parent == ParentPos::Left);
}

TEST_CASE("transition table") {
    for (int a = 0; a < kBehaviorCount; ++a) {
        for (int b = 0; b < kBehaviorCount; ++b) {
            const bool ok = a == b || b == a + 1 || (a == 8 && b == 0);
            CHECK(transition_allowed(static_cast<B>(a), static_cast<B>(b)) == ok);
        }
    }
}
