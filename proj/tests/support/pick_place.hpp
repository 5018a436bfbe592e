#pragma once

#include <vector>

#include "subta/behaviors.hpp"
#include "subta/world.hpp"

namespace subta::testing {

inline StepResult tick(BehaviorMachine& m, World& w, const ControllerInput& in, AssistMode mode,
                       const IntentEstimate* intent = nullptr, const std::optional<PlanTarget>& plan = {}) {
    StepResult r = m.step(in, w.view(m.hand()), intent, plan, mode);
    w.apply(m.hand(), r.command);
    w.advance(1.0 / kFrameRateHz);
    return r;
}

struct PickPlaceTrace {
    std::vector<BehaviorId> visited;  // consecutive duplicates removed
    std::vector<StepResult> steps;
    bool completed = false;
};

/// Drives one hand through a nominal pick of `block` and a place at `place`,
/// reacting to the machine's row the way an attentive operator would.
inline PickPlaceTrace nominal_pick_place(BehaviorMachine& m, World& w, BlockId block, const Pose& place,
                                         AssistMode mode, const std::optional<PlanTarget>& plan = {},
                                         int max_ticks = 800) {
    PickPlaceTrace trace;
    trace.visited.push_back(m.state());
    int settle = 0;
    bool above_reached = false;
    const BlockShape& shape = m.config().shape;
    for (int t = 0; t < max_ticks; ++t) {
        const Pose hand = w.hand(m.hand());
        ControllerInput in;
        in.hand = m.hand();
        in.target = hand;
        switch (m.state()) {
            case BehaviorId::ApproachObject:
                if (trace.visited.size() > 1) {
                    trace.completed = true;
                    return trace;
                }
                in.target = snap_trajectory(hand, grasp_pose(w.blocks().at(block), shape), 0.01, 5.0);
                break;
            case BehaviorId::AlignWithObject:
                in.grasp_button = true;
                break;
            case BehaviorId::AlignWithSurface:
            case BehaviorId::UnsnapSurface:
                in.target = Pose(hand.position() + Vec3(0, 0, 0.05), hand.orientation());
                break;
            case BehaviorId::ApproachSurface: {
                const Pose grip = relative_pose(hand, w.blocks().at(block));
                const Pose ee = compose(place, grip.inverse());
                const Pose above(ee.position() + Vec3(0, 0, 0.1), ee.orientation());
                if (!above_reached && position_distance(hand, above) < 1e-6) above_reached = true;
                in.target = snap_trajectory(hand, above_reached ? ee : above, 0.01, 5.0);
                break;
            }
            case BehaviorId::SnapToSurface:
                in.finger_open = ++settle > 15;
                break;
            case BehaviorId::ReleaseObject:
                in.finger_open = true;
                break;
            default:
                break;
        }
        StepResult r = tick(m, w, in, mode, nullptr, plan);
        if (r.state != trace.visited.back()) trace.visited.push_back(r.state);
        trace.steps.push_back(std::move(r));
    }
    return trace;
}

}  // namespace subta::testing
