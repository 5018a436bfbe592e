#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>

#include "subta/intention.hpp"
#include "subta/planner.hpp"

namespace subta {

struct HandObservation {
    Pose pose;
    Vec3 velocity = Vec3::Zero();  // m/s
    std::optional<BlockId> held;
};

/// Intent estimator used when no trained weights are available: task evidence
/// from how well the placed blocks match the start of each goal, hand actions
/// from hand motion relative to the blocks.
struct HeuristicIntentConfig {
    BlockShape shape;
    GedOptions ged;
    double sharpness = 3.0;
    double offset = 1.5;            // matched blocks for probability 0.5
    double mismatch_weight = 1.0;   // matched blocks lost per edit
    double reach = 0.3;             // m, pick-up detection range
    double moving_speed = 0.02;     // m/s
    double grasp_near = 0.03;       // m
    double withdraw_near = 0.1;     // m
    double place_height = 0.05;     // m, held block bottom above its support
    double dominant = 0.8;
};

/// Smallest edit distance from `placed` to a support-closed part of `goal`
/// with min(|placed|, |goal|) nodes.
double prefix_distance(const SceneGraph& placed, const SceneGraph& goal, const GedOptions& opts = {});

/// Sigmoid evidence per task label; tasks absent from `lib` get 0.
std::array<double, kTaskCount> task_evidence(const SceneGraph& placed, const GoalLibrary& lib,
                                             const HeuristicIntentConfig& cfg = {});

/// `blocks` excludes nothing; blocks in `unavailable` are not pick candidates.
std::array<double, kActionCount> hand_action_probs(const HandObservation& hand,
                                                   const std::map<BlockId, Pose>& blocks,
                                                   const std::set<BlockId>& unavailable,
                                                   const HeuristicIntentConfig& cfg = {});

Action dominant_action(const HandObservation& hand, const std::map<BlockId, Pose>& blocks,
                       const std::set<BlockId>& unavailable, const HeuristicIntentConfig& cfg = {});

/// Caches task evidence per placed graph; actions are recomputed on every call.
class HeuristicIntent {
public:
    HeuristicIntent(const GoalLibrary& lib, HeuristicIntentConfig cfg = {}) : lib_(&lib), cfg_(std::move(cfg)) {}

    IntentEstimate estimate(const HandObservation& left, const HandObservation& right,
                            const std::map<BlockId, Pose>& blocks, const SceneGraph& placed);

private:
    const GoalLibrary* lib_;
    HeuristicIntentConfig cfg_;
    std::optional<SceneGraph> cached_graph_;
    std::array<double, kTaskCount> cached_{};
};

}  // namespace subta
