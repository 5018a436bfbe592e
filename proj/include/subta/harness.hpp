#pragma once

#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "subta/behaviors.hpp"
#include "subta/heuristic_intent.hpp"
#include "subta/intention.hpp"
#include "subta/operator.hpp"
#include "subta/planner.hpp"
#include "subta/world.hpp"

namespace subta {

class TrialError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrialConfig {
    std::string task = "Arch";
    AssistMode mode = AssistMode::M3;
    std::uint64_t seed = 1;
    double sigma_pos = 0.0;      // m
    double sigma_rot_deg = 0.0;  // deg
    Thresholds th;
    double time_limit = 120.0;   // s

    /// Throws TrialError on an unknown task or out-of-range values.
    void validate(const GoalLibrary& lib) const;
};

struct HandEvent {
    Hand hand = Hand::Right;
    FeedbackEvent event;

    bool operator==(const HandEvent&) const = default;
};

struct TickRecord {
    int tick = 0;
    double time = 0.0;
    std::array<ControllerInput, 2> inputs;
    WorldState world;  // after this tick's commands
    std::array<BehaviorId, 2> rows{};
    std::optional<IntentEstimate> intent;
    std::optional<PlanStep> plan;
    std::array<MotionCommand, 2> commands;
    std::vector<HandEvent> events;
};

struct PlacementEvent {
    int tick = 0;
    BlockId block = 0;
    Pose pose;
};

struct TrialLog {
    TrialConfig config;
    std::vector<TickRecord> ticks;
    std::vector<PlacementEvent> placements;
    SceneGraph final_graph;
    std::map<BlockId, Pose> final_poses;
    bool success = false;
    std::optional<double> success_time;
    double duration = 0.0;
};

struct SimulationOptions {
    PlannerConfig planner;
    HeuristicIntentConfig heuristic;
    std::shared_ptr<const ModelWeights> weights;  // network intent when set
    bool stop_when_operator_done = true;
    int operator_grace_ticks = 40;
};

/// One closed-loop trial, advanced one 20 Hz tick at a time by whoever
/// supplies the controller inputs (scripted operator or a live client).
class Simulation {
public:
    Simulation(TrialConfig cfg, const GoalLibrary& lib, SimulationOptions opts = {});

    /// Missing inputs repeat the hand's previous input.
    const TickRecord& step(const std::array<std::optional<ControllerInput>, 2>& inputs);

    bool done() const;
    bool success() const { return success_time_.has_value(); }
    int tick() const { return tick_; }
    double time() const { return world_.state().time; }
    const World& world() const { return world_; }
    const TrialConfig& config() const { return cfg_; }
    std::array<BehaviorId, 2> rows() const;
    const std::optional<PlanStep>& plan() const { return plan_; }
    /// Plan step as an operator target: the physical block to move and where.
    std::optional<Placement> planned_placement() const;
    const std::set<BlockId>& planned_blocks() const { return plan_blocks_; }
    SceneGraph placed_graph() const;
    void set_mode(AssistMode m);
    /// Marks the trial as ended by the driver (e.g. operator finished).
    void stop() { stopped_ = true; }

    const TrialLog& log() const { return log_; }
    TrialLog finish();

private:
    void update_intent(const std::array<ControllerInput, 2>& in);
    void update_plan(const SceneGraph& placed);

    TrialConfig cfg_;
    const GoalLibrary* lib_;
    SimulationOptions opts_;
    World world_;
    std::array<BehaviorMachine, 2> machines_;
    std::array<ControllerInput, 2> last_input_;
    HeuristicIntent heuristic_;
    WindowBuffer windows_;
    std::optional<IntentEstimate> intent_;
    std::array<std::deque<Pose>, 2> hand_history_;
    std::optional<std::map<BlockId, Pose>> plan_basis_;
    std::optional<std::string> plan_goal_key_;
    std::optional<PlanStep> plan_;
    std::set<BlockId> plan_blocks_;
    Pose plan_pose_;
    std::vector<SceneGraph> goals_;
    int tick_ = 0;
    bool stopped_ = false;
    std::optional<double> success_time_;
    TrialLog log_;
};

/// Scripted operator in the loop until success, time limit, or the operator
/// has nothing left to do.
TrialLog run_trial(const TrialConfig& cfg, const GoalLibrary& lib, const SimulationOptions& opts = {});

/// Placed-block scene graph: blocks outside the supply area that no hand holds.
SceneGraph placed_scene_graph(const WorldState& s, const BlockShape& shape, const Tolerances& tol);

}  // namespace subta
