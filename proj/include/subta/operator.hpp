#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "subta/behaviors.hpp"
#include "subta/world.hpp"

namespace subta {

/// Move `block` so that it rests at `pose`.
struct Placement {
    BlockId block = 0;
    Pose pose;
};

struct OperatorConfig {
    BlockShape shape;
    double speed = 0.3;           // m/s
    double turn_deg = 120.0;      // deg/s
    double dt = 1.0 / kFrameRateHz;
    double clearance = 0.12;      // carry height above the tallest block
    double min_carry = 0.15;      // m
    double sigma_pos = 0.0;       // m, per axis per tick
    double sigma_rot_deg = 0.0;   // deg, per axis per tick
    std::uint64_t seed = 1;
    int grasp_retry_ticks = 10;
    int settle_ticks = 30;
    double accept_pos = 0.03;     // a suggestion this close to an open slot is followed
    double accept_deg = 30.0;
};

/// Stand-in for the human: drives one hand at a time through pick-place
/// waypoints. Commands are noise-free waypoint motion plus independent
/// Gaussian perturbations each tick. With assistance on, it reacts to the
/// active behavior the way a user reacts to highlights and snapping.
///
/// The script is a list of slots the user wants filled. A planner suggestion
/// is followed when it lands near an open slot (or removes a block that is in
/// no slot) and ignored otherwise.
class ScriptedOperator {
public:
    enum class Phase { Idle, ToPick, Descend, Grasp, Lift, ToPlace, Lower, Settle, Release, Retreat };

    /// `script` is the fallback order used whenever no plan step is offered.
    ScriptedOperator(OperatorConfig cfg, std::vector<Placement> script);

    /// `planned` is the planner's suggestion (M3), used when starting a new
    /// placement and to retarget the block being carried.
    std::array<ControllerInput, 2> next(const World& world, const std::array<BehaviorId, 2>& rows, AssistMode mode,
                                        const std::optional<Placement>& planned,
                                        const std::set<BlockId>& planned_blocks);

    bool finished() const { return finished_; }
    Phase phase() const { return phase_; }
    Hand active_hand() const { return hand_; }
    std::optional<Placement> current() const { return current_; }
    /// Noise-free commands of the last tick, per hand.
    const std::array<Pose, 2>& nominal() const { return nominal_; }
    int placements_done() const { return done_; }

private:
    bool start_next(const World& world, const std::optional<Placement>& planned);
    std::optional<std::size_t> open_slot_near(const Placement& p) const;
    bool accepts_removal(const World& world, BlockId block) const;
    void vacate(BlockId block);
    Pose toward(const Pose& from, const Pose& to) const;
    Pose perturb(const Pose& p);
    double carry_height(const World& world) const;

    OperatorConfig cfg_;
    std::vector<Placement> script_;
    std::mt19937_64 rng_;
    std::array<Pose, 2> nominal_;
    std::array<Pose, 2> home_;
    bool homes_set_ = false;
    Hand hand_ = Hand::Right;
    Phase phase_ = Phase::Idle;
    std::optional<Placement> current_;
    std::optional<std::size_t> slot_;
    std::vector<std::optional<BlockId>> filled_;
    int phase_ticks_ = 0;
    int done_ = 0;
    bool finished_ = false;
    BehaviorId last_row_ = BehaviorId::ApproachObject;
    std::optional<Pose> last_hand_;
};

const char* to_string(ScriptedOperator::Phase p);

/// Ground-truth order: block i of the supply goes to assembly block i, with the
/// assembly placed in `frame`.
std::vector<Placement> ground_truth_script(const std::map<BlockId, Pose>& assembly, const Pose& frame);

/// True for blocks lying in the supply area (not part of the assembly).
bool in_supply(const Pose& p);

}  // namespace subta
