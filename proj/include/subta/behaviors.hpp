#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "subta/intention.hpp"
#include "subta/scene_graph.hpp"

namespace subta {

/// Rows of the pick-place behavior table, in order.
enum class BehaviorId {
    ApproachObject,
    SnapToObject,
    AlignWithObject,
    GraspObject,
    AlignWithSurface,
    UnsnapSurface,
    ApproachSurface,
    SnapToSurface,
    ReleaseObject,
};
constexpr int kBehaviorCount = 9;

enum class ControlLevel { Free6DoF, Frozen, Nullspace, Locked, OnPlane, AutoDrive };
enum class Gripper { Hold, Close, Open };
enum class AssistMode { M1, M2, M3 };
enum class Hand { Left, Right };

const char* to_string(BehaviorId b);
const char* to_string(ControlLevel c);
const char* to_string(Gripper g);
const char* to_string(AssistMode m);
const char* to_string(Hand h);
std::optional<AssistMode> parse_mode(const std::string& s);

/// User-control cell of each row.
ControlLevel control_level_of(BehaviorId b);

struct Thresholds {
    double delta1 = 0.06;  // hand to object, snap
    double delta2 = 0.04;  // controller lift, unsnap
    double delta3 = 0.06;  // hand to plane, snap

    bool valid() const { return delta1 > 0 && delta2 > 0 && delta3 > 0; }
};

struct ControllerInput {
    Hand hand = Hand::Right;
    Pose target;
    bool grasp_button = false;
    bool finger_open = false;
};

struct MotionCommand {
    Pose pose;
    ControlLevel level = ControlLevel::Free6DoF;
    Gripper gripper = Gripper::Hold;
};

/// A flat support: the table (no block) or the top face of a block.
struct Surface {
    std::optional<BlockId> block;
    double height = 0.0;

    bool operator==(const Surface&) const = default;
};

struct FeedbackEvent {
    enum class Kind { ObjectHighlight, PlaneHighlight, HapticClick };
    Kind kind = Kind::HapticClick;
    BlockId object = 0;  // ObjectHighlight
    Surface surface;     // PlaneHighlight

    bool operator==(const FeedbackEvent&) const = default;
};

const char* to_string(FeedbackEvent::Kind k);

/// What one hand's machine sees of the world.
struct WorldView {
    const std::map<BlockId, Pose>* blocks = nullptr;
    std::optional<BlockId> held;     // by this hand
    std::set<BlockId> unavailable;   // held or claimed by the other hand
};

/// Plan-driven snap target: where the next block goes and which physical
/// blocks may realize it (any loose block for a placement, the named block
/// for a repair or removal).
struct PlanTarget {
    std::set<BlockId> blocks;
    Pose pose;
};

struct BehaviorConfig {
    Thresholds th;
    BlockShape shape;
    Tolerances tol;
    double pick_gate = 0.5;        // Pick-up probability
    double detect_range = 0.3;     // m
    double max_speed = 0.5;        // m/s in free rows
    double max_turn_deg = 180.0;   // deg/s in free rows
    double dt = 1.0 / kFrameRateHz;
    double drive_step = 0.02;      // m per tick while auto-driving
    double drive_turn_deg = 6.0;   // deg per tick while auto-driving
    double max_slide = 0.02;       // along the grasp axis in the grasp manifold
    double side_offset_fraction = 0.6;
    // M3 drops on the planned pose only within delta3 of it horizontally and
    // this angle; elsewhere the surface snap applies.
    double plan_capture_deg = 45.0;
};

struct StepResult {
    BehaviorId state = BehaviorId::ApproachObject;
    bool fault = false;
    MotionCommand command;
    std::vector<FeedbackEvent> events;
};

// --- motion primitives --------------------------------------------------------

/// One bounded step toward `target`; never overshoots.
Pose snap_trajectory(const Pose& current, const Pose& target, double max_step_m, double max_step_deg);

/// Rotation about `axis` contained in `q` (swing-twist decomposition).
Quat twist_about(const Quat& q, const Vec3& axis);

/// Minimal rotation that brings the body axis nearest to vertical onto the
/// world vertical.
Quat remove_tilt(const Quat& q);

/// Projects onto the plane z = 0 of `plane` and keeps only the rotation about
/// its normal, relative to the plane frame orientation.
Pose plane_constrain(const Pose& commanded, const Pose& plane);

/// Top-center of the block, gripper z up, x along the block heading.
Pose grasp_pose(const Pose& object, const BlockShape& shape);

/// Keeps the hand on the grasp axis of `object`: twist about the axis and a
/// bounded slide along it, never below the grasp point.
Pose grasp_manifold_motion(const Pose& commanded, const Pose& object, const BlockShape& shape,
                           double max_slide = 0.02);

/// Highest surface under `pose`'s footprint among `blocks` (excluding `self`).
Surface support_surface(const Pose& pose, BlockId self, const std::map<BlockId, Pose>& blocks,
                        const BlockShape& shape, const std::set<BlockId>& ignore = {});

/// True when another block (not in `ignore`) rests on top of `id`.
bool is_covered(BlockId id, const std::map<BlockId, Pose>& blocks, const BlockShape& shape,
                const std::set<BlockId>& ignore = {});

/// Geometric drop pose used in M2: tilt removed, resting on the surface below,
/// and on block tops aligned to the nearest slot and parallel/perpendicular yaw.
Pose surface_snap_pose(const Pose& held, BlockId self, const std::map<BlockId, Pose>& blocks,
                       const BlockShape& shape, double side_offset_fraction,
                       const std::set<BlockId>& ignore = {});

// --- state machine ----------------------------------------------------------------

/// One hand's behavior machine.
class BehaviorMachine {
public:
    explicit BehaviorMachine(Hand hand, BehaviorConfig cfg = {});

    StepResult step(const ControllerInput& input, const WorldView& world, const IntentEstimate* intent,
                    const std::optional<PlanTarget>& plan, AssistMode mode);

    BehaviorId state() const { return row_; }
    bool faulted() const { return fault_; }
    Hand hand() const { return hand_; }
    /// Block this hand is snapped to or holding, if any.
    std::optional<BlockId> object() const { return object_; }
    const BehaviorConfig& config() const { return cfg_; }
    void reset();

private:
    StepResult emit(const MotionCommand& cmd, std::vector<FeedbackEvent> events);
    Pose free_motion(const Pose& target) const;
    std::optional<BlockId> pick_candidate(const Pose& hand, const WorldView& world,
                                          const std::optional<PlanTarget>& plan, AssistMode mode) const;
    /// Drop target for the held block and its distance to it.
    std::optional<std::pair<Pose, double>> drop_target(const WorldView& world,
                                                       const std::optional<PlanTarget>& plan,
                                                       AssistMode mode) const;

    Hand hand_;
    BehaviorConfig cfg_;
    BehaviorId row_ = BehaviorId::ApproachObject;
    bool fault_ = false;
    std::optional<Pose> last_;
    std::optional<BlockId> object_;
    Pose grasp_target_;
    Pose plane_;
    Surface surface_;
    Pose lift_target_;
    Pose drop_ee_target_;
    bool armed_ = false;
    bool rearm_ = false;  // after a release, no snap until the hand is delta1 clear of every block
};

/// Allowed (from, to) row pairs: stay, advance one row, or wrap 9 -> 1.
bool transition_allowed(BehaviorId from, BehaviorId to);

}  // namespace subta
