#pragma once

#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "subta/scene_graph.hpp"

namespace subta {

enum class EditKind { NodeAdd, NodeDelete, NodeModify, EdgeAdd, EdgeDelete, EdgeModify, AttrModify };

const char* to_string(EditKind k);

struct CostTable {
    double node_add = 1.0;
    double node_delete = 1.0;
    double node_modify = 1.0;
    double edge_add = 1.0;
    double edge_delete = 1.0;
    double edge_modify = 1.0;
    double attr_modify = 1.0;

    double of(EditKind k) const;
    bool valid() const;
};

/// One edit. Node ids refer to the graph being edited; `node` of a NodeAdd is
/// the id the new block receives and `goal_node` the goal-graph node it
/// realizes. Edge ops carry the resulting edge in edited-graph ids.
struct EditOp {
    EditKind kind = EditKind::NodeAdd;
    BlockId node = 0;
    BlockId goal_node = 0;
    OriClass ori = OriClass::None;
    Edge edge;
    double cost = 0.0;
};

struct EditPath {
    std::vector<EditOp> ops;
    double total_cost = 0.0;
};

std::string to_string(const EditOp& op);

class GedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class GedLimitExceeded : public GedError {
public:
    using GedError::GedError;
};
class GedCancelled : public GedError {
public:
    using GedError::GedError;
};

struct GedOptions {
    CostTable costs;
    std::size_t node_limit = 12;  // combined node count of both graphs
    /// Among optimal edit paths, prefer mappings that pair blocks resting on
    /// the table with goal nodes that have no support parent. Never changes
    /// the distance.
    bool prefer_grounded_match = true;
    const std::atomic<bool>* cancel = nullptr;
};

struct GedResult {
    double distance = 0.0;
    EditPath path;
    /// Current-graph node -> goal node; absent for deleted nodes.
    std::map<BlockId, BlockId> mapping;
    std::size_t expanded = 0;
};

/// Cost of editing `g` into `goal` under a fixed node assignment. Exposed for
/// tests; the assignment maps every node of `g` to a goal node or nullopt.
double assignment_cost(const SceneGraph& g, const SceneGraph& goal,
                       const std::map<BlockId, std::optional<BlockId>>& assignment,
                       const CostTable& costs);

/// Exact graph edit distance by best-first search over partial node
/// assignments. Throws GedLimitExceeded above the configured size.
GedResult ged(const SceneGraph& g, const SceneGraph& goal, const GedOptions& opts = {});

/// Applies removals, then node edits, then additions.
SceneGraph apply_edit_path(const SceneGraph& g, const EditPath& path);

// --- goal library -------------------------------------------------------------

struct GoalVariant {
    std::string name;
    SceneGraph graph;
};

class GoalLibrary {
public:
    void add(const std::string& task, GoalVariant variant);
    bool has_task(const std::string& task) const;
    const std::vector<GoalVariant>& variants(const std::string& task) const;
    /// Tasks in tie-break order: the canonical label order first, then others.
    std::vector<std::string> tasks() const;
    bool empty() const { return goals_.empty(); }

    /// Reads `<dir>/<task>/<variant>.json`.
    static GoalLibrary load_directory(const std::string& dir);

private:
    std::map<std::string, std::vector<GoalVariant>> goals_;
};

struct GoalChoice {
    bool decided = false;
    std::string task;
    std::size_t variant = 0;
    double distance = 0.0;
};

GoalChoice select_goal(const std::map<std::string, double>& task_probs, const SceneGraph& current,
                       const GoalLibrary& lib, const GedOptions& opts = {},
                       double threshold = 0.5);

// --- pose synthesis -----------------------------------------------------------

/// What the new block must look like from an already placed block.
struct SynthesisConstraint {
    BlockId other = 0;
    Pose other_pose;
    /// Relation from `other`'s viewpoint (u = other, v = target); nullopt
    /// means the two blocks must not be related.
    std::optional<PairRelation> expected;
};

struct SynthesisRequest {
    std::vector<SynthesisConstraint> constraints;
    /// Used when no constraint relates to the target.
    Pose staging;
    BlockShape shape;
    Tolerances tol;
    double lateral_spacing = 0.06;
    double side_offset_fraction = 0.6;  // of the parent's heading half extent
};

class SynthesisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Orientation of a block of class `cls` whose heading points along `yaw`.
Quat orientation_for(OriClass cls, double yaw);

/// Relation of `target` seen from `other`, independent of block ids.
std::optional<PairRelation> relation_from(const Pose& other, const Pose& target,
                                          const BlockShape& shape, const Tolerances& tol);

/// Inverse of the relation heuristic: a pose that reproduces every expected
/// relation and does not interpenetrate any constrained block.
Pose synthesize_pose(const SynthesisRequest& req);

// --- next target --------------------------------------------------------------

enum class StepKind { Place, Repair, Remove };

const char* to_string(StepKind k);

struct PlanStep {
    StepKind kind = StepKind::Place;
    /// Goal node for Place; current-graph block for Repair/Remove.
    BlockId target_block = 0;
    Pose target_pose;
    std::optional<BlockId> parent;
    std::vector<BlockId> neighbors;
    double ged_remaining = 0.0;
};

struct PlannerConfig {
    GedOptions ged;
    BlockShape shape;
    Tolerances tol;
    Pose staging = Pose::from_translation(Vec3(0.45, 0.0, 0.0));
    Pose parking = Pose::from_translation(Vec3(0.45, -0.35, 0.0));
    double lateral_spacing = 0.06;
    double side_offset_fraction = 0.6;
};

struct PlanResult {
    bool done = false;
    double distance = 0.0;
    std::optional<PlanStep> step;
};

/// Next assembly step read off the optimal edit path. Current-graph nodes
/// must carry poses.
PlanResult next_target(const SceneGraph& g, const SceneGraph& goal, const PlannerConfig& cfg);

}  // namespace subta
