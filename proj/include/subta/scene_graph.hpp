#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "subta/geometry.hpp"

namespace subta {

using BlockId = int;

std::string block_name(BlockId id);

// Edge attribute labels. Integer values are the on-disk labels.
enum class OriClass : int { None = 0, Stand = 1, Lie = 2, SideLie = 3 };
enum class FrontRel : int { None = 0, Parallel = 1, Perpendicular = 2 };
enum class ParentPos : int { None = 0, Center = 1, Left = 2, Right = 3 };
enum class NeighborPos : int { None = 0, Left = 1, Right = 2 };

enum class EdgeKind { Support, Lateral };

const char* to_string(OriClass c);
const char* to_string(EdgeKind k);

struct EdgeAttr {
    OriClass ori_parent = OriClass::None;
    FrontRel ori_front = FrontRel::None;
    ParentPos pos_parent = ParentPos::None;
    NeighborPos pos_neighbor = NeighborPos::None;

    static EdgeAttr support(OriClass o, FrontRel f, ParentPos p) { return {o, f, p, NeighborPos::None}; }
    static EdgeAttr lateral(NeighborPos n) {
        return {OriClass::None, FrontRel::None, ParentPos::None, n};
    }
    /// Throws std::invalid_argument on out-of-range labels.
    static EdgeAttr from_labels(const std::array<int, 4>& labels);

    std::array<int, 4> labels() const;
    /// Same relation seen from the other block of a lateral pair.
    EdgeAttr mirrored() const;
    bool is_support() const;
    bool is_lateral() const;
    bool valid() const { return is_support() || is_lateral(); }

    bool operator==(const EdgeAttr&) const = default;
    auto operator<=>(const EdgeAttr&) const = default;
};

std::string to_string(const EdgeAttr& a);

struct Edge {
    /// Supporting block, or the lower id for lateral edges.
    BlockId parent = 0;
    BlockId child = 0;
    EdgeKind kind = EdgeKind::Support;
    EdgeAttr attr;

    bool operator==(const Edge&) const = default;
};

/// Relation between an ordered pair (u, v) as seen from u. Used to compare
/// graphs under a node mapping.
struct PairRelation {
    EdgeKind kind = EdgeKind::Support;
    bool u_is_parent = true;
    EdgeAttr attr;

    bool operator==(const PairRelation&) const = default;
};

struct Tolerances {
    double contact = 0.005;          // vertical gap between touching faces, m
    double same_height = 0.005;      // center height difference for neighbors, m
    double center_fraction = 0.25;   // of the parent's heading half extent
    double front_split_deg = 45.0;   // parallel below, perpendicular above
    double neighbor_range = 0.27;    // horizontal center distance, m
    double min_overlap = 1e-4;       // footprint penetration for support, m
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SceneNode {
    std::optional<Pose> pose;
    OriClass ori = OriClass::None;

    bool operator==(const SceneNode&) const = default;
};

/// Attributed graph over placed blocks. Support edges point from the
/// supporting block to the block resting on it; lateral edges are stored from
/// the lower id with the attribute expressed from that block's viewpoint.
class SceneGraph {
public:
    bool empty() const { return nodes_.empty(); }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    bool has_node(BlockId id) const { return nodes_.count(id) != 0; }

    const std::map<BlockId, SceneNode>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::vector<BlockId> node_ids() const;

    const SceneNode& node(BlockId id) const;
    const Pose& pose(BlockId id) const;
    bool has_pose(BlockId id) const;

    std::vector<BlockId> support_parents(BlockId id) const;
    std::vector<BlockId> neighbors(BlockId id) const;
    std::optional<PairRelation> relation(BlockId u, BlockId v) const;

    void add_node(BlockId id, std::optional<Pose> pose, OriClass ori);
    /// Enforces one edge per pair, acyclic support and canonical lateral order.
    void add_edge(const Edge& e);
    void remove_node(BlockId id);
    void remove_edge(BlockId a, BlockId b);
    void set_node_label(BlockId id, OriClass ori);
    void set_node_pose(BlockId id, const Pose& pose);

    bool operator==(const SceneGraph&) const = default;

private:
    bool support_reachable(BlockId from, BlockId to) const;

    std::map<BlockId, SceneNode> nodes_;
    std::vector<Edge> edges_;
};

// --- heuristic --------------------------------------------------------------

/// Index (0 long, 1 medium, 2 short) of the body axis closest to world up.
int vertical_axis(const Pose& pose);

OriClass classify_orientation(const Pose& pose, const BlockShape& shape);

/// Horizontal unit direction of the longest non-vertical body axis.
Eigen::Vector2d heading(const Pose& pose);
/// Half extent along heading().
double heading_half_extent(const Pose& pose, const BlockShape& shape);
/// Horizontal front-face normal as an undirected line, sign canonicalized.
Eigen::Vector2d front_normal(const Pose& pose);

bool footprints_overlap(const Pose& a, const Pose& b, const BlockShape& shape, double min_overlap);

struct PlacedBlock {
    BlockId id;
    Pose pose;
};

/// Relation of `child` w.r.t. `parent`: a support attribute if child rests on
/// parent, a lateral attribute (from parent's viewpoint) if both sit at the
/// same height within range, otherwise nothing.
std::optional<EdgeAttr> relation_heuristic(const PlacedBlock& parent, const PlacedBlock& child,
                                           const BlockShape& shape, const Tolerances& tol);

/// Edge between two blocks, if any, oriented per SceneGraph conventions.
std::optional<Edge> pair_edge(const PlacedBlock& a, const PlacedBlock& b, const BlockShape& shape,
                              const Tolerances& tol);

SceneGraph build_scene_graph(const std::map<BlockId, Pose>& blocks, const BlockShape& shape,
                             const Tolerances& tol);
/// Serial reference for build_scene_graph.
SceneGraph build_scene_graph_serial(const std::map<BlockId, Pose>& blocks,
                                    const BlockShape& shape, const Tolerances& tol);

/// Appends a block and its incident edges. Throws GraphError on a duplicate id.
SceneGraph add_block(const SceneGraph& g, BlockId id, const Pose& pose, const BlockShape& shape,
                     const Tolerances& tol);

/// Structural isomorphism: node labels, edges and attributes; poses ignored.
bool graphs_equivalent(const SceneGraph& a, const SceneGraph& b);

/// Checks acyclicity, edge-kind/attribute consistency and lateral ordering.
bool satisfies_invariants(const SceneGraph& g);

// --- goal-graph document ----------------------------------------------------

nlohmann::json to_json(const SceneGraph& g);
SceneGraph scene_graph_from_json(const nlohmann::json& j);
SceneGraph load_scene_graph(const std::string& path);
void save_scene_graph(const SceneGraph& g, const std::string& path);

}  // namespace subta
