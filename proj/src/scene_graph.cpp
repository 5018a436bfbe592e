#include "subta/scene_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#ifdef SUBTA_HAVE_OPENMP
#include <omp.h>
#endif

namespace subta {

std::string block_name(BlockId id) { return "B" + std::to_string(id); }

const char* to_string(OriClass c) {
    switch (c) {
        case OriClass::None: return "none";
        case OriClass::Stand: return "stand";
        case OriClass::Lie: return "lie";
        case OriClass::SideLie: return "side-lie";
    }
    return "?";
}

const char* to_string(EdgeKind k) { return k == EdgeKind::Support ? "support" : "lateral"; }

EdgeAttr EdgeAttr::from_labels(const std::array<int, 4>& l) {
    if (l[0] < 0 || l[0] > 3 || l[1] < 0 || l[1] > 2 || l[2] < 0 || l[2] > 3 || l[3] < 0 ||
        l[3] > 2) {
        throw std::invalid_argument("edge attribute label out of range");
    }
    return {static_cast<OriClass>(l[0]), static_cast<FrontRel>(l[1]),
            static_cast<ParentPos>(l[2]), static_cast<NeighborPos>(l[3])};
}

std::array<int, 4> EdgeAttr::labels() const {
    return {static_cast<int>(ori_parent), static_cast<int>(ori_front),
            static_cast<int>(pos_parent), static_cast<int>(pos_neighbor)};
}

EdgeAttr EdgeAttr::mirrored() const {
    EdgeAttr m = *this;
    if (pos_neighbor == NeighborPos::Left) {
        m.pos_neighbor = NeighborPos::Right;
    } else if (pos_neighbor == NeighborPos::Right) {
        m.pos_neighbor = NeighborPos::Left;
    }
    return m;
}

bool EdgeAttr::is_support() const {
    return ori_parent != OriClass::None && ori_front != FrontRel::None &&
           pos_parent != ParentPos::None && pos_neighbor == NeighborPos::None;
}

bool EdgeAttr::is_lateral() const {
    return ori_parent == OriClass::None && ori_front == FrontRel::None &&
           pos_parent == ParentPos::None && pos_neighbor != NeighborPos::None;
}

std::string to_string(const EdgeAttr& a) {
    const auto l = a.labels();
    return "[" + std::to_string(l[0]) + "," + std::to_string(l[1]) + "," + std::to_string(l[2]) +
           "," + std::to_string(l[3]) + "]";
}

// --- SceneGraph -------------------------------------------------------------

std::vector<BlockId> SceneGraph::node_ids() const {
    std::vector<BlockId> ids;
    ids.reserve(nodes_.size());
    for (const auto& [id, _] : nodes_) {
        ids.push_back(id);
    }
    return ids;
}

const SceneNode& SceneGraph::node(BlockId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw GraphError("unknown block " + block_name(id));
    }
    return it->second;
}

const Pose& SceneGraph::pose(BlockId id) const {
    const auto& n = node(id);
    if (!n.pose) {
        throw GraphError("block " + block_name(id) + " has no pose");
    }
    return *n.pose;
}

bool SceneGraph::has_pose(BlockId id) const {
    auto it = nodes_.find(id);
    return it != nodes_.end() && it->second.pose.has_value();
}

std::vector<BlockId> SceneGraph::support_parents(BlockId id) const {
    std::vector<BlockId> out;
    for (const auto& e : edges_) {
        if (e.kind == EdgeKind::Support && e.child == id) {
            out.push_back(e.parent);
        }
    }
    return out;
}

std::vector<BlockId> SceneGraph::neighbors(BlockId id) const {
    std::vector<BlockId> out;
    for (const auto& e : edges_) {
        if (e.parent == id) {
            out.push_back(e.child);
        } else if (e.child == id) {
            out.push_back(e.parent);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<PairRelation> SceneGraph::relation(BlockId u, BlockId v) const {
    for (const auto& e : edges_) {
        const bool forward = e.parent == u && e.child == v;
        const bool backward = e.parent == v && e.child == u;
        if (!forward && !backward) {
            continue;
        }
        if (e.kind == EdgeKind::Support) {
            return PairRelation{EdgeKind::Support, forward, e.attr};
        }
        return PairRelation{EdgeKind::Lateral, true, forward ? e.attr : e.attr.mirrored()};
    }
    return std::nullopt;
}

void SceneGraph::add_node(BlockId id, std::optional<Pose> pose, OriClass ori) {
    if (has_node(id)) {
        throw GraphError("duplicate block " + block_name(id));
    }
    nodes_.emplace(id, SceneNode{std::move(pose), ori});
}

bool SceneGraph::support_reachable(BlockId from, BlockId to) const {
    std::set<BlockId> seen;
    std::vector<BlockId> stack{from};
    while (!stack.empty()) {
        const BlockId cur = stack.back();
        stack.pop_back();
        if (cur == to) {
            return true;
        }
        if (!seen.insert(cur).second) {
            continue;
        }
        for (const auto& e : edges_) {
            if (e.kind == EdgeKind::Support && e.parent == cur) {
                stack.push_back(e.child);
            }
        }
    }
    return false;
}

void SceneGraph::add_edge(const Edge& e) {
    if (!has_node(e.parent) || !has_node(e.child)) {
        throw GraphError("edge references unknown block");
    }
    if (e.parent == e.child) {
        throw GraphError("self edge on " + block_name(e.parent));
    }
    if (relation(e.parent, e.child)) {
        throw GraphError("second edge between " + block_name(e.parent) + " and " +
                         block_name(e.child));
    }
    if (e.kind == EdgeKind::Support) {
        if (!e.attr.is_support()) {
            throw GraphError("support edge with attribute " + to_string(e.attr));
        }
        if (support_reachable(e.child, e.parent)) {
            throw GraphError("support cycle through " + block_name(e.child));
        }
    } else {
        if (!e.attr.is_lateral()) {
            throw GraphError("lateral edge with attribute " + to_string(e.attr));
        }
        if (e.parent > e.child) {
            throw GraphError("lateral edge must be stored from the lower id");
        }
    }
    auto pos = std::lower_bound(edges_.begin(), edges_.end(), e, [](const Edge& a, const Edge& b) {
        return std::pair(a.parent, a.child) < std::pair(b.parent, b.child);
    });
    edges_.insert(pos, e);
}

void SceneGraph::remove_node(BlockId id) {
    if (nodes_.erase(id) == 0) {
        throw GraphError("unknown block " + block_name(id));
    }
    std::erase_if(edges_, [id](const Edge& e) { return e.parent == id || e.child == id; });
}

void SceneGraph::remove_edge(BlockId a, BlockId b) {
    const auto n = std::erase_if(edges_, [a, b](const Edge& e) {
        return (e.parent == a && e.child == b) || (e.parent == b && e.child == a);
    });
    if (n == 0) {
        throw GraphError("no edge between " + block_name(a) + " and " + block_name(b));
    }
}

void SceneGraph::set_node_label(BlockId id, OriClass ori) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw GraphError("unknown block " + block_name(id));
    }
    it->second.ori = ori;
}

void SceneGraph::set_node_pose(BlockId id, const Pose& pose) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
        throw GraphError("unknown block " + block_name(id));
    }
    it->second.pose = pose;
}

// --- heuristic --------------------------------------------------------------

int vertical_axis(const Pose& pose) {
    const Mat3 r = pose.rotation();
    int best = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(r(2, i)) > std::abs(r(2, best))) {
            best = i;
        }
    }
    return best;
}

OriClass classify_orientation(const Pose& pose, const BlockShape& /*shape*/) {
    switch (vertical_axis(pose)) {
        case 0: return OriClass::Stand;
        case 1: return OriClass::SideLie;
        default: return OriClass::Lie;
    }
}

namespace {

Eigen::Vector2d horizontal(const Vec3& v) {
    Eigen::Vector2d h(v.x(), v.y());
    const double n = h.norm();
    return n > 1e-12 ? Eigen::Vector2d(h / n) : Eigen::Vector2d(1.0, 0.0);
}

int heading_axis(const Pose& pose) { return vertical_axis(pose) == 0 ? 1 : 0; }

struct Footprint {
    Eigen::Vector2d center;
    std::array<Eigen::Vector2d, 2> axes;
    std::array<double, 2> half;
};

Footprint footprint(const Pose& pose, const BlockShape& shape) {
    const int up = vertical_axis(pose);
    const Mat3 r = pose.rotation();
    Footprint f;
    f.center = pose.position().head<2>();
    int k = 0;
    for (int i = 0; i < 3; ++i) {
        if (i == up) {
            continue;
        }
        f.axes[k] = horizontal(r.col(i));
        f.half[k] = shape.half(i);
        ++k;
    }
    return f;
}

double radius_along(const Footprint& f, const Eigen::Vector2d& axis) {
    return std::abs(f.axes[0].dot(axis)) * f.half[0] + std::abs(f.axes[1].dot(axis)) * f.half[1];
}

}  // namespace

Eigen::Vector2d heading(const Pose& pose) { return horizontal(pose.rotation().col(heading_axis(pose))); }

double heading_half_extent(const Pose& pose, const BlockShape& shape) {
    return shape.half(heading_axis(pose));
}

Eigen::Vector2d front_normal(const Pose& pose) {
    const int up = vertical_axis(pose);
    const Mat3 r = pose.rotation();
    Eigen::Vector2d n = horizontal(r.col(up == 1 ? 2 : 1));
    const double a = std::atan2(n.y(), n.x());
    if (a > deg2rad(45.0) + 1e-12 || a <= deg2rad(-135.0) + 1e-12) {
        n = -n;
    }
    return n;
}

bool footprints_overlap(const Pose& a, const Pose& b, const BlockShape& shape, double min_overlap) {
    const Footprint fa = footprint(a, shape);
    const Footprint fb = footprint(b, shape);
    const Eigen::Vector2d d = fb.center - fa.center;
    for (const auto* f : {&fa, &fb}) {
        for (const auto& axis : f->axes) {
            const double sep = std::abs(d.dot(axis)) - radius_along(fa, axis) - radius_along(fb, axis);
            if (sep > -min_overlap) {
                return false;
            }
        }
    }
    return true;
}

std::optional<EdgeAttr> relation_heuristic(const PlacedBlock& parent, const PlacedBlock& child,
                                           const BlockShape& shape, const Tolerances& tol) {
    if (parent.id == child.id) {
        throw std::invalid_argument("relation_heuristic needs distinct blocks");
    }
    const Pose& p = parent.pose;
    const Pose& c = child.pose;
    const double parent_top = p.position().z() + shape.vertical_half_extent(p);
    const double child_bottom = c.position().z() - shape.vertical_half_extent(c);
    const Eigen::Vector2d offset = (c.position() - p.position()).head<2>();

    if (std::abs(child_bottom - parent_top) <= tol.contact &&
        footprints_overlap(p, c, shape, tol.min_overlap)) {
        const Eigen::Vector2d hp = heading(p);
        const double line_angle = rad2deg(std::acos(std::min(1.0, std::abs(hp.dot(heading(c))))));
        const FrontRel front =
            line_angle < tol.front_split_deg ? FrontRel::Parallel : FrontRel::Perpendicular;
        const double along = offset.dot(hp);
        ParentPos pos = ParentPos::Center;
        if (std::abs(along) > tol.center_fraction * heading_half_extent(p, shape)) {
            pos = along > 0.0 ? ParentPos::Left : ParentPos::Right;
        }
        return EdgeAttr::support(classify_orientation(c, shape), front, pos);
    }

    if (std::abs(c.position().z() - p.position().z()) <= tol.same_height &&
        offset.norm() <= tol.neighbor_range) {
        const double side = offset.dot(front_normal(p));
        return EdgeAttr::lateral(side >= 0.0 ? NeighborPos::Left : NeighborPos::Right);
    }
    return std::nullopt;
}

std::optional<Edge> pair_edge(const PlacedBlock& a, const PlacedBlock& b, const BlockShape& shape,
                              const Tolerances& tol) {
    const PlacedBlock& lo = a.id < b.id ? a : b;
    const PlacedBlock& hi = a.id < b.id ? b : a;
    const auto forward = relation_heuristic(lo, hi, shape, tol);
    if (forward && forward->is_support()) {
        return Edge{lo.id, hi.id, EdgeKind::Support, *forward};
    }
    const auto backward = relation_heuristic(hi, lo, shape, tol);
    if (backward && backward->is_support()) {
        return Edge{hi.id, lo.id, EdgeKind::Support, *backward};
    }
    if (forward) {
        return Edge{lo.id, hi.id, EdgeKind::Lateral, *forward};
    }
    return std::nullopt;
}

namespace {

SceneGraph assemble(const std::map<BlockId, Pose>& blocks, const BlockShape& shape,
                    const std::vector<std::optional<Edge>>& pair_edges) {
    SceneGraph g;
    for (const auto& [id, pose] : blocks) {
        g.add_node(id, pose, classify_orientation(pose, shape));
    }
    for (const auto& e : pair_edges) {
        if (e) {
            g.add_edge(*e);
        }
    }
    return g;
}

}  // namespace

SceneGraph build_scene_graph_serial(const std::map<BlockId, Pose>& blocks,
                                    const BlockShape& shape, const Tolerances& tol) {
    std::vector<PlacedBlock> list;
    for (const auto& [id, pose] : blocks) {
        list.push_back({id, pose});
    }
    std::vector<std::optional<Edge>> found;
    for (std::size_t i = 0; i < list.size(); ++i) {
        for (std::size_t j = i + 1; j < list.size(); ++j) {
            found.push_back(pair_edge(list[i], list[j], shape, tol));
        }
    }
    return assemble(blocks, shape, found);
}

SceneGraph build_scene_graph(const std::map<BlockId, Pose>& blocks, const BlockShape& shape,
                             const Tolerances& tol) {
    constexpr std::size_t kParallelThreshold = 32;
    if (blocks.size() < kParallelThreshold) {
        return build_scene_graph_serial(blocks, shape, tol);
    }
    std::vector<PlacedBlock> list;
    for (const auto& [id, pose] : blocks) {
        list.push_back({id, pose});
    }
    const auto n = static_cast<long>(list.size());
    std::vector<std::optional<Edge>> found(static_cast<std::size_t>(n * (n - 1) / 2));
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < n; ++i) {
        // Row i of the strict upper triangle starts at i*n - i*(i+1)/2.
        const long base = i * n - i * (i + 1) / 2;
        for (long j = i + 1; j < n; ++j) {
            found[static_cast<std::size_t>(base + (j - i - 1))] =
                pair_edge(list[static_cast<std::size_t>(i)], list[static_cast<std::size_t>(j)],
                          shape, tol);
        }
    }
    return assemble(blocks, shape, found);
}

SceneGraph add_block(const SceneGraph& g, BlockId id, const Pose& pose, const BlockShape& shape,
                     const Tolerances& tol) {
    if (g.has_node(id)) {
        throw GraphError("duplicate block " + block_name(id));
    }
    SceneGraph out = g;
    out.add_node(id, pose, classify_orientation(pose, shape));
    const PlacedBlock added{id, pose};
    for (const auto& [other, node] : g.nodes()) {
        if (!node.pose) {
            throw GraphError("block " + block_name(other) + " has no pose");
        }
        if (auto e = pair_edge(added, {other, *node.pose}, shape, tol)) {
            out.add_edge(*e);
        }
    }
    return out;
}

bool graphs_equivalent(const SceneGraph& a, const SceneGraph& b) {
    if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) {
        return false;
    }
    const auto ida = a.node_ids();
    const auto idb = b.node_ids();
    std::vector<int> map(ida.size(), -1);
    std::vector<bool> used(idb.size(), false);

    std::function<bool(std::size_t)> extend = [&](std::size_t k) -> bool {
        if (k == ida.size()) {
            return true;
        }
        for (std::size_t c = 0; c < idb.size(); ++c) {
            if (used[c] || a.node(ida[k]).ori != b.node(idb[c]).ori) {
                continue;
            }
            bool ok = true;
            for (std::size_t prev = 0; prev < k && ok; ++prev) {
                const auto bp = idb[static_cast<std::size_t>(map[prev])];
                ok = a.relation(ida[prev], ida[k]) == b.relation(bp, idb[c]);
            }
            if (!ok) {
                continue;
            }
            used[c] = true;
            map[k] = static_cast<int>(c);
            if (extend(k + 1)) {
                return true;
            }
            used[c] = false;
        }
        return false;
    };
    return extend(0);
}

bool satisfies_invariants(const SceneGraph& g) {
    try {
        SceneGraph rebuilt;
        for (const auto& [id, n] : g.nodes()) {
            rebuilt.add_node(id, n.pose, n.ori);
        }
        for (const auto& e : g.edges()) {
            rebuilt.add_edge(e);
        }
        return true;
    } catch (const GraphError&) {
        return false;
    }
}

// --- json -------------------------------------------------------------------

nlohmann::json to_json(const SceneGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [id, n] : g.nodes()) {
        nlohmann::json node{{"id", id}, {"ori", static_cast<int>(n.ori)}};
        if (n.pose) {
            node["pose"] = n.pose->to_array();
        }
        nodes.push_back(std::move(node));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges()) {
        edges.push_back({{"parent", e.parent},
                         {"child", e.child},
                         {"kind", to_string(e.kind)},
                         {"attr", e.attr.labels()}});
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

SceneGraph scene_graph_from_json(const nlohmann::json& j) {
    SceneGraph g;
    const BlockShape shape;
    for (const auto& node : j.at("nodes")) {
        std::optional<Pose> pose;
        if (node.contains("pose") && !node.at("pose").is_null()) {
            pose = Pose::from_array(node.at("pose").get<std::vector<double>>());
        }
        OriClass ori = OriClass::None;
        if (node.contains("ori")) {
            const int label = node.at("ori").get<int>();
            if (label < 0 || label > 3) {
                throw GraphError("node orientation label out of range");
            }
            ori = static_cast<OriClass>(label);
        } else if (pose) {
            ori = classify_orientation(*pose, shape);
        } else {
            throw GraphError("node needs an 'ori' label or a pose");
        }
        g.add_node(node.at("id").get<BlockId>(), pose, ori);
    }
    for (const auto& edge : j.at("edges")) {
        const auto kind = edge.at("kind").get<std::string>();
        if (kind != "support" && kind != "lateral") {
            throw GraphError("unknown edge kind '" + kind + "'");
        }
        g.add_edge({edge.at("parent").get<BlockId>(), edge.at("child").get<BlockId>(),
                    kind == "support" ? EdgeKind::Support : EdgeKind::Lateral,
                    EdgeAttr::from_labels(edge.at("attr").get<std::array<int, 4>>())});
    }
    return g;
}

SceneGraph load_scene_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw GraphError("cannot open goal graph " + path);
    }
    return scene_graph_from_json(nlohmann::json::parse(in));
}

void save_scene_graph(const SceneGraph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw GraphError("cannot write " + path);
    }
    out << to_json(g).dump(2) << '\n';
}

}  // namespace subta
