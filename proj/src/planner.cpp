#include <algorithm>
#include <deque>
#include <set>

#include "subta/planner.hpp"

namespace subta {

const char* to_string(StepKind k) {
    switch (k) {
        case StepKind::Place: return "place";
        case StepKind::Repair: return "repair";
        case StepKind::Remove: return "remove";
    }
    return "?";
}

namespace {

/// Goal nodes adjacent to `start`, in breadth-first order.
std::vector<BlockId> bfs_adjacent(const SceneGraph& goal, BlockId start) {
    std::vector<BlockId> adjacent;
    std::set<BlockId> seen{start};
    std::deque<std::pair<BlockId, int>> queue{{start, 0}};
    while (!queue.empty()) {
        const auto [cur, depth] = queue.front();
        queue.pop_front();
        if (depth == 1) {
            adjacent.push_back(cur);
            continue;
        }
        for (BlockId next : goal.neighbors(cur)) {
            if (seen.insert(next).second) {
                queue.emplace_back(next, depth + 1);
            }
        }
    }
    return adjacent;
}

SynthesisRequest base_request(const PlannerConfig& cfg) {
    SynthesisRequest req;
    req.shape = cfg.shape;
    req.tol = cfg.tol;
    req.lateral_spacing = cfg.lateral_spacing;
    req.side_offset_fraction = cfg.side_offset_fraction;
    req.staging = cfg.staging;
    return req;
}

}  // namespace

PlanResult next_target(const SceneGraph& g, const SceneGraph& goal, const PlannerConfig& cfg) {
    const GedResult r = ged(g, goal, cfg.ged);
    PlanResult out;
    out.distance = r.distance;
    if (r.distance == 0.0) {
        out.done = true;
        return out;
    }

    std::map<BlockId, BlockId> goal_to_current;
    for (const auto& [cur, tgt] : r.mapping) {
        goal_to_current[tgt] = cur;
    }

    auto constraints_for = [&](BlockId goal_node, std::optional<BlockId> exclude) {
        std::vector<SynthesisConstraint> cs;
        for (const auto& [tgt, cur] : goal_to_current) {
            if (tgt == goal_node || cur == exclude) {
                continue;
            }
            cs.push_back({cur, g.pose(cur), goal.relation(tgt, goal_node)});
        }
        return cs;
    };

    auto make_step = [&](StepKind kind, BlockId goal_node, BlockId target,
                         std::optional<BlockId> exclude) {
        PlanStep step;
        step.kind = kind;
        step.target_block = target;
        step.ged_remaining = r.distance;
        for (BlockId p : goal.support_parents(goal_node)) {
            if (goal_to_current.count(p)) {
                step.parent = goal_to_current.at(p);
                break;
            }
        }
        for (BlockId n : bfs_adjacent(goal, goal_node)) {
            auto it = goal_to_current.find(n);
            if (it != goal_to_current.end() && it->second != exclude) {
                step.neighbors.push_back(it->second);
            }
        }
        SynthesisRequest req = base_request(cfg);
        req.constraints = constraints_for(goal_node, exclude);
        if (goal.has_pose(goal_node)) {
            req.staging = Pose(cfg.staging.position(),
                               cfg.staging.orientation() * goal.pose(goal_node).orientation());
        }
        step.target_pose = synthesize_pose(req);
        return step;
    };

    // Constructive steps: node additions whose support parents are all placed
    // and that would not have to slide under a block already standing.
    std::vector<BlockId> eligible;
    for (const auto& op : r.path.ops) {
        if (op.kind != EditKind::NodeAdd) {
            continue;
        }
        const auto parents = goal.support_parents(op.goal_node);
        const bool supported = std::all_of(parents.begin(), parents.end(), [&](BlockId p) {
            return goal_to_current.count(p) != 0;
        });
        const bool buried = std::any_of(goal.edges().begin(), goal.edges().end(), [&](const Edge& e) {
            return e.kind == EdgeKind::Support && e.parent == op.goal_node &&
                   goal_to_current.count(e.child) != 0;
        });
        if (supported && !buried) {
            eligible.push_back(op.goal_node);
        }
    }
    std::stable_partition(eligible.begin(), eligible.end(), [&](BlockId w) {
        const auto adj = goal.neighbors(w);
        return std::any_of(adj.begin(), adj.end(),
                           [&](BlockId n) { return goal_to_current.count(n) != 0; });
    });
    std::optional<SynthesisError> last_error;
    for (BlockId w : eligible) {
        try {
            out.step = make_step(StepKind::Place, w, w, std::nullopt);
            return out;
        } catch (const SynthesisError& e) {
            last_error = e;
        }
    }
    if (last_error) {
        throw *last_error;
    }

    // Nothing left to add: fix the first placed block the path touches.
    for (const auto& op : r.path.ops) {
        BlockId target = 0;
        switch (op.kind) {
            case EditKind::NodeDelete:
            case EditKind::NodeModify: target = op.node; break;
            case EditKind::EdgeDelete:
            case EditKind::EdgeModify:
            case EditKind::AttrModify:
            case EditKind::EdgeAdd: target = op.edge.child; break;
            case EditKind::NodeAdd: continue;
        }
        auto mapped = r.mapping.find(target);
        if (mapped == r.mapping.end()) {
            PlanStep step;
            step.kind = StepKind::Remove;
            step.target_block = target;
            step.ged_remaining = r.distance;
            const Pose probe(Vec3::Zero(), cfg.parking.orientation());
            step.target_pose = Pose(cfg.parking.position() +
                                        Vec3(0, 0, cfg.shape.vertical_half_extent(probe)),
                                    cfg.parking.orientation());
            out.step = step;
            return out;
        }
        out.step = make_step(StepKind::Repair, mapped->second, target, target);
        return out;
    }
    throw GedError("edit path has no actionable operation");
}

}  // namespace subta
