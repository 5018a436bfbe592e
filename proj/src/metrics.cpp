#include "subta/metrics.hpp"

#include <algorithm>
#include <limits>

namespace subta {

namespace {

bool edges_match(const SceneGraph& placed, const SceneGraph& goal, BlockId b, BlockId g,
                 const std::map<BlockId, BlockId>& mapping) {
    std::set<BlockId> image;
    for (BlockId other : placed.node_ids()) {
        if (other == b) continue;
        const auto rel = placed.relation(b, other);
        auto it = mapping.find(other);
        if (it == mapping.end()) {
            if (rel) return false;
            continue;
        }
        image.insert(it->second);
        if (rel != goal.relation(g, it->second)) return false;
    }
    for (BlockId other : goal.node_ids()) {
        if (other != g && !image.count(other) && goal.relation(g, other)) return false;
    }
    return true;
}

}  // namespace

TrialMetrics compute_metrics(const SceneGraph& placed, const std::vector<BlockId>& placements,
                             const SceneGraph& goal, const CorrectnessTolerance& tol, const GedOptions& ged_opts) {
    TrialMetrics m;
    m.success = graphs_equivalent(placed, goal);
    if (placed.empty()) {
        return m;
    }
    const GedResult r = ged(placed, goal, ged_opts);
    for (BlockId id : placements) {
        if (placed.has_node(id) && placed.has_pose(id) && r.mapping.count(id) && goal.has_pose(r.mapping.at(id))) {
            m.anchor = id;
            break;
        }
    }
    if (!m.anchor) {
        return m;
    }
    const Pose& anchor = placed.pose(*m.anchor);
    const Pose& anchor_goal = goal.pose(r.mapping.at(*m.anchor));

    // The anchor's own half-turn ambiguity: take the reading that fits best.
    std::vector<BlockError> best;
    double best_sum = std::numeric_limits<double>::infinity();
    for (const Quat& s : block_half_turns()) {
        const Pose frame = compose(Pose(anchor.position(), anchor.orientation() * s), anchor_goal.inverse());
        std::vector<BlockError> errs;
        double sum = 0.0;
        for (const auto& [b, g] : r.mapping) {
            if (!placed.has_pose(b) || !goal.has_pose(g)) continue;
            const Pose target = compose(frame, goal.pose(g));
            BlockError e;
            e.block = b;
            e.goal_node = g;
            e.position = position_distance(placed.pose(b), target);
            e.orientation_deg = block_angle_deg(placed.pose(b).orientation(), target.orientation());
            sum += e.position;
            errs.push_back(e);
        }
        if (sum < best_sum - 1e-12) {
            best_sum = sum;
            best = std::move(errs);
        }
    }
    int correct = 0;
    double pos = 0.0;
    double ori = 0.0;
    for (BlockError& e : best) {
        e.edges_match = edges_match(placed, goal, e.block, e.goal_node, r.mapping);
        e.correct = e.edges_match && e.position <= tol.position && e.orientation_deg <= tol.orientation_deg;
        correct += e.correct ? 1 : 0;
        pos += e.position;
        ori += e.orientation_deg;
    }
    m.blocks = std::move(best);
    if (!m.blocks.empty()) {
        m.mean_position_error = pos / static_cast<double>(m.blocks.size());
        m.mean_orientation_error = ori / static_cast<double>(m.blocks.size());
    }
    m.progress = goal.node_count() ? static_cast<double>(correct) / static_cast<double>(goal.node_count()) : 0.0;
    return m;
}

TrialMetrics compute_metrics(const TrialLog& log, const GoalLibrary& lib, const CorrectnessTolerance& tol) {
    const auto& variants = lib.variants(log.config.task);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const double d = ged(log.final_graph, variants[v].graph).distance;
        if (d < best_d) {
            best_d = d;
            best = v;
        }
    }
    std::vector<BlockId> order;
    for (const auto& p : log.placements) {
        if (std::find(order.begin(), order.end(), p.block) == order.end()) order.push_back(p.block);
    }
    TrialMetrics m = compute_metrics(log.final_graph, order, variants[best].graph, tol);
    m.success = log.success;
    m.time = log.success_time.value_or(log.config.time_limit);
    return m;
}

}  // namespace subta
