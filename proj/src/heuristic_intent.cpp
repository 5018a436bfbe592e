#include "subta/heuristic_intent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subta/behaviors.hpp"

namespace subta {

namespace {

SceneGraph induced(const SceneGraph& g, const std::vector<BlockId>& keep) {
    SceneGraph out;
    for (BlockId id : keep) {
        const SceneNode& n = g.node(id);
        out.add_node(id, n.pose, n.ori);
    }
    for (const Edge& e : g.edges()) {
        if (out.has_node(e.parent) && out.has_node(e.child)) {
            out.add_edge(e);
        }
    }
    return out;
}

bool support_closed(const SceneGraph& g, const std::vector<BlockId>& subset) {
    for (BlockId id : subset) {
        for (BlockId p : g.support_parents(id)) {
            if (std::find(subset.begin(), subset.end(), p) == subset.end()) {
                return false;
            }
        }
    }
    return true;
}

template <typename F>
void for_each_subset(const std::vector<BlockId>& ids, std::size_t k, F&& f) {
    std::vector<bool> pick(ids.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        std::vector<BlockId> s;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (pick[i]) s.push_back(ids[i]);
        }
        f(s);
    } while (std::prev_permutation(pick.begin(), pick.end()));
}

std::array<double, kActionCount> peaked(Action a, double dominant) {
    std::array<double, kActionCount> p;
    p.fill((1.0 - dominant) / (kActionCount - 1));
    p[static_cast<std::size_t>(a)] = dominant;
    return p;
}

}  // namespace

double prefix_distance(const SceneGraph& placed, const SceneGraph& goal, const GedOptions& opts) {
    const std::vector<BlockId> ids = goal.node_ids();
    const std::size_t k = std::min(placed.node_count(), ids.size());
    double best = std::numeric_limits<double>::infinity();
    for_each_subset(ids, k, [&](const std::vector<BlockId>& s) {
        if (best > 0.0 && support_closed(goal, s)) {
            best = std::min(best, ged(placed, induced(goal, s), opts).distance);
        }
    });
    return best;
}

std::array<double, kTaskCount> task_evidence(const SceneGraph& placed, const GoalLibrary& lib,
                                             const HeuristicIntentConfig& cfg) {
    std::array<double, kTaskCount> out{};
    const auto& labels = task_labels();
    const auto n = static_cast<double>(placed.node_count());
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (!lib.has_task(labels[t])) {
            continue;
        }
        double d = std::numeric_limits<double>::infinity();
        for (const auto& v : lib.variants(labels[t])) {
            d = std::min(d, prefix_distance(placed, v.graph, cfg.ged));
        }
        const double matched = n - cfg.mismatch_weight * d;
        out[t] = 1.0 / (1.0 + std::exp(-cfg.sharpness * (matched - cfg.offset)));
    }
    return out;
}

Action dominant_action(const HandObservation& hand, const std::map<BlockId, Pose>& blocks,
                       const std::set<BlockId>& unavailable, const HeuristicIntentConfig& cfg) {
    const double speed = hand.velocity.norm();
    if (hand.held && blocks.count(*hand.held)) {
        const Pose& p = blocks.at(*hand.held);
        std::set<BlockId> ignore = unavailable;
        ignore.insert(*hand.held);
        const Surface s = support_surface(p, *hand.held, blocks, cfg.shape, ignore);
        const double gap = p.position().z() - cfg.shape.vertical_half_extent(p) - s.height;
        if (gap > cfg.place_height && hand.velocity.z() >= -cfg.moving_speed) {
            return Action::PickUp;
        }
        const bool on_block = s.block.has_value();
        switch (classify_orientation(p, cfg.shape)) {
            case OriClass::Stand: return on_block ? Action::StandOnBlock : Action::Stand;
            case OriClass::SideLie: return on_block ? Action::SideLieOnBlock : Action::SideLie;
            default: return on_block ? Action::LieOnBlock : Action::Lie;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    Vec3 to_block = Vec3::Zero();
    for (const auto& [id, p] : blocks) {
        if (unavailable.count(id)) continue;
        const Vec3 d = grasp_pose(p, cfg.shape).position() - hand.pose.position();
        if (d.norm() < best) {
            best = d.norm();
            to_block = d;
        }
    }
    if (best < cfg.grasp_near && speed < cfg.moving_speed) {
        return Action::PickUp;
    }
    if (speed > cfg.moving_speed && best < cfg.reach && hand.velocity.dot(to_block) > 0.0) {
        return Action::PickUp;
    }
    if (speed > cfg.moving_speed && best < cfg.withdraw_near) {
        return Action::Withdraw;
    }
    return Action::Idle;
}

std::array<double, kActionCount> hand_action_probs(const HandObservation& hand,
                                                   const std::map<BlockId, Pose>& blocks,
                                                   const std::set<BlockId>& unavailable,
                                                   const HeuristicIntentConfig& cfg) {
    return peaked(dominant_action(hand, blocks, unavailable, cfg), cfg.dominant);
}

IntentEstimate HeuristicIntent::estimate(const HandObservation& left, const HandObservation& right,
                                         const std::map<BlockId, Pose>& blocks, const SceneGraph& placed) {
    if (!cached_graph_ || !graphs_equivalent(*cached_graph_, placed)) {
        cached_ = task_evidence(placed, *lib_, cfg_);
        cached_graph_ = placed;
    }
    IntentEstimate est;
    est.task_probs = cached_;
    std::set<BlockId> busy_l;
    std::set<BlockId> busy_r;
    if (right.held) busy_l.insert(*right.held);
    if (left.held) busy_r.insert(*left.held);
    est.left_action = hand_action_probs(left, blocks, busy_l, cfg_);
    est.right_action = hand_action_probs(right, blocks, busy_r, cfg_);
    return est;
}

}  // namespace subta
