#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "subta/planner.hpp"

namespace subta::testing {

namespace oracle_detail {

struct RawEdge {
    BlockId a;
    BlockId b;
    EdgeKind kind;
    std::array<int, 4> labels;
};

inline std::optional<RawEdge> find_edge(const SceneGraph& g, BlockId u, BlockId v) {
    for (const Edge& e : g.edges()) {
        if (e.parent == u && e.child == v) {
            return RawEdge{u, v, e.kind, e.attr.labels()};
        }
        if (e.parent == v && e.child == u) {
            return RawEdge{v, u, e.kind, e.attr.labels()};
        }
    }
    return std::nullopt;
}

// Lateral label as seen from `from`.
inline int side_seen_from(const RawEdge& e, BlockId from) {
    const int side = e.labels[3];
    if (e.a == from) {
        return side;
    }
    return side == 1 ? 2 : 1;
}

inline double pair_cost(const SceneGraph& g, BlockId u, BlockId v, const SceneGraph& goal,
                        BlockId gu, BlockId gv, const CostTable& c) {
    const auto cur = find_edge(g, u, v);
    const auto tgt = find_edge(goal, gu, gv);
    if (!cur && !tgt) {
        return 0.0;
    }
    if (!tgt) {
        return c.edge_delete;
    }
    if (!cur) {
        return c.edge_add;
    }
    if (cur->kind != tgt->kind) {
        return c.edge_modify;
    }
    if (cur->kind == EdgeKind::Support) {
        const bool same_direction = (cur->a == u) == (tgt->a == gu);
        if (!same_direction) {
            return c.edge_modify;
        }
        return cur->labels == tgt->labels ? 0.0 : c.attr_modify;
    }
    return side_seen_from(*cur, u) == side_seen_from(*tgt, gu) ? 0.0 : c.attr_modify;
}

}  // namespace oracle_detail

/// Cost of one complete assignment, computed from raw edge lists.
inline double oracle_assignment_cost(const SceneGraph& g, const SceneGraph& goal,
                                     const std::vector<BlockId>& cur_ids,
                                     const std::vector<std::optional<BlockId>>& image,
                                     const CostTable& c) {
    using namespace oracle_detail;
    double cost = 0.0;
    std::vector<BlockId> used;
    for (std::size_t i = 0; i < cur_ids.size(); ++i) {
        if (!image[i]) {
            cost += c.node_delete;
            continue;
        }
        used.push_back(*image[i]);
        if (g.node(cur_ids[i]).ori != goal.node(*image[i]).ori) {
            cost += c.node_modify;
        }
    }
    for (BlockId gid : goal.node_ids()) {
        if (std::find(used.begin(), used.end(), gid) == used.end()) {
            cost += c.node_add;
        }
    }
    for (std::size_t i = 0; i < cur_ids.size(); ++i) {
        for (std::size_t j = i + 1; j < cur_ids.size(); ++j) {
            if (image[i] && image[j]) {
                cost += pair_cost(g, cur_ids[i], cur_ids[j], goal, *image[i], *image[j], c);
            } else if (find_edge(g, cur_ids[i], cur_ids[j])) {
                cost += c.edge_delete;
            }
        }
    }
    const auto goal_ids = goal.node_ids();
    for (std::size_t i = 0; i < goal_ids.size(); ++i) {
        for (std::size_t j = i + 1; j < goal_ids.size(); ++j) {
            const bool both_used =
                std::find(used.begin(), used.end(), goal_ids[i]) != used.end() &&
                std::find(used.begin(), used.end(), goal_ids[j]) != used.end();
            if (!both_used && find_edge(goal, goal_ids[i], goal_ids[j])) {
                cost += c.edge_add;
            }
        }
    }
    return cost;
}

/// Exhaustive minimum over every injective partial assignment.
inline double brute_force_ged(const SceneGraph& g, const SceneGraph& goal, const CostTable& c = {}) {
    if (g.node_count() > 5 || goal.node_count() > 5) {
        throw std::invalid_argument("brute_force_ged: graphs above 5 nodes");
    }
    const auto cur_ids = g.node_ids();
    const auto goal_ids = goal.node_ids();
    std::vector<std::optional<BlockId>> image(cur_ids.size());
    std::vector<bool> taken(goal_ids.size(), false);
    double best = std::numeric_limits<double>::infinity();
    auto recurse = [&](auto& self, std::size_t i) -> void {
        if (i == cur_ids.size()) {
            best = std::min(best, oracle_assignment_cost(g, goal, cur_ids, image, c));
            return;
        }
        image[i] = std::nullopt;
        self(self, i + 1);
        for (std::size_t k = 0; k < goal_ids.size(); ++k) {
            if (!taken[k]) {
                taken[k] = true;
                image[i] = goal_ids[k];
                self(self, i + 1);
                taken[k] = false;
            }
        }
        image[i] = std::nullopt;
    };
    recurse(recurse, 0);
    return best;
}

}  // namespace subta::testing
