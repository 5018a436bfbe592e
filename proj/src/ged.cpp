#include <algorithm>
#include <cstdint>
#include <queue>
#include <set>

#include "subta/planner.hpp"

namespace subta {

const char* to_string(EditKind k) {
    switch (k) {
        case EditKind::NodeAdd: return "NodeAdd";
        case EditKind::NodeDelete: return "NodeDelete";
        case EditKind::NodeModify: return "NodeModify";
        case EditKind::EdgeAdd: return "EdgeAdd";
        case EditKind::EdgeDelete: return "EdgeDelete";
        case EditKind::EdgeModify: return "EdgeModify";
        case EditKind::AttrModify: return "AttrModify";
    }
    return "?";
}

double CostTable::of(EditKind k) const {
    switch (k) {
        case EditKind::NodeAdd: return node_add;
        case EditKind::NodeDelete: return node_delete;
        case EditKind::NodeModify: return node_modify;
        case EditKind::EdgeAdd: return edge_add;
        case EditKind::EdgeDelete: return edge_delete;
        case EditKind::EdgeModify: return edge_modify;
        case EditKind::AttrModify: return attr_modify;
    }
    return 0.0;
}

bool CostTable::valid() const {
    for (double c : {node_add, node_delete, node_modify, edge_add, edge_delete, edge_modify,
                     attr_modify}) {
        if (!(c >= 0.0)) {
            return false;
        }
    }
    return true;
}

std::string to_string(const EditOp& op) {
    std::string s = to_string(op.kind);
    switch (op.kind) {
        case EditKind::NodeAdd:
            s += " " + block_name(op.node) + " (goal " + block_name(op.goal_node) + ", " +
                 to_string(op.ori) + ")";
            break;
        case EditKind::NodeDelete: s += " " + block_name(op.node); break;
        case EditKind::NodeModify:
            s += " " + block_name(op.node) + " -> " + to_string(op.ori);
            break;
        default:
            s += " " + block_name(op.edge.parent) + "-" + block_name(op.edge.child) + " " +
                 to_string(op.edge.kind) + " " + to_string(op.edge.attr);
    }
    return s;
}

namespace {

using Rel = std::optional<PairRelation>;

struct Indexed {
    std::vector<BlockId> ids;
    std::vector<OriClass> labels;
    std::vector<bool> grounded;         // no support parent
    std::vector<std::vector<Rel>> rel;  // rel[i][j]: relation of j seen from i

    explicit Indexed(const SceneGraph& g) : ids(g.node_ids()) {
        const std::size_t n = ids.size();
        labels.resize(n);
        grounded.resize(n);
        rel.assign(n, std::vector<Rel>(n));
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = g.node(ids[i]).ori;
            grounded[i] = g.support_parents(ids[i]).empty();
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    rel[i][j] = g.relation(ids[i], ids[j]);
                }
            }
        }
    }
    std::size_t size() const { return ids.size(); }
};

double edge_cost(const Rel& a, const Rel& b, const CostTable& c) {
    if (!a && !b) {
        return 0.0;
    }
    if (a && !b) {
        return c.edge_delete;
    }
    if (!a && b) {
        return c.edge_add;
    }
    if (*a == *b) {
        return 0.0;
    }
    if (a->kind == b->kind && a->u_is_parent == b->u_is_parent) {
        return c.attr_modify;
    }
    return c.edge_modify;
}

EditKind edge_edit_kind(const PairRelation& a, const PairRelation& b) {
    return a.kind == b.kind && a.u_is_parent == b.u_is_parent ? EditKind::AttrModify
                                                              : EditKind::EdgeModify;
}

constexpr int kDeleted = -1;

struct State {
    std::vector<int> assign;  // goal index per processed current node, or kDeleted
    std::uint32_t used = 0;
    double cost = 0.0;
    double bound = 0.0;
    double tie = 0.0;  // secondary cost, see GedOptions::prefer_grounded_match
    bool complete = false;
};

// Lower f first, then lower secondary cost; among equals prefer complete,
// then deeper, then the lexicographically smaller assignment (deletion sorts
// last).
struct Worse {
    bool operator()(const State& a, const State& b) const {
        const double fa = a.cost + a.bound;
        const double fb = b.cost + b.bound;
        if (std::abs(fa - fb) > 1e-12) {
            return fa > fb;
        }
        if (a.tie != b.tie) {
            return a.tie > b.tie;
        }
        if (a.complete != b.complete) {
            return !a.complete;
        }
        if (a.assign.size() != b.assign.size()) {
            return a.assign.size() < b.assign.size();
        }
        for (std::size_t k = 0; k < a.assign.size(); ++k) {
            const int x = a.assign[k] == kDeleted ? 1 << 30 : a.assign[k];
            const int y = b.assign[k] == kDeleted ? 1 << 30 : b.assign[k];
            if (x != y) {
                return x > y;
            }
        }
        return false;
    }
};

Edge mapped_edge(const SceneGraph& goal, BlockId gp, BlockId gc,
                 const std::map<BlockId, BlockId>& goal_to_result) {
    const Rel r = goal.relation(gp, gc);
    const BlockId p = goal_to_result.at(gp);
    const BlockId c = goal_to_result.at(gc);
    if (r->kind == EdgeKind::Support) {
        return r->u_is_parent ? Edge{p, c, EdgeKind::Support, r->attr}
                              : Edge{c, p, EdgeKind::Support, r->attr};
    }
    return p < c ? Edge{p, c, EdgeKind::Lateral, r->attr}
                 : Edge{c, p, EdgeKind::Lateral, r->attr.mirrored()};
}

Edge stored_edge(const SceneGraph& g, BlockId a, BlockId b) {
    for (const auto& e : g.edges()) {
        if ((e.parent == a && e.child == b) || (e.parent == b && e.child == a)) {
            return e;
        }
    }
    throw GraphError("no edge between " + block_name(a) + " and " + block_name(b));
}

EditPath build_path(const SceneGraph& g, const SceneGraph& goal, const Indexed& cur,
                    const Indexed& tgt, const std::vector<int>& assign, const CostTable& c) {
    EditPath path;
    auto push = [&](EditOp op) {
        op.cost = c.of(op.kind);
        path.total_cost += op.cost;
        path.ops.push_back(std::move(op));
    };

    std::map<BlockId, BlockId> goal_to_result;
    std::set<BlockId> taken(cur.ids.begin(), cur.ids.end());
    for (std::size_t i = 0; i < cur.size(); ++i) {
        if (assign[i] != kDeleted) {
            goal_to_result[tgt.ids[static_cast<std::size_t>(assign[i])]] = cur.ids[i];
        }
    }
    std::vector<bool> goal_used(tgt.size(), false);
    for (int a : assign) {
        if (a != kDeleted) {
            goal_used[static_cast<std::size_t>(a)] = true;
        }
    }
    BlockId fresh = 0;
    for (BlockId id : cur.ids) {
        fresh = std::max(fresh, id);
    }
    for (BlockId id : tgt.ids) {
        fresh = std::max(fresh, id);
    }
    for (std::size_t w = 0; w < tgt.size(); ++w) {
        if (!goal_used[w]) {
            const BlockId want = tgt.ids[w];
            const BlockId id = taken.count(want) ? ++fresh : want;
            taken.insert(id);
            goal_to_result[want] = id;
        }
    }

    auto goal_rel = [&](std::size_t i, std::size_t j) -> Rel {
        if (assign[i] == kDeleted || assign[j] == kDeleted) {
            return std::nullopt;
        }
        return tgt.rel[static_cast<std::size_t>(assign[i])][static_cast<std::size_t>(assign[j])];
    };

    for (std::size_t i = 0; i < cur.size(); ++i) {
        for (std::size_t j = i + 1; j < cur.size(); ++j) {
            if (cur.rel[i][j] && !goal_rel(i, j)) {
                EditOp op;
                op.kind = EditKind::EdgeDelete;
                op.edge = stored_edge(g, cur.ids[i], cur.ids[j]);
                push(op);
            }
        }
    }
    for (std::size_t i = 0; i < cur.size(); ++i) {
        if (assign[i] == kDeleted) {
            EditOp op;
            op.kind = EditKind::NodeDelete;
            op.node = cur.ids[i];
            push(op);
        }
    }
    for (std::size_t i = 0; i < cur.size(); ++i) {
        if (assign[i] != kDeleted && cur.labels[i] != tgt.labels[static_cast<std::size_t>(assign[i])]) {
            EditOp op;
            op.kind = EditKind::NodeModify;
            op.node = cur.ids[i];
            op.goal_node = tgt.ids[static_cast<std::size_t>(assign[i])];
            op.ori = tgt.labels[static_cast<std::size_t>(assign[i])];
            push(op);
        }
    }
    for (std::size_t i = 0; i < cur.size(); ++i) {
        for (std::size_t j = i + 1; j < cur.size(); ++j) {
            const Rel want = goal_rel(i, j);
            if (!want || cur.rel[i][j] == want) {
                continue;
            }
            EditOp op;
            op.kind = cur.rel[i][j] ? edge_edit_kind(*cur.rel[i][j], *want) : EditKind::EdgeAdd;
            op.edge = mapped_edge(goal, tgt.ids[static_cast<std::size_t>(assign[i])],
                                  tgt.ids[static_cast<std::size_t>(assign[j])], goal_to_result);
            push(op);
        }
    }
    std::vector<std::size_t> present;
    for (int a : assign) {
        if (a != kDeleted) {
            present.push_back(static_cast<std::size_t>(a));
        }
    }
    for (std::size_t w = 0; w < tgt.size(); ++w) {
        if (goal_used[w]) {
            continue;
        }
        EditOp add;
        add.kind = EditKind::NodeAdd;
        add.goal_node = tgt.ids[w];
        add.node = goal_to_result.at(tgt.ids[w]);
        add.ori = tgt.labels[w];
        push(add);
        std::sort(present.begin(), present.end());
        for (std::size_t x : present) {
            if (tgt.rel[x][w]) {
                EditOp op;
                op.kind = EditKind::EdgeAdd;
                op.edge = mapped_edge(goal, tgt.ids[x], tgt.ids[w], goal_to_result);
                push(op);
            }
        }
        present.push_back(w);
    }
    return path;
}

}  // namespace

double assignment_cost(const SceneGraph& g, const SceneGraph& goal,
                       const std::map<BlockId, std::optional<BlockId>>& assignment,
                       const CostTable& c) {
    const Indexed cur(g);
    const Indexed tgt(goal);
    std::vector<int> assign;
    std::vector<bool> used(tgt.size(), false);
    for (BlockId id : cur.ids) {
        const auto& target = assignment.at(id);
        if (!target) {
            assign.push_back(kDeleted);
            continue;
        }
        auto it = std::find(tgt.ids.begin(), tgt.ids.end(), *target);
        if (it == tgt.ids.end() || used[static_cast<std::size_t>(it - tgt.ids.begin())]) {
            throw GedError("assignment is not an injective map into the goal graph");
        }
        used[static_cast<std::size_t>(it - tgt.ids.begin())] = true;
        assign.push_back(static_cast<int>(it - tgt.ids.begin()));
    }
    return build_path(g, goal, cur, tgt, assign, c).total_cost;
}

GedResult ged(const SceneGraph& g, const SceneGraph& goal, const GedOptions& opts) {
    if (!opts.costs.valid()) {
        throw GedError("edit costs must be non-negative");
    }
    const std::size_t n = g.node_count();
    const std::size_t m = goal.node_count();
    if (n + m > opts.node_limit || m > 31) {
        throw GedLimitExceeded("graph edit distance limited to " + std::to_string(opts.node_limit) +
                               " combined nodes, got " + std::to_string(n + m));
    }
    const Indexed cur(g);
    const Indexed tgt(goal);
    const CostTable& c = opts.costs;

    // Edges among current nodes i..n-1.
    std::vector<int> cur_tail_edges(n + 1, 0);
    for (std::size_t i = n; i-- > 0;) {
        int k = 0;
        for (std::size_t j = i + 1; j < n; ++j) {
            k += cur.rel[i][j] ? 1 : 0;
        }
        cur_tail_edges[i] = cur_tail_edges[i + 1] + k;
    }

    auto lower_bound = [&](std::size_t depth, std::uint32_t used) {
        std::size_t free_goal = 0;
        int goal_edges = 0;
        for (std::size_t a = 0; a < m; ++a) {
            if (used & (1u << a)) {
                continue;
            }
            ++free_goal;
            for (std::size_t b = a + 1; b < m; ++b) {
                if (!(used & (1u << b)) && tgt.rel[a][b]) {
                    ++goal_edges;
                }
            }
        }
        const std::size_t rest = n - depth;
        double h = rest > free_goal ? static_cast<double>(rest - free_goal) * c.node_delete
                                    : static_cast<double>(free_goal - rest) * c.node_add;
        const int diff = cur_tail_edges[depth] - goal_edges;
        h += diff > 0 ? diff * c.edge_delete : -diff * c.edge_add;
        return h;
    };

    auto completion_cost = [&](std::uint32_t used) {
        double cost = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            if (used & (1u << a)) {
                continue;
            }
            cost += c.node_add;
            for (std::size_t b = 0; b < m; ++b) {
                // Count each goal edge with at least one free endpoint once.
                if (b != a && tgt.rel[a][b] && (b > a || (used & (1u << b)))) {
                    cost += c.edge_add;
                }
            }
        }
        return cost;
    };

    std::priority_queue<State, std::vector<State>, Worse> open;
    State start;
    start.bound = lower_bound(0, 0);
    if (n == 0) {
        start.complete = true;
        start.cost = completion_cost(0);
        start.bound = 0.0;
    }
    open.push(start);

    GedResult result;
    while (!open.empty()) {
        if (opts.cancel && opts.cancel->load(std::memory_order_relaxed)) {
            throw GedCancelled("graph edit distance search cancelled");
        }
        State s = open.top();
        open.pop();
        ++result.expanded;
        if (s.complete) {
            result.distance = s.cost;
            for (std::size_t i = 0; i < n; ++i) {
                if (s.assign[i] != kDeleted) {
                    result.mapping[cur.ids[i]] = tgt.ids[static_cast<std::size_t>(s.assign[i])];
                }
            }
            result.path = build_path(g, goal, cur, tgt, s.assign, c);
            return result;
        }
        const std::size_t i = s.assign.size();
        auto expand = [&](int choice) {
            State next = s;
            next.assign.push_back(choice);
            double step = 0.0;
            if (choice == kDeleted) {
                step += c.node_delete;
            } else {
                next.used |= 1u << choice;
                if (cur.labels[i] != tgt.labels[static_cast<std::size_t>(choice)]) {
                    step += c.node_modify;
                }
                if (opts.prefer_grounded_match &&
                    cur.grounded[i] != tgt.grounded[static_cast<std::size_t>(choice)]) {
                    next.tie += 1.0;
                }
            }
            for (std::size_t j = 0; j < i; ++j) {
                Rel want;
                if (choice != kDeleted && s.assign[j] != kDeleted) {
                    want = tgt.rel[static_cast<std::size_t>(s.assign[j])][static_cast<std::size_t>(choice)];
                }
                step += edge_cost(cur.rel[j][i], want, c);
            }
            next.cost += step;
            if (i + 1 == n) {
                next.cost += completion_cost(next.used);
                next.bound = 0.0;
                next.complete = true;
            } else {
                next.bound = lower_bound(i + 1, next.used);
            }
            open.push(std::move(next));
        };
        for (std::size_t w = 0; w < m; ++w) {
            if (!(s.used & (1u << w))) {
                expand(static_cast<int>(w));
            }
        }
        expand(kDeleted);
    }
    throw GedError("graph edit distance search exhausted without a solution");
}

SceneGraph apply_edit_path(const SceneGraph& g, const EditPath& path) {
    SceneGraph out = g;
    for (const auto& op : path.ops) {
        if (op.kind == EditKind::EdgeDelete || op.kind == EditKind::EdgeModify ||
            op.kind == EditKind::AttrModify) {
            out.remove_edge(op.edge.parent, op.edge.child);
        }
    }
    for (const auto& op : path.ops) {
        switch (op.kind) {
            case EditKind::NodeDelete: out.remove_node(op.node); break;
            case EditKind::NodeModify: out.set_node_label(op.node, op.ori); break;
            case EditKind::NodeAdd: out.add_node(op.node, std::nullopt, op.ori); break;
            default: break;
        }
    }
    for (const auto& op : path.ops) {
        if (op.kind == EditKind::EdgeAdd || op.kind == EditKind::EdgeModify ||
            op.kind == EditKind::AttrModify) {
            out.add_edge(op.edge);
        }
    }
    return out;
}

}  // namespace subta
