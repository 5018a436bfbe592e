#include "subta/world.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace subta {

World::World(std::map<BlockId, Pose> blocks, WorldConfig cfg) : cfg_(std::move(cfg)) {
    s_.blocks = std::move(blocks);
    s_.hands = {Pose::from_translation(Vec3(0.3, 0.25, 0.25)), Pose::from_translation(Vec3(0.3, -0.05, 0.25))};
    settle();
}

void World::set_hand(Hand h, const Pose& p) {
    const auto i = hand_index(h);
    s_.hands[i] = p;
    if (s_.held[i]) {
        s_.blocks[*s_.held[i]] = compose(p, grip_[i]);
    }
}

void World::apply(Hand h, const MotionCommand& cmd) {
    set_hand(h, cmd.pose);
    const auto i = hand_index(h);
    if (cmd.gripper == Gripper::Close && !s_.held[i]) {
        attach(h);
    } else if (cmd.gripper == Gripper::Open && s_.held[i]) {
        release(h);
    }
}

void World::attach(Hand h) {
    const auto i = hand_index(h);
    const auto& other = s_.held[1 - i];
    std::optional<BlockId> best;
    double best_d = cfg_.grasp_radius;
    for (const auto& [id, p] : s_.blocks) {
        if (other == id || is_covered(id, s_.blocks, cfg_.shape, held_ids())) {
            continue;
        }
        const double d = position_distance(s_.hands[i], grasp_pose(p, cfg_.shape));
        if (d <= best_d) {
            best_d = d;
            best = id;
        }
    }
    if (best) {
        s_.held[i] = best;
        grip_[i] = relative_pose(s_.hands[i], s_.blocks[*best]);
        settle();
    }
}

void World::release(Hand h) {
    s_.held[hand_index(h)].reset();
    settle();
}

std::set<BlockId> World::held_ids() const {
    std::set<BlockId> out;
    for (const auto& id : s_.held) {
        if (id) out.insert(*id);
    }
    return out;
}

void World::settle() {
    const std::set<BlockId> held = held_ids();
    std::vector<BlockId> order;
    for (const auto& [id, p] : s_.blocks) {
        if (!held.count(id)) order.push_back(id);
    }
    std::sort(order.begin(), order.end(), [&](BlockId a, BlockId b) {
        const double za = s_.blocks[a].position().z() - cfg_.shape.vertical_half_extent(s_.blocks[a]);
        const double zb = s_.blocks[b].position().z() - cfg_.shape.vertical_half_extent(s_.blocks[b]);
        return za != zb ? za < zb : a < b;
    });
    // Lowest first, so each block lands on already-settled ones. A block
    // rests on the highest overlapping top that is below its own center.
    std::vector<BlockId> settled;
    for (BlockId id : order) {
        const Pose& p = s_.blocks[id];
        double floor = 0.0;
        for (BlockId other : settled) {
            const Pose& q = s_.blocks[other];
            const double top = q.position().z() + cfg_.shape.vertical_half_extent(q);
            if (top <= p.position().z() && top > floor && footprints_overlap(q, p, cfg_.shape, 1e-4)) {
                floor = top;
            }
        }
        const double z = floor + cfg_.shape.vertical_half_extent(p);
        s_.blocks[id] = Pose(Vec3(p.position().x(), p.position().y(), z), p.orientation());
        settled.push_back(id);
    }
}

std::map<BlockId, Pose> World::resting_blocks() const {
    std::map<BlockId, Pose> out = s_.blocks;
    for (const auto& id : s_.held) {
        if (id) out.erase(*id);
    }
    return out;
}

WorldView World::view(Hand h, std::optional<BlockId> claimed_by_other) const {
    WorldView v;
    v.blocks = &s_.blocks;
    v.held = held(h);
    const auto& other = s_.held[1 - hand_index(h)];
    if (other) v.unavailable.insert(*other);
    if (claimed_by_other) v.unavailable.insert(*claimed_by_other);
    return v;
}

std::map<BlockId, Pose> default_supply(const BlockShape& shape) {
    std::map<BlockId, Pose> out;
    for (BlockId id = 1; id <= 5; ++id) {
        out[id] = Pose::from_yaw(Vec3(0.25 + 0.1 * (id - 1), -0.25, shape.short_half()), kPi / 2);
    }
    return out;
}

}  // namespace subta
