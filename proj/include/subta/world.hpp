#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>

#include "subta/behaviors.hpp"

namespace subta {

struct WorldState {
    std::map<BlockId, Pose> blocks;
    std::array<std::optional<BlockId>, 2> held;  // indexed by Hand
    std::array<Pose, 2> hands;
    double time = 0.0;

    bool operator==(const WorldState&) const = default;
};

inline std::size_t hand_index(Hand h) { return h == Hand::Left ? 0 : 1; }

struct WorldConfig {
    BlockShape shape;
    double grasp_radius = 0.03;  // hand to grasp point, for Close to attach
};

/// Kinematic workspace: hands follow commands exactly, a held block rigidly
/// tracks its hand, released blocks drop straight down onto the highest
/// support under them.
class World {
public:
    explicit World(std::map<BlockId, Pose> blocks, WorldConfig cfg = {});

    const WorldState& state() const { return s_; }
    const std::map<BlockId, Pose>& blocks() const { return s_.blocks; }
    std::optional<BlockId> held(Hand h) const { return s_.held[hand_index(h)]; }
    const Pose& hand(Hand h) const { return s_.hands[hand_index(h)]; }
    const WorldConfig& config() const { return cfg_; }

    void set_hand(Hand h, const Pose& p);
    void apply(Hand h, const MotionCommand& cmd);
    void advance(double dt) { s_.time += dt; }

    /// Blocks no hand holds, at rest.
    std::map<BlockId, Pose> resting_blocks() const;
    WorldView view(Hand h, std::optional<BlockId> claimed_by_other = std::nullopt) const;

private:
    void attach(Hand h);
    void release(Hand h);
    void settle();
    std::set<BlockId> held_ids() const;

    WorldConfig cfg_;
    WorldState s_;
    std::array<Pose, 2> grip_{};  // hand -> held block
};

/// Five lying blocks in a row along x at y = -0.25.
std::map<BlockId, Pose> default_supply(const BlockShape& shape = {});

}  // namespace subta
