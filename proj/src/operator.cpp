#include "subta/operator.hpp"

#include <algorithm>

namespace subta {

const char* to_string(ScriptedOperator::Phase p) {
    using P = ScriptedOperator::Phase;
    switch (p) {
        case P::Idle: return "idle";
        case P::ToPick: return "to_pick";
        case P::Descend: return "descend";
        case P::Grasp: return "grasp";
        case P::Lift: return "lift";
        case P::ToPlace: return "to_place";
        case P::Lower: return "lower";
        case P::Settle: return "settle";
        case P::Release: return "release";
        case P::Retreat: return "retreat";
    }
    return "?";
}

bool in_supply(const Pose& p) { return p.position().y() < -0.15; }

std::vector<Placement> ground_truth_script(const std::map<BlockId, Pose>& assembly, const Pose& frame) {
    std::vector<Placement> out;
    for (const auto& [id, p] : assembly) {
        out.push_back({id, compose(frame, p)});
    }
    return out;
}

ScriptedOperator::ScriptedOperator(OperatorConfig cfg, std::vector<Placement> script)
    : cfg_(std::move(cfg)), script_(std::move(script)), rng_(cfg_.seed), filled_(script_.size()) {}

Pose ScriptedOperator::toward(const Pose& from, const Pose& to) const {
    return snap_trajectory(from, to, cfg_.speed * cfg_.dt, cfg_.turn_deg * cfg_.dt);
}

Pose ScriptedOperator::perturb(const Pose& p) {
    if (cfg_.sigma_pos <= 0.0 && cfg_.sigma_rot_deg <= 0.0) {
        return p;
    }
    std::normal_distribution<double> np(0.0, std::max(cfg_.sigma_pos, 0.0));
    std::normal_distribution<double> nr(0.0, deg2rad(std::max(cfg_.sigma_rot_deg, 0.0)));
    const Vec3 dp(np(rng_), np(rng_), np(rng_));
    const Vec3 rv(nr(rng_), nr(rng_), nr(rng_));
    const double angle = rv.norm();
    const Quat dq = angle > 0.0 ? quat_from_axis_angle(rv / angle, angle) : Quat::Identity();
    return {p.position() + dp, p.orientation() * dq};
}

double ScriptedOperator::carry_height(const World& world) const {
    double top = 0.0;
    for (const auto& [id, p] : world.resting_blocks()) {
        top = std::max(top, p.position().z() + cfg_.shape.vertical_half_extent(p));
    }
    return std::max(cfg_.min_carry, top + cfg_.clearance);
}

std::optional<std::size_t> ScriptedOperator::open_slot_near(const Placement& p) const {
    for (std::size_t k = 0; k < script_.size(); ++k) {
        if (filled_[k] && filled_[k] != p.block) continue;
        if (position_distance(p.pose, script_[k].pose) <= cfg_.accept_pos &&
            block_angle_deg(p.pose.orientation(), script_[k].pose.orientation()) <= cfg_.accept_deg) {
            return k;
        }
    }
    return std::nullopt;
}

bool ScriptedOperator::accepts_removal(const World& world, BlockId block) const {
    for (std::size_t k = 0; k < script_.size(); ++k) {
        if (filled_[k] == block) {
            const Pose& p = world.blocks().at(block);
            return position_distance(p, script_[k].pose) > cfg_.accept_pos ||
                   block_angle_deg(p.orientation(), script_[k].pose.orientation()) > cfg_.accept_deg;
        }
    }
    return true;
}

void ScriptedOperator::vacate(BlockId block) {
    for (auto& f : filled_) {
        if (f == block) f.reset();
    }
}

bool ScriptedOperator::start_next(const World& world, const std::optional<Placement>& planned) {
    const auto loose = [&](BlockId b) {
        return world.blocks().count(b) && in_supply(world.blocks().at(b)) && !is_covered(b, world.blocks(), cfg_.shape) &&
               world.held(Hand::Left) != b && world.held(Hand::Right) != b;
    };
    std::optional<Placement> next;
    std::optional<std::size_t> slot;
    if (planned && world.blocks().count(planned->block) && !is_covered(planned->block, world.blocks(), cfg_.shape)) {
        if (in_supply(planned->pose)) {
            if (accepts_removal(world, planned->block)) next = planned;
        } else if ((slot = open_slot_near(*planned))) {
            next = planned;
        }
    }
    if (!next) {
        slot.reset();
        for (std::size_t k = 0; k < script_.size() && !next; ++k) {
            if (filled_[k]) continue;
            std::optional<BlockId> b;
            if (loose(script_[k].block)) {
                b = script_[k].block;
            } else {
                for (const auto& [id, p] : world.blocks()) {
                    if (loose(id)) {
                        b = id;
                        break;
                    }
                }
            }
            if (b) {
                next = Placement{*b, script_[k].pose};
                slot = k;
            }
        }
    }
    if (!next) {
        return false;
    }
    vacate(next->block);
    current_ = next;
    slot_ = slot;
    hand_ = done_ % 2 == 0 ? Hand::Right : Hand::Left;
    phase_ = Phase::ToPick;
    phase_ticks_ = 0;
    return true;
}

std::array<ControllerInput, 2> ScriptedOperator::next(const World& world, const std::array<BehaviorId, 2>& rows,
                                                      AssistMode mode, const std::optional<Placement>& planned,
                                                      const std::set<BlockId>& planned_blocks) {
    if (!homes_set_) {
        home_ = world.state().hands;
        nominal_ = home_;
        homes_set_ = true;
    }
    const bool assist = mode != AssistMode::M1;
    if (phase_ == Phase::Idle) {
        finished_ = !start_next(world, planned);
    }
    const auto i = hand_index(hand_);
    const auto other = 1 - i;
    nominal_[other] = home_[other];

    std::array<ControllerInput, 2> out;
    out[0].hand = Hand::Left;
    out[1].hand = Hand::Right;
    if (phase_ == Phase::Idle || !current_) {
        out[0].target = perturb(nominal_[0]);
        out[1].target = perturb(nominal_[1]);
        return out;
    }

    const Pose hand = world.hand(hand_);
    const BehaviorId row = rows[i];
    const bool machine_drives = row != BehaviorId::ApproachObject && row != BehaviorId::ApproachSurface;
    if (assist && (machine_drives || row != last_row_)) {
        nominal_[i] = hand;
    }
    last_row_ = row;

    if (mode == AssistMode::M3 && planned && planned_blocks.count(current_->block) && slot_ &&
        (phase_ == Phase::Lift || phase_ == Phase::ToPlace || phase_ == Phase::Lower)) {
        if (const auto k = open_slot_near(*planned)) {
            current_->pose = planned->pose;
            slot_ = k;
        }
    }

    const auto reached = [](const Pose& a, const Pose& b) {
        return position_distance(a, b) < 1e-9 && geodesic_angle_deg(a.orientation(), b.orientation()) < 1e-6;
    };
    const auto at_height = [](const Pose& p, double z) {
        return Pose(Vec3(p.position().x(), p.position().y(), z), p.orientation());
    };
    const BlockId block = current_->block;
    const bool holding = world.held(hand_) == block;
    const double zc = carry_height(world);
    Pose& nom = nominal_[i];
    ControllerInput& in = out[i];
    const Phase before = phase_;

    switch (phase_) {
        case Phase::Idle:
            break;
        case Phase::ToPick: {
            const Pose goal = at_height(grasp_pose(world.blocks().at(block), cfg_.shape), zc);
            nom = toward(nom, goal);
            if (reached(nom, goal)) phase_ = Phase::Descend;
            break;
        }
        case Phase::Descend: {
            const Pose goal = grasp_pose(world.blocks().at(block), cfg_.shape);
            if (assist && row != BehaviorId::ApproachObject) {
                phase_ = Phase::Grasp;
                break;
            }
            nom = toward(nom, goal);
            if (!assist && reached(nom, goal)) phase_ = Phase::Grasp;
            break;
        }
        case Phase::Grasp:
            if (holding) {
                phase_ = Phase::Lift;
                break;
            }
            if (assist) {
                in.grasp_button = row == BehaviorId::AlignWithObject;
            } else {
                nom = grasp_pose(world.blocks().at(block), cfg_.shape);
                in.grasp_button = true;
                if (phase_ticks_ >= cfg_.grasp_retry_ticks) phase_ = Phase::ToPick;
            }
            break;
        case Phase::Lift:
            if (assist) {
                if (row == BehaviorId::ApproachSurface) {
                    phase_ = Phase::ToPlace;
                } else {
                    nom = Pose(hand.position() + Vec3(0, 0, 0.06), hand.orientation());
                }
            } else {
                const Pose goal = at_height(nom, zc);
                nom = toward(nom, goal);
                if (reached(nom, goal)) phase_ = Phase::ToPlace;
            }
            break;
        case Phase::ToPlace:
        case Phase::Lower: {
            if (!holding) {
                // Dropped by the other hand or lost: start over.
                phase_ = Phase::Retreat;
                break;
            }
            const Pose grip = relative_pose(hand, world.blocks().at(block));
            Pose ee = compose(current_->pose, grip.inverse());
            if (!assist) ee = Pose(ee.position() + Vec3(0, 0, 0.002), ee.orientation());
            if (assist && row == BehaviorId::SnapToSurface) {
                phase_ = Phase::Settle;
                break;
            }
            if (phase_ == Phase::ToPlace) {
                // Climb first, then cross over at cruise height.
                const double cruise = std::max(zc, ee.position().z());
                const Pose above = at_height(ee, cruise);
                const bool climbing = nom.position().z() < cruise - 1e-9 &&
                                      position_distance(nom, at_height(above, nom.position().z())) > 1e-9;
                nom = toward(nom, climbing ? at_height(nom, cruise) : above);
                if (reached(nom, above)) phase_ = Phase::Lower;
            } else {
                nom = toward(nom, ee);
                if (!assist && reached(nom, ee)) phase_ = Phase::Settle;
            }
            break;
        }
        case Phase::Settle:
            if (assist) {
                const bool still = last_hand_ && reached(*last_hand_, hand) && phase_ticks_ > 1;
                if (still || phase_ticks_ >= cfg_.settle_ticks) phase_ = Phase::Release;
            } else if (phase_ticks_ >= 3) {
                phase_ = Phase::Release;
            }
            break;
        case Phase::Release:
            in.finger_open = true;
            if (!world.held(hand_)) phase_ = Phase::Retreat;
            break;
        case Phase::Retreat: {
            const Pose goal = at_height(nom, zc);
            nom = toward(nom, goal);
            if (reached(nom, goal)) {
                phase_ = Phase::Idle;
                if (!world.held(hand_) && !in_supply(world.blocks().at(block))) {
                    if (slot_) filled_[*slot_] = block;
                    ++done_;
                }
                current_.reset();
                slot_.reset();
            }
            break;
        }
    }
    phase_ticks_ = phase_ == before ? phase_ticks_ + 1 : 0;
    last_hand_ = hand;
    out[0].target = perturb(nominal_[0]);
    out[1].target = perturb(nominal_[1]);
    return out;
}

}  // namespace subta
