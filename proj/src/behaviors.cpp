#include "subta/behaviors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "subta/planner.hpp"

namespace subta {

const char* to_string(BehaviorId b) {
    switch (b) {
        case BehaviorId::ApproachObject: return "ApproachObject";
        case BehaviorId::SnapToObject: return "SnapToObject";
        case BehaviorId::AlignWithObject: return "AlignWithObject";
        case BehaviorId::GraspObject: return "GraspObject";
        case BehaviorId::AlignWithSurface: return "AlignWithSurface";
        case BehaviorId::UnsnapSurface: return "UnsnapSurface";
        case BehaviorId::ApproachSurface: return "ApproachSurface";
        case BehaviorId::SnapToSurface: return "SnapToSurface";
        case BehaviorId::ReleaseObject: return "ReleaseObject";
    }
    return "?";
}

const char* to_string(ControlLevel c) {
    switch (c) {
        case ControlLevel::Free6DoF: return "Free6DoF";
        case ControlLevel::Frozen: return "Frozen";
        case ControlLevel::Nullspace: return "Nullspace";
        case ControlLevel::Locked: return "Locked";
        case ControlLevel::OnPlane: return "OnPlane";
        case ControlLevel::AutoDrive: return "AutoDrive";
    }
    return "?";
}

const char* to_string(Gripper g) {
    switch (g) {
        case Gripper::Hold: return "Hold";
        case Gripper::Close: return "Close";
        case Gripper::Open: return "Open";
    }
    return "?";
}

const char* to_string(AssistMode m) {
    switch (m) {
        case AssistMode::M1: return "M1";
        case AssistMode::M2: return "M2";
        case AssistMode::M3: return "M3";
    }
    return "?";
}

const char* to_string(Hand h) { return h == Hand::Left ? "left" : "right"; }

std::optional<AssistMode> parse_mode(const std::string& s) {
    if (s == "M1" || s == "m1") return AssistMode::M1;
    if (s == "M2" || s == "m2") return AssistMode::M2;
    if (s == "M3" || s == "m3") return AssistMode::M3;
    return std::nullopt;
}

const char* to_string(FeedbackEvent::Kind k) {
    switch (k) {
        case FeedbackEvent::Kind::ObjectHighlight: return "ObjectHighlight";
        case FeedbackEvent::Kind::PlaneHighlight: return "PlaneHighlight";
        case FeedbackEvent::Kind::HapticClick: return "HapticClick";
    }
    return "?";
}

ControlLevel control_level_of(BehaviorId b) {
    switch (b) {
        case BehaviorId::ApproachObject: return ControlLevel::Free6DoF;
        case BehaviorId::SnapToObject: return ControlLevel::Frozen;
        case BehaviorId::AlignWithObject: return ControlLevel::Nullspace;
        case BehaviorId::GraspObject: return ControlLevel::Locked;
        case BehaviorId::AlignWithSurface: return ControlLevel::OnPlane;
        case BehaviorId::UnsnapSurface: return ControlLevel::AutoDrive;
        case BehaviorId::ApproachSurface: return ControlLevel::Free6DoF;
        case BehaviorId::SnapToSurface: return ControlLevel::Frozen;
        case BehaviorId::ReleaseObject: return ControlLevel::Locked;
    }
    return ControlLevel::Locked;
}

bool transition_allowed(BehaviorId from, BehaviorId to) {
    const int a = static_cast<int>(from);
    const int b = static_cast<int>(to);
    return a == b || b == a + 1 || (from == BehaviorId::ReleaseObject && to == BehaviorId::ApproachObject);
}

// --- motion primitives --------------------------------------------------------

Pose snap_trajectory(const Pose& current, const Pose& target, double max_step_m, double max_step_deg) {
    const double d = position_distance(current, target);
    const double a = geodesic_angle_deg(current.orientation(), target.orientation());
    double f = 1.0;
    if (d > max_step_m) {
        f = std::min(f, max_step_m / d);
    }
    if (a > max_step_deg) {
        f = std::min(f, max_step_deg / a);
    }
    return f >= 1.0 ? target : interpolate(current, target, f);
}

Quat twist_about(const Quat& q, const Vec3& axis) {
    const Vec3 n = axis.normalized();
    const double proj = q.vec().dot(n);
    Quat t(q.w(), proj * n.x(), proj * n.y(), proj * n.z());
    if (t.norm() < 1e-12) {
        return Quat::Identity();
    }
    t.normalize();
    return t;
}

Quat remove_tilt(const Quat& q) {
    const Mat3 r = q.toRotationMatrix();
    int up = 0;
    for (int i = 1; i < 3; ++i) {
        if (std::abs(r(2, i)) > std::abs(r(2, up))) {
            up = i;
        }
    }
    const Vec3 axis = r(2, up) >= 0.0 ? Vec3(r.col(up)) : Vec3(-r.col(up));
    return (Quat::FromTwoVectors(axis, Vec3::UnitZ()) * q).normalized();
}

Pose plane_constrain(const Pose& commanded, const Pose& plane) {
    const Pose local = relative_pose(plane, commanded);
    const Vec3 p(local.position().x(), local.position().y(), 0.0);
    return compose(plane, Pose(p, twist_about(local.orientation(), Vec3::UnitZ())));
}

Pose grasp_pose(const Pose& object, const BlockShape& shape) {
    const Vec3 top = object.position() + Vec3(0.0, 0.0, shape.vertical_half_extent(object));
    const Eigen::Vector2d h = heading(object);
    return {top, quat_from_axis_angle(Vec3::UnitZ(), std::atan2(h.y(), h.x()))};
}

Pose grasp_manifold_motion(const Pose& commanded, const Pose& object, const BlockShape& shape,
                           double max_slide) {
    const Pose g = grasp_pose(object, shape);
    const Pose local = relative_pose(g, commanded);
    const double slide = std::clamp(local.position().z(), 0.0, max_slide);
    return compose(g, Pose(Vec3(0.0, 0.0, slide), twist_about(local.orientation(), Vec3::UnitZ())));
}

namespace {

double top_of(const Pose& p, const BlockShape& shape) { return p.position().z() + shape.vertical_half_extent(p); }

// Blocks under `pose` whose top is at or below its bottom (with slack).
std::vector<std::pair<BlockId, double>> supports_under(const Pose& pose, BlockId self,
                                                       const std::map<BlockId, Pose>& blocks,
                                                       const BlockShape& shape,
                                                       const std::set<BlockId>& ignore) {
    const double bottom = pose.position().z() - shape.vertical_half_extent(pose);
    std::vector<std::pair<BlockId, double>> out;
    for (const auto& [id, p] : blocks) {
        if (id == self || ignore.count(id)) {
            continue;
        }
        const double top = top_of(p, shape);
        if (top <= bottom + 0.01 && footprints_overlap(p, pose, shape, 1e-4)) {
            out.emplace_back(id, top);
        }
    }
    return out;
}

}  // namespace

bool is_covered(BlockId id, const std::map<BlockId, Pose>& blocks, const BlockShape& shape,
                const std::set<BlockId>& ignore) {
    const auto it = blocks.find(id);
    if (it == blocks.end()) {
        return false;
    }
    const double top = top_of(it->second, shape);
    for (const auto& [other, p] : blocks) {
        if (other == id || ignore.count(other)) {
            continue;
        }
        const double bottom = p.position().z() - shape.vertical_half_extent(p);
        if (std::abs(bottom - top) <= 0.005 && footprints_overlap(p, it->second, shape, 1e-4)) {
            return true;
        }
    }
    return false;
}

Surface support_surface(const Pose& pose, BlockId self, const std::map<BlockId, Pose>& blocks,
                        const BlockShape& shape, const std::set<BlockId>& ignore) {
    Surface best;
    for (const auto& [id, top] : supports_under(pose, self, blocks, shape, ignore)) {
        if (top > best.height) {
            best = {id, top};
        }
    }
    return best;
}

Pose surface_snap_pose(const Pose& held, BlockId self, const std::map<BlockId, Pose>& blocks,
                       const BlockShape& shape, double side_offset_fraction,
                       const std::set<BlockId>& ignore) {
    Quat q = remove_tilt(held.orientation());
    const Pose level(held.position(), q);
    const Surface surf = support_surface(level, self, blocks, shape, ignore);
    if (!surf.block) {
        return {Vec3(held.position().x(), held.position().y(), shape.vertical_half_extent(level)), q};
    }
    std::vector<BlockId> tops;
    Eigen::Vector2d base = Eigen::Vector2d::Zero();
    for (const auto& [id, top] : supports_under(level, self, blocks, shape, ignore)) {
        if (std::abs(top - surf.height) <= 0.005) {
            tops.push_back(id);
            base += blocks.at(id).position().head<2>();
        }
    }
    base /= static_cast<double>(tops.size());
    const Pose& parent = blocks.at(tops.front());
    const Eigen::Vector2d hp = heading(parent);
    const Eigen::Vector2d hh = heading(level);
    const double rel = wrap_angle(std::atan2(hh.y(), hh.x()) - std::atan2(hp.y(), hp.x()));
    const double snapped = std::round(rel / (kPi / 2)) * (kPi / 2);
    q = (quat_from_axis_angle(Vec3::UnitZ(), snapped - rel) * q).normalized();

    const double side = side_offset_fraction * heading_half_extent(parent, shape);
    const double along = (held.position().head<2>() - base).dot(hp);
    double slot = 0.0;
    for (double s : {side, -side}) {
        if (std::abs(along - s) < std::abs(along - slot)) {
            slot = s;
        }
    }
    const Eigen::Vector2d xy = base + slot * hp;
    return {Vec3(xy.x(), xy.y(), surf.height + shape.vertical_half_extent(Pose(Vec3::Zero(), q))), q};
}

// --- state machine ----------------------------------------------------------------

BehaviorMachine::BehaviorMachine(Hand hand, BehaviorConfig cfg) : hand_(hand), cfg_(std::move(cfg)) {
    if (!cfg_.th.valid()) {
        throw std::invalid_argument("behavior thresholds must be positive");
    }
}

void BehaviorMachine::reset() {
    row_ = BehaviorId::ApproachObject;
    fault_ = false;
    last_.reset();
    object_.reset();
    armed_ = false;
    rearm_ = false;
}

Pose BehaviorMachine::free_motion(const Pose& target) const {
    return snap_trajectory(*last_, target, cfg_.max_speed * cfg_.dt, cfg_.max_turn_deg * cfg_.dt);
}

StepResult BehaviorMachine::emit(const MotionCommand& cmd, std::vector<FeedbackEvent> events) {
    last_ = cmd.pose;
    StepResult r;
    r.state = row_;
    r.fault = fault_;
    r.command = cmd;
    r.events = std::move(events);
    return r;
}

std::optional<BlockId> BehaviorMachine::pick_candidate(const Pose& hand, const WorldView& world,
                                                       const std::optional<PlanTarget>& plan,
                                                       AssistMode mode) const {
    auto eligible = [&](BlockId id) {
        return world.blocks->count(id) && !world.unavailable.count(id) &&
               !is_covered(id, *world.blocks, cfg_.shape, world.unavailable);
    };
    auto nearest = [&](auto&& filter) -> std::optional<BlockId> {
        std::optional<BlockId> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (const auto& [id, p] : *world.blocks) {
            if (!eligible(id) || !filter(id)) {
                continue;
            }
            const double d = position_distance(hand, grasp_pose(p, cfg_.shape));
            if (d < best_d) {
                best_d = d;
                best = id;
            }
        }
        return best;
    };
    if (mode == AssistMode::M3 && plan) {
        if (auto b = nearest([&](BlockId id) { return plan->blocks.count(id) != 0; })) {
            return b;
        }
    }
    return nearest([](BlockId) { return true; });
}

std::optional<std::pair<Pose, double>> BehaviorMachine::drop_target(const WorldView& world,
                                                                    const std::optional<PlanTarget>& plan,
                                                                    AssistMode mode) const {
    if (!world.held || !world.blocks->count(*world.held)) {
        return std::nullopt;
    }
    const BlockId h = *world.held;
    const Pose& p = world.blocks->at(h);
    if (mode == AssistMode::M3 && plan && plan->blocks.count(h)) {
        const double horizontal = (p.position() - plan->pose.position()).head<2>().norm();
        if (horizontal <= cfg_.th.delta3 &&
            block_angle_deg(p.orientation(), plan->pose.orientation()) <= cfg_.plan_capture_deg) {
            return std::make_pair(plan->pose, position_distance(p, plan->pose));
        }
    }
    std::set<BlockId> ignore = world.unavailable;
    ignore.insert(h);
    const Pose t = surface_snap_pose(p, h, *world.blocks, cfg_.shape, cfg_.side_offset_fraction, ignore);
    return std::make_pair(t, std::abs(p.position().z() - t.position().z()));
}

StepResult BehaviorMachine::step(const ControllerInput& input, const WorldView& world,
                                 const IntentEstimate* intent, const std::optional<PlanTarget>& plan,
                                 AssistMode mode) {
    if (mode == AssistMode::M1) {
        row_ = BehaviorId::ApproachObject;
        object_.reset();
        MotionCommand cmd;
        cmd.pose = input.target;
        cmd.level = ControlLevel::Free6DoF;
        cmd.gripper = input.finger_open ? Gripper::Open : input.grasp_button ? Gripper::Close : Gripper::Hold;
        return emit(cmd, {});
    }
    if (!last_) {
        last_ = input.target;
    }
    if (!world.blocks || (world.held && !world.blocks->count(*world.held)) ||
        (object_ && !world.blocks->count(*object_))) {
        fault_ = true;
    }
    if (fault_) {
        return emit({*last_, ControlLevel::Locked, Gripper::Hold}, {});
    }
    const auto& blocks = *world.blocks;
    const auto reached = [](const Pose& a, const Pose& b) {
        return position_distance(a, b) < 1e-9 && geodesic_angle_deg(a.orientation(), b.orientation()) < 1e-6;
    };

    // Trigger of the next row, evaluated on this tick's observations.
    std::vector<FeedbackEvent> events;
    using K = FeedbackEvent::Kind;
    switch (row_) {
        case BehaviorId::ApproachObject: {
            if (rearm_) {
                rearm_ = std::any_of(blocks.begin(), blocks.end(), [&](const auto& kv) {
                    return position_distance(input.target, grasp_pose(kv.second, cfg_.shape)) <= cfg_.th.delta1;
                });
                if (rearm_) break;
            }
            const auto cand = pick_candidate(input.target, world, plan, mode);
            if (!cand) {
                break;
            }
            const double d = position_distance(input.target, grasp_pose(blocks.at(*cand), cfg_.shape));
            const bool intends = !intent || intent->prob(Action::PickUp, hand_ == Hand::Left) > cfg_.pick_gate;
            if (intends && d <= cfg_.detect_range && d < cfg_.th.delta1) {
                row_ = BehaviorId::SnapToObject;
                object_ = cand;
                grasp_target_ = grasp_pose(blocks.at(*cand), cfg_.shape);
                events.push_back({K::ObjectHighlight, *cand, {}});
            }
            break;
        }
        case BehaviorId::SnapToObject:
            grasp_target_ = grasp_pose(blocks.at(*object_), cfg_.shape);
            if (reached(*last_, grasp_target_)) {
                row_ = BehaviorId::AlignWithObject;
            }
            break;
        case BehaviorId::AlignWithObject:
            if (input.grasp_button) {
                row_ = BehaviorId::GraspObject;
                events.push_back({K::HapticClick, 0, {}});
            }
            break;
        case BehaviorId::GraspObject:
            if (world.held && world.held == object_) {
                row_ = BehaviorId::AlignWithSurface;
                std::set<BlockId> ignore = world.unavailable;
                surface_ = support_surface(blocks.at(*object_), *object_, blocks, cfg_.shape, ignore);
                plane_ = Pose(last_->position(), twist_about(last_->orientation(), Vec3::UnitZ()));
                events.push_back({K::PlaneHighlight, 0, surface_});
            }
            break;
        case BehaviorId::AlignWithSurface:
            if (input.target.position().z() - plane_.position().z() > cfg_.th.delta2) {
                row_ = BehaviorId::UnsnapSurface;
                lift_target_ = Pose(last_->position() + Vec3(0, 0, 2.0 * cfg_.shape.short_half()),
                                    last_->orientation());
            }
            break;
        case BehaviorId::UnsnapSurface:
            if (reached(*last_, lift_target_)) {
                row_ = BehaviorId::ApproachSurface;
                armed_ = false;
            }
            break;
        case BehaviorId::ApproachSurface: {
            const auto drop = drop_target(world, plan, mode);
            if (!drop) {
                break;
            }
            if (drop->second > cfg_.th.delta3) {
                armed_ = true;
            } else if (armed_) {
                row_ = BehaviorId::SnapToSurface;
                const Pose& held = blocks.at(*world.held);
                const Pose grip = relative_pose(*last_, held);
                drop_ee_target_ = compose(drop->first, grip.inverse());
                std::set<BlockId> ignore = world.unavailable;
                ignore.insert(*world.held);
                surface_ = support_surface(drop->first, *world.held, blocks, cfg_.shape, ignore);
                events.push_back({K::PlaneHighlight, 0, surface_});
            }
            break;
        }
        case BehaviorId::SnapToSurface:
            if (input.finger_open) {
                row_ = BehaviorId::ReleaseObject;
            }
            break;
        case BehaviorId::ReleaseObject:
            if (!world.held) {
                row_ = BehaviorId::ApproachObject;
                rearm_ = true;
                object_.reset();
            }
            break;
    }

    MotionCommand cmd;
    cmd.level = control_level_of(row_);
    switch (row_) {
        case BehaviorId::ApproachObject:
        case BehaviorId::ApproachSurface:
            cmd.pose = free_motion(input.target);
            break;
        case BehaviorId::SnapToObject:
            cmd.pose = snap_trajectory(*last_, grasp_target_, cfg_.drive_step, cfg_.drive_turn_deg);
            break;
        case BehaviorId::AlignWithObject:
            cmd.pose = grasp_manifold_motion(input.target, blocks.at(*object_), cfg_.shape, cfg_.max_slide);
            break;
        case BehaviorId::GraspObject:
            cmd.pose = *last_;
            cmd.gripper = Gripper::Close;
            break;
        case BehaviorId::AlignWithSurface:
            cmd.pose = plane_constrain(input.target, plane_);
            break;
        case BehaviorId::UnsnapSurface:
            cmd.pose = snap_trajectory(*last_, lift_target_, cfg_.drive_step, cfg_.drive_turn_deg);
            break;
        case BehaviorId::SnapToSurface:
            cmd.pose = snap_trajectory(*last_, drop_ee_target_, cfg_.drive_step, cfg_.drive_turn_deg);
            break;
        case BehaviorId::ReleaseObject:
            cmd.pose = *last_;
            cmd.gripper = Gripper::Open;
            break;
    }
    return emit(cmd, std::move(events));
}

}  // namespace subta
