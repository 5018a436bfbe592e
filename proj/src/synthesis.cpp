#include <cmath>
#include <sstream>

#include "subta/planner.hpp"

namespace subta {

Quat orientation_for(OriClass cls, double yaw) {
    const Quat rz(Eigen::AngleAxisd(yaw, Vec3::UnitZ()));
    switch (cls) {
        case OriClass::Stand: {
            // long axis up, medium axis along the heading
            Mat3 r0;
            r0.col(0) = Vec3::UnitZ();
            r0.col(1) = Vec3::UnitX();
            r0.col(2) = Vec3::UnitY();
            return rz * Quat(r0);
        }
        case OriClass::SideLie:
            return rz * Quat(Eigen::AngleAxisd(kPi / 2.0, Vec3::UnitX()));
        case OriClass::Lie:
        case OriClass::None:
            break;
    }
    return rz;
}

std::optional<PairRelation> relation_from(const Pose& other, const Pose& target,
                                          const BlockShape& shape, const Tolerances& tol) {
    const PlacedBlock o{0, other};
    const PlacedBlock t{1, target};
    const auto forward = relation_heuristic(o, t, shape, tol);
    if (forward && forward->is_support()) {
        return PairRelation{EdgeKind::Support, true, *forward};
    }
    const auto backward = relation_heuristic(t, o, shape, tol);
    if (backward && backward->is_support()) {
        return PairRelation{EdgeKind::Support, false, *backward};
    }
    if (forward) {
        return PairRelation{EdgeKind::Lateral, true, *forward};
    }
    return std::nullopt;
}

namespace {

std::string describe(const SynthesisConstraint& c) {
    std::ostringstream s;
    s << block_name(c.other) << " ";
    if (!c.expected) {
        s << "unrelated";
    } else {
        s << to_string(c.expected->kind) << (c.expected->u_is_parent ? "" : " (below)") << " "
          << to_string(c.expected->attr);
    }
    return s.str();
}

double yaw_of(const Eigen::Vector2d& v) { return std::atan2(v.y(), v.x()); }

bool collides(const Pose& a, const Pose& b, const BlockShape& shape) {
    const double dz = std::abs(a.position().z() - b.position().z());
    if (dz >= shape.vertical_half_extent(a) + shape.vertical_half_extent(b) - 1e-4) {
        return false;
    }
    return footprints_overlap(a, b, shape, 1e-4);
}

}  // namespace

Pose synthesize_pose(const SynthesisRequest& req) {
    const BlockShape& shape = req.shape;
    std::vector<const SynthesisConstraint*> supports;
    std::vector<const SynthesisConstraint*> laterals;
    for (const auto& c : req.constraints) {
        if (!c.expected) {
            continue;
        }
        if (c.expected->kind == EdgeKind::Support && c.expected->u_is_parent) {
            supports.push_back(&c);
        } else if (c.expected->kind == EdgeKind::Lateral) {
            laterals.push_back(&c);
        }
    }
    for (std::size_t k = 1; k < supports.size(); ++k) {
        if (supports[k]->expected->attr.ori_parent != supports[0]->expected->attr.ori_parent) {
            throw SynthesisError("conflicting attributes: " + describe(*supports[0]) + " vs " +
                                 describe(*supports[k]));
        }
    }

    // First failing constraint, or nullptr when the candidate satisfies all.
    auto check = [&](const Pose& cand) -> const SynthesisConstraint* {
        for (const auto& c : req.constraints) {
            if (relation_from(c.other_pose, cand, shape, req.tol) != c.expected) {
                return &c;
            }
            if (collides(cand, c.other_pose, shape)) {
                return &c;
            }
        }
        return nullptr;
    };

    std::vector<Pose> candidates;
    if (!supports.empty()) {
        const auto& ref = *supports[0];
        const EdgeAttr& attr = ref.expected->attr;
        const double ref_yaw = yaw_of(heading(ref.other_pose));
        std::vector<double> yaws;
        if (attr.ori_front == FrontRel::Perpendicular) {
            yaws = {ref_yaw + kPi / 2, ref_yaw - kPi / 2, ref_yaw, ref_yaw + kPi};
        } else {
            yaws = {ref_yaw, ref_yaw + kPi, ref_yaw + kPi / 2, ref_yaw - kPi / 2};
        }
        const double side = req.side_offset_fraction * heading_half_extent(ref.other_pose, shape);
        std::vector<double> shifts;
        switch (attr.pos_parent) {
            case ParentPos::Left: shifts = {side, 0.0, -side}; break;
            case ParentPos::Right: shifts = {-side, 0.0, side}; break;
            default: shifts = {0.0, side, -side}; break;
        }
        if (supports.size() > 1) {
            // Bridging blocks rest on the midpoint of their parents.
            std::erase(shifts, 0.0);
            shifts.insert(shifts.begin(), 0.0);
        }
        Eigen::Vector2d base = Eigen::Vector2d::Zero();
        double top = -1e9;
        for (const auto* s : supports) {
            base += s->other_pose.position().head<2>();
            top = std::max(top, s->other_pose.position().z() +
                                    shape.vertical_half_extent(s->other_pose));
        }
        base /= static_cast<double>(supports.size());
        const Eigen::Vector2d axis = heading(ref.other_pose);
        for (double shift : shifts) {
            for (double yaw : yaws) {
                const Quat q = orientation_for(attr.ori_parent, wrap_angle(yaw));
                const Pose probe(Vec3::Zero(), q);
                const Eigen::Vector2d xy = base + shift * axis;
                candidates.emplace_back(Vec3(xy.x(), xy.y(), top + shape.vertical_half_extent(probe)), q);
            }
        }
    } else if (!laterals.empty()) {
        for (const auto* ref : laterals) {
            const Eigen::Vector2d n = front_normal(ref->other_pose);
            const double sign = ref->expected->attr.pos_neighbor == NeighborPos::Left ? 1.0 : -1.0;
            for (int k : {1, 2, 3, 4}) {
                for (double s : {sign, -sign}) {
                    const Eigen::Vector2d xy =
                        ref->other_pose.position().head<2>() + s * k * req.lateral_spacing * n;
                    candidates.emplace_back(Vec3(xy.x(), xy.y(), ref->other_pose.position().z()),
                                            ref->other_pose.orientation());
                }
            }
        }
    } else {
        const Pose probe(Vec3::Zero(), req.staging.orientation());
        const double z = req.staging.position().z() + shape.vertical_half_extent(probe);
        for (int k = 0; k < 8; ++k) {
            const double dy = (k % 2 == 0 ? 1.0 : -1.0) * ((k + 1) / 2) * 0.12;
            candidates.emplace_back(
                Vec3(req.staging.position().x(), req.staging.position().y() + dy, z),
                req.staging.orientation());
        }
    }

    const SynthesisConstraint* first_failure = nullptr;
    for (const auto& cand : candidates) {
        const auto* failed = check(cand);
        if (!failed) {
            return cand;
        }
        if (!first_failure) {
            first_failure = failed;
        }
    }
    std::string msg = "no pose satisfies the requested relations";
    if (first_failure) {
        const SynthesisConstraint* anchor =
            !supports.empty() ? supports[0] : (!laterals.empty() ? laterals[0] : nullptr);
        msg = "conflicting attributes: " + (anchor ? describe(*anchor) : std::string("staging")) +
              " vs " + describe(*first_failure);
    }
    throw SynthesisError(msg);
}

}  // namespace subta
