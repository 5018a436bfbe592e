#include "subta/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subta {

namespace {

Quat canonical(Quat q) {
    const double n = q.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::invalid_argument("pose orientation must be a finite non-zero quaternion");
    }
    if (std::abs(n - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
        q.coeffs() /= n;
    }
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    return q;
}

}  // namespace

Pose::Pose() : position_(Vec3::Zero()), orientation_(Quat::Identity()) {}

Pose::Pose(const Vec3& position, const Quat& orientation)
    : position_(position), orientation_(canonical(orientation)) {
    if (!position_.allFinite()) {
        throw std::invalid_argument("pose position must be finite");
    }
}

Pose Pose::from_translation(const Vec3& p) { return {p, Quat::Identity()}; }

Pose Pose::from_yaw(const Vec3& p, double yaw_rad) {
    return {p, Quat(Eigen::AngleAxisd(yaw_rad, Vec3::UnitZ()))};
}

Pose Pose::from_array(std::span<const double> v) {
    if (v.size() != 7) {
        throw std::invalid_argument("pose array must hold 7 numbers");
    }
    return {Vec3(v[0], v[1], v[2]), Quat(v[3], v[4], v[5], v[6])};
}

std::array<double, 7> Pose::to_array() const {
    return {position_.x(),    position_.y(),    position_.z(),   orientation_.w(),
            orientation_.x(), orientation_.y(), orientation_.z()};
}

Pose Pose::inverse() const {
    const Quat qi = orientation_.conjugate();
    return {-(qi * position_), qi};
}

bool Pose::operator==(const Pose& other) const {
    return position_ == other.position_ && orientation_.coeffs() == other.orientation_.coeffs();
}

Pose compose(const Pose& a, const Pose& b) {
    return {a.orientation() * b.position() + a.position(), a.orientation() * b.orientation()};
}

Pose relative_pose(const Pose& parent, const Pose& child) {
    return compose(parent.inverse(), child);
}

double geodesic_angle_deg(const Quat& q1, const Quat& q2) {
    const Quat d = q1.conjugate() * q2;
    const double v = d.vec().norm();
    const double w = std::abs(d.w());
    return rad2deg(2.0 * std::atan2(v, w));
}

const std::array<Quat, 4>& block_half_turns() {
    static const std::array<Quat, 4> q{Quat::Identity(), Quat(0, 1, 0, 0), Quat(0, 0, 1, 0), Quat(0, 0, 0, 1)};
    return q;
}

double block_angle_deg(const Quat& a, const Quat& b) {
    double best = 180.0;
    for (const Quat& s : block_half_turns()) {
        best = std::min(best, geodesic_angle_deg(a, b * s));
    }
    return best;
}

double position_distance(const Pose& a, const Pose& b) {
    return (a.position() - b.position()).norm();
}

Pose interpolate(const Pose& a, const Pose& b, double t) {
    t = std::clamp(t, 0.0, 1.0);
    if (t == 1.0) {
        return b;
    }
    const Vec3 p = a.position() + t * (b.position() - a.position());
    return {p, a.orientation().slerp(t, b.orientation())};
}

Quat quat_from_axis_angle(const Vec3& axis, double angle_rad) {
    return Quat(Eigen::AngleAxisd(angle_rad, axis.normalized()));
}

double wrap_angle(double a) {
    a = std::fmod(a + kPi, 2.0 * kPi);
    if (a <= 0.0) {
        a += 2.0 * kPi;
    }
    return a - kPi;
}

BlockShape::BlockShape() : BlockShape(0.045, 0.015, 0.0075) {}

BlockShape::BlockShape(double long_half, double medium_half, double short_half)
    : half_(long_half, medium_half, short_half) {
    if (!(short_half > 0.0) || !(medium_half > short_half) || !(long_half > medium_half)) {
        throw std::invalid_argument("block half extents must satisfy long > medium > short > 0");
    }
}

double BlockShape::vertical_half_extent(const Pose& pose) const {
    const Mat3 r = pose.rotation();
    double h = 0.0;
    for (int i = 0; i < 3; ++i) {
        h += std::abs(r(2, i)) * half_[i];
    }
    return h;
}

}  // namespace subta
