#pragma once

#include <array>
#include <span>

#include <Eigen/Geometry>

namespace subta {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform: position in meters plus a unit quaternion.
///
/// The quaternion is renormalized and canonicalized to w >= 0 on every
/// construction, so two poses describing the same rotation compare equal
/// after serialization.
class Pose {
public:
    Pose();
    Pose(const Vec3& position, const Quat& orientation);

    static Pose identity() { return {}; }
    static Pose from_translation(const Vec3& p);
    static Pose from_yaw(const Vec3& p, double yaw_rad);
    /// [px,py,pz,qw,qx,qy,qz]
    static Pose from_array(std::span<const double> v);

    const Vec3& position() const { return position_; }
    const Quat& orientation() const { return orientation_; }
    Mat3 rotation() const { return orientation_.toRotationMatrix(); }

    std::array<double, 7> to_array() const;

    Pose inverse() const;
    Vec3 transform(const Vec3& p) const { return orientation_ * p + position_; }

    bool operator==(const Pose& other) const;

private:
    Vec3 position_;
    Quat orientation_;
};

Pose compose(const Pose& a, const Pose& b);

/// T such that compose(parent, T) == child.
Pose relative_pose(const Pose& parent, const Pose& child);

/// Rotation angle between two orientations in degrees, in [0, 180].
/// Insensitive to the quaternion sign.
double geodesic_angle_deg(const Quat& q1, const Quat& q2);

double position_distance(const Pose& a, const Pose& b);

/// Identity and the half turns about the body axes; a box looks the same
/// under each.
const std::array<Quat, 4>& block_half_turns();

/// Geodesic angle to the nearest symmetric equivalent of `b`.
double block_angle_deg(const Quat& a, const Quat& b);

/// Geodesic interpolation: linear in position, slerp in orientation.
Pose interpolate(const Pose& a, const Pose& b, double t);

Quat quat_from_axis_angle(const Vec3& axis, double angle_rad);

/// Half extents of a rectangular block, ordered long > medium > short along
/// body x, y, z.
class BlockShape {
public:
    BlockShape();
    BlockShape(double long_half, double medium_half, double short_half);

    double long_half() const { return half_[0]; }
    double medium_half() const { return half_[1]; }
    double short_half() const { return half_[2]; }
    double half(int axis) const { return half_[axis]; }
    const Vec3& half_extents() const { return half_; }

    /// Half height of the world-aligned bounding box for a block at `pose`.
    double vertical_half_extent(const Pose& pose) const;

private:
    Vec3 half_;
};

constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wrap to (-pi, pi].
double wrap_angle(double a);

}  // namespace subta
