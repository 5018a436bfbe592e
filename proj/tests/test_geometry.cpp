#include <doctest.h>

#include <cmath>

#include "subta/geometry.hpp"
#include "support/random.hpp"

using namespace subta;
using subta::testing::random_pose;
using subta::testing::random_quat;

namespace {

double pose_gap(const Pose& a, const Pose& b) {
    return std::max(position_distance(a, b), deg2rad(geodesic_angle_deg(a.orientation(), b.orientation())));
}

}  // namespace

TEST_CASE("compose with identity and inverse") {
    std::mt19937_64 rng(7);
    const Pose p = random_pose(rng);
    CHECK(pose_gap(compose(Pose::identity(), p), p) < 1e-12);
    CHECK(pose_gap(compose(p, Pose::identity()), p) < 1e-12);
    CHECK(pose_gap(compose(p, p.inverse()), Pose::identity()) < 1e-9);
}

TEST_CASE("pure translations add") {
    const Pose c = compose(Pose::from_translation({1, 0, 0}), Pose::from_translation({0, 2, 0}));
    CHECK(c.position().isApprox(Vec3(1, 2, 0)));
    CHECK(geodesic_angle_deg(c.orientation(), Quat::Identity()) == doctest::Approx(0.0));
}

TEST_CASE("relative_pose special cases") {
    std::mt19937_64 rng(11);
    const Pose child = random_pose(rng);
    CHECK(pose_gap(relative_pose(child, child), Pose::identity()) < 1e-9);
    CHECK(pose_gap(relative_pose(Pose::identity(), child), child) < 1e-12);
}

TEST_CASE("relative_pose round trip over random pairs") {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Pose parent = random_pose(rng, 2.0);
        const Pose child = random_pose(rng, 2.0);
        worst = std::max(worst, pose_gap(compose(parent, relative_pose(parent, child)), child));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("compose is associative") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
        CHECK(pose_gap(compose(compose(a, b), c), compose(a, compose(b, c))) <= 1e-9);
    }
}

TEST_CASE("quaternions stay unit and canonical") {
    std::mt19937_64 rng(9);
    Pose acc;
    for (int i = 0; i < 200; ++i) {
        acc = compose(acc, random_pose(rng));
        CHECK(std::abs(acc.orientation().norm() - 1.0) <= 1e-9);
        CHECK(acc.orientation().w() >= 0.0);
    }
    const Pose negated(Vec3::Zero(), Quat(-1, 0, 0, 0));
    CHECK(negated.orientation().w() == 1.0);
}

TEST_CASE("geodesic angle") {
    std::mt19937_64 rng(3);
    const Quat q = random_quat(rng);
    CHECK(geodesic_angle_deg(q, q) == doctest::Approx(0.0).epsilon(1e-12));
    Quat neg = q;
    neg.coeffs() = -neg.coeffs();
    CHECK(geodesic_angle_deg(q, neg) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(geodesic_angle_deg(Quat::Identity(), quat_from_axis_angle(Vec3::UnitZ(), kPi / 2)) ==
          doctest::Approx(90.0));
    CHECK(geodesic_angle_deg(Quat::Identity(), quat_from_axis_angle(Vec3::UnitX(), kPi)) ==
          doctest::Approx(180.0));
}

TEST_CASE("geodesic angle triangle inequality") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 1000; ++i) {
        const Quat a = random_quat(rng), b = random_quat(rng), c = random_quat(rng);
        CHECK(geodesic_angle_deg(a, c) <=
              geodesic_angle_deg(a, b) + geodesic_angle_deg(b, c) + 1e-6);
    }
}

TEST_CASE("interpolate hits endpoints and halves distance") {
    std::mt19937_64 rng(23);
    const Pose a = random_pose(rng), b = random_pose(rng);
    CHECK(pose_gap(interpolate(a, b, 0.0), a) < 1e-12);
    CHECK(interpolate(a, b, 1.0) == b);
    const Pose mid = interpolate(a, b, 0.5);
    CHECK(position_distance(a, mid) == doctest::Approx(position_distance(a, b) / 2));
    CHECK(geodesic_angle_deg(a.orientation(), mid.orientation()) ==
          doctest::Approx(geodesic_angle_deg(a.orientation(), b.orientation()) / 2).epsilon(1e-6));
}

TEST_CASE("pose validation") {
    CHECK_THROWS_AS(Pose(Vec3(NAN, 0, 0), Quat::Identity()), std::invalid_argument);
    CHECK_THROWS_AS(Pose(Vec3::Zero(), Quat(0, 0, 0, 0)), std::invalid_argument);
    const std::array<double, 7> raw{1, 2, 3, 0, 0, 0, 2};
    const Pose p = Pose::from_array(raw);
    CHECK(p.orientation().z() == doctest::Approx(1.0));
    CHECK(p.to_array()[0] == 1.0);
}

TEST_CASE("block shape") {
    const BlockShape shape;
    CHECK(shape.long_half() == 0.045);
    CHECK(shape.medium_half() == 0.015);
    CHECK(shape.short_half() == 0.0075);
    CHECK_THROWS(BlockShape(0.01, 0.01, 0.005));
    CHECK_THROWS(BlockShape(0.03, 0.02, 0.0));
    CHECK(shape.vertical_half_extent(Pose::identity()) == doctest::Approx(0.0075));
    const Pose upright(Vec3::Zero(), quat_from_axis_angle(Vec3::UnitY(), -kPi / 2));
    CHECK(shape.vertical_half_extent(upright) == doctest::Approx(0.045));
}

TEST_CASE("wrap_angle") {
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
}
