#include <doctest.h>

#include <cmath>

#include "subta/assemblies.hpp"
#include "subta/harness.hpp"
#include "subta/metrics.hpp"

using namespace subta;

namespace {

const GoalLibrary& lib() {
    static const GoalLibrary l = builtin_goal_library();
    return l;
}

TrialConfig config(const std::string& task, AssistMode mode, std::uint64_t seed = 1) {
    TrialConfig c;
    c.task = task;
    c.mode = mode;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("noise-free operator completes every shipped task in every mode") {
    for (const Assembly& a : builtin_assemblies()) {
        for (AssistMode mode : {AssistMode::M1, AssistMode::M2, AssistMode::M3}) {
            CAPTURE(a.task);
            CAPTURE(to_string(mode));
            const TrialLog log = run_trial(config(a.task, mode), lib());
            CHECK(log.success);
            REQUIRE(log.success_time);
            CHECK(*log.success_time < log.config.time_limit);
            CHECK(log.placements.size() >= a.poses.size());
            const TrialMetrics m = compute_metrics(log, lib());
            CHECK(m.progress == 1.0);
            CHECK(*m.mean_position_error < 1e-6);
        }
    }
}

TEST_CASE("trials are deterministic per seed") {
    TrialConfig c = config("Horse", AssistMode::M3, 7);
    c.sigma_pos = 0.01;
    c.sigma_rot_deg = 4.0;
    const TrialLog a = run_trial(c, lib());
    const TrialLog b = run_trial(c, lib());
    REQUIRE(a.ticks.size() == b.ticks.size());
    for (std::size_t i = 0; i < a.ticks.size(); ++i) {
        REQUIRE(a.ticks[i].world == b.ticks[i].world);
        REQUIRE(a.ticks[i].rows == b.ticks[i].rows);
    }
    CHECK(a.success == b.success);
    c.seed = 8;
    const TrialLog other = run_trial(c, lib());
    CHECK_FALSE(other.ticks.back().world == a.ticks.back().world);
}

TEST_CASE("time limit truncates the trial") {
    TrialConfig c = config("Arch", AssistMode::M3);
    c.time_limit = 0.1;
    const TrialLog log = run_trial(c, lib());
    CHECK(log.ticks.size() == 2);
    CHECK_FALSE(log.success);
    CHECK(compute_metrics(log, lib()).time == doctest::Approx(0.1));
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(run_trial(config("Pyramid", AssistMode::M1), lib()), TrialError);
    CHECK_THROWS_AS(run_trial(config("Tower", AssistMode::M1), lib()), TrialError);  // label without goals
    TrialConfig c = config("Arch", AssistMode::M2);
    c.sigma_pos = -0.1;
    CHECK_THROWS_AS(c.validate(lib()), TrialError);
    c = config("Arch", AssistMode::M2);
    c.time_limit = 0.0;
    CHECK_THROWS_AS(c.validate(lib()), TrialError);
    c = config("Arch", AssistMode::M2);
    c.th.delta3 = 0.0;
    CHECK_THROWS_AS(c.validate(lib()), TrialError);

    SimulationOptions opts;
    opts.weights = std::make_shared<ModelWeights>(ModelWeights::random(1, 5));
    CHECK_THROWS_AS(Simulation(config("Arch", AssistMode::M3), lib(), opts), TrialError);
}

TEST_CASE("operator noise has the configured spread") {
    OperatorConfig oc;
    oc.sigma_pos = 0.01;
    oc.sigma_rot_deg = 3.0;
    oc.seed = 5;
    ScriptedOperator op(oc, {});
    World world(default_supply());
    constexpr int n = 10000;
    double pos_sq = 0.0;
    double rot_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto in = op.next(world, {BehaviorId::ApproachObject, BehaviorId::ApproachObject}, AssistMode::M1,
                                std::nullopt, {});
        const Pose& nominal = op.nominal()[1];
        pos_sq += (in[1].target.position() - nominal.position()).squaredNorm();
        const Eigen::AngleAxisd aa(nominal.orientation().conjugate() * in[1].target.orientation());
        rot_sq += aa.angle() * aa.angle();
    }
    CHECK(op.finished());
    // Per-axis spread from three independent axes.
    const double pos_sigma = std::sqrt(pos_sq / (3.0 * n));
    const double rot_sigma = rad2deg(std::sqrt(rot_sq / (3.0 * n)));
    CHECK(pos_sigma == doctest::Approx(oc.sigma_pos).epsilon(0.2));
    CHECK(rot_sigma == doctest::Approx(oc.sigma_rot_deg).epsilon(0.2));
}

TEST_CASE("a missing input repeats the previous one") {
    Simulation sim(config("Arch", AssistMode::M1), lib());
    ControllerInput in;
    in.hand = Hand::Right;
    in.target = Pose::from_translation(Vec3(0.4, 0.0, 0.2));
    sim.step({std::nullopt, in});
    const auto& rec = sim.step({std::nullopt, std::nullopt});
    CHECK(rec.inputs[1].target == in.target);
    CHECK(rec.world.hands[1] == in.target);
    CHECK(rec.tick == 1);
}

TEST_CASE("releases outside the supply are logged as placements") {
    const TrialLog log = run_trial(config("Snake", AssistMode::M2), lib());
    REQUIRE(log.placements.size() == 5);
    int last = -1;
    for (const PlacementEvent& p : log.placements) {
        CHECK(p.tick > last);
        CHECK_FALSE(in_supply(p.pose));
        last = p.tick;
    }
    CHECK(log.final_graph.node_count() == 5);
}
