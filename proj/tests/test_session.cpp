#include <doctest.h>

#include <thread>

#include "subta/assemblies.hpp"
#include "subta/session.hpp"
#include "subta/trial_log.hpp"
#include "subta/wire.hpp"

using namespace subta;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

const GoalLibrary& lib() {
    static const GoalLibrary l = builtin_goal_library();
    return l;
}

std::vector<json> drain(Session& s, ClientId id) {
    std::vector<json> out;
    while (auto m = s.next(id, 0ms)) out.push_back(json::parse(m->text));
    return out;
}

std::optional<json> last_of(const std::vector<json>& msgs, const std::string& type) {
    for (auto it = msgs.rbegin(); it != msgs.rend(); ++it) {
        if ((*it)["type"] == type) return std::optional<json>(std::in_place, *it);
    }
    return std::nullopt;
}

ControllerInput input_at(Hand h, double x) {
    ControllerInput in;
    in.hand = h;
    in.target = Pose::from_translation(Vec3(x, 0.0, 0.25));
    return in;
}

}  // namespace

TEST_CASE("client messages round trip through the parser") {
    const ControllerInput in = input_at(Hand::Left, 0.3);
    auto m = wire::parse_client_message(wire::controller_input_message(4, in).dump());
    CHECK(m.tick == 4);
    REQUIRE(std::holds_alternative<ControllerInput>(m.body));
    CHECK(std::get<ControllerInput>(m.body).target == in.target);
    CHECK(std::get<ControllerInput>(m.body).hand == Hand::Left);

    m = wire::parse_client_message(wire::set_mode_message(0, AssistMode::M2).dump());
    CHECK(std::get<wire::SetMode>(m.body).mode == AssistMode::M2);
    m = wire::parse_client_message(R"({"type":"set_mode","schema_version":1,"tick":0,"mode":"m3"})");
    CHECK(std::get<wire::SetMode>(m.body).mode == AssistMode::M3);
    m = wire::parse_client_message(R"({"type":"set_task","schema_version":1,"tick":0,"task":"arch"})");
    CHECK(std::get<wire::SetTask>(m.body).task == "Arch");
    m = wire::parse_client_message(wire::reset_message(9).dump());
    CHECK(std::holds_alternative<wire::Reset>(m.body));
}

TEST_CASE("bad client messages") {
    using K = wire::WireError::Kind;
    const auto kind_of = [](const std::string& text) {
        try {
            wire::parse_client_message(text);
        } catch (const wire::WireError& e) {
            return std::optional<K>(e.kind());
        }
        return std::optional<K>();
    };
    CHECK(kind_of("{not json") == K::Malformed);
    CHECK(kind_of("[1,2]") == K::Malformed);
    CHECK(kind_of(R"({"type":"reset","tick":0})") == K::Malformed);
    CHECK(kind_of(R"({"type":"reset","schema_version":2,"tick":0})") == K::VersionMismatch);
    CHECK(kind_of(R"({"type":"reset","schema_version":1})") == K::Malformed);
    CHECK(kind_of(R"({"type":"reset","schema_version":1,"tick":-1})") == K::Malformed);
    CHECK(kind_of(R"({"type":"dance","schema_version":1,"tick":0})") == K::Malformed);
    CHECK(kind_of(R"({"type":"set_mode","schema_version":1,"tick":0,"mode":"m4"})") == K::Malformed);
    CHECK(kind_of(R"({"type":"set_task","schema_version":1,"tick":0,"task":"Pyramid"})") == K::Malformed);
    CHECK(kind_of(R"({"type":"controller_input","schema_version":1,"tick":0,"input":{"hand":"left","target":[0,0,0]}})") ==
          K::Malformed);
    CHECK(kind_of(R"({"type":"controller_input","schema_version":1,"tick":0,"input":{"hand":"left","target":[0,0,0,0,0,0,0]}})") ==
          K::Malformed);
}

TEST_CASE("server messages carry version, tick and payload") {
    const json s = wire::state_update(3, WorldState{}, TrialConfig{});
    CHECK(s["type"] == "state_update");
    CHECK(s["schema_version"] == wire::kSchemaVersion);
    CHECK(s["tick"] == 3);
    CHECK(wire::plan_update(1, std::nullopt)["ghost"].is_null());
    PlanStep step;
    step.target_pose = Pose::from_translation(Vec3(0.4, 0.0, 0.0075));
    CHECK(wire::plan_update(1, step)["ghost"] == to_json(step.target_pose));
    CHECK(wire::behavior_update(1, {BehaviorId::GraspObject, BehaviorId::ReleaseObject})["right"] == "ReleaseObject");
    CHECK(wire::error_message(1, "x", true)["fatal"] == true);
}

TEST_CASE("set_task and set_mode reset the scene") {
    SessionOptions o;
    o.config.task = "Snake";
    o.config.mode = AssistMode::M1;
    Session s(lib(), o);
    const ClientId c = s.connect();
    s.submit(c, wire::controller_input_message(0, input_at(Hand::Right, 0.5)).dump());
    for (int i = 0; i < 3; ++i) s.tick();
    s.submit(c, R"({"type":"set_task","schema_version":1,"tick":3,"task":"arch"})");
    s.submit(c, R"({"type":"set_mode","schema_version":1,"tick":3,"mode":"m3"})");
    drain(s, c);
    s.tick();
    const auto msgs = drain(s, c);
    const auto st = last_of(msgs, "state_update");
    REQUIRE(st);
    CHECK((*st)["task"] == "Arch");
    CHECK((*st)["mode"] == "M3");
    CHECK((*st)["tick"] == 4);
    CHECK(s.simulation().tick() == 1);
    for (const auto& [id, p] : (*st)["world"]["blocks"].items()) {
        CHECK(in_supply(pose_from_json(p)));
    }
    CHECK(s.config().task == "Arch");
}

TEST_CASE("two clients receive identical streams") {
    Session s(lib(), {});
    const ClientId a = s.connect();
    const ClientId b = s.connect();
    CHECK(s.client_count() == 2);
    s.submit(a, wire::controller_input_message(0, input_at(Hand::Left, 0.35)).dump());
    for (int i = 0; i < 10; ++i) s.tick();
    const auto ma = drain(s, a);
    const auto mb = drain(s, b);
    CHECK(ma.size() >= 30);
    CHECK(ma == mb);
    int last = 0;
    for (const json& m : ma) {
        CHECK(m["tick"].get<int>() >= last);
        last = m["tick"].get<int>();
    }
}

TEST_CASE("malformed input gets an error and the connection stays") {
    Session s(lib(), {});
    const ClientId a = s.connect();
    const ClientId b = s.connect();
    s.submit(a, "garbage");
    s.tick();
    const auto ma = drain(s, a);
    const auto err = last_of(ma, "error");
    REQUIRE(err);
    CHECK((*err)["fatal"] == false);
    CHECK_FALSE(last_of(drain(s, b), "error"));
    s.tick();
    CHECK(last_of(drain(s, a), "state_update"));

    s.submit(a, R"({"type":"set_task","schema_version":1,"tick":0,"task":"Tower"})");
    s.tick();
    CHECK(last_of(drain(s, a), "error"));
    CHECK(s.config().task == "Arch");
}

TEST_CASE("version mismatch refuses the connection with a reason") {
    Session s(lib(), {});
    const ClientId a = s.connect();
    const ClientId b = s.connect();
    s.submit(a, R"({"type":"reset","schema_version":99,"tick":0})");
    s.tick();
    std::vector<Outgoing> got;
    while (auto m = s.next(a, 0ms)) got.push_back(*m);
    REQUIRE_FALSE(got.empty());
    const json last = json::parse(got.back().text);
    CHECK(got.back().close);
    CHECK(last["type"] == "error");
    CHECK(last["fatal"] == true);
    CHECK(last["reason"].get<std::string>().find("schema_version") != std::string::npos);
    s.tick();
    CHECK_FALSE(s.next(a, 0ms));
    CHECK(s.next(b, 0ms));
    s.disconnect(a);
    CHECK(s.client_count() == 1);
}

TEST_CASE("latest stamped input per hand wins within a tick") {
    Session s(lib(), {});
    const ClientId c = s.connect();
    s.submit(c, wire::controller_input_message(5, input_at(Hand::Right, 0.30)).dump());
    s.submit(c, wire::controller_input_message(7, input_at(Hand::Right, 0.31)).dump());
    s.submit(c, wire::controller_input_message(6, input_at(Hand::Right, 0.32)).dump());  // stale
    s.submit(c, wire::controller_input_message(7, input_at(Hand::Right, 0.33)).dump());  // same stamp, later
    s.submit(c, wire::controller_input_message(1, input_at(Hand::Left, 0.20)).dump());
    s.tick();
    const TickRecord& rec = s.simulation().log().ticks.back();
    CHECK(rec.inputs[1].target.position().x() == 0.33);
    CHECK(rec.inputs[0].target.position().x() == 0.20);
}

TEST_CASE("a client that never reads loses old frames, the loop keeps going") {
    SessionOptions o;
    o.outbox_limit = 5;
    Session s(lib(), o);
    const ClientId c = s.connect();
    for (int i = 0; i < 20; ++i) s.tick();
    CHECK(s.ticks() == 20);
    CHECK(s.dropped(c) > 0);
    const auto msgs = drain(s, c);
    CHECK(msgs.size() == 5);
    CHECK(msgs.back()["tick"] == 20);
}

TEST_CASE("a waiting reader wakes on the next tick") {
    Session s(lib(), {});
    const ClientId c = s.connect();
    std::optional<Outgoing> got;
    std::thread reader([&] { got = s.next(c, 2000ms); });
    std::this_thread::sleep_for(20ms);
    s.tick();
    reader.join();
    REQUIRE(got);
    CHECK(json::parse(got->text)["tick"] == 1);
}

TEST_CASE("served trial fed the logged inputs reproduces the headless metrics") {
    for (const char* task : {"Arch", "Frame"}) {
        CAPTURE(task);
        TrialConfig cfg;
        cfg.task = task;
        cfg.mode = AssistMode::M3;
        cfg.seed = 4;
        cfg.sigma_pos = 0.01;
        cfg.sigma_rot_deg = 4.0;
        const TrialLog headless = run_trial(cfg, lib());
        const TrialMetrics expect = compute_metrics(headless, lib());

        SessionOptions o;
        o.config = cfg;
        Session s(lib(), o);
        const ClientId c = s.connect();
        std::vector<json> msgs;
        int t = 0;
        for (const auto& in : logged_inputs(headless)) {
            s.submit(c, wire::controller_input_message(t, in[0]).dump());
            s.submit(c, wire::controller_input_message(t, in[1]).dump());
            s.tick();
            ++t;
            for (json& m : drain(s, c)) msgs.push_back(std::move(m));
        }
        if (!s.trial_done()) s.end_trial();
        for (json& m : drain(s, c)) msgs.push_back(std::move(m));
        REQUIRE(s.last_metrics());
        CHECK(to_json(*s.last_metrics()) == to_json(expect));
        CHECK(s.simulation().world().state() == headless.ticks.back().world);
        const auto m = last_of(msgs, "metrics");
        REQUIRE(m);
        CHECK((*m)["metrics"] == to_json(expect));
    }
}
