#include "subta/wire.hpp"

#include "subta/tasks.hpp"
#include "subta/trial_log.hpp"

namespace subta::wire {

using nlohmann::json;

namespace {

json envelope(const char* type, int tick) {
    return {{"type", type}, {"schema_version", kSchemaVersion}, {"tick", tick}};
}

[[noreturn]] void malformed(const std::string& why) { throw WireError(WireError::Kind::Malformed, why); }

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) malformed("not valid JSON");
    if (!j.is_object()) malformed("message must be a JSON object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
        malformed("missing integer schema_version");
    }
    const int version = j["schema_version"].get<int>();
    if (version != kSchemaVersion) {
        throw WireError(WireError::Kind::VersionMismatch,
                        "schema_version " + std::to_string(version) + " not supported, server speaks " +
                            std::to_string(kSchemaVersion));
    }
    if (!j.contains("type") || !j["type"].is_string()) malformed("missing string type");
    if (!j.contains("tick") || !j["tick"].is_number_integer() || j["tick"].get<long long>() < 0) {
        malformed("missing non-negative integer tick");
    }
    ClientMessage m;
    m.tick = j["tick"].get<int>();
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "controller_input") {
            m.body = controller_input_from_json(j.at("input"));
        } else if (type == "set_mode") {
            const auto mode = parse_mode(j.at("mode").get<std::string>());
            if (!mode) malformed("unknown mode '" + j["mode"].get<std::string>() + "'");
            m.body = SetMode{*mode};
        } else if (type == "set_task") {
            const auto task = canonical_task_name(j.at("task").get<std::string>());
            if (!task) malformed("unknown task '" + j["task"].get<std::string>() + "'");
            m.body = SetTask{*task};
        } else if (type == "reset") {
            m.body = Reset{};
        } else {
            malformed("unknown message type '" + type + "'");
        }
    } catch (const WireError&) {
        throw;
    } catch (const std::exception& e) {
        malformed(type + ": " + e.what());
    }
    return m;
}

json controller_input_message(int tick, const ControllerInput& in) {
    json j = envelope("controller_input", tick);
    j["input"] = to_json(in);
    return j;
}

json set_mode_message(int tick, AssistMode mode) {
    json j = envelope("set_mode", tick);
    j["mode"] = to_string(mode);
    return j;
}

json set_task_message(int tick, const std::string& task) {
    json j = envelope("set_task", tick);
    j["task"] = task;
    return j;
}

json reset_message(int tick) { return envelope("reset", tick); }

json state_update(int tick, const WorldState& world, const TrialConfig& cfg) {
    json j = envelope("state_update", tick);
    j["task"] = cfg.task;
    j["mode"] = to_string(cfg.mode);
    j["world"] = to_json(world);
    return j;
}

json plan_update(int tick, const std::optional<PlanStep>& plan) {
    json j = envelope("plan_update", tick);
    j["plan"] = plan ? to_json(*plan) : json(nullptr);
    j["ghost"] = plan ? to_json(plan->target_pose) : json(nullptr);
    return j;
}

json behavior_update(int tick, const std::array<BehaviorId, 2>& rows) {
    json j = envelope("behavior_update", tick);
    j["left"] = to_string(rows[0]);
    j["right"] = to_string(rows[1]);
    return j;
}

json feedback(int tick, const HandEvent& e) {
    json j = envelope("feedback", tick);
    j["hand"] = to_string(e.hand);
    j["event"] = to_json(e.event);
    return j;
}

json metrics_message(int tick, const TrialMetrics& m) {
    json j = envelope("metrics", tick);
    j["metrics"] = to_json(m);
    return j;
}

json error_message(int tick, const std::string& reason, bool fatal) {
    json j = envelope("error", tick);
    j["reason"] = reason;
    j["fatal"] = fatal;
    return j;
}

}  // namespace subta::wire
