#include "subta/trial_log.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace subta {

using nlohmann::json;

namespace {

template <typename E>
E enum_from(const std::string& s, int count, const char* what) {
    for (int i = 0; i < count; ++i) {
        if (s == to_string(static_cast<E>(i))) {
            return static_cast<E>(i);
        }
    }
    throw LogError(std::string("unknown ") + what + " '" + s + "'");
}

json opt_id(const std::optional<BlockId>& id) { return id ? json(*id) : json(nullptr); }

std::optional<BlockId> opt_id_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<BlockId>();
}

json to_json(const Surface& s) { return {{"block", opt_id(s.block)}, {"height", s.height}}; }

Surface surface_from_json(const json& j) { return {opt_id_from(j.at("block")), j.at("height").get<double>()}; }

template <std::size_t N>
std::array<double, N> probs_from(const json& j) {
    if (!j.is_array() || j.size() != N) {
        throw LogError("expected " + std::to_string(N) + " probabilities");
    }
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
    return out;
}

}  // namespace

BehaviorId behavior_from_string(const std::string& s) {
    return enum_from<BehaviorId>(s, kBehaviorCount, "behavior");
}

Hand hand_from_string(const std::string& s) { return enum_from<Hand>(s, 2, "hand"); }

json to_json(const Pose& p) {
    const auto a = p.to_array();
    return json(std::vector<double>(a.begin(), a.end()));
}

Pose pose_from_json(const json& j) {
    if (!j.is_array() || j.size() != 7) {
        throw LogError("a pose is 7 numbers [px,py,pz,qw,qx,qy,qz]");
    }
    std::array<double, 7> a{};
    for (std::size_t i = 0; i < 7; ++i) {
        if (!j[i].is_number()) throw LogError("pose entries must be numbers");
        a[i] = j[i].get<double>();
    }
    try {
        return Pose::from_array(a);
    } catch (const std::invalid_argument& e) {
        throw LogError(e.what());
    }
}

json to_json(const ControllerInput& in) {
    return {{"hand", to_string(in.hand)},
            {"target", to_json(in.target)},
            {"grasp", in.grasp_button},
            {"open", in.finger_open}};
}

ControllerInput controller_input_from_json(const json& j) {
    ControllerInput in;
    in.hand = hand_from_string(j.at("hand").get<std::string>());
    in.target = pose_from_json(j.at("target"));
    in.grasp_button = j.value("grasp", false);
    in.finger_open = j.value("open", false);
    return in;
}

json to_json(const WorldState& s) {
    json blocks = json::object();
    for (const auto& [id, p] : s.blocks) blocks[std::to_string(id)] = to_json(p);
    return {{"time", s.time},
            {"blocks", blocks},
            {"held", {opt_id(s.held[0]), opt_id(s.held[1])}},
            {"hands", {to_json(s.hands[0]), to_json(s.hands[1])}}};
}

WorldState world_state_from_json(const json& j) {
    WorldState s;
    s.time = j.at("time").get<double>();
    for (const auto& [k, v] : j.at("blocks").items()) {
        s.blocks[static_cast<BlockId>(std::stoi(k))] = pose_from_json(v);
    }
    for (std::size_t h = 0; h < 2; ++h) {
        s.held[h] = opt_id_from(j.at("held").at(h));
        s.hands[h] = pose_from_json(j.at("hands").at(h));
    }
    return s;
}

json to_json(const MotionCommand& c) {
    return {{"pose", to_json(c.pose)}, {"level", to_string(c.level)}, {"gripper", to_string(c.gripper)}};
}

MotionCommand motion_command_from_json(const json& j) {
    MotionCommand c;
    c.pose = pose_from_json(j.at("pose"));
    c.level = enum_from<ControlLevel>(j.at("level").get<std::string>(), 6, "control level");
    c.gripper = enum_from<Gripper>(j.at("gripper").get<std::string>(), 3, "gripper");
    return c;
}

json to_json(const FeedbackEvent& e) {
    json j = {{"kind", to_string(e.kind)}};
    if (e.kind == FeedbackEvent::Kind::ObjectHighlight) j["object"] = e.object;
    if (e.kind == FeedbackEvent::Kind::PlaneHighlight) j["surface"] = to_json(e.surface);
    return j;
}

FeedbackEvent feedback_event_from_json(const json& j) {
    FeedbackEvent e;
    e.kind = enum_from<FeedbackEvent::Kind>(j.at("kind").get<std::string>(), 3, "feedback kind");
    if (j.contains("object")) e.object = j.at("object").get<BlockId>();
    if (j.contains("surface")) e.surface = surface_from_json(j.at("surface"));
    return e;
}

json to_json(const PlanStep& s) {
    return {{"kind", to_string(s.kind)},
            {"target_block", s.target_block},
            {"target_pose", to_json(s.target_pose)},
            {"parent", opt_id(s.parent)},
            {"neighbors", s.neighbors},
            {"ged_remaining", s.ged_remaining}};
}

PlanStep plan_step_from_json(const json& j) {
    PlanStep s;
    s.kind = enum_from<StepKind>(j.at("kind").get<std::string>(), 3, "plan step");
    s.target_block = j.at("target_block").get<BlockId>();
    s.target_pose = pose_from_json(j.at("target_pose"));
    s.parent = opt_id_from(j.at("parent"));
    s.neighbors = j.at("neighbors").get<std::vector<BlockId>>();
    s.ged_remaining = j.at("ged_remaining").get<double>();
    return s;
}

json to_json(const IntentEstimate& e) {
    return {{"tasks", e.task_probs}, {"left", e.left_action}, {"right", e.right_action}};
}

IntentEstimate intent_from_json(const json& j) {
    IntentEstimate e;
    e.task_probs = probs_from<kTaskCount>(j.at("tasks"));
    e.left_action = probs_from<kActionCount>(j.at("left"));
    e.right_action = probs_from<kActionCount>(j.at("right"));
    return e;
}

json to_json(const TrialConfig& c) {
    return {{"task", c.task},
            {"mode", to_string(c.mode)},
            {"seed", c.seed},
            {"sigma_pos", c.sigma_pos},
            {"sigma_rot_deg", c.sigma_rot_deg},
            {"delta", {c.th.delta1, c.th.delta2, c.th.delta3}},
            {"time_limit", c.time_limit}};
}

TrialConfig trial_config_from_json(const json& j) {
    TrialConfig c;
    c.task = j.at("task").get<std::string>();
    const auto mode = parse_mode(j.at("mode").get<std::string>());
    if (!mode) throw LogError("unknown mode '" + j.at("mode").get<std::string>() + "'");
    c.mode = *mode;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.sigma_pos = j.at("sigma_pos").get<double>();
    c.sigma_rot_deg = j.at("sigma_rot_deg").get<double>();
    const auto& d = j.at("delta");
    c.th = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
    c.time_limit = j.at("time_limit").get<double>();
    return c;
}

json to_json(const TickRecord& r) {
    json events = json::array();
    for (const auto& e : r.events) {
        json ej = to_json(e.event);
        ej["hand"] = to_string(e.hand);
        events.push_back(ej);
    }
    return {{"tick", r.tick},
            {"time", r.time},
            {"inputs", {to_json(r.inputs[0]), to_json(r.inputs[1])}},
            {"rows", {to_string(r.rows[0]), to_string(r.rows[1])}},
            {"commands", {to_json(r.commands[0]), to_json(r.commands[1])}},
            {"intent", r.intent ? to_json(*r.intent) : json(nullptr)},
            {"plan", r.plan ? to_json(*r.plan) : json(nullptr)},
            {"events", events},
            {"world", to_json(r.world)}};
}

TickRecord tick_record_from_json(const json& j) {
    TickRecord r;
    r.tick = j.at("tick").get<int>();
    r.time = j.at("time").get<double>();
    for (std::size_t h = 0; h < 2; ++h) {
        r.inputs[h] = controller_input_from_json(j.at("inputs").at(h));
        r.rows[h] = behavior_from_string(j.at("rows").at(h).get<std::string>());
        r.commands[h] = motion_command_from_json(j.at("commands").at(h));
    }
    if (!j.at("intent").is_null()) r.intent = intent_from_json(j.at("intent"));
    if (!j.at("plan").is_null()) r.plan = plan_step_from_json(j.at("plan"));
    for (const auto& e : j.at("events")) {
        r.events.push_back({hand_from_string(e.at("hand").get<std::string>()), feedback_event_from_json(e)});
    }
    r.world = world_state_from_json(j.at("world"));
    return r;
}

json to_json(const TrialMetrics& m) {
    json blocks = json::array();
    for (const BlockError& b : m.blocks) {
        blocks.push_back({{"block", b.block},
                          {"goal_node", b.goal_node},
                          {"position_error", b.position},
                          {"orientation_error_deg", b.orientation_deg},
                          {"edges_match", b.edges_match},
                          {"correct", b.correct}});
    }
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"time", m.time},
            {"success", m.success},
            {"progress", m.progress},
            {"anchor", opt_id(m.anchor)},
            {"position_error", opt(m.mean_position_error)},
            {"orientation_error_deg", opt(m.mean_orientation_error)},
            {"blocks", blocks}};
}

TrialMetrics trial_metrics_from_json(const json& j) {
    TrialMetrics m;
    m.time = j.at("time").get<double>();
    m.success = j.at("success").get<bool>();
    m.progress = j.at("progress").get<double>();
    m.anchor = opt_id_from(j.at("anchor"));
    if (!j.at("position_error").is_null()) m.mean_position_error = j.at("position_error").get<double>();
    if (!j.at("orientation_error_deg").is_null()) {
        m.mean_orientation_error = j.at("orientation_error_deg").get<double>();
    }
    for (const auto& b : j.at("blocks")) {
        m.blocks.push_back({b.at("block").get<BlockId>(), b.at("goal_node").get<BlockId>(),
                            b.at("position_error").get<double>(), b.at("orientation_error_deg").get<double>(),
                            b.at("edges_match").get<bool>(), b.at("correct").get<bool>()});
    }
    return m;
}

void write_trial_log(std::ostream& os, const TrialLog& log) {
    os << json{{"record", "header"}, {"schema_version", kLogSchemaVersion}, {"config", to_json(log.config)}}.dump()
       << '\n';
    for (const TickRecord& r : log.ticks) {
        json j = to_json(r);
        j["record"] = "tick";
        os << j.dump() << '\n';
    }
    for (const PlacementEvent& p : log.placements) {
        os << json{{"record", "placement"}, {"tick", p.tick}, {"block", p.block}, {"pose", to_json(p.pose)}}.dump()
           << '\n';
    }
    json final_poses = json::object();
    for (const auto& [id, p] : log.final_poses) final_poses[std::to_string(id)] = to_json(p);
    os << json{{"record", "end"},
               {"success", log.success},
               {"success_time", log.success_time ? json(*log.success_time) : json(nullptr)},
               {"duration", log.duration},
               {"final_graph", to_json(log.final_graph)},
               {"final_poses", final_poses}}
              .dump()
       << '\n';
}

TrialLog read_trial_log(std::istream& is) {
    TrialLog log;
    std::string line;
    int n = 0;
    bool header = false;
    bool end = false;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            const std::string rec = j.at("record").get<std::string>();
            if (rec == "header") {
                const int v = j.at("schema_version").get<int>();
                if (v != kLogSchemaVersion) {
                    throw LogError("schema_version " + std::to_string(v) + " is not supported (expected " +
                                   std::to_string(kLogSchemaVersion) + ")");
                }
                log.config = trial_config_from_json(j.at("config"));
                header = true;
            } else if (!header) {
                throw LogError("first record must be the header");
            } else if (rec == "tick") {
                log.ticks.push_back(tick_record_from_json(j));
            } else if (rec == "placement") {
                log.placements.push_back(
                    {j.at("tick").get<int>(), j.at("block").get<BlockId>(), pose_from_json(j.at("pose"))});
            } else if (rec == "end") {
                log.success = j.at("success").get<bool>();
                if (!j.at("success_time").is_null()) log.success_time = j.at("success_time").get<double>();
                log.duration = j.at("duration").get<double>();
                log.final_graph = scene_graph_from_json(j.at("final_graph"));
                for (const auto& [k, v] : j.at("final_poses").items()) {
                    log.final_poses[static_cast<BlockId>(std::stoi(k))] = pose_from_json(v);
                }
                end = true;
            } else {
                throw LogError("unknown record '" + rec + "'");
            }
        } catch (const LogError& e) {
            throw LogError("line " + std::to_string(n) + ": " + e.what());
        } catch (const std::exception& e) {
            throw LogError("line " + std::to_string(n) + ": " + e.what());
        }
    }
    if (!header) throw LogError("empty log");
    if (!end) throw LogError("log has no end record (truncated?)");
    return log;
}

void save_trial_log(const std::string& path, const TrialLog& log) {
    std::ofstream os(path);
    if (!os) throw LogError("cannot write " + path);
    write_trial_log(os, log);
}

TrialLog load_trial_log(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw LogError("cannot read " + path);
    return read_trial_log(is);
}

std::vector<std::array<ControllerInput, 2>> logged_inputs(const TrialLog& log) {
    std::vector<std::array<ControllerInput, 2>> out;
    out.reserve(log.ticks.size());
    for (const TickRecord& r : log.ticks) out.push_back(r.inputs);
    return out;
}

json metrics_document(const TrialLog& log, const TrialMetrics& m) {
    return {{"schema_version", kLogSchemaVersion},
            {"config", to_json(log.config)},
            {"ticks", log.ticks.size()},
            {"duration", log.duration},
            {"metrics", to_json(m)}};
}

}  // namespace subta
