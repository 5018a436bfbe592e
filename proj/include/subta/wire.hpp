#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

#include "subta/harness.hpp"
#include "subta/metrics.hpp"

namespace subta::wire {

/// Every message carries this as "schema_version". See docs/wire_protocol.md.
constexpr int kSchemaVersion = 1;

class WireError : public std::runtime_error {
public:
    enum class Kind { Malformed, VersionMismatch };
    WireError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// --- client to server ----------------------------------------------------------

struct SetMode {
    AssistMode mode = AssistMode::M3;
};
struct SetTask {
    std::string task;  // canonical label
};
struct Reset {};

struct ClientMessage {
    int tick = 0;  // last server tick the client had seen
    std::variant<ControllerInput, SetMode, SetTask, Reset> body;
};

/// Throws WireError: Malformed for bad JSON or fields, VersionMismatch when
/// schema_version is present and differs.
ClientMessage parse_client_message(std::string_view text);

nlohmann::json controller_input_message(int tick, const ControllerInput& in);
nlohmann::json set_mode_message(int tick, AssistMode mode);
nlohmann::json set_task_message(int tick, const std::string& task);
nlohmann::json reset_message(int tick);

// --- server to client ----------------------------------------------------------

nlohmann::json state_update(int tick, const WorldState& world, const TrialConfig& cfg);
/// Ghost pose is the planned target; both null when there is no plan.
nlohmann::json plan_update(int tick, const std::optional<PlanStep>& plan);
nlohmann::json behavior_update(int tick, const std::array<BehaviorId, 2>& rows);
nlohmann::json feedback(int tick, const HandEvent& e);
nlohmann::json metrics_message(int tick, const TrialMetrics& m);
/// `fatal` errors are followed by the server closing the connection.
nlohmann::json error_message(int tick, const std::string& reason, bool fatal = false);

}  // namespace subta::wire
