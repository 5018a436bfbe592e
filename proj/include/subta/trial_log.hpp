#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "subta/harness.hpp"
#include "subta/metrics.hpp"

namespace subta {

/// Version of the tick-log and summary documents.
constexpr int kLogSchemaVersion = 1;

class LogError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- JSON codecs shared by logs and the wire protocol ---------------------------

nlohmann::json to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ControllerInput& in);
ControllerInput controller_input_from_json(const nlohmann::json& j);

nlohmann::json to_json(const WorldState& s);
WorldState world_state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const MotionCommand& c);
MotionCommand motion_command_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FeedbackEvent& e);
FeedbackEvent feedback_event_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PlanStep& s);
PlanStep plan_step_from_json(const nlohmann::json& j);

nlohmann::json to_json(const IntentEstimate& e);
IntentEstimate intent_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrialConfig& c);
TrialConfig trial_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TickRecord& r);
TickRecord tick_record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrialMetrics& m);
TrialMetrics trial_metrics_from_json(const nlohmann::json& j);

BehaviorId behavior_from_string(const std::string& s);
Hand hand_from_string(const std::string& s);

// --- tick log ------------------------------------------------------------------

/// One JSON object per line: a header with the config, one line per tick,
/// one per placement, then a closing summary. See docs/trial_log.md.
void write_trial_log(std::ostream& os, const TrialLog& log);
TrialLog read_trial_log(std::istream& is);

void save_trial_log(const std::string& path, const TrialLog& log);
TrialLog load_trial_log(const std::string& path);

/// Controller inputs of every tick, in order, for replay.
std::vector<std::array<ControllerInput, 2>> logged_inputs(const TrialLog& log);

/// Summary document: config, metrics and outcome.
nlohmann::json metrics_document(const TrialLog& log, const TrialMetrics& m);

}  // namespace subta
