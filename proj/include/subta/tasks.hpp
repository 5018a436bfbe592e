#pragma once

#include <optional>
#include <string>
#include <vector>

namespace subta {

/// The eight assembly task labels, in head output order. The first four are
/// the evaluation tasks.
const std::vector<std::string>& task_labels();

/// Position in task_labels(), or nullopt for an unknown label.
std::optional<std::size_t> task_index(const std::string& label);

/// Case-insensitive lookup ("arch" -> "Arch").
std::optional<std::string> canonical_task_name(const std::string& name);

/// Per-hand action classes, in head output order.
enum class Action : int {
    Idle = 0,
    PickUp,
    Withdraw,
    Stand,
    Lie,
    SideLie,
    StandOnBlock,
    LieOnBlock,
    SideLieOnBlock,
};

constexpr int kActionCount = 9;

const char* to_string(Action a);

}  // namespace subta
