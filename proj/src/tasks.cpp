#include "subta/tasks.hpp"

#include <algorithm>
#include <cctype>

namespace subta {

const std::vector<std::string>& task_labels() {
    static const std::vector<std::string> labels{"Tuningfork-ly", "Arch",  "Snake", "Frame",
                                                 "Horse",         "Bridge", "Tower", "Tuningfork-st"};
    return labels;
}

std::optional<std::size_t> task_index(const std::string& label) {
    const auto& labels = task_labels();
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - labels.begin());
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

std::optional<std::string> canonical_task_name(const std::string& name) {
    const std::string key = lower(name);
    for (const auto& label : task_labels()) {
        if (lower(label) == key) {
            return label;
        }
    }
    return std::nullopt;
}

const char* to_string(Action a) {
    switch (a) {
        case Action::Idle: return "Idle";
        case Action::PickUp: return "Pick-up";
        case Action::Withdraw: return "Withdraw";
        case Action::Stand: return "Stand";
        case Action::Lie: return "Lie";
        case Action::SideLie: return "Side-lie";
        case Action::StandOnBlock: return "Stand-OB";
        case Action::LieOnBlock: return "Lie-OB";
        case Action::SideLieOnBlock: return "Side-lie-OB";
    }
    return "?";
}

}  // namespace subta
