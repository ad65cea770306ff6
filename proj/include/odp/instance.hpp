#pragma once

#include "odp/value.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace odp {

/// One object of a system: its identity, the template closure it instantiates
/// and its current attribute state.
struct ObjectInstance {
    std::string id;
    std::set<std::string> templates; // instantiated templates, closed under parenthood
    std::map<std::string, Value> state;

    friend bool operator==(const ObjectInstance&, const ObjectInstance&) = default;
};

struct Link {
    std::string id;
    std::string role;
    std::string source;
    std::string target;

    friend bool operator==(const Link&, const Link&) = default;
};

struct TimePoint {
    std::string label;
    std::size_t index = 0;

    friend bool operator==(const TimePoint&, const TimePoint&) = default;
};

enum class ConditionKind { Pre, Post };
enum class StatePoint { Start, End };

/// Records which snapshot a rule condition was evaluated against.
struct ConditionBinding {
    ConditionKind condition = ConditionKind::Pre;
    std::string rule;
    std::string object;
    StatePoint bound = StatePoint::Start;

    auto operator<=>(const ConditionBinding&) const = default;
};

/// An instance: one snapshot of objects and links claiming conformance to a
/// single model. Instances are immutable values; transitions copy.
struct System {
    std::string name;
    std::string model; // name of the claimed model
    std::map<std::string, ObjectInstance> objects;
    std::map<std::string, Link> links;
    std::vector<std::string> time_points; // ordered timeline labels
    std::vector<ConditionBinding> bindings; // sorted, deduplicated

    const ObjectInstance* find_object(const std::string& id) const;
    const Link* find_link(const std::string& id) const;
    std::optional<TimePoint> time_point(const std::string& label) const;

    friend bool operator==(const System&, const System&) = default;
};

/// Per-object attribute states at one time point, as a detached view.
struct StateSnapshot {
    TimePoint time;
    std::map<std::string, std::map<std::string, Value>> object_states;

    friend bool operator==(const StateSnapshot&, const StateSnapshot&) = default;
};

StateSnapshot snapshot_states(const System& system, const TimePoint& at);

} // namespace odp
