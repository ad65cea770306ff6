#include "odp/instance.hpp"

namespace odp {

const ObjectInstance* System::find_object(const std::string& id) const {
    auto it = objects.find(id);
    return it == objects.end() ? nullptr : &it->second;
}

const Link* System::find_link(const std::string& id) const {
    auto it = links.find(id);
    return it == links.end() ? nullptr : &it->second;
}

std::optional<TimePoint> System::time_point(const std::string& label) const {
    for (std::size_t i = 0; i < time_points.size(); ++i) {
        if (time_points[i] == label) return TimePoint{label, i};
    }
    return std::nullopt;
}

StateSnapshot snapshot_states(const System& system, const TimePoint& at) {
    StateSnapshot snap;
    snap.time = at;
    for (const auto& [id, object] : system.objects) {
        snap.object_states[id] = object.state;
    }
    return snap;
}

} // namespace odp
