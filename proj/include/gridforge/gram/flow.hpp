#pragma once

#include <array>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "gridforge/common/error.hpp"
#include "gridforge/common/events.hpp"

namespace gridforge::gram::flow {

// Event names for the seven steps of a job submission. Events may carry
// details after a single space, e.g. "step3:verify+map account=alice".
inline constexpr std::string_view kSignRequest = "step1:sign-request";
inline constexpr std::string_view kRoute = "step2:route";
inline constexpr std::string_view kVerifyMap = "step3:verify+map";
inline constexpr std::string_view kStarter = "step4:starter";
inline constexpr std::string_view kGrimRegister = "step5:grim+register";
inline constexpr std::string_view kLmjfsCreate = "step6:lmjfs-verify+mjs-create";
inline constexpr std::string_view kMutualAuthDelegate = "step7:mutual-auth+delegate";

inline constexpr std::array<std::string_view, 7> kAllSteps = {kSignRequest, kRoute,       kVerifyMap,
                                                               kStarter,     kGrimRegister, kLmjfsCreate,
                                                               kMutualAuthDelegate};

/// The event name without its details.
inline std::string_view name_of(std::string_view event) { return event.substr(0, event.find(' ')); }

/// Step events only, in recorded order.
inline std::vector<std::string> steps_of(const std::vector<Event>& events) {
    std::vector<std::string> out;
    for (const auto& e : events) {
        const auto name = name_of(e.event);
        if (name.starts_with("step")) out.emplace_back(name);
    }
    return out;
}

/// Names of the given 1-based steps, e.g. step_names({1, 2, 6, 7}).
inline std::vector<std::string> step_names(std::initializer_list<int> steps) {
    std::vector<std::string> out;
    for (int s : steps) out.emplace_back(kAllSteps.at(static_cast<std::size_t>(s - 1)));
    return out;
}

inline std::string detail(std::string_view step, std::string_view text) {
    return std::string(step) + (text.empty() ? "" : " ") + std::string(text);
}

/// Prefixes the error detail with "[stepN] " unless it already carries a step.
inline Error attributed(const Error& e, int step) {
    if (e.detail().starts_with("[step")) return e;
    return Error(e.code(), "[step" + std::to_string(step) + "] " + e.detail(), e.index());
}

}  // namespace gridforge::gram::flow
