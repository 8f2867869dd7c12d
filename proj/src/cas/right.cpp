#include "gridforge/cas/right.hpp"

#include <algorithm>
#include <cctype>

#include "gridforge/common/error.hpp"

namespace gridforge::cas {

namespace {

bool has_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) || std::iscntrl(c); });
}

}  // namespace

Right Right::make(std::string_view resource, std::string_view action) {
    Right r{std::string(resource), std::string(action)};
    r.check();
    return r;
}

void Right::check() const {
    if (resource.empty() || action.empty()) {
        throw Error(ErrorCode::MalformedRight, "resource and action must be nonempty");
    }
    if (has_space(resource) || has_space(action)) {
        throw Error(ErrorCode::MalformedRight, "whitespace in right '" + resource + " " + action + "'");
    }
    const auto star = resource.find('*');
    if (star != std::string::npos && star != resource.size() - 1) {
        throw Error(ErrorCode::MalformedRight, "'*' allowed only as the final character: " + resource);
    }
    if (action.find('*') != std::string::npos) {
        throw Error(ErrorCode::MalformedRight, "wildcard actions are not supported");
    }
}

bool pattern_covers(std::string_view pattern, std::string_view resource) {
    if (pattern.empty() || pattern.back() != '*') {
        return pattern == resource;
    }
    const std::string_view prefix = pattern.substr(0, pattern.size() - 1);
    if (!resource.empty() && resource.back() == '*') {
        resource.remove_suffix(1);
    }
    return resource.substr(0, prefix.size()) == prefix;
}

bool rights_match(const RightSet& rights, const Right& request) {
    return std::any_of(rights.begin(), rights.end(), [&](const Right& r) {
        return r.action == request.action && pattern_covers(r.resource, request.resource);
    });
}

RightSet intersect_rights(const RightSet& granted, const RightSet& requested) {
    RightSet out;
    for (const auto& r : requested) {
        if (rights_match(granted, r)) {
            out.insert(r);
        }
    }
    return out;
}

}  // namespace gridforge::cas
