#pragma once

#include <compare>
#include <set>
#include <string>
#include <string_view>

namespace gridforge::cas {

/// A permitted action on a resource. The resource is either an exact name or
/// a prefix pattern ending in a single "*".
struct Right {
    std::string resource;
    std::string action;

    /// Throws Error(MalformedRight) when the invariants do not hold.
    static Right make(std::string_view resource, std::string_view action);
    void check() const;

    bool is_prefix() const { return !resource.empty() && resource.back() == '*'; }

    auto operator<=>(const Right&) const = default;
};

using RightSet = std::set<Right>;

/// True when `pattern` admits the resource name (or narrower pattern) `resource`.
/// "/a/*" admits "/a/b", "/a/" and "/a/x/*" but not "/ab".
bool pattern_covers(std::string_view pattern, std::string_view resource);

/// True when some right in `rights` covers `request` (same action, covering resource).
bool rights_match(const RightSet& rights, const Right& request);

/// The requested rights that some granted right covers.
RightSet intersect_rights(const RightSet& granted, const RightSet& requested);

}  // namespace gridforge::cas
