#pragma once

#include <cstdint>

namespace gridforge {

/// UTC seconds since the epoch.
using UnixTime = std::int64_t;

inline constexpr UnixTime kMinute = 60;
inline constexpr UnixTime kHour = 3600;
inline constexpr UnixTime kDay = 86400;

struct Validity {
    UnixTime not_before = 0;
    UnixTime not_after = 0;

    bool contains(UnixTime t) const noexcept { return not_before <= t && t <= not_after; }
    bool within(const Validity& outer) const noexcept {
        return outer.not_before <= not_before && not_after <= outer.not_after;
    }
    static Validity starting(UnixTime now, UnixTime length) { return {now, now + length}; }

    bool operator==(const Validity&) const = default;
};

UnixTime system_now();

}  // namespace gridforge
