#pragma once

#include <functional>
#include <optional>
#include <ostream>

#include <gtest/gtest.h>

#include "gridforge/common/error.hpp"
#include "gridforge/credstore/credential.hpp"

namespace gridforge {

inline void PrintTo(ErrorCode code, std::ostream* os) { *os << to_string(code); }

}  // namespace gridforge

namespace gridforge::testing {

inline constexpr UnixTime kNow = 1'700'000'000;

/// Runs `fn` and returns the code of the gridforge::Error it throws.
inline std::optional<ErrorCode> error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

struct SmallGrid {
    credstore::CredentialSet ca = credstore::create_ca("/O=TestGrid/CN=CA", {kNow - kDay, kNow + 365 * kDay});
    credstore::TrustAnchorStore anchors{{ca.root()}};
    credstore::CredentialSet alice = credstore::issue_identity(ca, "/O=TestGrid/CN=Alice", {kNow - kHour, kNow + 30 * kDay});
    credstore::CredentialSet bob = credstore::issue_identity(ca, "/O=TestGrid/CN=Bob", {kNow - kHour, kNow + 30 * kDay});

    credstore::CredentialSet proxy_of(const credstore::CredentialSet& parent, UnixTime hours = 12) const {
        return credstore::create_proxy(parent, Validity::starting(kNow - 60, hours * kHour),
                                       credstore::DelegationDepth::unlimited());
    }
};

}  // namespace gridforge::testing
