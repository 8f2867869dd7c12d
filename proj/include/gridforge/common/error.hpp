#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridforge {

enum class ErrorCode {
    // credstore
    InvalidName,
    InvalidValidity,
    NotACA,
    ValidityExceedsIssuer,
    DelegationDepthExhausted,
    ParentExpired,
    UntrustedRoot,
    SignatureInvalid,
    Expired,
    BrokenChain,
    ProxyNamingViolation,
    DepthViolation,
    // secmsg
    CredentialExpired,
    StaleTimestamp,
    ReplayDetected,
    TranscriptMismatch,
    SequenceViolation,
    AuthTagInvalid,
    ContextClosed,
    InvalidState,
    NoSatisfyingCredential,
    MalformedDocument,
    // cas
    MalformedRight,
    NoRightsGranted,
    AssertionInvalid,
    AssertionExpired,
    AuthorizationDenied,
    // gridmap
    ParseError,
    DuplicateIdentity,
    NoMapping,
    AccountNotPermitted,
    // gram
    MalformedEnvelope,
    StarterFailure,
    NetworkOriginRejected,
    UnknownAccount,
    HostCredentialUnavailable,
    AccountMismatch,
    GridIdentityMismatch,
    UntrustedHost,
    NotOwner,
    InvalidTransition,
    NoDelegatedCredential,
    QueueNotPermitted,
    InvalidJobDescription,
    UnknownJob,
    UnknownOperation,
    // gridctl
    ChainBroken,
    AlreadyRunning,
    NotRunning,
    ConfigError,
    IoError,
    TransportError,
};

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

/// Exception carrying a machine-readable code. `index` is set for chain
/// positions, audit entries and 1-based file line numbers.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail, std::optional<std::size_t> index = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }
    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    ErrorCode code_;
    std::string detail_;
    std::optional<std::size_t> index_;
};

}  // namespace gridforge
