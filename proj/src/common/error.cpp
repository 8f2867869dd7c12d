#include "gridforge/common/error.hpp"

#include <array>
#include <utility>

namespace gridforge {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 52> kNames{{
    {ErrorCode::InvalidName, "InvalidName"},
    {ErrorCode::InvalidValidity, "InvalidValidity"},
    {ErrorCode::NotACA, "NotACA"},
    {ErrorCode::ValidityExceedsIssuer, "ValidityExceedsIssuer"},
    {ErrorCode::DelegationDepthExhausted, "DelegationDepthExhausted"},
    {ErrorCode::ParentExpired, "ParentExpired"},
    {ErrorCode::UntrustedRoot, "UntrustedRoot"},
    {ErrorCode::SignatureInvalid, "SignatureInvalid"},
    {ErrorCode::Expired, "Expired"},
    {ErrorCode::BrokenChain, "BrokenChain"},
    {ErrorCode::ProxyNamingViolation, "ProxyNamingViolation"},
    {ErrorCode::DepthViolation, "DepthViolation"},
    {ErrorCode::CredentialExpired, "CredentialExpired"},
    {ErrorCode::StaleTimestamp, "StaleTimestamp"},
    {ErrorCode::ReplayDetected, "ReplayDetected"},
    {ErrorCode::TranscriptMismatch, "TranscriptMismatch"},
    {ErrorCode::SequenceViolation, "SequenceViolation"},
    {ErrorCode::AuthTagInvalid, "AuthTagInvalid"},
    {ErrorCode::ContextClosed, "ContextClosed"},
    {ErrorCode::InvalidState, "InvalidState"},
    {ErrorCode::NoSatisfyingCredential, "NoSatisfyingCredential"},
    {ErrorCode::MalformedDocument, "MalformedDocument"},
    {ErrorCode::MalformedRight, "MalformedRight"},
    {ErrorCode::NoRightsGranted, "NoRightsGranted"},
    {ErrorCode::AssertionInvalid, "AssertionInvalid"},
    {ErrorCode::AssertionExpired, "AssertionExpired"},
    {ErrorCode::AuthorizationDenied, "AuthorizationDenied"},
    {ErrorCode::ParseError, "ParseError"},
    {ErrorCode::DuplicateIdentity, "DuplicateIdentity"},
    {ErrorCode::NoMapping, "NoMapping"},
    {ErrorCode::AccountNotPermitted, "AccountNotPermitted"},
    {ErrorCode::MalformedEnvelope, "MalformedEnvelope"},
    {ErrorCode::StarterFailure, "StarterFailure"},
    {ErrorCode::NetworkOriginRejected, "NetworkOriginRejected"},
    {ErrorCode::UnknownAccount, "UnknownAccount"},
    {ErrorCode::HostCredentialUnavailable, "HostCredentialUnavailable"},
    {ErrorCode::AccountMismatch, "AccountMismatch"},
    {ErrorCode::GridIdentityMismatch, "GridIdentityMismatch"},
    {ErrorCode::UntrustedHost, "UntrustedHost"},
    {ErrorCode::NotOwner, "NotOwner"},
    {ErrorCode::InvalidTransition, "InvalidTransition"},
    {ErrorCode::NoDelegatedCredential, "NoDelegatedCredential"},
    {ErrorCode::QueueNotPermitted, "QueueNotPermitted"},
    {ErrorCode::InvalidJobDescription, "InvalidJobDescription"},
    {ErrorCode::UnknownJob, "UnknownJob"},
    {ErrorCode::UnknownOperation, "UnknownOperation"},
    {ErrorCode::ChainBroken, "ChainBroken"},
    {ErrorCode::AlreadyRunning, "AlreadyRunning"},
    {ErrorCode::NotRunning, "NotRunning"},
    {ErrorCode::ConfigError, "ConfigError"},
    {ErrorCode::IoError, "IoError"},
    {ErrorCode::TransportError, "TransportError"},
}};

std::string format_message(ErrorCode code, const std::string& detail, std::optional<std::size_t> index) {
    std::string msg{to_string(code)};
    if (index) {
        msg += "(" + std::to_string(*index) + ")";
    }
    if (!detail.empty()) {
        msg += ": " + detail;
    }
    return msg;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
    for (const auto& [c, name] : kNames) {
        if (c == code) {
            return name;
        }
    }
    return "Unknown";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
    for (const auto& [c, n] : kNames) {
        if (n == name) {
            return c;
        }
    }
    return std::nullopt;
}

Error::Error(ErrorCode code, std::string detail, std::optional<std::size_t> index)
    : std::runtime_error(format_message(code, detail, index)),
      code_(code),
      detail_(std::move(detail)),
      index_(index) {}

}  // namespace gridforge
