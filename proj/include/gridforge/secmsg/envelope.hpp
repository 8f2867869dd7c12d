#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "gridforge/credstore/credential.hpp"

namespace gridforge::secmsg {

/// Maximum |now - timestamp| accepted for a signed envelope.
inline constexpr UnixTime kDefaultClockSkew = 300;
/// How long a seen nonce is remembered.
inline constexpr UnixTime kDefaultNonceRetention = 600;
inline constexpr std::size_t kNonceSize = 16;

/// A self-contained signed message that needs no prior session.
struct SignedEnvelope {
    Bytes payload;
    credstore::Chain signer_chain;
    UnixTime timestamp = 0;
    Bytes nonce;
    std::optional<std::string> target_hint;
    Bytes signature;

    /// The bytes covered by `signature`.
    Bytes signed_bytes() const;

    Json to_json() const;
    static SignedEnvelope from_json(const Json& doc);
};

/// Remembers nonces for a bounded retention window. Safe for concurrent use.
class ReplayCache {
public:
    explicit ReplayCache(UnixTime retention = kDefaultNonceRetention) : retention_(retention) {}

    /// Records `nonce`; returns false if it was already recorded and unexpired.
    bool insert(const Bytes& nonce, UnixTime now);
    std::size_t size() const;

private:
    void prune(UnixTime now);

    UnixTime retention_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, UnixTime> seen_;
    UnixTime last_prune_ = 0;
};

struct VerifiedEnvelope {
    Bytes payload;
    credstore::ValidatedIdentity who;
};

SignedEnvelope sign_envelope(const credstore::CredentialSet& cred, ByteView payload,
                             std::optional<std::string> target_hint, UnixTime now);

/// Validates the signer chain, the signature, the timestamp window and the
/// nonce (in that order). The nonce is recorded only when everything passes.
VerifiedEnvelope verify_envelope(const SignedEnvelope& env, const credstore::TrustAnchorStore& anchors,
                                 ReplayCache& replay_cache, UnixTime now, UnixTime clock_skew = kDefaultClockSkew);

}  // namespace gridforge::secmsg
