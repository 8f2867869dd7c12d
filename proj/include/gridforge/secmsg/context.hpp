#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "gridforge/credstore/credential.hpp"

namespace gridforge::secmsg {

inline constexpr std::size_t kContextIdSize = 16;

enum class ContextState { Initiated, Responded, Established, Closed };
enum class ContextRole { Initiator, Responder };

std::string_view to_string(ContextState state);

/// Mutually authenticated session state. One owner at a time; concurrent
/// wrap/unwrap on the same context must be serialized by the caller.
///
/// Handshake:
///   token1 ClientHello  {chain, nonce_c, ephemeral_c}
///   token2 ServerHello  {chain, nonce_s, ephemeral_s, sig_s(transcript)}
///   token3 ClientFinish {sig_c(transcript)}
/// Direction keys are HKDF(X25519 secret, nonce_c || nonce_s, label).
class SecurityContext {
public:
    const Bytes& context_id() const { return context_id_; }
    ContextState state() const { return state_; }
    ContextRole role() const { return role_; }
    const credstore::ValidatedIdentity& local_identity() const { return local_identity_; }
    /// Set once the peer's chain has been validated.
    const std::optional<credstore::ValidatedIdentity>& peer_identity() const { return peer_identity_; }
    std::uint64_t send_seq() const { return send_seq_; }
    std::uint64_t recv_seq() const { return recv_seq_; }

private:
    friend struct ContextAccess;

    Bytes context_id_;
    ContextState state_ = ContextState::Initiated;
    ContextRole role_ = ContextRole::Initiator;
    credstore::ValidatedIdentity local_identity_;
    std::optional<credstore::ValidatedIdentity> peer_identity_;
    Bytes send_key_;
    Bytes recv_key_;
    std::uint64_t send_seq_ = 0;
    std::uint64_t recv_seq_ = 0;

    // Handshake material, cleared once established.
    Bytes ephemeral_secret_;
    Bytes signing_key_;
    Bytes token1_;
    Bytes token2_;
    Bytes pending_send_key_;
    Bytes pending_recv_key_;
};

struct ProtectedMessage {
    Bytes context_id;
    std::uint64_t seq = 0;
    /// Ciphertext when `confidential`, plaintext otherwise.
    Bytes body;
    Bytes auth_tag;
    bool confidential = false;

    Json to_json() const;
    static ProtectedMessage from_json(const Json& doc);
};

std::pair<SecurityContext, Bytes> context_initiate(const credstore::CredentialSet& cred);

std::pair<SecurityContext, Bytes> context_respond(const credstore::CredentialSet& cred, ByteView token1,
                                                  const credstore::TrustAnchorStore& anchors, UnixTime now);

/// Initiator consumes token2, becomes Established and returns token3.
Bytes context_complete(SecurityContext& ctx, ByteView token2, const credstore::TrustAnchorStore& anchors,
                       UnixTime now);

/// Responder consumes token3 and becomes Established.
void context_accept(SecurityContext& ctx, ByteView token3);

ProtectedMessage context_wrap(SecurityContext& ctx, ByteView payload, bool confidential);
Bytes context_unwrap(SecurityContext& ctx, const ProtectedMessage& msg);
void context_close(SecurityContext& ctx);

}  // namespace gridforge::secmsg
