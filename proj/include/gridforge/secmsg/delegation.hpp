#pragma once

#include "gridforge/credstore/credential.hpp"
#include "gridforge/secmsg/context.hpp"

namespace gridforge::secmsg {

// Delegation over an established context is a two-message exchange: the
// receiving peer generates a key pair and sends only the public half; the
// delegator answers with a proxy certificate for that key. The private key
// never leaves the receiving peer.

struct PendingDelegation {
    Bytes private_key;
    Bytes public_key;
};

/// Receiving side: produces the key request message.
std::pair<PendingDelegation, ProtectedMessage> delegation_request(SecurityContext& ctx);

/// Delegating side: consumes the request and returns the certificate chain
/// message. Validity is clamped to the delegator's credential.
ProtectedMessage delegation_answer(SecurityContext& ctx, const credstore::CredentialSet& delegator,
                                   const ProtectedMessage& request, credstore::DelegationDepth depth,
                                   Validity validity);

/// Receiving side: assembles the delegated credential and checks that it
/// speaks for the authenticated peer.
credstore::CredentialSet delegation_finish(SecurityContext& ctx, const PendingDelegation& pending,
                                           const ProtectedMessage& answer);

/// Runs the full exchange between two in-process contexts.
credstore::CredentialSet delegate_over_context(SecurityContext& delegator_ctx, SecurityContext& peer_ctx,
                                               const credstore::CredentialSet& delegator,
                                               credstore::DelegationDepth depth, Validity validity);

}  // namespace gridforge::secmsg
