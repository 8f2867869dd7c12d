#include "gridforge/secmsg/delegation.hpp"

#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"

namespace gridforge::secmsg {

namespace {

Json unwrap_document(SecurityContext& ctx, const ProtectedMessage& msg, std::string_view expected_op) {
    const Bytes plain = context_unwrap(ctx, msg);
    Json doc = parse_document(gridforge::to_string(plain));
    if (get_string(doc, "op") != expected_op) {
        throw Error(ErrorCode::MalformedDocument, "expected " + std::string(expected_op));
    }
    return doc;
}

}  // namespace

std::pair<PendingDelegation, ProtectedMessage> delegation_request(SecurityContext& ctx) {
    auto kp = crypto::generate_signing_keypair();
    Json doc{{"op", "delegation_request"}, {"public_key", base64_encode(kp.public_key)}};
    ProtectedMessage msg = context_wrap(ctx, to_bytes(dump_document(doc)), false);
    return {PendingDelegation{std::move(kp.secret_key), std::move(kp.public_key)}, std::move(msg)};
}

ProtectedMessage delegation_answer(SecurityContext& ctx, const credstore::CredentialSet& delegator,
                                   const ProtectedMessage& request, credstore::DelegationDepth depth,
                                   Validity validity) {
    const Json doc = unwrap_document(ctx, request, "delegation_request");
    const Bytes public_key = get_base64(doc, "public_key");
    credstore::Certificate cert = credstore::sign_proxy_certificate(delegator, public_key, validity, depth);
    credstore::Chain chain = delegator.chain;
    chain.push_back(std::move(cert));
    Json answer{{"op", "delegation_answer"}, {"chain", credstore::chain_to_json(chain)}};
    return context_wrap(ctx, to_bytes(dump_document(answer)), false);
}

credstore::CredentialSet delegation_finish(SecurityContext& ctx, const PendingDelegation& pending,
                                           const ProtectedMessage& answer) {
    const Json doc = unwrap_document(ctx, answer, "delegation_answer");
    credstore::CredentialSet cred{credstore::chain_from_json(get_array(doc, "chain")), pending.private_key};
    if (cred.chain.empty() || cred.leaf().subject_public_key != pending.public_key) {
        throw Error(ErrorCode::MalformedDocument, "delegated certificate is not for the requested key");
    }
    const auto& peer = ctx.peer_identity();
    if (!peer || credstore::describe_chain(cred.chain).effective_identity != peer->effective_identity) {
        throw Error(ErrorCode::GridIdentityMismatch, "delegated credential does not speak for the peer");
    }
    return cred;
}

credstore::CredentialSet delegate_over_context(SecurityContext& delegator_ctx, SecurityContext& peer_ctx,
                                               const credstore::CredentialSet& delegator,
                                               credstore::DelegationDepth depth, Validity validity) {
    if (!credstore::describe_chain(delegator.chain).remaining_delegation_depth.allows_delegation()) {
        throw Error(ErrorCode::DelegationDepthExhausted, "delegator credential may not delegate further");
    }
    auto [pending, request] = delegation_request(peer_ctx);
    ProtectedMessage answer = delegation_answer(delegator_ctx, delegator, request, depth, validity);
    return delegation_finish(peer_ctx, pending, answer);
}

}  // namespace gridforge::secmsg
