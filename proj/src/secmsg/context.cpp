#include "gridforge/secmsg/context.hpp"

#include "gridforge/common/canonical.hpp"
#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"

namespace gridforge::secmsg {

using credstore::Chain;
using credstore::CredentialSet;
using credstore::TrustAnchorStore;

std::string_view to_string(ContextState state) {
    switch (state) {
        case ContextState::Initiated:
            return "Initiated";
        case ContextState::Responded:
            return "Responded";
        case ContextState::Established:
            return "Established";
        case ContextState::Closed:
            return "Closed";
    }
    return "?";
}

namespace {

constexpr std::size_t kHandshakeNonceSize = 32;
constexpr std::string_view kClientHello = "client_hello";
constexpr std::string_view kServerHello = "server_hello";
constexpr std::string_view kClientFinish = "client_finish";

void add_chain(CanonicalEncoder& out, std::string_view key, const Chain& chain) {
    std::vector<Bytes> items;
    for (const auto& cert : chain) {
        Bytes item = cert.canonical_body();
        item.insert(item.end(), cert.signature.begin(), cert.signature.end());
        items.push_back(std::move(item));
    }
    out.add_bytes_list(key, items);
}

Bytes server_hello_body(const Chain& chain, ByteView nonce, ByteView ephemeral) {
    CanonicalEncoder enc;
    enc.add_string("type", kServerHello).add_bytes("nonce", nonce).add_bytes("ephemeral", ephemeral);
    add_chain(enc, "chain", chain);
    return enc.encode();
}

Bytes server_transcript(ByteView token1, ByteView server_body) {
    CanonicalEncoder enc;
    enc.add_string("label", "gridforge/context/server-hello").add_bytes("token1", token1).add_bytes("server_hello",
                                                                                                     server_body);
    const auto d = crypto::sha256(enc.encode());
    return Bytes(d.begin(), d.end());
}

Bytes client_transcript(ByteView token1, ByteView token2) {
    CanonicalEncoder enc;
    enc.add_string("label", "gridforge/context/client-finish").add_bytes("token1", token1).add_bytes("token2", token2);
    const auto d = crypto::sha256(enc.encode());
    return Bytes(d.begin(), d.end());
}

Bytes derive_context_id(ByteView nonce_c, ByteView nonce_s) {
    CanonicalEncoder enc;
    enc.add_string("label", "gridforge/context/id").add_bytes("nonce_c", nonce_c).add_bytes("nonce_s", nonce_s);
    const auto d = crypto::sha256(enc.encode());
    return Bytes(d.begin(), d.begin() + kContextIdSize);
}

std::pair<Bytes, Bytes> derive_direction_keys(ByteView shared, ByteView nonce_c, ByteView nonce_s) {
    Bytes salt(nonce_c.begin(), nonce_c.end());
    salt.insert(salt.end(), nonce_s.begin(), nonce_s.end());
    Bytes c2s = crypto::hkdf_sha256(shared, salt, to_bytes("gridforge/context/initiator-to-responder"),
                                    crypto::kSymmetricKeySize);
    Bytes s2c = crypto::hkdf_sha256(shared, salt, to_bytes("gridforge/context/responder-to-initiator"),
                                    crypto::kSymmetricKeySize);
    return {std::move(c2s), std::move(s2c)};
}

Json parse_token(ByteView token, std::string_view expected_type, std::size_t expected_fields) {
    Json doc = parse_document(std::string_view(reinterpret_cast<const char*>(token.data()), token.size()));
    if (get_string(doc, "type") != expected_type || doc.size() != expected_fields) {
        throw Error(ErrorCode::MalformedDocument, "unexpected token " + std::string(expected_type));
    }
    return doc;
}

Bytes render(const Json& doc) { return to_bytes(dump_document(doc)); }

void require_size(const Bytes& b, std::size_t n, std::string_view what) {
    if (b.size() != n) {
        throw Error(ErrorCode::MalformedDocument, std::string(what) + " has wrong length");
    }
}

Bytes associated_data(ByteView context_id, std::uint64_t seq, bool confidential, ByteView plain_body) {
    CanonicalEncoder enc;
    enc.add_string("label", "gridforge/context/message")
        .add_bytes("context_id", context_id)
        .add_uint("seq", seq)
        .add_bool("confidential", confidential)
        .add_bytes("body", plain_body);
    return enc.encode();
}

}  // namespace

struct ContextAccess {
    static SecurityContext& established(SecurityContext& ctx) {
        if (ctx.state_ == ContextState::Closed) {
            throw Error(ErrorCode::ContextClosed, "security context is closed");
        }
        if (ctx.state_ != ContextState::Established) {
            throw Error(ErrorCode::InvalidState, "security context is not established");
        }
        return ctx;
    }

    static std::pair<SecurityContext, Bytes> initiate(const CredentialSet& cred) {
        SecurityContext ctx;
        ctx.role_ = ContextRole::Initiator;
        ctx.state_ = ContextState::Initiated;
        ctx.local_identity_ = credstore::describe_chain(cred.chain);
        auto eph = crypto::generate_agreement_keypair();
        ctx.ephemeral_secret_ = std::move(eph.secret_key);
        ctx.signing_key_ = cred.private_key;
        const Bytes nonce = crypto::random_bytes(kHandshakeNonceSize);
        Json token{{"type", kClientHello},
                   {"chain", credstore::chain_to_json(cred.chain)},
                   {"nonce", base64_encode(nonce)},
                   {"ephemeral", base64_encode(eph.public_key)}};
        ctx.token1_ = render(token);
        Bytes token1 = ctx.token1_;
        return {std::move(ctx), std::move(token1)};
    }

    static std::pair<SecurityContext, Bytes> respond(const CredentialSet& cred, ByteView token1,
                                                     const TrustAnchorStore& anchors, UnixTime now) {
        const Json hello = parse_token(token1, kClientHello, 4);
        const Chain client_chain = credstore::chain_from_json(get_array(hello, "chain"));
        const Bytes nonce_c = get_base64(hello, "nonce");
        const Bytes eph_c = get_base64(hello, "ephemeral");
        require_size(nonce_c, kHandshakeNonceSize, "client nonce");
        SecurityContext ctx;
        ctx.role_ = ContextRole::Responder;
        ctx.peer_identity_ = credstore::validate_chain(client_chain, anchors, now);
        ctx.local_identity_ = credstore::describe_chain(cred.chain);

        auto eph = crypto::generate_agreement_keypair();
        const Bytes nonce_s = crypto::random_bytes(kHandshakeNonceSize);
        const Bytes shared = crypto::agree(eph.secret_key, eph_c);
        auto [c2s, s2c] = derive_direction_keys(shared, nonce_c, nonce_s);

        const Bytes body = server_hello_body(cred.chain, nonce_s, eph.public_key);
        const Bytes signature = crypto::sign(cred.private_key, server_transcript(token1, body));
        Json token{{"type", kServerHello},
                   {"chain", credstore::chain_to_json(cred.chain)},
                   {"nonce", base64_encode(nonce_s)},
                   {"ephemeral", base64_encode(eph.public_key)},
                   {"signature", base64_encode(signature)}};

        ctx.token1_.assign(token1.begin(), token1.end());
        ctx.token2_ = render(token);
        ctx.context_id_ = derive_context_id(nonce_c, nonce_s);
        ctx.pending_recv_key_ = std::move(c2s);
        ctx.pending_send_key_ = std::move(s2c);
        ctx.state_ = ContextState::Responded;
        Bytes token2 = ctx.token2_;
        return {std::move(ctx), std::move(token2)};
    }

    static Bytes complete(SecurityContext& ctx, ByteView token2, const TrustAnchorStore& anchors, UnixTime now) {
        if (ctx.role_ != ContextRole::Initiator || ctx.state_ != ContextState::Initiated) {
            throw Error(ErrorCode::InvalidState, "context_complete requires an initiated context");
        }
        const Json hello = parse_token(token2, kServerHello, 5);
        const Chain server_chain = credstore::chain_from_json(get_array(hello, "chain"));
        const Bytes nonce_s = get_base64(hello, "nonce");
        const Bytes eph_s = get_base64(hello, "ephemeral");
        const Bytes signature = get_base64(hello, "signature");
        require_size(nonce_s, kHandshakeNonceSize, "server nonce");
        auto peer = credstore::validate_chain(server_chain, anchors, now);

        const Bytes body = server_hello_body(server_chain, nonce_s, eph_s);
        if (!crypto::verify(server_chain.back().subject_public_key, server_transcript(ctx.token1_, body), signature)) {
            throw Error(ErrorCode::TranscriptMismatch, "server transcript signature does not verify");
        }
        const Json client_hello = parse_document(gridforge::to_string(ctx.token1_));
        const Bytes nonce_c = get_base64(client_hello, "nonce");
        const Bytes shared = crypto::agree(ctx.ephemeral_secret_, eph_s);
        auto [c2s, s2c] = derive_direction_keys(shared, nonce_c, nonce_s);

        ctx.peer_identity_ = std::move(peer);
        ctx.context_id_ = derive_context_id(nonce_c, nonce_s);
        ctx.send_key_ = std::move(c2s);
        ctx.recv_key_ = std::move(s2c);
        ctx.token2_.assign(token2.begin(), token2.end());
        ctx.state_ = ContextState::Established;

        const Bytes finish_sig = crypto::sign(ctx.signing_key_, client_transcript(ctx.token1_, ctx.token2_));
        clear_handshake(ctx);
        return render(Json{{"type", kClientFinish}, {"signature", base64_encode(finish_sig)}});
    }

    static void accept(SecurityContext& ctx, ByteView token3) {
        if (ctx.role_ != ContextRole::Responder || ctx.state_ != ContextState::Responded) {
            throw Error(ErrorCode::InvalidState, "context_accept requires a responded context");
        }
        const Json finish = parse_token(token3, kClientFinish, 2);
        const Bytes signature = get_base64(finish, "signature");
        // The client's chain was validated in respond; only its leaf key is needed.
        const Json client_hello = parse_document(gridforge::to_string(ctx.token1_));
        const Chain client_chain = credstore::chain_from_json(get_array(client_hello, "chain"));
        if (!crypto::verify(client_chain.back().subject_public_key, client_transcript(ctx.token1_, ctx.token2_),
                            signature)) {
            throw Error(ErrorCode::TranscriptMismatch, "client transcript signature does not verify");
        }
        ctx.send_key_ = std::move(ctx.pending_send_key_);
        ctx.recv_key_ = std::move(ctx.pending_recv_key_);
        ctx.state_ = ContextState::Established;
        clear_handshake(ctx);
    }

    static void clear_handshake(SecurityContext& ctx) {
        ctx.ephemeral_secret_.clear();
        ctx.signing_key_.clear();
        ctx.pending_send_key_.clear();
        ctx.pending_recv_key_.clear();
    }

    static ProtectedMessage wrap(SecurityContext& c, ByteView payload, bool confidential) {
        SecurityContext& ctx = established(c);
        ProtectedMessage msg;
        msg.context_id = ctx.context_id_;
        msg.seq = ctx.send_seq_;
        msg.confidential = confidential;
        const Bytes ad = associated_data(ctx.context_id_, msg.seq, confidential, confidential ? ByteView{} : payload);
        auto sealed = crypto::aead_seal(ctx.send_key_, msg.seq, confidential ? payload : ByteView{}, ad);
        msg.body = confidential ? std::move(sealed.ciphertext) : Bytes(payload.begin(), payload.end());
        msg.auth_tag = std::move(sealed.tag);
        ++ctx.send_seq_;
        return msg;
    }

    static Bytes unwrap(SecurityContext& c, const ProtectedMessage& msg) {
        SecurityContext& ctx = established(c);
        if (!crypto::constant_time_equal(msg.context_id, ctx.context_id_)) {
            throw Error(ErrorCode::AuthTagInvalid, "message belongs to another context");
        }
        if (msg.seq != ctx.recv_seq_) {
            throw Error(ErrorCode::SequenceViolation,
                        "expected seq " + std::to_string(ctx.recv_seq_) + ", got " + std::to_string(msg.seq));
        }
        const Bytes ad = associated_data(ctx.context_id_, msg.seq, msg.confidential,
                                         msg.confidential ? ByteView{} : ByteView(msg.body));
        Bytes plain;
        if (!crypto::aead_open(ctx.recv_key_, msg.seq, msg.confidential ? ByteView(msg.body) : ByteView{},
                               msg.auth_tag, ad, plain)) {
            throw Error(ErrorCode::AuthTagInvalid, "message authentication failed");
        }
        ++ctx.recv_seq_;
        return msg.confidential ? plain : msg.body;
    }

    static void close(SecurityContext& ctx) {
        ctx.state_ = ContextState::Closed;
        ctx.send_key_.clear();
        ctx.recv_key_.clear();
        clear_handshake(ctx);
    }
};

Json ProtectedMessage::to_json() const {
    return Json{{"context_id", base64_encode(context_id)},
                {"seq", seq},
                {"body", base64_encode(body)},
                {"auth_tag", base64_encode(auth_tag)},
                {"confidential", confidential}};
}

ProtectedMessage ProtectedMessage::from_json(const Json& doc) {
    if (!doc.is_object() || doc.size() != 5) {
        throw Error(ErrorCode::MalformedDocument, "protected message has unexpected shape");
    }
    ProtectedMessage msg;
    msg.context_id = get_base64(doc, "context_id");
    msg.seq = get_uint(doc, "seq");
    msg.body = get_base64(doc, "body");
    msg.auth_tag = get_base64(doc, "auth_tag");
    msg.confidential = get_bool(doc, "confidential");
    return msg;
}

std::pair<SecurityContext, Bytes> context_initiate(const CredentialSet& cred) { return ContextAccess::initiate(cred); }

std::pair<SecurityContext, Bytes> context_respond(const CredentialSet& cred, ByteView token1,
                                                  const TrustAnchorStore& anchors, UnixTime now) {
    return ContextAccess::respond(cred, token1, anchors, now);
}

Bytes context_complete(SecurityContext& ctx, ByteView token2, const TrustAnchorStore& anchors, UnixTime now) {
    // Work on a copy so a failed completion leaves the caller's context intact.
    SecurityContext next = ctx;
    Bytes token3 = ContextAccess::complete(next, token2, anchors, now);
    ctx = std::move(next);
    return token3;
}

void context_accept(SecurityContext& ctx, ByteView token3) { ContextAccess::accept(ctx, token3); }

ProtectedMessage context_wrap(SecurityContext& ctx, ByteView payload, bool confidential) {
    return ContextAccess::wrap(ctx, payload, confidential);
}

Bytes context_unwrap(SecurityContext& ctx, const ProtectedMessage& msg) { return ContextAccess::unwrap(ctx, msg); }

void context_close(SecurityContext& ctx) { ContextAccess::close(ctx); }

}  // namespace gridforge::secmsg
