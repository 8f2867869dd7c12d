#include "gridforge/secmsg/envelope.hpp"

#include <vector>

#include "gridforge/common/canonical.hpp"
#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"

namespace gridforge::secmsg {

namespace {

constexpr std::string_view kEnvelopePurpose = "gridforge/signed-envelope/v1";

}  // namespace

Bytes SignedEnvelope::signed_bytes() const {
    CanonicalEncoder enc;
    enc.add_string("purpose", kEnvelopePurpose)
        .add_bytes("payload", payload)
        .add_int("timestamp", timestamp)
        .add_bytes("nonce", nonce);
    if (target_hint) {
        enc.add_string("target_hint", *target_hint);
    }
    return enc.encode();
}

Json SignedEnvelope::to_json() const {
    return Json{
        {"payload", base64_encode(payload)},
        {"signer_chain", credstore::chain_to_json(signer_chain)},
        {"timestamp", timestamp},
        {"nonce", base64_encode(nonce)},
        {"target_hint", target_hint ? Json(*target_hint) : Json(nullptr)},
        {"signature", base64_encode(signature)},
    };
}

SignedEnvelope SignedEnvelope::from_json(const Json& doc) {
    if (!doc.is_object() || doc.size() != 6) {
        throw Error(ErrorCode::MalformedDocument, "envelope has unexpected shape");
    }
    SignedEnvelope env;
    env.payload = get_base64(doc, "payload");
    env.signer_chain = credstore::chain_from_json(get_array(doc, "signer_chain"));
    env.timestamp = get_int(doc, "timestamp");
    env.nonce = get_base64(doc, "nonce");
    const Json& hint = require_field(doc, "target_hint");
    if (hint.is_string()) {
        env.target_hint = hint.get<std::string>();
    } else if (!hint.is_null()) {
        throw Error(ErrorCode::MalformedDocument, "target_hint must be a string or null");
    }
    env.signature = get_base64(doc, "signature");
    return env;
}

bool ReplayCache::insert(const Bytes& nonce, UnixTime now) {
    std::lock_guard lock(mu_);
    prune(now);
    std::string key(nonce.begin(), nonce.end());
    auto [it, inserted] = seen_.emplace(key, now);
    if (!inserted) {
        if (it->second + retention_ >= now) {
            return false;
        }
        it->second = now;
    }
    return true;
}

std::size_t ReplayCache::size() const {
    std::lock_guard lock(mu_);
    return seen_.size();
}

void ReplayCache::prune(UnixTime now) {
    if (now - last_prune_ < retention_ / 4 + 1) {
        return;
    }
    last_prune_ = now;
    std::erase_if(seen_, [&](const auto& kv) { return kv.second + retention_ < now; });
}

SignedEnvelope sign_envelope(const credstore::CredentialSet& cred, ByteView payload,
                             std::optional<std::string> target_hint, UnixTime now) {
    if (cred.chain.empty()) {
        throw Error(ErrorCode::BrokenChain, "credential has no certificates");
    }
    for (const auto& cert : cred.chain) {
        if (!cert.validity.contains(now)) {
            throw Error(ErrorCode::CredentialExpired, "credential not valid now: " + cert.subject);
        }
    }
    SignedEnvelope env;
    env.payload.assign(payload.begin(), payload.end());
    env.signer_chain = cred.chain;
    env.timestamp = now;
    env.nonce = crypto::random_bytes(kNonceSize);
    env.target_hint = std::move(target_hint);
    env.signature = crypto::sign(cred.private_key, env.signed_bytes());
    return env;
}

VerifiedEnvelope verify_envelope(const SignedEnvelope& env, const credstore::TrustAnchorStore& anchors,
                                 ReplayCache& replay_cache, UnixTime now, UnixTime clock_skew) {
    credstore::ValidatedIdentity who = credstore::validate_chain(env.signer_chain, anchors, now);
    if (env.nonce.size() != kNonceSize) {
        throw Error(ErrorCode::SignatureInvalid, "nonce has wrong length");
    }
    if (!crypto::verify(env.signer_chain.back().subject_public_key, env.signed_bytes(), env.signature)) {
        throw Error(ErrorCode::SignatureInvalid, "envelope signature does not verify");
    }
    const UnixTime delta = now > env.timestamp ? now - env.timestamp : env.timestamp - now;
    if (delta > clock_skew) {
        throw Error(ErrorCode::StaleTimestamp, "envelope timestamp outside the acceptance window");
    }
    if (!replay_cache.insert(env.nonce, now)) {
        throw Error(ErrorCode::ReplayDetected, "envelope nonce already seen");
    }
    return VerifiedEnvelope{env.payload, std::move(who)};
}

}  // namespace gridforge::secmsg
