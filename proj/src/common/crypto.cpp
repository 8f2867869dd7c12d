#include "gridforge/common/crypto.hpp"

#include <sodium.h>

#include <chrono>
#include <cstring>
#include <mutex>
#include <stdexcept>

#include "gridforge/common/error.hpp"
#include "gridforge/common/time.hpp"

namespace gridforge {

UnixTime system_now() {
    using namespace std::chrono;
    return duration_cast<seconds>(system_clock::now().time_since_epoch()).count();
}

std::string hex_encode(ByteView data) {
    std::string out(data.size() * 2 + 1, '\0');
    sodium_bin2hex(out.data(), out.size(), data.data(), data.size());
    out.pop_back();
    return out;
}

Bytes hex_decode(std::string_view text) {
    if (text.size() % 2 != 0) {
        throw Error(ErrorCode::MalformedDocument, "odd-length hex");
    }
    Bytes out;
    out.reserve(text.size() / 2);
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    for (std::size_t i = 0; i < text.size(); i += 2) {
        int hi = nibble(text[i]);
        int lo = nibble(text[i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(ErrorCode::MalformedDocument, "invalid hex digit");
        }
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

std::string base64_encode(ByteView data) {
    crypto::ensure_initialized();
    const std::size_t len = sodium_base64_encoded_len(data.size(), sodium_base64_VARIANT_ORIGINAL);
    std::string out(len, '\0');
    sodium_bin2base64(out.data(), out.size(), data.data(), data.size(), sodium_base64_VARIANT_ORIGINAL);
    out.resize(std::strlen(out.c_str()));
    return out;
}

Bytes base64_decode(std::string_view text) {
    crypto::ensure_initialized();
    Bytes out(text.size() / 4 * 3 + 3);
    std::size_t out_len = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &out_len, &end,
                          sodium_base64_VARIANT_ORIGINAL) != 0 ||
        end != text.data() + text.size()) {
        throw Error(ErrorCode::MalformedDocument, "invalid base64");
    }
    out.resize(out_len);
    // Reject non-canonical encodings so every distinct text maps to distinct bytes.
    if (base64_encode(out) != text) {
        throw Error(ErrorCode::MalformedDocument, "non-canonical base64");
    }
    return out;
}

namespace crypto {

void ensure_initialized() {
    static std::once_flag once;
    std::call_once(once, [] {
        if (sodium_init() < 0) {
            throw std::runtime_error("libsodium initialization failed");
        }
    });
}

SigningKeyPair generate_signing_keypair() {
    ensure_initialized();
    SigningKeyPair kp{Bytes(crypto_sign_SECRETKEYBYTES), Bytes(crypto_sign_PUBLICKEYBYTES)};
    crypto_sign_keypair(kp.public_key.data(), kp.secret_key.data());
    return kp;
}

Bytes sign(ByteView secret_key, ByteView message) {
    ensure_initialized();
    if (secret_key.size() != crypto_sign_SECRETKEYBYTES) {
        throw Error(ErrorCode::MalformedDocument, "signing key has wrong length");
    }
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key.data());
    return sig;
}

bool verify(ByteView public_key, ByteView message, ByteView signature) noexcept {
    ensure_initialized();
    if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES) {
        return false;
    }
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), public_key.data()) == 0;
}

Bytes public_key_of(ByteView secret_key) {
    if (secret_key.size() != crypto_sign_SECRETKEYBYTES) {
        throw Error(ErrorCode::MalformedDocument, "signing key has wrong length");
    }
    Bytes pk(crypto_sign_PUBLICKEYBYTES);
    crypto_sign_ed25519_sk_to_pk(pk.data(), secret_key.data());
    return pk;
}

AgreementKeyPair generate_agreement_keypair() {
    ensure_initialized();
    AgreementKeyPair kp{Bytes(crypto_scalarmult_SCALARBYTES), Bytes(crypto_scalarmult_BYTES)};
    randombytes_buf(kp.secret_key.data(), kp.secret_key.size());
    crypto_scalarmult_base(kp.public_key.data(), kp.secret_key.data());
    return kp;
}

Bytes agree(ByteView secret_key, ByteView peer_public_key) {
    ensure_initialized();
    if (secret_key.size() != crypto_scalarmult_SCALARBYTES || peer_public_key.size() != crypto_scalarmult_BYTES) {
        throw Error(ErrorCode::TranscriptMismatch, "key agreement input has wrong length");
    }
    Bytes shared(crypto_scalarmult_BYTES);
    if (crypto_scalarmult(shared.data(), secret_key.data(), peer_public_key.data()) != 0) {
        throw Error(ErrorCode::TranscriptMismatch, "degenerate key agreement public key");
    }
    return shared;
}

Digest sha256(ByteView data) {
    ensure_initialized();
    Digest d{};
    crypto_hash_sha256(d.data(), data.data(), data.size());
    return d;
}

Digest hmac_sha256(ByteView key, ByteView data) {
    ensure_initialized();
    crypto_auth_hmacsha256_state st;
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, data.data(), data.size());
    Digest d{};
    crypto_auth_hmacsha256_final(&st, d.data());
    return d;
}

Bytes hkdf_sha256(ByteView input_key, ByteView salt, ByteView info, std::size_t length) {
    if (length > 255 * kDigestSize) {
        throw std::invalid_argument("hkdf output too long");
    }
    Bytes zero_salt(kDigestSize, 0);
    const Digest prk = hmac_sha256(salt.empty() ? ByteView(zero_salt) : salt, input_key);

    Bytes out;
    Bytes block;
    for (std::uint8_t counter = 1; out.size() < length; ++counter) {
        Bytes input(block);
        input.insert(input.end(), info.begin(), info.end());
        input.push_back(counter);
        const Digest t = hmac_sha256(prk, input);
        block.assign(t.begin(), t.end());
        out.insert(out.end(), block.begin(), block.end());
    }
    out.resize(length);
    return out;
}

Bytes random_bytes(std::size_t n) {
    ensure_initialized();
    Bytes out(n);
    randombytes_buf(out.data(), n);
    return out;
}

std::uint64_t random_u64() {
    ensure_initialized();
    std::uint64_t v = 0;
    randombytes_buf(&v, sizeof v);
    return v;
}

namespace {

std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> sequence_nonce(std::uint64_t sequence) {
    std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> nonce{};
    for (int i = 0; i < 8; ++i) {
        nonce[nonce.size() - 1 - i] = static_cast<std::uint8_t>(sequence >> (8 * i));
    }
    return nonce;
}

}  // namespace

Sealed aead_seal(ByteView key, std::uint64_t sequence, ByteView plaintext, ByteView associated) {
    ensure_initialized();
    if (key.size() != crypto_aead_chacha20poly1305_ietf_KEYBYTES) {
        throw std::invalid_argument("aead key has wrong length");
    }
    const auto nonce = sequence_nonce(sequence);
    Sealed out{Bytes(plaintext.size()), Bytes(crypto_aead_chacha20poly1305_ietf_ABYTES)};
    unsigned long long tag_len = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt_detached(out.ciphertext.data(), out.tag.data(), &tag_len,
                                                       plaintext.data(), plaintext.size(), associated.data(),
                                                       associated.size(), nullptr, nonce.data(), key.data());
    out.tag.resize(tag_len);
    return out;
}

bool aead_open(ByteView key, std::uint64_t sequence, ByteView ciphertext, ByteView tag, ByteView associated,
               Bytes& plaintext_out) {
    ensure_initialized();
    if (key.size() != crypto_aead_chacha20poly1305_ietf_KEYBYTES ||
        tag.size() != crypto_aead_chacha20poly1305_ietf_ABYTES) {
        return false;
    }
    const auto nonce = sequence_nonce(sequence);
    Bytes plain(ciphertext.size());
    if (crypto_aead_chacha20poly1305_ietf_decrypt_detached(plain.data(), nullptr, ciphertext.data(),
                                                           ciphertext.size(), tag.data(), associated.data(),
                                                           associated.size(), nonce.data(), key.data()) != 0) {
        return false;
    }
    plaintext_out = std::move(plain);
    return true;
}

bool constant_time_equal(ByteView a, ByteView b) noexcept {
    return a.size() == b.size() && sodium_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace crypto
}  // namespace gridforge
