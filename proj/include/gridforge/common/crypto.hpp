#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "gridforge/common/bytes.hpp"

// Thin wrappers over libsodium. Signatures are Ed25519 (deterministic),
// key agreement is X25519, message protection is ChaCha20-Poly1305 (IETF).
namespace gridforge::crypto {

inline constexpr std::string_view kSignatureScheme = "ed25519";
inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kSymmetricKeySize = 32;

using Digest = std::array<std::uint8_t, kDigestSize>;

struct SigningKeyPair {
    Bytes secret_key;
    Bytes public_key;
};

struct AgreementKeyPair {
    Bytes secret_key;
    Bytes public_key;
};

void ensure_initialized();

SigningKeyPair generate_signing_keypair();
Bytes sign(ByteView secret_key, ByteView message);
bool verify(ByteView public_key, ByteView message, ByteView signature) noexcept;
/// Public key embedded in an Ed25519 secret key.
Bytes public_key_of(ByteView secret_key);

AgreementKeyPair generate_agreement_keypair();
/// X25519 shared secret; throws Error(TranscriptMismatch) on a degenerate peer key.
Bytes agree(ByteView secret_key, ByteView peer_public_key);

Digest sha256(ByteView data);
Digest hmac_sha256(ByteView key, ByteView data);
/// HKDF-SHA256 (extract then expand) producing `length` bytes.
Bytes hkdf_sha256(ByteView input_key, ByteView salt, ByteView info, std::size_t length);

Bytes random_bytes(std::size_t n);
std::uint64_t random_u64();

/// AEAD with detached tag. The 12-byte nonce is derived from `sequence`.
struct Sealed {
    Bytes ciphertext;
    Bytes tag;
};
Sealed aead_seal(ByteView key, std::uint64_t sequence, ByteView plaintext, ByteView associated);
/// Returns false when the tag does not verify.
bool aead_open(ByteView key, std::uint64_t sequence, ByteView ciphertext, ByteView tag, ByteView associated,
               Bytes& plaintext_out);

bool constant_time_equal(ByteView a, ByteView b) noexcept;

}  // namespace gridforge::crypto
