#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gridforge/credstore/certificate.hpp"

namespace gridforge::credstore {

/// A certificate chain, root first, plus the leaf's signing key.
struct CredentialSet {
    Chain chain;
    Bytes private_key;

    const Certificate& leaf() const { return chain.back(); }
    const Certificate& root() const { return chain.front(); }
};

/// Self-signed CA certificates accepted as chain roots.
class TrustAnchorStore {
public:
    TrustAnchorStore() = default;
    explicit TrustAnchorStore(std::vector<Certificate> anchors);

    /// Throws Error(UntrustedRoot) unless `cert` is a correctly self-signed CA.
    void add(Certificate cert);
    bool contains(const Certificate& cert) const;
    bool empty() const { return anchors_.empty(); }
    std::vector<std::string> subjects() const;
    const std::vector<Certificate>& anchors() const { return anchors_; }

private:
    std::vector<Certificate> anchors_;
};

/// The identity a chain speaks for, after (or without) trust checks.
struct ValidatedIdentity {
    /// Subject of the nearest non-proxy certificate.
    std::string effective_identity;
    std::string leaf_subject;
    std::string root_subject;
    CertType leaf_type = CertType::EndEntity;
    DelegationDepth remaining_delegation_depth = DelegationDepth::unlimited();
    Extensions extensions;

    bool leaf_is_proxy() const { return leaf_type == CertType::Proxy; }
    bool operator==(const ValidatedIdentity&) const = default;
};

std::pair<Bytes, Bytes> generate_keypair();

CredentialSet create_ca(std::string_view name, Validity validity);

/// `depth` defaults to Unlimited; a finite value bounds the number of proxies
/// any chain below this credential may contain.
CredentialSet issue_identity(const CredentialSet& ca, std::string_view subject, Validity validity,
                             DelegationDepth depth = DelegationDepth::unlimited());

CredentialSet create_proxy(const CredentialSet& parent, Validity validity, DelegationDepth depth,
                           const Extensions& extensions = {});

/// Signs a proxy certificate for a key pair held elsewhere. Applies the same
/// clamping and depth rules as create_proxy.
Certificate sign_proxy_certificate(const CredentialSet& parent, ByteView subject_public_key, Validity validity,
                                   DelegationDepth depth, const Extensions& extensions = {});

ValidatedIdentity validate_chain(const Chain& chain, const TrustAnchorStore& anchors, UnixTime now);

/// Identity fields of a chain computed structurally, without trust or time
/// checks. Used for describing one's own credential.
ValidatedIdentity describe_chain(const Chain& chain);

/// Implicit trust between proxies issued by the same user.
bool same_user_trust(const ValidatedIdentity& a, const ValidatedIdentity& b);

// Documents on disk: one JSON certificate per file, chains as JSON arrays,
// private keys in a separate file written with mode 0600.
void save_certificate(const std::filesystem::path& path, const Certificate& cert);
Certificate load_certificate(const std::filesystem::path& path);
void save_credential(const std::filesystem::path& chain_path, const std::filesystem::path& key_path,
                     const CredentialSet& cred);
CredentialSet load_credential(const std::filesystem::path& chain_path, const std::filesystem::path& key_path);
/// Loads every `*.json` certificate in `dir`.
TrustAnchorStore load_trust_anchors(const std::filesystem::path& dir);

}  // namespace gridforge::credstore
