#include "gridforge/credstore/credential.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"

namespace gridforge::credstore {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSerialMask = (std::uint64_t{1} << 62) - 1;

std::uint64_t fresh_serial() { return (crypto::random_u64() & kSerialMask) | 1; }

void sign_certificate(Certificate& cert, ByteView issuer_secret_key) {
    cert.signature_scheme = std::string(crypto::kSignatureScheme);
    cert.signature = crypto::sign(issuer_secret_key, cert.canonical_body());
}

bool signature_valid(const Certificate& cert, const Certificate& issuer) {
    return cert.signature_scheme == crypto::kSignatureScheme &&
           crypto::verify(issuer.subject_public_key, cert.canonical_body(), cert.signature);
}

void check_validity(Validity v) {
    if (v.not_before >= v.not_after) {
        throw Error(ErrorCode::InvalidValidity, "not_before must precede not_after");
    }
}

}  // namespace

TrustAnchorStore::TrustAnchorStore(std::vector<Certificate> anchors) {
    for (auto& a : anchors) {
        add(std::move(a));
    }
}

void TrustAnchorStore::add(Certificate cert) {
    if (cert.type != CertType::CA || !cert.self_signed() || !signature_valid(cert, cert)) {
        throw Error(ErrorCode::UntrustedRoot, "trust anchor must be a self-signed CA: " + cert.subject);
    }
    if (!contains(cert)) {
        anchors_.push_back(std::move(cert));
    }
}

bool TrustAnchorStore::contains(const Certificate& cert) const {
    return std::find(anchors_.begin(), anchors_.end(), cert) != anchors_.end();
}

std::vector<std::string> TrustAnchorStore::subjects() const {
    std::vector<std::string> out;
    for (const auto& a : anchors_) {
        out.push_back(a.subject);
    }
    return out;
}

std::pair<Bytes, Bytes> generate_keypair() {
    auto kp = crypto::generate_signing_keypair();
    return {std::move(kp.secret_key), std::move(kp.public_key)};
}

CredentialSet create_ca(std::string_view name, Validity validity) {
    if (name.empty()) {
        throw Error(ErrorCode::InvalidName, "CA name is empty");
    }
    check_validity(validity);
    auto [secret, pub] = generate_keypair();
    Certificate cert;
    cert.serial = fresh_serial();
    cert.subject = std::string(name);
    cert.issuer = cert.subject;
    cert.subject_public_key = std::move(pub);
    cert.validity = validity;
    cert.type = CertType::CA;
    sign_certificate(cert, secret);
    return CredentialSet{{std::move(cert)}, std::move(secret)};
}

CredentialSet issue_identity(const CredentialSet& ca, std::string_view subject, Validity validity,
                             DelegationDepth depth) {
    if (subject.empty()) {
        throw Error(ErrorCode::InvalidName, "subject is empty");
    }
    if (ca.chain.empty() || ca.leaf().type != CertType::CA) {
        throw Error(ErrorCode::NotACA, "issuer credential is not a CA");
    }
    check_validity(validity);
    if (!validity.within(ca.leaf().validity)) {
        throw Error(ErrorCode::ValidityExceedsIssuer, "requested validity exceeds the CA's");
    }
    auto [secret, pub] = generate_keypair();
    Certificate cert;
    cert.serial = fresh_serial();
    cert.subject = std::string(subject);
    cert.issuer = ca.leaf().subject;
    cert.subject_public_key = std::move(pub);
    cert.validity = validity;
    cert.type = CertType::EndEntity;
    cert.max_delegation_depth = depth;
    sign_certificate(cert, ca.private_key);

    CredentialSet out{ca.chain, std::move(secret)};
    out.chain.push_back(std::move(cert));
    return out;
}

Certificate sign_proxy_certificate(const CredentialSet& parent, ByteView subject_public_key, Validity validity,
                                   DelegationDepth depth, const Extensions& extensions) {
    if (parent.chain.empty()) {
        throw Error(ErrorCode::BrokenChain, "parent credential has no certificates");
    }
    const Certificate& pleaf = parent.leaf();
    if (pleaf.type == CertType::CA) {
        throw Error(ErrorCode::InvalidState, "proxies derive from end-entity or proxy credentials");
    }
    check_validity(validity);

    const DelegationDepth remaining = describe_chain(parent.chain).remaining_delegation_depth;
    if (!remaining.allows_delegation()) {
        throw Error(ErrorCode::DelegationDepthExhausted, "parent credential may not delegate further");
    }

    Validity clamped{std::max(validity.not_before, pleaf.validity.not_before),
                     std::min(validity.not_after, pleaf.validity.not_after)};
    if (clamped.not_before >= clamped.not_after) {
        throw Error(ErrorCode::ParentExpired, "parent credential is not valid during the requested interval");
    }

    Certificate cert;
    cert.serial = fresh_serial();
    cert.subject = proxy_subject(pleaf.subject, cert.serial);
    cert.issuer = pleaf.subject;
    cert.subject_public_key.assign(subject_public_key.begin(), subject_public_key.end());
    cert.validity = clamped;
    cert.type = CertType::Proxy;
    cert.max_delegation_depth = min(depth, remaining.decremented());
    cert.extensions = extensions;
    sign_certificate(cert, parent.private_key);
    return cert;
}

CredentialSet create_proxy(const CredentialSet& parent, Validity validity, DelegationDepth depth,
                           const Extensions& extensions) {
    auto [secret, pub] = generate_keypair();
    Certificate cert = sign_proxy_certificate(parent, pub, validity, depth, extensions);
    CredentialSet out{parent.chain, std::move(secret)};
    out.chain.push_back(std::move(cert));
    return out;
}

ValidatedIdentity describe_chain(const Chain& chain) {
    if (chain.empty()) {
        throw Error(ErrorCode::BrokenChain, "empty chain", 0);
    }
    ValidatedIdentity id;
    id.root_subject = chain.front().subject;
    id.leaf_subject = chain.back().subject;
    id.leaf_type = chain.back().type;
    id.extensions = chain.back().extensions;
    DelegationDepth remaining = DelegationDepth::unlimited();
    for (const auto& cert : chain) {
        if (cert.type != CertType::Proxy) {
            id.effective_identity = cert.subject;
        } else {
            remaining = remaining.decremented();
        }
        if (cert.max_delegation_depth) {
            remaining = min(remaining, *cert.max_delegation_depth);
        }
    }
    id.remaining_delegation_depth = remaining;
    return id;
}

ValidatedIdentity validate_chain(const Chain& chain, const TrustAnchorStore& anchors, UnixTime now) {
    if (chain.empty()) {
        throw Error(ErrorCode::BrokenChain, "empty chain", 0);
    }
    const Certificate& root = chain.front();
    if (!anchors.contains(root)) {
        throw Error(ErrorCode::UntrustedRoot, "root '" + root.subject + "' is not a trust anchor");
    }

    DelegationDepth remaining = DelegationDepth::unlimited();
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const Certificate& cert = chain[i];
        const Certificate& issuer = i == 0 ? cert : chain[i - 1];

        if (i == 0) {
            if (cert.type != CertType::CA || !cert.self_signed()) {
                throw Error(ErrorCode::BrokenChain, "root is not a self-signed CA", i);
            }
        } else {
            const bool parent_ok = cert.type == CertType::EndEntity
                                       ? issuer.type == CertType::CA
                                       : cert.type == CertType::Proxy && issuer.type != CertType::CA;
            if (!parent_ok || cert.issuer != issuer.subject) {
                throw Error(ErrorCode::BrokenChain, "certificate is not linked to its predecessor", i);
            }
        }
        if ((cert.type == CertType::CA) == cert.max_delegation_depth.has_value()) {
            throw Error(ErrorCode::BrokenChain, "delegation depth present on wrong certificate type", i);
        }
        if (!signature_valid(cert, issuer)) {
            throw Error(ErrorCode::SignatureInvalid, "signature does not verify", i);
        }
        if (cert.validity.not_before >= cert.validity.not_after || !cert.validity.contains(now)) {
            throw Error(ErrorCode::Expired, "certificate not valid at the current time", i);
        }
        if (cert.type == CertType::Proxy) {
            if (cert.subject != proxy_subject(issuer.subject, cert.serial)) {
                throw Error(ErrorCode::ProxyNamingViolation, "proxy subject does not follow its issuer", i);
            }
            if (!remaining.allows_delegation()) {
                throw Error(ErrorCode::DepthViolation, "delegation depth exceeded", i);
            }
            remaining = remaining.decremented();
        }
        if (cert.max_delegation_depth) {
            remaining = min(remaining, *cert.max_delegation_depth);
        }
    }
    return describe_chain(chain);
}

bool same_user_trust(const ValidatedIdentity& a, const ValidatedIdentity& b) {
    return a.leaf_is_proxy() && b.leaf_is_proxy() && a.effective_identity == b.effective_identity;
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content, bool restrictive) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    out << content << '\n';
    out.close();
    if (restrictive) {
        fs::permissions(path, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
    }
}

}  // namespace

void save_certificate(const fs::path& path, const Certificate& cert) {
    write_file(path, cert.to_json().dump(2), false);
}

Certificate load_certificate(const fs::path& path) { return Certificate::from_json(parse_document(read_file(path))); }

void save_credential(const fs::path& chain_path, const fs::path& key_path, const CredentialSet& cred) {
    write_file(chain_path, Json{{"chain", chain_to_json(cred.chain)}}.dump(2), false);
    write_file(key_path, Json{{"private_key", base64_encode(cred.private_key)}}.dump(2), true);
}

CredentialSet load_credential(const fs::path& chain_path, const fs::path& key_path) {
    CredentialSet cred;
    cred.chain = chain_from_json(get_array(parse_document(read_file(chain_path)), "chain"));
    cred.private_key = get_base64(parse_document(read_file(key_path)), "private_key");
    if (cred.chain.empty()) {
        throw Error(ErrorCode::MalformedDocument, "credential chain is empty");
    }
    if (!crypto::constant_time_equal(crypto::public_key_of(cred.private_key), cred.leaf().subject_public_key)) {
        throw Error(ErrorCode::MalformedDocument, "private key does not match the leaf certificate");
    }
    return cred;
}

TrustAnchorStore load_trust_anchors(const fs::path& dir) {
    if (!fs::is_directory(dir)) {
        throw Error(ErrorCode::IoError, "trust anchor directory missing: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    TrustAnchorStore store;
    for (const auto& f : files) {
        store.add(load_certificate(f));
    }
    return store;
}

}  // namespace gridforge::credstore
