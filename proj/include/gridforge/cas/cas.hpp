#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

#include "gridforge/cas/right.hpp"
#include "gridforge/credstore/credential.hpp"

namespace gridforge::cas {

inline constexpr UnixTime kDefaultAssertionLifetime = 10 * kMinute;
/// Local-policy key prefix meaning "any holder of a valid assertion from this VO".
inline constexpr std::string_view kVoKeyPrefix = "VO:";

/// A signed statement of the rights a VO grants one grid identity.
struct CasAssertion {
    std::string subject;
    std::string vo_name;
    RightSet rights;
    Validity validity;
    credstore::Chain cas_chain;
    Bytes cas_signature;

    Bytes canonical_body() const;
    Json to_json() const;
    static CasAssertion from_json(const Json& doc);
};

/// How a resource recognizes its CAS: a trust root plus the CAS's pinned identity.
struct CasTrust {
    credstore::TrustAnchorStore anchors;
    std::string cas_identity;
};

/// Grants, keyed by grid identity (CAS side) or by identity / "VO:<name>"
/// (resource side). One line per grant on disk: `<key> <resource> <action>`.
using PolicyGrants = std::map<std::string, RightSet>;

PolicyGrants parse_policy(std::string_view text);
std::string serialize_policy(const PolicyGrants& grants);
PolicyGrants load_policy_file(const std::filesystem::path& path);
void save_policy_file(const std::filesystem::path& path, const PolicyGrants& grants);

struct VoPolicyStore {
    std::string vo_name;
    PolicyGrants grants;
};

VoPolicyStore cas_grant(VoPolicyStore store, std::string_view subject, const Right& right);
VoPolicyStore cas_revoke(VoPolicyStore store, std::string_view subject, const Right& right);

/// Rights = grants[requester] ∩ requested (all grants when `requested` is absent).
CasAssertion cas_issue(const VoPolicyStore& store, const credstore::ValidatedIdentity& requester,
                       const std::optional<RightSet>& requested, Validity validity,
                       const credstore::CredentialSet& cas_cred);

RightSet cas_verify(const CasAssertion& assertion, const CasTrust& trust, UnixTime now);

enum class DecisionReason { Granted, DeniedLocal, DeniedVO, AssertionExpired, AssertionInvalid, NoAssertion };

std::string_view to_string(DecisionReason reason);

struct PolicyDecision {
    bool allowed = false;
    DecisionReason reason = DecisionReason::DeniedLocal;
};

/// Resource-side decision: the local entry is the ultimate authority; a "VO:"
/// entry additionally requires the request to fall within a valid assertion
/// for the requester, so the effective rights are local ∩ VO.
PolicyDecision authorize(const PolicyGrants& local_policy, const std::optional<CasAssertion>& assertion,
                         const credstore::ValidatedIdentity& requester, const Right& request, UnixTime now,
                         const CasTrust& trust);

/// Thread-safe wrapper for a VO's policy: concurrent issuance, serialized
/// administration, optional persistence after every change.
class CasPolicyService {
public:
    CasPolicyService(VoPolicyStore store, credstore::CredentialSet cas_cred,
                     std::optional<std::filesystem::path> persist_path = std::nullopt);

    void grant(std::string_view subject, const Right& right);
    void revoke(std::string_view subject, const Right& right);
    CasAssertion issue(const credstore::ValidatedIdentity& requester, const std::optional<RightSet>& requested,
                       UnixTime now, UnixTime lifetime = kDefaultAssertionLifetime) const;
    VoPolicyStore snapshot() const;
    const credstore::CredentialSet& credential() const { return cas_cred_; }

private:
    mutable std::shared_mutex mu_;
    VoPolicyStore store_;
    credstore::CredentialSet cas_cred_;
    std::optional<std::filesystem::path> persist_path_;
};

}  // namespace gridforge::cas
