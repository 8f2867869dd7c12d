#include "gridforge/cas/cas.hpp"

#include <fstream>
#include <mutex>
#include <sstream>
#include <vector>

#include "gridforge/common/canonical.hpp"
#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"

namespace gridforge::cas {

namespace {

std::vector<std::string> right_strings(const RightSet& rights) {
    std::vector<std::string> out;
    for (const auto& r : rights) {
        out.push_back(r.resource + "\n" + r.action);
    }
    return out;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

Bytes CasAssertion::canonical_body() const {
    CanonicalEncoder chain;
    std::vector<Bytes> certs;
    for (const auto& c : cas_chain) {
        Bytes item = c.canonical_body();
        item.insert(item.end(), c.signature.begin(), c.signature.end());
        certs.push_back(std::move(item));
    }
    CanonicalEncoder enc;
    enc.add_string("purpose", "gridforge/cas-assertion/v1")
        .add_string("subject", subject)
        .add_string("vo_name", vo_name)
        .add_string_list("rights", right_strings(rights))
        .add_int("not_before", validity.not_before)
        .add_int("not_after", validity.not_after)
        .add_bytes_list("cas_chain", certs);
    return enc.encode();
}

Json CasAssertion::to_json() const {
    Json rights_doc = Json::array();
    for (const auto& r : rights) {
        rights_doc.push_back(Json{{"resource", r.resource}, {"action", r.action}});
    }
    return Json{{"subject", subject},
                {"vo_name", vo_name},
                {"rights", rights_doc},
                {"not_before", validity.not_before},
                {"not_after", validity.not_after},
                {"cas_chain", credstore::chain_to_json(cas_chain)},
                {"cas_signature", base64_encode(cas_signature)}};
}

CasAssertion CasAssertion::from_json(const Json& doc) {
    if (!doc.is_object() || doc.size() != 7) {
        throw Error(ErrorCode::MalformedDocument, "assertion has unexpected shape");
    }
    CasAssertion a;
    a.subject = get_string(doc, "subject");
    a.vo_name = get_string(doc, "vo_name");
    for (const auto& r : get_array(doc, "rights")) {
        if (!r.is_object() || r.size() != 2) {
            throw Error(ErrorCode::MalformedDocument, "right has unexpected shape");
        }
        a.rights.insert(Right::make(get_string(r, "resource"), get_string(r, "action")));
    }
    a.validity = {get_int(doc, "not_before"), get_int(doc, "not_after")};
    a.cas_chain = credstore::chain_from_json(get_array(doc, "cas_chain"));
    a.cas_signature = get_base64(doc, "cas_signature");
    return a;
}

PolicyGrants parse_policy(std::string_view text) {
    PolicyGrants grants;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        const auto action_sep = line.find_last_of(" \t");
        if (action_sep == std::string_view::npos) {
            throw Error(ErrorCode::ParseError, "expected '<key> <resource> <action>'", line_no);
        }
        const std::string_view action = line.substr(action_sep + 1);
        std::string_view rest = trim(line.substr(0, action_sep));
        const auto resource_sep = rest.find_last_of(" \t");
        if (resource_sep == std::string_view::npos) {
            throw Error(ErrorCode::ParseError, "expected '<key> <resource> <action>'", line_no);
        }
        const std::string_view resource = rest.substr(resource_sep + 1);
        std::string_view key = trim(rest.substr(0, resource_sep));
        if (key.size() >= 2 && key.front() == '"' && key.back() == '"') {
            key = key.substr(1, key.size() - 2);
        }
        if (key.empty()) {
            throw Error(ErrorCode::ParseError, "empty policy key", line_no);
        }
        try {
            grants[std::string(key)].insert(Right::make(resource, action));
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, e.detail(), line_no);
        }
    }
    return grants;
}

std::string serialize_policy(const PolicyGrants& grants) {
    std::ostringstream out;
    for (const auto& [key, rights] : grants) {
        for (const auto& r : rights) {
            out << key << ' ' << r.resource << ' ' << r.action << '\n';
        }
    }
    return out.str();
}

PolicyGrants load_policy_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read policy file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_policy(ss.str());
}

void save_policy_file(const std::filesystem::path& path, const PolicyGrants& grants) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoError, "cannot write policy file " + tmp.string());
        }
        out << serialize_policy(grants);
    }
    std::filesystem::rename(tmp, path);
}

VoPolicyStore cas_grant(VoPolicyStore store, std::string_view subject, const Right& right) {
    right.check();
    store.grants[std::string(subject)].insert(right);
    return store;
}

VoPolicyStore cas_revoke(VoPolicyStore store, std::string_view subject, const Right& right) {
    right.check();
    auto it = store.grants.find(std::string(subject));
    if (it != store.grants.end()) {
        it->second.erase(right);
        if (it->second.empty()) {
            store.grants.erase(it);
        }
    }
    return store;
}

CasAssertion cas_issue(const VoPolicyStore& store, const credstore::ValidatedIdentity& requester,
                       const std::optional<RightSet>& requested, Validity validity,
                       const credstore::CredentialSet& cas_cred) {
    if (validity.not_before >= validity.not_after) {
        throw Error(ErrorCode::InvalidValidity, "assertion validity is empty");
    }
    auto it = store.grants.find(requester.effective_identity);
    RightSet rights;
    if (it != store.grants.end()) {
        rights = requested ? intersect_rights(it->second, *requested) : it->second;
    }
    if (rights.empty()) {
        throw Error(ErrorCode::NoRightsGranted, "no VO rights for " + requester.effective_identity);
    }
    CasAssertion a;
    a.subject = requester.effective_identity;
    a.vo_name = store.vo_name;
    a.rights = std::move(rights);
    a.validity = validity;
    a.cas_chain = cas_cred.chain;
    a.cas_signature = crypto::sign(cas_cred.private_key, a.canonical_body());
    return a;
}

RightSet cas_verify(const CasAssertion& assertion, const CasTrust& trust, UnixTime now) {
    credstore::ValidatedIdentity signer;
    try {
        signer = credstore::validate_chain(assertion.cas_chain, trust.anchors, now);
    } catch (const Error& e) {
        throw Error(ErrorCode::AssertionInvalid, std::string("CAS chain rejected: ") + e.what());
    }
    if (signer.effective_identity != trust.cas_identity) {
        throw Error(ErrorCode::AssertionInvalid, "assertion not issued by the trusted CAS");
    }
    if (!crypto::verify(assertion.cas_chain.back().subject_public_key, assertion.canonical_body(),
                        assertion.cas_signature)) {
        throw Error(ErrorCode::AssertionInvalid, "assertion signature does not verify");
    }
    if (assertion.rights.empty()) {
        throw Error(ErrorCode::AssertionInvalid, "assertion carries no rights");
    }
    if (!assertion.validity.contains(now)) {
        throw Error(ErrorCode::AssertionExpired, "assertion outside its validity period");
    }
    return assertion.rights;
}

std::string_view to_string(DecisionReason reason) {
    switch (reason) {
        case DecisionReason::Granted:
            return "Granted";
        case DecisionReason::DeniedLocal:
            return "DeniedLocal";
        case DecisionReason::DeniedVO:
            return "DeniedVO";
        case DecisionReason::AssertionExpired:
            return "AssertionExpired";
        case DecisionReason::AssertionInvalid:
            return "AssertionInvalid";
        case DecisionReason::NoAssertion:
            return "NoAssertion";
    }
    return "?";
}

PolicyDecision authorize(const PolicyGrants& local_policy, const std::optional<CasAssertion>& assertion,
                         const credstore::ValidatedIdentity& requester, const Right& request, UnixTime now,
                         const CasTrust& trust) {
    auto deny = [](DecisionReason r) { return PolicyDecision{false, r}; };

    if (auto it = local_policy.find(requester.effective_identity);
        it != local_policy.end() && rights_match(it->second, request)) {
        return PolicyDecision{true, DecisionReason::Granted};
    }

    bool any_vo_entry = false;
    for (const auto& [key, rights] : local_policy) {
        if (key.starts_with(kVoKeyPrefix) && rights_match(rights, request)) {
            any_vo_entry = true;
            break;
        }
    }
    if (!any_vo_entry) {
        return deny(DecisionReason::DeniedLocal);
    }
    if (!assertion) {
        return deny(DecisionReason::NoAssertion);
    }

    RightSet vo_rights;
    try {
        vo_rights = cas_verify(*assertion, trust, now);
    } catch (const Error& e) {
        return deny(e.code() == ErrorCode::AssertionExpired ? DecisionReason::AssertionExpired
                                                            : DecisionReason::AssertionInvalid);
    }
    if (assertion->subject != requester.effective_identity) {
        return deny(DecisionReason::AssertionInvalid);
    }
    auto vo_entry = local_policy.find(std::string(kVoKeyPrefix) + assertion->vo_name);
    if (vo_entry == local_policy.end() || !rights_match(vo_entry->second, request)) {
        return deny(DecisionReason::DeniedLocal);
    }
    if (!rights_match(vo_rights, request)) {
        return deny(DecisionReason::DeniedVO);
    }
    return PolicyDecision{true, DecisionReason::Granted};
}

CasPolicyService::CasPolicyService(VoPolicyStore store, credstore::CredentialSet cas_cred,
                                   std::optional<std::filesystem::path> persist_path)
    : store_(std::move(store)), cas_cred_(std::move(cas_cred)), persist_path_(std::move(persist_path)) {}

void CasPolicyService::grant(std::string_view subject, const Right& right) {
    std::unique_lock lock(mu_);
    store_ = cas_grant(std::move(store_), subject, right);
    if (persist_path_) save_policy_file(*persist_path_, store_.grants);
}

void CasPolicyService::revoke(std::string_view subject, const Right& right) {
    std::unique_lock lock(mu_);
    store_ = cas_revoke(std::move(store_), subject, right);
    if (persist_path_) save_policy_file(*persist_path_, store_.grants);
}

CasAssertion CasPolicyService::issue(const credstore::ValidatedIdentity& requester,
                                     const std::optional<RightSet>& requested, UnixTime now,
                                     UnixTime lifetime) const {
    std::shared_lock lock(mu_);
    return cas_issue(store_, requester, requested, Validity::starting(now, lifetime), cas_cred_);
}

VoPolicyStore CasPolicyService::snapshot() const {
    std::shared_lock lock(mu_);
    return store_;
}

}  // namespace gridforge::cas
