#include "gridforge/secmsg/policy.hpp"

#include <algorithm>

#include "gridforge/common/error.hpp"

namespace gridforge::secmsg {

std::string_view to_string(MessageMode mode) {
    return mode == MessageMode::Context ? "Context" : "StatelessSigned";
}

Json PolicyDescriptor::to_json() const {
    return Json{{"service_name", service_name},
                {"accepted_trust_roots", accepted_trust_roots},
                {"required_message_mode", to_string(required_message_mode)},
                {"required_assertion", required_assertion ? Json(*required_assertion) : Json(nullptr)}};
}

PolicyDescriptor PolicyDescriptor::from_json(const Json& doc) {
    PolicyDescriptor p;
    p.service_name = get_string(doc, "service_name");
    for (const auto& root : get_array(doc, "accepted_trust_roots")) {
        if (!root.is_string()) {
            throw Error(ErrorCode::MalformedDocument, "trust root is not a string");
        }
        p.accepted_trust_roots.push_back(root.get<std::string>());
    }
    if (p.accepted_trust_roots.empty()) {
        throw Error(ErrorCode::MalformedDocument, "policy lists no trust roots");
    }
    const std::string mode = get_string(doc, "required_message_mode");
    if (mode == "Context") {
        p.required_message_mode = MessageMode::Context;
    } else if (mode == "StatelessSigned") {
        p.required_message_mode = MessageMode::StatelessSigned;
    } else {
        throw Error(ErrorCode::MalformedDocument, "unknown message mode " + mode);
    }
    const Json& vo = require_field(doc, "required_assertion");
    if (vo.is_string()) {
        p.required_assertion = vo.get<std::string>();
    } else if (!vo.is_null()) {
        throw Error(ErrorCode::MalformedDocument, "required_assertion must be a string or null");
    }
    return p;
}

MechanismPlan select_mechanism(const PolicyDescriptor& policy, const std::vector<credstore::CredentialSet>& available,
                               const std::vector<cas::CasAssertion>& assertions, UnixTime now) {
    const credstore::CredentialSet* best = nullptr;
    const cas::CasAssertion* best_assertion = nullptr;

    for (const auto& cred : available) {
        if (cred.chain.empty()) continue;
        const auto& roots = policy.accepted_trust_roots;
        if (std::find(roots.begin(), roots.end(), cred.root().subject) == roots.end()) continue;
        const bool valid_now = std::all_of(cred.chain.begin(), cred.chain.end(),
                                           [&](const auto& c) { return c.validity.contains(now); });
        if (!valid_now) continue;

        const cas::CasAssertion* match = nullptr;
        if (policy.required_assertion) {
            const std::string user = credstore::describe_chain(cred.chain).effective_identity;
            for (const auto& a : assertions) {
                if (a.vo_name == *policy.required_assertion && a.subject == user && a.validity.contains(now)) {
                    match = &a;
                    break;
                }
            }
            if (!match) continue;
        }

        const bool better = !best || cred.leaf().validity.not_after > best->leaf().validity.not_after ||
                            (cred.leaf().validity.not_after == best->leaf().validity.not_after &&
                             cred.leaf().subject < best->leaf().subject);
        if (better) {
            best = &cred;
            best_assertion = match;
        }
    }

    if (!best) {
        throw Error(ErrorCode::NoSatisfyingCredential, "no credential satisfies policy of " + policy.service_name);
    }
    MechanismPlan plan{*best, policy.required_message_mode, std::nullopt};
    if (best_assertion) {
        plan.assertion = *best_assertion;
    }
    return plan;
}

}  // namespace gridforge::secmsg
