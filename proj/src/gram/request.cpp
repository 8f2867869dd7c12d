#include "gridforge/gram/request.hpp"

#include "gridforge/common/error.hpp"

namespace gridforge::gram {

Json SubmitRequest::to_json() const {
    Json headers{{"declared_identity", declared_identity},
                 {"account", account ? Json(*account) : Json(nullptr)},
                 {"cas_assertion", assertion ? assertion->to_json() : Json(nullptr)}};
    return Json{{"headers", headers}, {"job", job.to_json()}};
}

SubmitRequest SubmitRequest::from_json(const Json& doc) {
    SubmitRequest r;
    const Json& headers = get_object(doc, "headers");
    r.declared_identity = get_string(headers, "declared_identity");
    const Json& account = require_field(headers, "account");
    if (account.is_string()) {
        r.account = account.get<std::string>();
    } else if (!account.is_null()) {
        throw Error(ErrorCode::MalformedDocument, "account must be a string or null");
    }
    const Json& assertion = require_field(headers, "cas_assertion");
    if (!assertion.is_null()) r.assertion = cas::CasAssertion::from_json(assertion);
    r.job = JobDescription::from_json(get_object(doc, "job"));
    return r;
}

std::string declared_identity_of(const Json& envelope_doc) {
    try {
        const auto env = secmsg::SignedEnvelope::from_json(envelope_doc);
        const Json payload = parse_document(gridforge::to_string(env.payload));
        return get_string(get_object(payload, "headers"), "declared_identity");
    } catch (const Error& e) {
        throw Error(ErrorCode::MalformedEnvelope, "no declared identity: " + e.detail());
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::MalformedEnvelope, std::string("no declared identity: ") + e.what());
    }
}

Json Registration::to_json() const {
    return Json{{"op", op}, {"grid_identity", grid_identity}, {"endpoint", endpoint}};
}

Registration Registration::from_json(const Json& doc) {
    Registration r{get_string(doc, "op"), get_string(doc, "grid_identity"), get_string(doc, "endpoint")};
    if (r.op != "register" && r.op != "deregister") {
        throw Error(ErrorCode::MalformedDocument, "unknown registration op " + r.op);
    }
    return r;
}

std::pair<std::string, std::string> split_mjs_reference(std::string_view reference) {
    const auto pos = reference.rfind("/mjs/");
    if (pos == std::string_view::npos || pos + 5 >= reference.size()) {
        throw Error(ErrorCode::MalformedDocument, "not an MJS reference: " + std::string(reference));
    }
    return {std::string(reference.substr(0, pos)), std::string(reference.substr(pos + 5))};
}

std::string make_mjs_reference(std::string_view endpoint, std::string_view job_id) {
    return std::string(endpoint) + "/mjs/" + std::string(job_id);
}

}  // namespace gridforge::gram
