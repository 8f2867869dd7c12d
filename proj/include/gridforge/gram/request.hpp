#pragma once

#include <optional>
#include <string>

#include "gridforge/cas/cas.hpp"
#include "gridforge/gram/job.hpp"
#include "gridforge/secmsg/envelope.hpp"

namespace gridforge::gram {

/// Payload of a job-initiation envelope:
///   {"headers": {"declared_identity", "account", "cas_assertion"}, "job": {...}}
/// Only the signature makes the headers trustworthy; the router reads
/// declared_identity without verifying it.
struct SubmitRequest {
    std::string declared_identity;
    std::optional<std::string> account;
    std::optional<cas::CasAssertion> assertion;
    JobDescription job;

    Json to_json() const;
    static SubmitRequest from_json(const Json& doc);
};

/// Declared identity of an unverified envelope. Throws Error(MalformedEnvelope).
std::string declared_identity_of(const Json& envelope_doc);

/// Payload of an LMJFS registration envelope, signed with its GRIM credential.
struct Registration {
    std::string op;  // "register" or "deregister"
    std::string grid_identity;
    std::string endpoint;

    Json to_json() const;
    static Registration from_json(const Json& doc);
};

/// Endpoint part and job id of an MJS reference "<endpoint>/mjs/<job_id>".
std::pair<std::string, std::string> split_mjs_reference(std::string_view reference);
std::string make_mjs_reference(std::string_view endpoint, std::string_view job_id);

}  // namespace gridforge::gram
