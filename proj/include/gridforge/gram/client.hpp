#pragma once

#include <memory>
#include <optional>
#include <string>

#include "gridforge/cas/cas.hpp"
#include "gridforge/common/events.hpp"
#include "gridforge/gram/job.hpp"
#include "gridforge/gram/transport.hpp"
#include "gridforge/secmsg/context.hpp"
#include "gridforge/secmsg/envelope.hpp"
#include "gridforge/secmsg/policy.hpp"

namespace gridforge::gram {

/// Client end of a security context with one MJS.
class MjsClient {
public:
    /// Mutual authentication with the MJS. The MJS must present a GRIM
    /// credential rooted at `host_anchors` whose grid_identity extension equals
    /// `expected_identity`. Errors: UntrustedHost, GridIdentityMismatch and
    /// handshake errors.
    static MjsClient connect(std::shared_ptr<Transport> transport, const credstore::CredentialSet& cred,
                             const std::string& mjs_reference, const std::string& expected_identity,
                             const credstore::TrustAnchorStore& host_anchors, UnixTime now);

    /// Gives the MJS a proxy of `cred` (the MJS generates the key pair).
    void delegate(const credstore::CredentialSet& cred, credstore::DelegationDepth depth, Validity validity);

    JobStatus start();
    JobStatus status();
    JobStatus cancel();

    const std::string& job_id() const { return job_id_; }
    const std::string& reference() const { return reference_; }
    const secmsg::SecurityContext& context() const { return ctx_; }

private:
    MjsClient() = default;
    JobStatus job_call(const std::string& op);

    std::shared_ptr<Transport> transport_;
    std::string endpoint_;
    std::string job_id_;
    std::string reference_;
    secmsg::SecurityContext ctx_;
};

struct SubmitOptions {
    std::optional<std::string> account;
    std::optional<cas::CasAssertion> assertion;
    /// Delegation budget handed to the MJS.
    credstore::DelegationDepth delegation_depth = credstore::DelegationDepth::limited(0);
    UnixTime delegation_lifetime = 12 * kHour;
};

struct Submission {
    std::string job_id;
    std::string mjs_reference;
    std::string account;
    MjsClient mjs;
};

secmsg::SignedEnvelope make_submit_envelope(const credstore::CredentialSet& cred, const JobDescription& job,
                                            const SubmitOptions& options, UnixTime now);

secmsg::PolicyDescriptor fetch_policy(Transport& transport, const std::string& router);

/// Steps 1-7: sign the request, send it through the router, and once the MJS
/// reference comes back authenticate the MJS and delegate to it. Errors are
/// rethrown with their step in the detail ("[stepN] ...").
Submission client_submit(std::shared_ptr<Transport> transport, const credstore::CredentialSet& cred,
                         const JobDescription& job, const std::string& router,
                         const credstore::TrustAnchorStore& host_anchors, const SubmitOptions& options,
                         EventSink& events, UnixTime now);

}  // namespace gridforge::gram
