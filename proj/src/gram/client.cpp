#include "gridforge/gram/client.hpp"

#include "gridforge/common/error.hpp"
#include "gridforge/gram/flow.hpp"
#include "gridforge/gram/request.hpp"
#include "gridforge/secmsg/delegation.hpp"

namespace gridforge::gram {

MjsClient MjsClient::connect(std::shared_ptr<Transport> transport, const credstore::CredentialSet& cred,
                             const std::string& mjs_reference, const std::string& expected_identity,
                             const credstore::TrustAnchorStore& host_anchors, UnixTime now) {
    MjsClient c;
    c.transport_ = std::move(transport);
    c.reference_ = mjs_reference;
    std::tie(c.endpoint_, c.job_id_) = split_mjs_reference(mjs_reference);

    auto [ctx, token1] = secmsg::context_initiate(cred);
    const Json reply =
        c.transport_->call(c.endpoint_, "mjs.hello", Json{{"job_id", c.job_id_}, {"token", base64_encode(token1)}});
    Bytes token3;
    try {
        token3 = secmsg::context_complete(ctx, base64_decode(get_string(reply, "token")), host_anchors, now);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::UntrustedRoot) {
            throw Error(ErrorCode::UntrustedHost, "MJS credential is not issued from a trusted host: " + e.detail());
        }
        throw;
    }
    const auto& peer = *ctx.peer_identity();
    auto named = peer.extensions.find(std::string(credstore::kExtGridIdentity));
    if (!peer.leaf_is_proxy() || !peer.extensions.count(std::string(credstore::kExtLocalAccount))) {
        throw Error(ErrorCode::UntrustedHost, "MJS did not present a GRIM credential");
    }
    if (named == peer.extensions.end() || named->second != expected_identity) {
        throw Error(ErrorCode::GridIdentityMismatch,
                    "MJS acts for " + (named == peer.extensions.end() ? std::string("nobody") : named->second));
    }
    c.transport_->call(c.endpoint_, "mjs.finish",
                       Json{{"context_id", base64_encode(ctx.context_id())}, {"token", base64_encode(token3)}});
    c.ctx_ = std::move(ctx);
    return c;
}

void MjsClient::delegate(const credstore::CredentialSet& cred, credstore::DelegationDepth depth, Validity validity) {
    if (!credstore::describe_chain(cred.chain).remaining_delegation_depth.allows_delegation()) {
        throw Error(ErrorCode::DelegationDepthExhausted, "credential may not delegate further");
    }
    const Json begin{{"op", "delegate_begin"}, {"job_id", job_id_}};
    const auto req_msg = secmsg::context_wrap(ctx_, to_bytes(dump_document(begin)), true);
    const Json request = transport_->call(endpoint_, "mjs.delegate_begin", req_msg.to_json());
    const auto answer =
        secmsg::delegation_answer(ctx_, cred, secmsg::ProtectedMessage::from_json(request), depth, validity);
    const Json ack = transport_->call(endpoint_, "mjs.delegate_finish", answer.to_json());
    const Json doc = parse_document(
        gridforge::to_string(secmsg::context_unwrap(ctx_, secmsg::ProtectedMessage::from_json(ack))));
    if (get_string(doc, "op") != "delegated") {
        throw Error(ErrorCode::MalformedDocument, "unexpected delegation acknowledgment");
    }
}

JobStatus MjsClient::start() { return job_call("start"); }
JobStatus MjsClient::status() { return job_call("status"); }
JobStatus MjsClient::cancel() { return job_call("cancel"); }

JobStatus MjsClient::job_call(const std::string& op) {
    const Json request{{"op", op}, {"job_id", job_id_}};
    const auto msg = secmsg::context_wrap(ctx_, to_bytes(dump_document(request)), true);
    const Json reply = transport_->call(endpoint_, "mjs." + op, msg.to_json());
    const Bytes plain = secmsg::context_unwrap(ctx_, secmsg::ProtectedMessage::from_json(reply));
    return JobStatus::from_json(parse_document(gridforge::to_string(plain)));
}

secmsg::SignedEnvelope make_submit_envelope(const credstore::CredentialSet& cred, const JobDescription& job,
                                            const SubmitOptions& options, UnixTime now) {
    job.check();
    SubmitRequest req;
    req.declared_identity = credstore::describe_chain(cred.chain).effective_identity;
    req.account = options.account;
    req.assertion = options.assertion;
    req.job = job;
    return secmsg::sign_envelope(cred, to_bytes(dump_document(req.to_json())), std::string("gram"), now);
}

secmsg::PolicyDescriptor fetch_policy(Transport& transport, const std::string& router) {
    return secmsg::PolicyDescriptor::from_json(transport.call(router, "policy", Json::object()));
}

Submission client_submit(std::shared_ptr<Transport> transport, const credstore::CredentialSet& cred,
                         const JobDescription& job, const std::string& router,
                         const credstore::TrustAnchorStore& host_anchors, const SubmitOptions& options,
                         EventSink& events, UnixTime now) {
    const std::string me = credstore::describe_chain(cred.chain).effective_identity;
    Json envelope;
    try {
        const auto policy = fetch_policy(*transport, router);
        std::vector<cas::CasAssertion> assertions;
        if (options.assertion) assertions.push_back(*options.assertion);
        secmsg::select_mechanism(policy, {cred}, assertions, now);
        envelope = make_submit_envelope(cred, job, options, now).to_json();
        events.record(me, flow::detail(flow::kSignRequest, "identity=" + me));
    } catch (const Error& e) {
        throw flow::attributed(e, 1);
    }

    const Json reply = transport->call(router, "submit", envelope);
    const std::string reference = get_string(reply, "mjs");
    try {
        auto mjs = MjsClient::connect(transport, cred, reference, me, host_anchors, now);
        mjs.delegate(cred, options.delegation_depth, Validity::starting(now, options.delegation_lifetime));
        return Submission{get_string(reply, "job_id"), reference, get_string(reply, "account"), std::move(mjs)};
    } catch (const Error& e) {
        throw flow::attributed(e, 7);
    }
}

}  // namespace gridforge::gram
