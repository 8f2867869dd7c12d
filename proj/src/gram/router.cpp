#include "gridforge/gram/router.hpp"

#include "gridforge/common/error.hpp"
#include "gridforge/gram/flow.hpp"
#include "gridforge/gram/request.hpp"

namespace gridforge::gram {

ProxyRouter::ProxyRouter(std::shared_ptr<Transport> transport, std::string mmjfs_endpoint,
                         credstore::TrustAnchorStore host_anchors, secmsg::PolicyDescriptor policy,
                         EventSink& events, Clock clock, UnixTime clock_skew)
    : transport_(std::move(transport)),
      mmjfs_endpoint_(std::move(mmjfs_endpoint)),
      host_anchors_(std::move(host_anchors)),
      policy_(std::move(policy)),
      events_(events),
      clock_(std::move(clock)),
      clock_skew_(clock_skew) {}

Json ProxyRouter::handle(const Request& request) {
    try {
        if (request.op == "submit") return route(request.body);
        if (request.op == "register" || request.op == "deregister") return registration(request.body, request.op);
        return policy_.to_json();
    } catch (const Error& e) {
        throw flow::attributed(e, request.op == "submit" ? 2 : 5);
    }
}

Json ProxyRouter::route(const Json& envelope_doc) {
    const std::string identity = declared_identity_of(envelope_doc);
    if (auto lmjfs = registry_.lookup(identity)) {
        events_.record(name(), flow::detail(flow::kRoute, "target=lmjfs identity=" + identity));
        try {
            return transport_->call(*lmjfs, "submit", envelope_doc);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::TransportError) throw;
            // Stale registration: the LMJFS is gone.
            registry_.deregister(identity, *lmjfs);
            events_.record(name(), "lmjfs:unreachable identity=" + identity);
        }
    }
    events_.record(name(), flow::detail(flow::kRoute, "target=mmjfs identity=" + identity));
    return transport_->call(mmjfs_endpoint_, "submit", envelope_doc);
}

Json ProxyRouter::registration(const Json& envelope_doc, const std::string& expected_op) {
    const auto env = secmsg::SignedEnvelope::from_json(envelope_doc);
    const auto verified = secmsg::verify_envelope(env, host_anchors_, registration_replay_, clock_(), clock_skew_);
    const auto reg = Registration::from_json(parse_document(gridforge::to_string(verified.payload)));
    if (reg.op != expected_op) {
        throw Error(ErrorCode::MalformedDocument, "registration op does not match frame");
    }
    const auto& ext = verified.who.extensions;
    auto named = ext.find(std::string(credstore::kExtGridIdentity));
    if (!verified.who.leaf_is_proxy() || named == ext.end() || !ext.count(std::string(credstore::kExtLocalAccount))) {
        throw Error(ErrorCode::AuthorizationDenied, "registration not signed with a GRIM credential");
    }
    if (named->second != reg.grid_identity) {
        throw Error(ErrorCode::GridIdentityMismatch, "GRIM credential is for " + named->second);
    }
    if (reg.op == "register") {
        registry_.register_endpoint(reg.grid_identity, reg.endpoint);
        events_.record(name(), flow::detail(flow::kGrimRegister,
                                            "identity=" + reg.grid_identity + " account=" +
                                                ext.at(std::string(credstore::kExtLocalAccount))));
    } else {
        registry_.deregister(reg.grid_identity, reg.endpoint);
        events_.record(name(), "lmjfs:deregister identity=" + reg.grid_identity);
    }
    return Json{{"ack", reg.op}};
}

}  // namespace gridforge::gram
