#pragma once

#include <memory>

#include "gridforge/gram/privilege.hpp"
#include "gridforge/gram/registry.hpp"
#include "gridforge/gram/transport.hpp"
#include "gridforge/secmsg/envelope.hpp"
#include "gridforge/secmsg/policy.hpp"

namespace gridforge::gram {

/// Forwards job requests to the submitter's LMJFS if one is registered and to
/// the MMJFS otherwise. It reads only the declared-identity header and never
/// checks the request signature; verification belongs to the factories.
class ProxyRouter final : public Service {
public:
    ProxyRouter(std::shared_ptr<Transport> transport, std::string mmjfs_endpoint,
                credstore::TrustAnchorStore host_anchors, secmsg::PolicyDescriptor policy, EventSink& events,
                Clock clock, UnixTime clock_skew = secmsg::kDefaultClockSkew);

    std::string_view name() const override { return "proxy-router"; }
    std::vector<std::string> operations() const override { return {"submit", "register", "deregister", "policy"}; }
    Json handle(const Request& request) override;

    ServiceRegistry& registry() { return registry_; }

private:
    Json route(const Json& envelope_doc);
    Json registration(const Json& envelope_doc, const std::string& expected_op);

    std::shared_ptr<Transport> transport_;
    std::string mmjfs_endpoint_;
    credstore::TrustAnchorStore host_anchors_;
    secmsg::PolicyDescriptor policy_;
    EventSink& events_;
    Clock clock_;
    UnixTime clock_skew_;
    secmsg::ReplayCache registration_replay_;
    ServiceRegistry registry_;
};

}  // namespace gridforge::gram
