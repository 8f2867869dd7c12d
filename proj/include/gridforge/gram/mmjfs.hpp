#pragma once

#include <memory>

#include "gridforge/gram/privilege.hpp"
#include "gridforge/gram/transport.hpp"
#include "gridforge/gridmap/gridmap.hpp"
#include "gridforge/secmsg/envelope.hpp"

namespace gridforge::gram {

/// The shared, unprivileged factory. Verifies a first request from a user,
/// maps the user to an account, has the starter launch the user's LMJFS, and
/// hands the original request to it.
class Mmjfs final : public Service {
public:
    Mmjfs(std::shared_ptr<Transport> transport, credstore::TrustAnchorStore user_anchors,
          std::shared_ptr<const gridmap::GridMap> gridmap, LocalGate& gate, EventSink& events, Clock clock,
          UnixTime clock_skew = secmsg::kDefaultClockSkew, UnixTime nonce_retention = secmsg::kDefaultNonceRetention);

    std::string_view name() const override { return "mmjfs"; }
    std::vector<std::string> operations() const override { return {"submit"}; }
    Json handle(const Request& request) override;

private:
    std::shared_ptr<Transport> transport_;
    credstore::TrustAnchorStore user_anchors_;
    std::shared_ptr<const gridmap::GridMap> gridmap_;
    LocalGate& gate_;
    EventSink& events_;
    Clock clock_;
    UnixTime clock_skew_;
    secmsg::ReplayCache replay_;
};

}  // namespace gridforge::gram
