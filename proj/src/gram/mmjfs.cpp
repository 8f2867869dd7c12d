#include "gridforge/gram/mmjfs.hpp"

#include "gridforge/common/error.hpp"
#include "gridforge/gram/flow.hpp"
#include "gridforge/gram/request.hpp"

namespace gridforge::gram {

Mmjfs::Mmjfs(std::shared_ptr<Transport> transport, credstore::TrustAnchorStore user_anchors,
             std::shared_ptr<const gridmap::GridMap> gridmap, LocalGate& gate, EventSink& events, Clock clock,
             UnixTime clock_skew, UnixTime nonce_retention)
    : transport_(std::move(transport)),
      user_anchors_(std::move(user_anchors)),
      gridmap_(std::move(gridmap)),
      gate_(gate),
      events_(events),
      clock_(std::move(clock)),
      clock_skew_(clock_skew),
      replay_(nonce_retention) {}

Json Mmjfs::handle(const Request& request) {
    std::string account;
    std::string identity;
    try {
        const auto env = secmsg::SignedEnvelope::from_json(request.body);
        const auto verified = secmsg::verify_envelope(env, user_anchors_, replay_, clock_(), clock_skew_);
        const auto submit = SubmitRequest::from_json(parse_document(gridforge::to_string(verified.payload)));
        identity = verified.who.effective_identity;
        account = gridmap::map_identity(*gridmap_, identity, submit.account);
        events_.record(name(), flow::detail(flow::kVerifyMap, "identity=" + identity + " account=" + account));
    } catch (const Error& e) {
        throw flow::attributed(e, 3);
    }

    std::string lmjfs;
    try {
        lmjfs = gate_.start_lmjfs(account, identity);
    } catch (const Error& e) {
        throw flow::attributed(e, 4);
    }
    // The original, still-signed request; the LMJFS verifies it itself.
    return transport_->call(lmjfs, "submit", request.body);
}

}  // namespace gridforge::gram
