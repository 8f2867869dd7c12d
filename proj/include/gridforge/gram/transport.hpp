#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gridforge/common/json_util.hpp"
#include "gridforge/gram/privilege.hpp"

namespace gridforge::gram {

struct Request {
    std::string op;
    Json body;
    /// Always network-origin: requests arrive from the transport.
    Invocation origin = Invocation::network();
};

/// A network-facing service. Errors thrown from handle() travel back to the
/// caller as error frames and are rethrown there with the same code.
class Service {
public:
    virtual ~Service() = default;
    virtual std::string_view name() const = 0;
    /// Every operation accepted by handle().
    virtual std::vector<std::string> operations() const = 0;
    virtual Json handle(const Request& request) = 0;
};

// Wire frames:
//   request  {"op": <string>, "body": <json>}
//   reply    {"ok": true, "body": <json>}
//          | {"ok": false, "error": {"code": <name>, "detail": <string>, "index": <uint|null>}}
Json make_request_frame(std::string_view op, const Json& body);
Json dispatch_frame(Service& service, const Json& frame);
/// Returns the reply body or rethrows the carried error.
Json unpack_reply(const Json& reply);

/// Endpoints are "inproc://<name>" or "tcp://127.0.0.1:<port>".
class Transport {
public:
    virtual ~Transport() = default;
    /// Binds `service` at an endpoint derived from `hint` and returns the endpoint.
    virtual std::string listen(std::string_view hint, std::shared_ptr<Service> service) = 0;
    virtual void close(std::string_view endpoint) = 0;
    /// Throws Error(TransportError) when nothing is listening at `endpoint`.
    virtual Json call(std::string_view endpoint, std::string_view op, const Json& body) = 0;
};

/// Services in the same process; frames still pass through text encoding.
std::shared_ptr<Transport> make_inproc_transport();
/// HTTP/1.1 POST of frames over loopback TCP.
std::shared_ptr<Transport> make_tcp_transport();
/// Picks the transport matching an endpoint's scheme.
std::shared_ptr<Transport> transport_for(std::string_view endpoint);

}  // namespace gridforge::gram
