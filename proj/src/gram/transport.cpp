#include "gridforge/gram/transport.hpp"

#include <map>
#include <shared_mutex>
#include <thread>

#include <httplib.h>

#include "gridforge/common/error.hpp"

namespace gridforge::gram {

namespace {

constexpr std::string_view kInproc = "inproc://";
constexpr std::string_view kTcp = "tcp://";
constexpr const char* kFramePath = "/frame";

Json error_frame(const Error& e) {
    return Json{{"ok", false},
                {"error",
                 {{"code", to_string(e.code())},
                  {"detail", e.detail()},
                  {"index", e.index() ? Json(*e.index()) : Json(nullptr)}}}};
}

class InprocTransport final : public Transport {
public:
    std::string listen(std::string_view hint, std::shared_ptr<Service> service) override {
        std::string base(hint.starts_with(kInproc) ? hint : std::string(kInproc) + std::string(hint));
        std::unique_lock lock(mu_);
        std::string endpoint = base;
        for (int n = 2; services_.count(endpoint); ++n) endpoint = base + "-" + std::to_string(n);
        services_[endpoint] = std::move(service);
        return endpoint;
    }

    void close(std::string_view endpoint) override {
        std::unique_lock lock(mu_);
        services_.erase(std::string(endpoint));
    }

    Json call(std::string_view endpoint, std::string_view op, const Json& body) override {
        std::shared_ptr<Service> service;
        {
            std::shared_lock lock(mu_);
            auto it = services_.find(std::string(endpoint));
            if (it == services_.end()) {
                throw Error(ErrorCode::TransportError, "nothing listening at " + std::string(endpoint));
            }
            service = it->second;
        }
        // Round-trip through text so that services only ever see wire data.
        const Json request = Json::parse(make_request_frame(op, body).dump());
        const Json reply = Json::parse(dispatch_frame(*service, request).dump());
        return unpack_reply(reply);
    }

private:
    std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<Service>> services_;
};

std::pair<std::string, int> parse_tcp_endpoint(std::string_view endpoint) {
    if (!endpoint.starts_with(kTcp)) {
        throw Error(ErrorCode::TransportError, "not a tcp endpoint: " + std::string(endpoint));
    }
    const std::string_view rest = endpoint.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) {
        throw Error(ErrorCode::TransportError, "endpoint lacks a port: " + std::string(endpoint));
    }
    try {
        return {std::string(rest.substr(0, colon)), std::stoi(std::string(rest.substr(colon + 1)))};
    } catch (const std::exception&) {
        throw Error(ErrorCode::TransportError, "bad port in " + std::string(endpoint));
    }
}

class TcpTransport final : public Transport {
public:
    ~TcpTransport() override {
        std::map<std::string, Listener> listeners;
        {
            std::lock_guard lock(mu_);
            listeners.swap(listeners_);
        }
        for (auto& [_, l] : listeners) stop(l);
    }

    std::string listen(std::string_view hint, std::shared_ptr<Service> service) override {
        auto [host, port] = hint.starts_with(kTcp) ? parse_tcp_endpoint(hint) : std::pair{std::string("127.0.0.1"), 0};
        Listener l;
        l.server = std::make_unique<httplib::Server>();
        l.server->Post(kFramePath, [service](const httplib::Request& req, httplib::Response& res) {
            Json reply;
            try {
                reply = dispatch_frame(*service, Json::parse(req.body));
            } catch (const Json::exception& e) {
                reply = error_frame(Error(ErrorCode::MalformedDocument, e.what()));
            }
            res.set_content(reply.dump(), "application/json");
        });
        if (port == 0) {
            port = l.server->bind_to_any_port(host);
        } else if (!l.server->bind_to_port(host, port)) {
            port = -1;
        }
        if (port <= 0) {
            throw Error(ErrorCode::TransportError, "cannot bind " + host);
        }
        httplib::Server* raw = l.server.get();
        l.thread = std::thread([raw] { raw->listen_after_bind(); });
        raw->wait_until_ready();
        const std::string endpoint = std::string(kTcp) + host + ":" + std::to_string(port);
        std::lock_guard lock(mu_);
        listeners_[endpoint] = std::move(l);
        return endpoint;
    }

    void close(std::string_view endpoint) override {
        Listener l;
        {
            std::lock_guard lock(mu_);
            auto it = listeners_.find(std::string(endpoint));
            if (it == listeners_.end()) return;
            l = std::move(it->second);
            listeners_.erase(it);
        }
        stop(l);
    }

    Json call(std::string_view endpoint, std::string_view op, const Json& body) override {
        auto [host, port] = parse_tcp_endpoint(endpoint);
        httplib::Client client(host, port);
        client.set_connection_timeout(5);
        client.set_read_timeout(120);
        auto res = client.Post(kFramePath, make_request_frame(op, body).dump(), "application/json");
        if (!res) {
            throw Error(ErrorCode::TransportError,
                        "cannot reach " + std::string(endpoint) + ": " + httplib::to_string(res.error()));
        }
        if (res->status != 200) {
            throw Error(ErrorCode::TransportError, "HTTP status " + std::to_string(res->status));
        }
        Json reply;
        try {
            reply = Json::parse(res->body);
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::TransportError, std::string("unparseable reply: ") + e.what());
        }
        return unpack_reply(reply);
    }

private:
    struct Listener {
        std::unique_ptr<httplib::Server> server;
        std::thread thread;
    };

    static void stop(Listener& l) {
        if (l.server) l.server->stop();
        if (l.thread.joinable()) l.thread.join();
    }

    std::mutex mu_;
    std::map<std::string, Listener> listeners_;
};

}  // namespace

Json make_request_frame(std::string_view op, const Json& body) { return Json{{"op", op}, {"body", body}}; }

Json dispatch_frame(Service& service, const Json& frame) {
    try {
        if (!frame.is_object() || !frame.contains("op") || !frame["op"].is_string() || !frame.contains("body")) {
            throw Error(ErrorCode::MalformedDocument, "frame must carry op and body");
        }
        Request req;
        req.op = frame["op"].get<std::string>();
        req.body = frame["body"];
        const auto ops = service.operations();
        if (std::find(ops.begin(), ops.end(), req.op) == ops.end()) {
            throw Error(ErrorCode::UnknownOperation,
                        std::string(service.name()) + " has no operation '" + req.op + "'");
        }
        return Json{{"ok", true}, {"body", service.handle(req)}};
    } catch (const Error& e) {
        return error_frame(e);
    } catch (const Json::exception& e) {
        return error_frame(Error(ErrorCode::MalformedDocument, e.what()));
    } catch (const std::exception& e) {
        return error_frame(Error(ErrorCode::TransportError, std::string(service.name()) + ": " + e.what()));
    }
}

Json unpack_reply(const Json& reply) {
    if (!reply.is_object() || !reply.contains("ok") || !reply["ok"].is_boolean()) {
        throw Error(ErrorCode::TransportError, "malformed reply frame");
    }
    if (reply["ok"].get<bool>()) {
        return reply.value("body", Json(nullptr));
    }
    const Json& err = reply.at("error");
    const auto code = error_code_from_string(err.value("code", ""));
    std::optional<std::size_t> index;
    if (err.contains("index") && err["index"].is_number_unsigned()) index = err["index"].get<std::size_t>();
    throw Error(code.value_or(ErrorCode::TransportError), err.value("detail", ""), index);
}

std::shared_ptr<Transport> make_inproc_transport() { return std::make_shared<InprocTransport>(); }
std::shared_ptr<Transport> make_tcp_transport() { return std::make_shared<TcpTransport>(); }

std::shared_ptr<Transport> transport_for(std::string_view endpoint) {
    if (endpoint.starts_with(kTcp)) return make_tcp_transport();
    throw Error(ErrorCode::TransportError, "no standalone transport for " + std::string(endpoint));
}

}  // namespace gridforge::gram
