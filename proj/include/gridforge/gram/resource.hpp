#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "gridforge/gram/launcher.hpp"
#include "gridforge/gram/lmjfs.hpp"
#include "gridforge/gram/mmjfs.hpp"
#include "gridforge/gram/privilege.hpp"
#include "gridforge/gram/router.hpp"
#include "gridforge/gram/transport.hpp"

namespace gridforge::gram {

struct ResourceConfig {
    credstore::TrustAnchorStore user_anchors;
    credstore::TrustAnchorStore host_anchors;
    std::filesystem::path host_cert;
    std::filesystem::path host_key;
    gridmap::GridMap gridmap;
    AccountTable accounts;
    std::filesystem::path sandbox_root;
    std::optional<CasEnforcement> cas;
    /// VO whose assertion the router's published policy asks for, if any.
    std::optional<std::string> required_vo;
    UnixTime clock_skew = secmsg::kDefaultClockSkew;
    UnixTime nonce_retention = secmsg::kDefaultNonceRetention;
    UnixTime lmjfs_idle_timeout = kDefaultLmjfsIdleTimeout;
    Clock clock = system_now;
    /// Endpoint hints; "tcp://127.0.0.1:0" picks a free port.
    std::string router_hint = "inproc://router";
    std::string service_hint = "inproc://";
};

/// One machine's job-initiation stack: router, MMJFS, starter, GRIM and the
/// LMJFS instances the starter launches.
class Resource {
public:
    Resource(ResourceConfig config, std::shared_ptr<Transport> transport, EventSink& events,
             std::shared_ptr<JobLauncher> launcher = std::make_shared<PosixLauncher>());
    ~Resource();
    Resource(const Resource&) = delete;
    Resource& operator=(const Resource&) = delete;

    const std::string& router_endpoint() const { return router_endpoint_; }
    const std::string& mmjfs_endpoint() const { return mmjfs_endpoint_; }
    Transport& transport() { return *transport_; }
    std::shared_ptr<Transport> transport_ptr() { return transport_; }

    ProxyRouter& router() { return *router_; }
    Mmjfs& mmjfs() { return *mmjfs_; }
    SetuidStarter& starter() { return *starter_; }
    Grim& grim() { return *grim_; }
    LocalGate& gate() { return *gate_; }

    std::shared_ptr<Lmjfs> lmjfs_for(const std::string& grid_identity) const;
    std::vector<std::shared_ptr<Lmjfs>> lmjfs_instances() const;

    /// Shuts down LMJFS instances idle at `now`; returns how many.
    std::size_t reap_idle(UnixTime now);
    /// Calls reap_idle every `period` until destruction.
    void start_reaper(std::chrono::milliseconds period);

private:
    std::string spawn_lmjfs(const std::string& account, const std::string& grid_identity,
                            const std::filesystem::path& sandbox);
    void stop_lmjfs(const std::shared_ptr<Lmjfs>& lmjfs);

    ResourceConfig config_;
    std::shared_ptr<Transport> transport_;
    EventSink& events_;
    std::shared_ptr<JobLauncher> launcher_;
    std::shared_ptr<const gridmap::GridMap> gridmap_;

    std::unique_ptr<SetuidStarter> starter_;
    std::unique_ptr<Grim> grim_;
    std::unique_ptr<LocalGate> gate_;
    std::shared_ptr<Mmjfs> mmjfs_;
    std::shared_ptr<ProxyRouter> router_;
    std::string mmjfs_endpoint_;
    std::string router_endpoint_;

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Lmjfs>> lmjfs_;

    std::mutex reaper_mu_;
    std::condition_variable reaper_cv_;
    bool stopping_ = false;
    std::thread reaper_;
};

}  // namespace gridforge::gram
