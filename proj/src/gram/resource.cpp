#include "gridforge/gram/resource.hpp"

#include "gridforge/common/error.hpp"
#include "gridforge/gram/request.hpp"

namespace gridforge::gram {

namespace {

secmsg::PolicyDescriptor router_policy(const ResourceConfig& config) {
    secmsg::PolicyDescriptor p;
    p.service_name = "gram";
    for (const auto& anchor : config.user_anchors.anchors()) p.accepted_trust_roots.push_back(anchor.subject);
    p.required_message_mode = secmsg::MessageMode::StatelessSigned;
    p.required_assertion = config.required_vo;
    return p;
}

}  // namespace

Resource::Resource(ResourceConfig config, std::shared_ptr<Transport> transport, EventSink& events,
                   std::shared_ptr<JobLauncher> launcher)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      events_(events),
      launcher_(std::move(launcher)),
      gridmap_(std::make_shared<const gridmap::GridMap>(config_.gridmap)) {
    starter_ = std::make_unique<SetuidStarter>(
        config_.accounts, config_.sandbox_root,
        [this](const std::string& account, const std::string& identity, const std::filesystem::path& sandbox) {
            return spawn_lmjfs(account, identity, sandbox);
        },
        events_);
    grim_ = std::make_unique<Grim>(config_.host_cert, config_.host_key, config_.accounts, config_.clock);
    gate_ = std::make_unique<LocalGate>(*starter_, *grim_);

    mmjfs_ = std::make_shared<Mmjfs>(transport_, config_.user_anchors, gridmap_, *gate_, events_, config_.clock,
                                     config_.clock_skew, config_.nonce_retention);
    mmjfs_endpoint_ = transport_->listen(config_.service_hint + (config_.service_hint.starts_with("inproc") ? "mmjfs" : ""),
                                         mmjfs_);
    router_ = std::make_shared<ProxyRouter>(transport_, mmjfs_endpoint_, config_.host_anchors, router_policy(config_),
                                            events_, config_.clock, config_.clock_skew);
    router_endpoint_ = transport_->listen(config_.router_hint, router_);
}

Resource::~Resource() {
    {
        std::lock_guard lock(reaper_mu_);
        stopping_ = true;
    }
    reaper_cv_.notify_all();
    if (reaper_.joinable()) reaper_.join();
    transport_->close(router_endpoint_);
    transport_->close(mmjfs_endpoint_);
    for (const auto& l : lmjfs_instances()) transport_->close(l->endpoint());
    launcher_.reset();
}

std::string Resource::spawn_lmjfs(const std::string& account, const std::string& grid_identity,
                                  const std::filesystem::path& sandbox) {
    {
        std::lock_guard lock(mu_);
        auto it = lmjfs_.find(grid_identity);
        if (it != lmjfs_.end()) {
            if (it->second->settings().account == account) return it->second->endpoint();
            // One LMJFS per identity: replacing it would strand its jobs.
            throw Error(ErrorCode::AccountMismatch, grid_identity + " already has an LMJFS running as " +
                                                        it->second->settings().account);
        }
    }
    auto grim_cred = gate_->issue_grim(grid_identity, account);

    LmjfsSettings settings{account, grid_identity, sandbox, config_.clock_skew, config_.nonce_retention,
                           config_.lmjfs_idle_timeout};
    auto lmjfs = std::make_shared<Lmjfs>(settings, grim_cred, config_.user_anchors, gridmap_, config_.cas, launcher_,
                                         events_, config_.clock);
    const std::string hint =
        config_.service_hint + (config_.service_hint.starts_with("inproc") ? "lmjfs-" + account : "");
    const std::string endpoint = transport_->listen(hint, lmjfs);
    lmjfs->set_endpoint(endpoint);

    // Announce ourselves to the router under the GRIM credential.
    const Registration reg{"register", grid_identity, endpoint};
    const auto env = secmsg::sign_envelope(grim_cred, to_bytes(dump_document(reg.to_json())),
                                           std::string("proxy-router"), config_.clock());
    try {
        transport_->call(router_endpoint_, "register", env.to_json());
    } catch (...) {
        transport_->close(endpoint);
        throw;
    }
    std::shared_ptr<Lmjfs> replaced;
    {
        std::lock_guard lock(mu_);
        auto& entry = lmjfs_[grid_identity];
        replaced = entry;
        entry = lmjfs;
    }
    if (replaced) transport_->close(replaced->endpoint());
    return endpoint;
}

void Resource::stop_lmjfs(const std::shared_ptr<Lmjfs>& lmjfs) {
    const Registration reg{"deregister", lmjfs->settings().grid_identity, lmjfs->endpoint()};
    try {
        const auto env = secmsg::sign_envelope(lmjfs->credential(), to_bytes(dump_document(reg.to_json())),
                                               std::string("proxy-router"), config_.clock());
        transport_->call(router_endpoint_, "deregister", env.to_json());
    } catch (const Error&) {
        // The router drops stale entries on its own when forwarding fails.
        router_->registry().deregister(reg.grid_identity, reg.endpoint);
    }
    transport_->close(lmjfs->endpoint());
}

std::shared_ptr<Lmjfs> Resource::lmjfs_for(const std::string& grid_identity) const {
    std::lock_guard lock(mu_);
    auto it = lmjfs_.find(grid_identity);
    return it == lmjfs_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<Lmjfs>> Resource::lmjfs_instances() const {
    std::lock_guard lock(mu_);
    std::vector<std::shared_ptr<Lmjfs>> out;
    for (const auto& [_, l] : lmjfs_) out.push_back(l);
    return out;
}

std::size_t Resource::reap_idle(UnixTime now) {
    std::vector<std::shared_ptr<Lmjfs>> idle;
    {
        std::lock_guard lock(mu_);
        for (auto it = lmjfs_.begin(); it != lmjfs_.end();) {
            if (it->second->idle(now)) {
                idle.push_back(it->second);
                it = lmjfs_.erase(it);
            } else {
                ++it;
            }
        }
    }
    for (const auto& l : idle) {
        stop_lmjfs(l);
        events_.record("lmjfs/" + l->settings().account, "lmjfs:idle-shutdown identity=" + l->settings().grid_identity);
    }
    return idle.size();
}

void Resource::start_reaper(std::chrono::milliseconds period) {
    reaper_ = std::thread([this, period] {
        std::unique_lock lock(reaper_mu_);
        while (!reaper_cv_.wait_for(lock, period, [this] { return stopping_; })) {
            lock.unlock();
            reap_idle(config_.clock());
            lock.lock();
        }
    });
}

}  // namespace gridforge::gram
