#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "gridforge/cas/cas.hpp"
#include "gridforge/common/events.hpp"
#include "gridforge/gram/resource.hpp"
#include "gridforge/gram/transport.hpp"
#include "gridforge/gridctl/config.hpp"
#include "gridforge/secmsg/envelope.hpp"

namespace gridforge::gridctl {

/// Files the harness keeps under state_dir.
struct StatePaths {
    std::filesystem::path lock;
    std::filesystem::path pidfile;
    std::filesystem::path endpoints;
    std::filesystem::path log;
};
StatePaths state_paths(const DeploymentConfig& config);

/// Loads anchors, the grid-mapfile, the account table and the optional CAS
/// enforcement settings. Throws Error(ConfigError) for missing paths.
gram::ResourceConfig resource_config(const DeploymentConfig& config);

/// Network face of a VO's CAS. Every operation takes a SignedEnvelope.
///   request_assertion  payload {"op":"cas_request","rights":[...]|null}
///                      reply   the assertion document
///   grant, revoke      payload {"op":"cas_admin","subject":..,"resource":..,"action":..}
///                      signer must be one of `admins`; reply {}
class CasService final : public gram::Service {
public:
    CasService(std::shared_ptr<cas::CasPolicyService> cas, credstore::TrustAnchorStore user_anchors,
               gram::Clock clock, UnixTime clock_skew, UnixTime assertion_lifetime, EventSink& events,
               std::vector<std::string> admins = {});

    std::string_view name() const override { return "cas"; }
    std::vector<std::string> operations() const override { return {"request_assertion", "grant", "revoke"}; }
    Json handle(const gram::Request& request) override;

private:
    std::shared_ptr<cas::CasPolicyService> cas_;
    credstore::TrustAnchorStore user_anchors_;
    std::vector<std::string> admins_;
    gram::Clock clock_;
    UnixTime clock_skew_;
    UnixTime assertion_lifetime_;
    EventSink& events_;
    secmsg::ReplayCache replay_;
};

cas::CasAssertion request_assertion(gram::Transport& transport, const std::string& endpoint,
                                    const credstore::CredentialSet& cred,
                                    const std::optional<cas::RightSet>& requested, UnixTime now);

/// `op` is "grant" or "revoke".
void administer_cas(gram::Transport& transport, const std::string& endpoint, const credstore::CredentialSet& cred,
                    const std::string& op, const std::string& subject, const cas::Right& right, UnixTime now);

struct ServiceEndpoints {
    long pid = 0;
    std::string router;
    std::optional<std::string> cas;
};

/// Endpoints of the running services. Throws Error(NotRunning).
ServiceEndpoints read_endpoints(const DeploymentConfig& config);
bool services_running(const DeploymentConfig& config);

/// Runs every configured service in this process until SIGTERM or SIGINT.
void run_services(const DeploymentConfig& config);

/// Starts run_services in a detached background process and waits until it
/// is listening. Errors: AlreadyRunning, or the daemon's own startup error.
ServiceEndpoints services_up(const DeploymentConfig& config);

/// Stops the background services. Errors: NotRunning.
void services_down(const DeploymentConfig& config);

}  // namespace gridforge::gridctl
