#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "gridforge/cas/cas.hpp"
#include "gridforge/gram/job.hpp"
#include "gridforge/gram/launcher.hpp"
#include "gridforge/gram/privilege.hpp"
#include "gridforge/gram/transport.hpp"
#include "gridforge/gridmap/gridmap.hpp"
#include "gridforge/secmsg/context.hpp"
#include "gridforge/secmsg/delegation.hpp"
#include "gridforge/secmsg/envelope.hpp"

namespace gridforge::gram {

inline constexpr UnixTime kDefaultLmjfsIdleTimeout = 10 * kMinute;

/// Resource-side CAS enforcement: submitting to queue Q needs the right
/// ("/gram/Q", "submit") under the local ∩ VO rule.
struct CasEnforcement {
    cas::PolicyGrants local_policy;
    cas::CasTrust trust;
};

cas::Right submit_right(std::string_view queue);

struct LmjfsSettings {
    std::string account;
    std::string grid_identity;
    std::filesystem::path sandbox;
    UnixTime clock_skew = secmsg::kDefaultClockSkew;
    UnixTime nonce_retention = secmsg::kDefaultNonceRetention;
    UnixTime idle_timeout = kDefaultLmjfsIdleTimeout;
};

/// A user's factory, running in that user's account and holding the GRIM
/// credential minted for it. It also hosts the MJS instance of each job it
/// creates; MJS operations run over a security context with the job owner.
class Lmjfs final : public Service {
public:
    Lmjfs(LmjfsSettings settings, credstore::CredentialSet grim_credential, credstore::TrustAnchorStore user_anchors,
          std::shared_ptr<const gridmap::GridMap> gridmap, std::optional<CasEnforcement> cas,
          std::shared_ptr<JobLauncher> launcher, EventSink& events, Clock clock);

    std::string_view name() const override { return "lmjfs"; }
    std::vector<std::string> operations() const override;
    Json handle(const Request& request) override;

    void set_endpoint(std::string endpoint);
    const std::string& endpoint() const { return endpoint_; }
    const LmjfsSettings& settings() const { return settings_; }
    const credstore::CredentialSet& credential() const { return grim_; }

    /// Idle once no request has arrived for the idle timeout and no job is Active.
    bool idle(UnixTime now) const;

    std::optional<JobRecord> job(const std::string& job_id) const;
    std::vector<std::string> job_ids() const;

private:
    struct JobSlot {
        std::mutex mu;
        JobRecord record;
    };
    struct Session {
        std::mutex mu;
        secmsg::SecurityContext ctx;
        std::string job_id;
        std::optional<secmsg::PendingDelegation> pending;
    };

    Json submit(const Json& envelope_doc);
    Json hello(const Json& body);
    Json finish(const Json& body);
    Json protected_op(const std::string& op, const Json& body);

    std::shared_ptr<JobSlot> slot(const std::string& job_id) const;
    std::shared_ptr<Session> session(const Bytes& context_id) const;
    void check_owner(const Session& s, const JobRecord& record) const;
    Json start_job(const std::shared_ptr<JobSlot>& slot);

    LmjfsSettings settings_;
    credstore::CredentialSet grim_;
    std::vector<std::string> queues_;
    credstore::TrustAnchorStore user_anchors_;
    std::shared_ptr<const gridmap::GridMap> gridmap_;
    std::optional<CasEnforcement> cas_;
    std::shared_ptr<JobLauncher> launcher_;
    EventSink& events_;
    Clock clock_;
    secmsg::ReplayCache replay_;
    std::string endpoint_;
    std::string actor_;
    std::atomic<UnixTime> last_activity_;

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<JobSlot>> jobs_;
    std::map<Bytes, std::shared_ptr<Session>> sessions_;
};

}  // namespace gridforge::gram
