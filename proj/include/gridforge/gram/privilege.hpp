#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "gridforge/common/events.hpp"
#include "gridforge/credstore/credential.hpp"

namespace gridforge::gram {

/// Marks where a call into a privileged helper came from. Only LocalGate can
/// produce a local invocation; everything reachable from the network holds
/// the network-origin marker.
class Invocation {
public:
    static Invocation network() { return Invocation(true); }
    bool network_origin() const { return network_; }

private:
    friend class LocalGate;
    explicit Invocation(bool network) : network_(network) {}
    bool network_;
};

/// Local account → queues it may submit to.
using AccountTable = std::map<std::string, std::vector<std::string>>;

using Clock = std::function<UnixTime()>;

inline constexpr UnixTime kMaxGrimLifetime = 12 * kHour;

/// Starts a pre-configured LMJFS in a user account, and nothing else.
class SetuidStarter {
public:
    /// Launches (or finds) the LMJFS for `grid_identity` running as `account`
    /// with the given sandbox; returns its endpoint.
    using Spawner = std::function<std::string(const std::string& account, const std::string& grid_identity,
                                              const std::filesystem::path& sandbox)>;

    SetuidStarter(AccountTable accounts, std::filesystem::path sandbox_root, Spawner spawner, EventSink& events);

    /// Errors: NetworkOriginRejected, UnknownAccount, StarterFailure, and
    /// AccountMismatch when the identity already has an LMJFS in another account.
    std::string start(const Invocation& inv, const std::string& account, const std::string& grid_identity);

    std::size_t accepted_invocations() const;
    std::size_t rejected_invocations() const;

private:
    mutable std::mutex mu_;
    AccountTable accounts_;
    std::filesystem::path sandbox_root_;
    Spawner spawner_;
    EventSink& events_;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
};

/// Mints host-rooted proxies that name the user a service acts for.
class Grim {
public:
    Grim(std::filesystem::path host_cert, std::filesystem::path host_key, AccountTable accounts, Clock clock);

    /// Proxy of the host credential carrying grid_identity, local_account and
    /// local_policy (the account's queues, comma-separated); lifetime at most
    /// 12 hours. Errors: NetworkOriginRejected, HostCredentialUnavailable,
    /// UnknownAccount.
    credstore::CredentialSet issue(const Invocation& inv, const std::string& grid_identity,
                                   const std::string& account);

    std::size_t accepted_invocations() const;
    std::size_t rejected_invocations() const;

private:
    mutable std::mutex mu_;
    std::filesystem::path host_cert_;
    std::filesystem::path host_key_;
    AccountTable accounts_;
    Clock clock_;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
};

std::string local_policy_text(const std::vector<std::string>& queues);
std::vector<std::string> parse_local_policy(std::string_view text);

/// The only path from unprivileged services to the helpers. It takes narrow
/// arguments, never an Invocation, so a caller cannot pass its origin through.
class LocalGate {
public:
    LocalGate(SetuidStarter& starter, Grim& grim) : starter_(starter), grim_(grim) {}

    std::string start_lmjfs(const std::string& account, const std::string& grid_identity);
    credstore::CredentialSet issue_grim(const std::string& grid_identity, const std::string& account);

    struct Record {
        std::string helper;
        std::string account;
        std::string grid_identity;
    };
    std::vector<Record> records() const;

private:
    void note(std::string helper, const std::string& account, const std::string& grid_identity);

    SetuidStarter& starter_;
    Grim& grim_;
    mutable std::mutex mu_;
    std::vector<Record> records_;
};

}  // namespace gridforge::gram
