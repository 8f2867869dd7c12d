#include "gridforge/gram/privilege.hpp"

#include <algorithm>

#include "gridforge/common/error.hpp"
#include "gridforge/gram/flow.hpp"

namespace gridforge::gram {

SetuidStarter::SetuidStarter(AccountTable accounts, std::filesystem::path sandbox_root, Spawner spawner,
                             EventSink& events)
    : accounts_(std::move(accounts)),
      sandbox_root_(std::move(sandbox_root)),
      spawner_(std::move(spawner)),
      events_(events) {}

std::string SetuidStarter::start(const Invocation& inv, const std::string& account,
                                 const std::string& grid_identity) {
    std::lock_guard lock(mu_);
    if (inv.network_origin()) {
        ++rejected_;
        throw Error(ErrorCode::NetworkOriginRejected, "setuid starter accepts local invocations only");
    }
    if (!accounts_.count(account)) {
        ++rejected_;
        throw Error(ErrorCode::UnknownAccount, "account '" + account + "' is not configured");
    }
    ++accepted_;
    const auto sandbox = sandbox_root_ / account;
    std::error_code ec;
    std::filesystem::create_directories(sandbox, ec);
    if (ec) {
        throw Error(ErrorCode::StarterFailure, "cannot create sandbox " + sandbox.string() + ": " + ec.message());
    }
    events_.record("setuid-starter", flow::detail(flow::kStarter, "account=" + account));
    try {
        return spawner_(account, grid_identity, sandbox);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::HostCredentialUnavailable || e.code() == ErrorCode::AccountMismatch) throw;
        throw Error(ErrorCode::StarterFailure, "LMJFS start failed: " + std::string(e.what()));
    } catch (const std::exception& e) {
        throw Error(ErrorCode::StarterFailure, "LMJFS start failed: " + std::string(e.what()));
    }
}

std::size_t SetuidStarter::accepted_invocations() const {
    std::lock_guard lock(mu_);
    return accepted_;
}

std::size_t SetuidStarter::rejected_invocations() const {
    std::lock_guard lock(mu_);
    return rejected_;
}

Grim::Grim(std::filesystem::path host_cert, std::filesystem::path host_key, AccountTable accounts, Clock clock)
    : host_cert_(std::move(host_cert)),
      host_key_(std::move(host_key)),
      accounts_(std::move(accounts)),
      clock_(std::move(clock)) {}

credstore::CredentialSet Grim::issue(const Invocation& inv, const std::string& grid_identity,
                                     const std::string& account) {
    std::lock_guard lock(mu_);
    if (inv.network_origin()) {
        ++rejected_;
        throw Error(ErrorCode::NetworkOriginRejected, "GRIM accepts local invocations only");
    }
    auto queues = accounts_.find(account);
    if (queues == accounts_.end()) {
        ++rejected_;
        throw Error(ErrorCode::UnknownAccount, "account '" + account + "' is not configured");
    }
    ++accepted_;
    credstore::CredentialSet host;
    try {
        host = credstore::load_credential(host_cert_, host_key_);
    } catch (const Error& e) {
        throw Error(ErrorCode::HostCredentialUnavailable, e.what());
    }
    const UnixTime now = clock_();
    const credstore::Extensions ext{{std::string(credstore::kExtGridIdentity), grid_identity},
                                    {std::string(credstore::kExtLocalAccount), account},
                                    {std::string(credstore::kExtLocalPolicy), local_policy_text(queues->second)}};
    try {
        return credstore::create_proxy(host, Validity::starting(now, kMaxGrimLifetime),
                                       credstore::DelegationDepth::limited(0), ext);
    } catch (const Error& e) {
        throw Error(ErrorCode::HostCredentialUnavailable, "host credential unusable: " + std::string(e.what()));
    }
}

std::size_t Grim::accepted_invocations() const {
    std::lock_guard lock(mu_);
    return accepted_;
}

std::size_t Grim::rejected_invocations() const {
    std::lock_guard lock(mu_);
    return rejected_;
}

std::string local_policy_text(const std::vector<std::string>& queues) {
    std::string out;
    for (const auto& q : queues) {
        if (!out.empty()) out += ',';
        out += q;
    }
    return out;
}

std::vector<std::string> parse_local_policy(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        if (comma > start) out.emplace_back(text.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

std::string LocalGate::start_lmjfs(const std::string& account, const std::string& grid_identity) {
    note("setuid-starter", account, grid_identity);
    return starter_.start(Invocation(false), account, grid_identity);
}

credstore::CredentialSet LocalGate::issue_grim(const std::string& grid_identity, const std::string& account) {
    note("grim", account, grid_identity);
    return grim_.issue(Invocation(false), grid_identity, account);
}

std::vector<LocalGate::Record> LocalGate::records() const {
    std::lock_guard lock(mu_);
    return records_;
}

void LocalGate::note(std::string helper, const std::string& account, const std::string& grid_identity) {
    std::lock_guard lock(mu_);
    records_.push_back({std::move(helper), account, grid_identity});
}

}  // namespace gridforge::gram
