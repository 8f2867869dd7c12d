#include "gridforge/gridctl/init.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "gridforge/cas/cas.hpp"
#include "gridforge/common/error.hpp"
#include "gridforge/credstore/credential.hpp"
#include "gridforge/gridmap/gridmap.hpp"

namespace gridforge::gridctl {

namespace fs = std::filesystem;

namespace {

constexpr UnixTime kCaLifetime = 365 * kDay;
constexpr UnixTime kEntityLifetime = 180 * kDay;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

void init_deployment(const fs::path& dir, const InitOptions& options) {
    if (fs::exists(dir / "gridforge.conf")) {
        throw Error(ErrorCode::ConfigError, "already initialized: " + (dir / "gridforge.conf").string());
    }
    for (const char* sub : {"ca", "anchors/user", "anchors/host", "host", "cas", "sandbox", "state", "users"}) {
        fs::create_directories(dir / sub);
    }
    const auto validity = Validity::starting(system_now() - kHour, kCaLifetime);
    const auto entity_validity = Validity::starting(system_now() - kHour, kEntityLifetime);

    const auto user_ca = credstore::create_ca("/O=Grid/CN=User CA", validity);
    const auto host_ca = credstore::create_ca("/O=Grid/CN=Host CA", validity);
    credstore::save_credential(dir / "ca/user-ca.json", dir / "ca/user-ca.key", user_ca);
    credstore::save_credential(dir / "ca/host-ca.json", dir / "ca/host-ca.key", host_ca);
    credstore::save_certificate(dir / "anchors/user/user-ca.json", user_ca.leaf());
    credstore::save_certificate(dir / "anchors/host/host-ca.json", host_ca.leaf());

    const auto host = credstore::issue_identity(host_ca, "/O=Grid/CN=host/localhost", entity_validity);
    credstore::save_credential(dir / "host/hostcert.json", dir / "host/hostkey", host);

    const std::string cas_identity = "/O=Grid/CN=cas/" + options.vo;
    const auto cas_cred = credstore::issue_identity(user_ca, cas_identity, entity_validity);
    credstore::save_credential(dir / "cas/cascert.json", dir / "cas/caskey", cas_cred);

    gridmap::GridMap gm;
    cas::PolicyGrants vo_policy;
    std::string accounts;
    for (const auto& name : options.users) {
        const std::string identity = "/O=Grid/CN=" + name;
        const auto user = credstore::issue_identity(user_ca, identity, entity_validity);
        const fs::path home = dir / "users" / name;
        fs::create_directories(home);
        credstore::save_credential(home / "usercert.json", home / "userkey", user);
        write_text(home / "gridforge.conf",
                   "include = ../../gridforge.conf\n"
                   "user_cert = usercert.json\n"
                   "user_key = userkey\n"
                   "proxy_cert = proxy.json\n"
                   "proxy_key = proxykey\n"
                   "assertion = cas_assertion.json\n");
        vo_policy[identity].insert(cas::Right::make("/gram/*", "submit"));
        if (std::find(options.unmapped.begin(), options.unmapped.end(), name) != options.unmapped.end()) continue;
        const std::string account = lowercase(name);
        gm.add({identity, {account}});
        accounts += "account." + account + " = default,batch\n";
    }
    write_text(dir / "grid-mapfile", gm.serialize());
    cas::save_policy_file(dir / "cas/vo.policy", vo_policy);
    cas::save_policy_file(dir / "resource.policy",
                          cas::PolicyGrants{{std::string(cas::kVoKeyPrefix) + options.vo,
                                             {cas::Right::make("/gram/*", "submit")}}});

    std::string conf =
        "# Resource and services\n"
        "state_dir = state\n"
        "user_anchors = anchors/user\n"
        "host_anchors = anchors/host\n"
        "host_cert = host/hostcert.json\n"
        "host_key = host/hostkey\n"
        "gridmap = grid-mapfile\n"
        "sandbox_root = sandbox\n"
        "audit_log = audit.log\n"
        "router_port = 0\n" +
        accounts +
        "lmjfs_idle_timeout = 600\n"
        "clock_skew = 300\n"
        "\n# Community Authorization Service\n"
        "cas_vo = " + options.vo + "\n"
        "cas_identity = " + cas_identity + "\n"
        "cas_policy = cas/vo.policy\n"
        "cas_cert = cas/cascert.json\n"
        "cas_key = cas/caskey\n"
        "cas_port = 0\n"
        "cas_admins = " + (options.users.empty() ? std::string() : "/O=Grid/CN=" + options.users.front()) + "\n"
        "assertion_lifetime = 600\n";
    if (options.enforce_cas) {
        conf += "resource_policy = resource.policy\nrequired_vo = " + options.vo + "\n";
    } else {
        conf += "# resource_policy = resource.policy\n# required_vo = " + options.vo + "\n";
    }
    write_text(dir / "gridforge.conf", conf);
}

}  // namespace gridforge::gridctl
