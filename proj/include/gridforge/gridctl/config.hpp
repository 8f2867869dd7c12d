#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridforge/gram/privilege.hpp"

namespace gridforge::gridctl {

inline constexpr const char* kConfigEnv = "GRIDFORGE_CONFIG";

/// Textual key=value configuration. '#' starts a comment line; "include =
/// <file>" reads another file first (later keys win). Relative paths are
/// resolved against the directory of the file that set them.
///
/// Keys used by the services: state_dir, user_anchors, host_anchors,
/// host_cert, host_key, gridmap, sandbox_root, audit_log, router_port,
/// account.<name> = <queue>[,<queue>...], resource_policy, cas_identity,
/// required_vo, cas_anchors, cas_vo, cas_policy, cas_cert, cas_key, cas_port,
/// cas_admins (identities separated by ';'), clock_skew,
/// nonce_retention, lmjfs_idle_timeout, assertion_lifetime.
/// Keys used by the client: user_cert, user_key, proxy_cert, proxy_key.
class DeploymentConfig {
public:
    /// Throws Error(ConfigError) for unreadable files and malformed lines.
    static DeploymentConfig load(const std::filesystem::path& file);

    std::optional<std::string> get(const std::string& key) const;
    std::string require(const std::string& key) const;
    std::filesystem::path path(const std::string& key) const;
    std::optional<std::filesystem::path> optional_path(const std::string& key) const;
    std::int64_t integer(const std::string& key, std::int64_t fallback) const;
    gram::AccountTable accounts() const;

    /// Throws Error(ConfigError) naming the first key whose path is missing.
    void require_existing(const std::vector<std::string>& keys) const;

    const std::filesystem::path& source() const { return source_; }

private:
    struct Value {
        std::string text;
        std::filesystem::path base_dir;
    };
    void read(const std::filesystem::path& file, int depth);

    std::filesystem::path source_;
    std::map<std::string, Value> values_;
};

/// `--config` if given, else $GRIDFORGE_CONFIG. Throws Error(ConfigError).
std::filesystem::path resolve_config_path(const std::optional<std::string>& flag);

}  // namespace gridforge::gridctl
