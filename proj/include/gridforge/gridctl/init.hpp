#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gridforge::gridctl {

struct InitOptions {
    /// Users get the identity "/O=Grid/CN=<name>" and, unless listed in
    /// `unmapped`, a grid-mapfile line to the lowercased name.
    std::vector<std::string> users{"Alice"};
    std::vector<std::string> unmapped;
    std::string vo = "gridforge";
    /// Also write resource_policy and require a CAS assertion for job submission.
    bool enforce_cas = false;
};

/// Writes a self-contained deployment under `dir`: CAs and trust anchors,
/// host and CAS credentials, grid-mapfile, VO policy, gridforge.conf and a
/// per-user config users/<name>/gridforge.conf. Refuses to overwrite an
/// existing gridforge.conf (ConfigError).
void init_deployment(const std::filesystem::path& dir, const InitOptions& options);

}  // namespace gridforge::gridctl
