#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridforge/common/bytes.hpp"
#include "gridforge/common/events.hpp"
#include "gridforge/common/json_util.hpp"
#include "gridforge/common/time.hpp"
#include "gridforge/gram/privilege.hpp"

namespace gridforge::gridctl {

inline constexpr std::size_t kAuditDigestSize = 32;

/// One line of the audit log, stored as compact JSON with sorted keys:
///   {"actor","digest","event","index","prev_digest","timestamp"}
/// Digests are lowercase hex of SHA-256 over the canonical encoding of
/// (index, timestamp, actor, event, prev_digest).
struct AuditEntry {
    std::uint64_t index = 0;
    UnixTime timestamp = 0;
    std::string actor;
    std::string event;
    Bytes prev_digest;
    Bytes digest;

    Bytes compute_digest() const;
    std::string to_line() const;
    /// Throws Error(MalformedDocument).
    static AuditEntry from_line(std::string_view line);
};

/// Append-only, hash-chained log file. Appends take an exclusive file lock,
/// so several processes may share one log.
class AuditLog final : public EventSink {
public:
    explicit AuditLog(std::filesystem::path path, gram::Clock clock = system_now);

    AuditEntry append(std::string_view actor, std::string_view event);
    void record(std::string_view actor, std::string_view event) override { append(actor, event); }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    gram::Clock clock_;
};

/// Parses every line; stops at the first unparseable one.
std::vector<AuditEntry> read_audit_entries(const std::filesystem::path& path);

/// Index of the first entry that breaks the chain, or nothing if intact.
/// An empty or missing log is intact.
std::optional<std::size_t> audit_first_bad(const std::filesystem::path& path);

/// Throws Error(ChainBroken, index) when audit_first_bad finds one.
void audit_verify(const std::filesystem::path& path);

}  // namespace gridforge::gridctl
