#include "gridforge/gridctl/audit.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstring>
#include <fstream>

#include "gridforge/common/canonical.hpp"
#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"

namespace gridforge::gridctl {

namespace {

class LockedFile {
public:
    explicit LockedFile(const std::filesystem::path& path) {
        fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0600);
        if (fd_ < 0) {
            throw Error(ErrorCode::IoError, "cannot open audit log " + path.string() + ": " + std::strerror(errno));
        }
        while (::flock(fd_, LOCK_EX) < 0) {
            if (errno != EINTR) {
                ::close(fd_);
                throw Error(ErrorCode::IoError, "cannot lock audit log: " + std::string(std::strerror(errno)));
            }
        }
    }
    ~LockedFile() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    LockedFile(const LockedFile&) = delete;
    LockedFile& operator=(const LockedFile&) = delete;

    /// The last nonempty line, or nothing for an empty file.
    std::optional<std::string> last_line() const {
        struct stat st {};
        if (::fstat(fd_, &st) < 0) throw Error(ErrorCode::IoError, "cannot stat audit log");
        const off_t size = st.st_size;
        off_t window = 4096;
        while (true) {
            const off_t start = size > window ? size - window : 0;
            std::string buf(static_cast<std::size_t>(size - start), '\0');
            if (::pread(fd_, buf.data(), buf.size(), start) != static_cast<ssize_t>(buf.size())) {
                throw Error(ErrorCode::IoError, "cannot read audit log");
            }
            while (!buf.empty() && buf.back() == '\n') buf.pop_back();
            if (buf.empty() && start == 0) return std::nullopt;
            const auto nl = buf.rfind('\n');
            if (nl != std::string::npos) return buf.substr(nl + 1);
            if (start == 0) return buf;
            window *= 2;
        }
    }

    void write_all(const std::string& data) const {
        std::size_t done = 0;
        while (done < data.size()) {
            const ssize_t n = ::write(fd_, data.data() + done, data.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorCode::IoError, "cannot append to audit log: " + std::string(std::strerror(errno)));
            }
            done += static_cast<std::size_t>(n);
        }
    }

private:
    int fd_ = -1;
};

Bytes hex_field(const Json& doc, std::string_view key) {
    const Bytes b = hex_decode(get_string(doc, key));
    if (b.size() != kAuditDigestSize) {
        throw Error(ErrorCode::MalformedDocument, std::string(key) + " is not a 32-byte digest");
    }
    return b;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::vector<std::string> lines;
    std::ifstream in(path);
    if (!in) {
        if (!std::filesystem::exists(path)) return lines;
        throw Error(ErrorCode::IoError, "cannot read audit log " + path.string());
    }
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace

Bytes AuditEntry::compute_digest() const {
    CanonicalEncoder enc;
    enc.add_uint("index", index)
        .add_int("timestamp", timestamp)
        .add_string("actor", actor)
        .add_string("event", event)
        .add_bytes("prev_digest", prev_digest);
    const auto d = crypto::sha256(enc.encode());
    return Bytes(d.begin(), d.end());
}

std::string AuditEntry::to_line() const {
    const Json doc{{"index", index},
                   {"timestamp", timestamp},
                   {"actor", actor},
                   {"event", event},
                   {"prev_digest", hex_encode(prev_digest)},
                   {"digest", hex_encode(digest)}};
    return dump_document(doc);
}

AuditEntry AuditEntry::from_line(std::string_view line) {
    const Json doc = parse_document(line);
    if (doc.size() != 6) {
        throw Error(ErrorCode::MalformedDocument, "audit entry must have exactly 6 fields");
    }
    AuditEntry e;
    e.index = get_uint(doc, "index");
    e.timestamp = get_int(doc, "timestamp");
    e.actor = get_string(doc, "actor");
    e.event = get_string(doc, "event");
    e.prev_digest = hex_field(doc, "prev_digest");
    e.digest = hex_field(doc, "digest");
    return e;
}

AuditLog::AuditLog(std::filesystem::path path, gram::Clock clock) : path_(std::move(path)), clock_(std::move(clock)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

AuditEntry AuditLog::append(std::string_view actor, std::string_view event) {
    LockedFile file(path_);
    AuditEntry e;
    e.prev_digest = Bytes(kAuditDigestSize, 0);
    if (auto last = file.last_line()) {
        AuditEntry prev;
        try {
            prev = AuditEntry::from_line(*last);
        } catch (const Error& err) {
            throw Error(ErrorCode::ChainBroken, "last audit entry unreadable: " + err.detail());
        }
        e.index = prev.index + 1;
        e.prev_digest = prev.digest;
    }
    e.timestamp = clock_();
    e.actor = std::string(actor);
    e.event = std::string(event);
    e.digest = e.compute_digest();
    file.write_all(e.to_line() + "\n");
    return e;
}

std::vector<AuditEntry> read_audit_entries(const std::filesystem::path& path) {
    std::vector<AuditEntry> out;
    for (const auto& line : read_lines(path)) {
        try {
            out.push_back(AuditEntry::from_line(line));
        } catch (const Error&) {
            break;
        }
    }
    return out;
}

std::optional<std::size_t> audit_first_bad(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    Bytes prev(kAuditDigestSize, 0);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        AuditEntry e;
        try {
            e = AuditEntry::from_line(lines[i]);
        } catch (const Error&) {
            return i;
        }
        if (e.to_line() != lines[i] || e.index != i || e.prev_digest != prev || e.compute_digest() != e.digest) {
            return i;
        }
        prev = e.digest;
    }
    return std::nullopt;
}

void audit_verify(const std::filesystem::path& path) {
    if (auto bad = audit_first_bad(path)) {
        throw Error(ErrorCode::ChainBroken, "audit entry " + std::to_string(*bad) + " does not verify", *bad);
    }
}

}  // namespace gridforge::gridctl
