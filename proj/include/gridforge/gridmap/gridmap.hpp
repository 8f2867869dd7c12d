#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridforge::gridmap {

// grid-mapfile line format:
//
//   [ws] "<grid identity>" <spaces> account[,account...] [ws] [# comment]
//
// Identities are double-quoted with no escapes and no embedded quotes.
// Account names match [a-z_][a-z0-9_-]{0,31}; the first one is the default.
// Blank lines and lines starting with '#' are ignored.

struct GridMapEntry {
    std::string grid_identity;
    std::vector<std::string> accounts;

    bool operator==(const GridMapEntry&) const = default;
};

/// Parsed file. Comments and blank lines are kept so that a file can be
/// written back without losing them.
class GridMap {
public:
    const std::vector<GridMapEntry>& entries() const { return entries_; }
    const GridMapEntry* find(std::string_view grid_identity) const;

    /// Appends an entry; throws Error(DuplicateIdentity) or Error(ParseError).
    void add(GridMapEntry entry, std::string trailing_comment = {});

    std::string serialize() const;

private:
    friend GridMap parse_gridmap(std::string_view text);

    struct Line {
        enum class Kind { Blank, Comment, Entry } kind;
        std::string comment;
        std::size_t entry_index = 0;
        bool has_comment = false;
    };

    std::vector<GridMapEntry> entries_;
    std::vector<Line> lines_;
};

bool valid_account_name(std::string_view name);

/// Errors: ParseError(line), DuplicateIdentity(line); lines are 1-based.
GridMap parse_gridmap(std::string_view text);
GridMap load_gridmap(const std::filesystem::path& path);

/// The requested account if it is listed for `grid_identity`, otherwise the
/// first listed account. Errors: NoMapping, AccountNotPermitted.
std::string map_identity(const GridMap& gm, std::string_view grid_identity,
                         const std::optional<std::string>& requested_account = std::nullopt);

}  // namespace gridforge::gridmap
