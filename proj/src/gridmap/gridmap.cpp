#include "gridforge/gridmap/gridmap.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gridforge/common/error.hpp"

namespace gridforge::gridmap {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }

std::vector<std::string> split_accounts(std::string_view list) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = list.find(',', start);
        out.emplace_back(list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

void check_entry(const GridMapEntry& entry, std::size_t line_no) {
    if (entry.grid_identity.empty() || entry.grid_identity.find('"') != std::string::npos) {
        throw Error(ErrorCode::ParseError, "invalid grid identity", line_no);
    }
    if (entry.accounts.empty()) {
        throw Error(ErrorCode::ParseError, "no accounts listed", line_no);
    }
    for (const auto& a : entry.accounts) {
        if (!valid_account_name(a)) {
            throw Error(ErrorCode::ParseError, "invalid account name '" + a + "'", line_no);
        }
    }
}

}  // namespace

bool valid_account_name(std::string_view name) {
    if (name.empty() || name.size() > 32) return false;
    const char first = name.front();
    if (!((first >= 'a' && first <= 'z') || first == '_')) return false;
    return std::all_of(name.begin() + 1, name.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

const GridMapEntry* GridMap::find(std::string_view grid_identity) const {
    auto it = std::find_if(entries_.begin(), entries_.end(),
                           [&](const GridMapEntry& e) { return e.grid_identity == grid_identity; });
    return it == entries_.end() ? nullptr : &*it;
}

void GridMap::add(GridMapEntry entry, std::string trailing_comment) {
    const std::size_t line_no = lines_.size() + 1;
    check_entry(entry, line_no);
    if (find(entry.grid_identity)) {
        throw Error(ErrorCode::DuplicateIdentity, entry.grid_identity, line_no);
    }
    const bool has_comment = !trailing_comment.empty();
    lines_.push_back(Line{Line::Kind::Entry, std::move(trailing_comment), entries_.size(), has_comment});
    entries_.push_back(std::move(entry));
}

std::string GridMap::serialize() const {
    std::ostringstream out;
    for (const auto& line : lines_) {
        switch (line.kind) {
            case Line::Kind::Blank:
                break;
            case Line::Kind::Comment:
                out << '#' << line.comment;
                break;
            case Line::Kind::Entry: {
                const auto& e = entries_[line.entry_index];
                out << '"' << e.grid_identity << "\" ";
                for (std::size_t i = 0; i < e.accounts.size(); ++i) {
                    out << (i ? "," : "") << e.accounts[i];
                }
                if (line.has_comment) {
                    out << " #" << line.comment;
                }
                break;
            }
        }
        out << '\n';
    }
    return out.str();
}

GridMap parse_gridmap(std::string_view text) {
    GridMap gm;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;

        std::size_t i = 0;
        while (i < raw.size() && is_blank(raw[i])) ++i;
        if (i == raw.size()) {
            gm.lines_.push_back({GridMap::Line::Kind::Blank, {}, 0});
            continue;
        }
        if (raw[i] == '#') {
            std::string_view comment = raw.substr(i + 1);
            if (!comment.empty() && comment.back() == '\r') comment.remove_suffix(1);
            gm.lines_.push_back({GridMap::Line::Kind::Comment, std::string(comment), 0});
            continue;
        }
        if (raw[i] != '"') {
            throw Error(ErrorCode::ParseError, "expected a double-quoted grid identity", line_no);
        }
        const auto close = raw.find('"', i + 1);
        if (close == std::string_view::npos) {
            throw Error(ErrorCode::ParseError, "unterminated grid identity", line_no);
        }
        GridMapEntry entry;
        entry.grid_identity = std::string(raw.substr(i + 1, close - i - 1));

        std::size_t j = close + 1;
        if (j >= raw.size() || raw[j] != ' ') {
            throw Error(ErrorCode::ParseError, "expected a space after the grid identity", line_no);
        }
        while (j < raw.size() && raw[j] == ' ') ++j;
        std::size_t end = j;
        while (end < raw.size() && !is_blank(raw[end]) && raw[end] != '#') ++end;
        entry.accounts = split_accounts(raw.substr(j, end - j));

        std::string comment;
        bool has_comment = false;
        std::size_t k = end;
        while (k < raw.size() && is_blank(raw[k])) ++k;
        if (k < raw.size()) {
            if (raw[k] != '#') {
                throw Error(ErrorCode::ParseError, "unexpected text after account list", line_no);
            }
            std::string_view c = raw.substr(k + 1);
            while (!c.empty() && is_blank(c.back())) c.remove_suffix(1);
            comment = std::string(c);
            has_comment = true;
        }

        check_entry(entry, line_no);
        if (gm.find(entry.grid_identity)) {
            throw Error(ErrorCode::DuplicateIdentity, entry.grid_identity, line_no);
        }
        gm.lines_.push_back({GridMap::Line::Kind::Entry, std::move(comment), gm.entries_.size(), has_comment});
        gm.entries_.push_back(std::move(entry));
    }
    return gm;
}

GridMap load_gridmap(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot read grid-mapfile " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_gridmap(ss.str());
}

std::string map_identity(const GridMap& gm, std::string_view grid_identity,
                         const std::optional<std::string>& requested_account) {
    const GridMapEntry* entry = gm.find(grid_identity);
    if (!entry) {
        throw Error(ErrorCode::NoMapping, "no grid-mapfile entry for " + std::string(grid_identity));
    }
    if (!requested_account) {
        return entry->accounts.front();
    }
    if (std::find(entry->accounts.begin(), entry->accounts.end(), *requested_account) == entry->accounts.end()) {
        throw Error(ErrorCode::AccountNotPermitted,
                    "account '" + *requested_account + "' not listed for " + std::string(grid_identity));
    }
    return *requested_account;
}

}  // namespace gridforge::gridmap
