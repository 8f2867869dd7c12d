#include "gridforge/gridctl/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "gridforge/common/error.hpp"

namespace gridforge::gridctl {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

DeploymentConfig DeploymentConfig::load(const std::filesystem::path& file) {
    DeploymentConfig c;
    c.source_ = std::filesystem::absolute(file);
    c.read(c.source_, 0);
    return c;
}

void DeploymentConfig::read(const std::filesystem::path& file, int depth) {
    if (depth > 8) {
        throw Error(ErrorCode::ConfigError, "include nesting too deep at " + file.string());
    }
    std::ifstream in(file);
    if (!in) {
        throw Error(ErrorCode::ConfigError, "cannot read config file " + file.string());
    }
    const auto base = file.parent_path();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::ConfigError, file.string() + ": expected key = value", line_no);
        }
        const std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) {
            throw Error(ErrorCode::ConfigError, file.string() + ": empty key", line_no);
        }
        if (key == "include") {
            std::filesystem::path inc(value);
            read(inc.is_absolute() ? inc : base / inc, depth + 1);
        } else {
            values_[key] = Value{value, base};
        }
    }
}

std::optional<std::string> DeploymentConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.text.empty()) return std::nullopt;
    return it->second.text;
}

std::string DeploymentConfig::require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw Error(ErrorCode::ConfigError, "missing config key '" + key + "' in " + source_.string());
    return *v;
}

std::filesystem::path DeploymentConfig::path(const std::string& key) const {
    auto p = optional_path(key);
    if (!p) throw Error(ErrorCode::ConfigError, "missing config key '" + key + "' in " + source_.string());
    return *p;
}

std::optional<std::filesystem::path> DeploymentConfig::optional_path(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end() || it->second.text.empty()) return std::nullopt;
    std::filesystem::path p(it->second.text);
    return (p.is_absolute() ? p : it->second.base_dir / p).lexically_normal();
}

std::int64_t DeploymentConfig::integer(const std::string& key, std::int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        std::size_t used = 0;
        const auto n = std::stoll(*v, &used);
        if (used != v->size()) throw std::invalid_argument("trailing text");
        return n;
    } catch (const std::exception&) {
        throw Error(ErrorCode::ConfigError, "config key '" + key + "' is not an integer: " + *v);
    }
}

gram::AccountTable DeploymentConfig::accounts() const {
    gram::AccountTable table;
    constexpr std::string_view prefix = "account.";
    for (const auto& [key, value] : values_) {
        if (!key.starts_with(prefix)) continue;
        std::vector<std::string> queues;
        std::size_t start = 0;
        while (start <= value.text.size()) {
            const auto comma = std::min(value.text.find(',', start), value.text.size());
            if (auto q = trim(std::string_view(value.text).substr(start, comma - start)); !q.empty()) {
                queues.push_back(std::move(q));
            }
            start = comma + 1;
        }
        if (queues.empty()) queues.push_back("default");
        table[key.substr(prefix.size())] = queues;
    }
    return table;
}

void DeploymentConfig::require_existing(const std::vector<std::string>& keys) const {
    for (const auto& key : keys) {
        const auto p = path(key);
        if (!std::filesystem::exists(p)) {
            throw Error(ErrorCode::ConfigError, "path for '" + key + "' does not exist: " + p.string());
        }
    }
}

std::filesystem::path resolve_config_path(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return *flag;
    if (const char* env = std::getenv(kConfigEnv); env && *env) return env;
    throw Error(ErrorCode::ConfigError, std::string("no config file: pass --config or set ") + kConfigEnv);
}

}  // namespace gridforge::gridctl
