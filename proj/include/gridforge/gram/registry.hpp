#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace gridforge::gram {

/// Grid identity → LMJFS endpoint. In memory only.
class ServiceRegistry {
public:
    /// Replaces any existing entry for `identity`.
    void register_endpoint(const std::string& identity, const std::string& endpoint);
    /// Removes the entry only if it still points at `endpoint`.
    void deregister(const std::string& identity, const std::string& endpoint);
    std::optional<std::string> lookup(const std::string& identity) const;
    std::optional<std::string> wait_for(const std::string& identity, std::chrono::milliseconds timeout) const;
    std::size_t size() const;
    void clear();

private:
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::map<std::string, std::string> entries_;
};

}  // namespace gridforge::gram
