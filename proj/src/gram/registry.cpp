#include "gridforge/gram/registry.hpp"

namespace gridforge::gram {

void ServiceRegistry::register_endpoint(const std::string& identity, const std::string& endpoint) {
    {
        std::lock_guard lock(mu_);
        entries_[identity] = endpoint;
    }
    cv_.notify_all();
}

void ServiceRegistry::deregister(const std::string& identity, const std::string& endpoint) {
    std::lock_guard lock(mu_);
    auto it = entries_.find(identity);
    if (it != entries_.end() && it->second == endpoint) entries_.erase(it);
}

std::optional<std::string> ServiceRegistry::lookup(const std::string& identity) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(identity);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> ServiceRegistry::wait_for(const std::string& identity,
                                                     std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    std::optional<std::string> found;
    cv_.wait_for(lock, timeout, [&] {
        auto it = entries_.find(identity);
        if (it != entries_.end()) found = it->second;
        return found.has_value();
    });
    return found;
}

std::size_t ServiceRegistry::size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
}

void ServiceRegistry::clear() {
    std::lock_guard lock(mu_);
    entries_.clear();
}

}  // namespace gridforge::gram
