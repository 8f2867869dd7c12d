#pragma once

#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace gridforge {

struct Event {
    std::string actor;
    std::string event;
};

/// Receives security-relevant events. Implementations must be thread-safe.
class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void record(std::string_view actor, std::string_view event) = 0;
};

class NullEventSink final : public EventSink {
public:
    void record(std::string_view, std::string_view) override {}
};

class MemoryEventSink final : public EventSink {
public:
    void record(std::string_view actor, std::string_view event) override {
        std::lock_guard lock(mu_);
        events_.push_back({std::string(actor), std::string(event)});
    }
    std::vector<Event> events() const {
        std::lock_guard lock(mu_);
        return events_;
    }
    void clear() {
        std::lock_guard lock(mu_);
        events_.clear();
    }

private:
    mutable std::mutex mu_;
    std::vector<Event> events_;
};

}  // namespace gridforge
