#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "gridforge/gram/job.hpp"

namespace gridforge::gram {

struct LaunchSpec {
    std::string job_id;
    /// The account the process runs as; every launch is tagged with it.
    std::string account;
    std::filesystem::path sandbox;
    JobDescription description;
};

/// Starts job processes inside an account sandbox.
class JobLauncher {
public:
    using ExitHandler = std::function<void(int exit_code)>;

    virtual ~JobLauncher() = default;
    /// Throws Error(StarterFailure) if the process cannot be started.
    virtual void launch(const LaunchSpec& spec, ExitHandler on_exit) = 0;
    virtual void cancel(const std::string& job_id) = 0;
};

/// posix_spawn in the sandbox directory with stdout/stderr redirected to files
/// there. A signal death is reported as 128 + signal number.
class PosixLauncher final : public JobLauncher {
public:
    PosixLauncher() = default;
    PosixLauncher(const PosixLauncher&) = delete;
    PosixLauncher& operator=(const PosixLauncher&) = delete;
    ~PosixLauncher() override;

    void launch(const LaunchSpec& spec, ExitHandler on_exit) override;
    void cancel(const std::string& job_id) override;

private:
    std::mutex mu_;
    std::map<std::string, int> pids_;
    std::vector<std::thread> waiters_;
};

}  // namespace gridforge::gram
