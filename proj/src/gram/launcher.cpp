#include "gridforge/gram/launcher.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

#include <cstring>

#include "gridforge/common/error.hpp"

extern char** environ;

namespace gridforge::gram {

namespace {

int exit_status_of(int status) {
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace

PosixLauncher::~PosixLauncher() {
    {
        std::lock_guard lock(mu_);
        for (const auto& [_, pid] : pids_) ::kill(pid, SIGKILL);
    }
    for (auto& t : waiters_) {
        if (t.joinable()) t.join();
    }
}

void PosixLauncher::launch(const LaunchSpec& spec, ExitHandler on_exit) {
    const auto& d = spec.description;
    const std::filesystem::path workdir = spec.sandbox / (d.working_dir.empty() ? "." : d.working_dir);
    const std::filesystem::path out = spec.sandbox / (d.stdout_path.empty() ? "jobs/" + spec.job_id + ".out" : d.stdout_path);
    const std::filesystem::path err = spec.sandbox / (d.stderr_path.empty() ? "jobs/" + spec.job_id + ".err" : d.stderr_path);
    std::error_code ec;
    for (const auto& dir : {workdir, out.parent_path(), err.parent_path()}) {
        std::filesystem::create_directories(dir, ec);
        if (ec) throw Error(ErrorCode::StarterFailure, "cannot create " + dir.string() + ": " + ec.message());
    }

    std::vector<std::string> args{d.executable};
    args.insert(args.end(), d.arguments.begin(), d.arguments.end());
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0640);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0640);
    posix_spawn_file_actions_addchdir_np(&actions, workdir.c_str());

    pid_t pid = 0;
    // Jobs start with default signal handling whatever the service blocks.
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    sigset_t none;
    sigset_t all;
    sigemptyset(&none);
    sigfillset(&all);
    posix_spawnattr_setsigmask(&attr, &none);
    posix_spawnattr_setsigdefault(&attr, &all);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETSIGMASK | POSIX_SPAWN_SETSIGDEF);
    const int rc = ::posix_spawnp(&pid, argv[0], &actions, &attr, argv.data(), environ);
    posix_spawnattr_destroy(&attr);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
        throw Error(ErrorCode::StarterFailure, "cannot start " + d.executable + ": " + std::strerror(rc));
    }

    std::lock_guard lock(mu_);
    pids_[spec.job_id] = pid;
    waiters_.emplace_back([this, pid, job_id = spec.job_id, on_exit = std::move(on_exit)] {
        int status = 0;
        while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
        }
        {
            std::lock_guard lock(mu_);
            pids_.erase(job_id);
        }
        on_exit(exit_status_of(status));
    });
}

void PosixLauncher::cancel(const std::string& job_id) {
    std::lock_guard lock(mu_);
    auto it = pids_.find(job_id);
    if (it != pids_.end()) ::kill(it->second, SIGTERM);
}

}  // namespace gridforge::gram
