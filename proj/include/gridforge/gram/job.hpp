#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gridforge/common/json_util.hpp"
#include "gridforge/credstore/credential.hpp"

namespace gridforge::gram {

struct JobDescription {
    std::string executable;
    std::vector<std::string> arguments;
    /// Relative to the account sandbox; "." when empty.
    std::string working_dir;
    /// Relative to the sandbox; defaults to jobs/<job_id>.out and .err.
    std::string stdout_path;
    std::string stderr_path;
    std::string queue = "default";

    /// Throws Error(InvalidJobDescription).
    void check() const;

    Json to_json() const;
    static JobDescription from_json(const Json& doc);

    bool operator==(const JobDescription&) const = default;
};

/// True for a nonempty relative path with no ".." component.
bool sandbox_relative(std::string_view path);

enum class JobState { Pending, Active, Done, Failed, Canceled };

std::string_view to_string(JobState state);
JobState job_state_from_string(std::string_view name);

/// Pending→Active→{Done,Failed}; Pending|Active→Canceled.
bool transition_allowed(JobState from, JobState to);
bool is_terminal(JobState state);

struct JobRecord {
    std::string job_id;
    JobDescription description;
    std::string owner;
    std::string local_account;
    JobState state = JobState::Pending;
    std::optional<credstore::CredentialSet> delegated_credential;
    std::optional<int> exit_code;

    /// Throws Error(InvalidTransition); also refuses Active without a
    /// delegated credential (NoDelegatedCredential).
    void transition(JobState to);

    /// Public view: the delegated credential is reduced to its chain.
    Json to_json() const;
};

/// What a client sees of a job.
struct JobStatus {
    std::string job_id;
    std::string owner;
    std::string local_account;
    JobState state = JobState::Pending;
    std::optional<int> exit_code;
    std::optional<credstore::Chain> delegated_chain;
    JobDescription description;

    static JobStatus from_json(const Json& doc);
};

}  // namespace gridforge::gram
