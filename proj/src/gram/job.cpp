#include "gridforge/gram/job.hpp"

#include <filesystem>

#include "gridforge/common/error.hpp"

namespace gridforge::gram {

bool sandbox_relative(std::string_view path) {
    if (path.empty() || path.find('\0') != std::string_view::npos) return false;
    const std::filesystem::path p{std::string(path)};
    if (p.is_absolute()) return false;
    for (const auto& part : p) {
        if (part == "..") return false;
    }
    return true;
}

void JobDescription::check() const {
    if (executable.empty()) {
        throw Error(ErrorCode::InvalidJobDescription, "executable is empty");
    }
    for (const auto* p : {&working_dir, &stdout_path, &stderr_path}) {
        if (!p->empty() && !sandbox_relative(*p)) {
            throw Error(ErrorCode::InvalidJobDescription, "path escapes the sandbox: " + *p);
        }
    }
    if (queue.empty()) {
        throw Error(ErrorCode::InvalidJobDescription, "queue is empty");
    }
}

Json JobDescription::to_json() const {
    return Json{{"executable", executable},   {"arguments", arguments},     {"working_dir", working_dir},
                {"stdout_path", stdout_path}, {"stderr_path", stderr_path}, {"queue", queue}};
}

JobDescription JobDescription::from_json(const Json& doc) {
    JobDescription d;
    try {
        d.executable = get_string(doc, "executable");
        for (const auto& a : get_array(doc, "arguments")) {
            if (!a.is_string()) throw Error(ErrorCode::InvalidJobDescription, "argument is not a string");
            d.arguments.push_back(a.get<std::string>());
        }
        d.working_dir = get_string(doc, "working_dir");
        d.stdout_path = get_string(doc, "stdout_path");
        d.stderr_path = get_string(doc, "stderr_path");
        d.queue = get_string(doc, "queue");
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidJobDescription, e.detail());
    }
    d.check();
    return d;
}

std::string_view to_string(JobState state) {
    switch (state) {
        case JobState::Pending: return "Pending";
        case JobState::Active: return "Active";
        case JobState::Done: return "Done";
        case JobState::Failed: return "Failed";
        case JobState::Canceled: return "Canceled";
    }
    return "?";
}

JobState job_state_from_string(std::string_view name) {
    for (auto s : {JobState::Pending, JobState::Active, JobState::Done, JobState::Failed, JobState::Canceled}) {
        if (to_string(s) == name) return s;
    }
    throw Error(ErrorCode::MalformedDocument, "unknown job state " + std::string(name));
}

bool transition_allowed(JobState from, JobState to) {
    switch (from) {
        case JobState::Pending: return to == JobState::Active || to == JobState::Canceled;
        case JobState::Active: return to == JobState::Done || to == JobState::Failed || to == JobState::Canceled;
        default: return false;
    }
}

bool is_terminal(JobState state) {
    return state == JobState::Done || state == JobState::Failed || state == JobState::Canceled;
}

void JobRecord::transition(JobState to) {
    if (!transition_allowed(state, to)) {
        throw Error(ErrorCode::InvalidTransition,
                    "job " + job_id + ": " + std::string(to_string(state)) + " -> " + std::string(to_string(to)));
    }
    if (to == JobState::Active && !delegated_credential) {
        throw Error(ErrorCode::NoDelegatedCredential, "job " + job_id + " has no delegated credential");
    }
    state = to;
}

Json JobRecord::to_json() const {
    return Json{{"job_id", job_id},
                {"description", description.to_json()},
                {"owner", owner},
                {"local_account", local_account},
                {"state", to_string(state)},
                {"exit_code", exit_code ? Json(*exit_code) : Json(nullptr)},
                {"delegated_chain",
                 delegated_credential ? credstore::chain_to_json(delegated_credential->chain) : Json(nullptr)}};
}

JobStatus JobStatus::from_json(const Json& doc) {
    JobStatus s;
    s.job_id = get_string(doc, "job_id");
    s.description = JobDescription::from_json(get_object(doc, "description"));
    s.owner = get_string(doc, "owner");
    s.local_account = get_string(doc, "local_account");
    s.state = job_state_from_string(get_string(doc, "state"));
    const Json& code = require_field(doc, "exit_code");
    if (code.is_number_integer()) s.exit_code = code.get<int>();
    const Json& chain = require_field(doc, "delegated_chain");
    if (chain.is_array()) s.delegated_chain = credstore::chain_from_json(chain);
    return s;
}

}  // namespace gridforge::gram
