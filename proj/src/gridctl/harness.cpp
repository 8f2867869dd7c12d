#include "gridforge/gridctl/harness.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/file.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "gridforge/common/error.hpp"
#include "gridforge/gridctl/audit.hpp"
#include "gridforge/gridmap/gridmap.hpp"

namespace gridforge::gridctl {

namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

constexpr auto kStartupWait = 15s;
constexpr auto kShutdownWait = 10s;

std::string tcp_hint(std::int64_t port) { return "tcp://127.0.0.1:" + std::to_string(port); }

// Holds an exclusive lock on the harness lock file for as long as the
// descriptor stays open, in this process or any child that inherits it.
int try_lock(const fs::path& lock_path) {
    const int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(ErrorCode::IoError, "cannot open " + lock_path.string());
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd);
        return -1;
    }
    return fd;
}

void write_atomically(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << text;
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string last_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::string last;
    while (std::getline(in, line)) {
        if (!line.empty()) last = line;
    }
    return last;
}

std::optional<ServiceEndpoints> parse_endpoints(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        const Json doc = parse_document(ss.str());
        ServiceEndpoints eps;
        eps.pid = static_cast<long>(get_int(doc, "pid"));
        eps.router = get_string(doc, "router");
        if (doc.contains("cas") && !doc["cas"].is_null()) eps.cas = get_string(doc, "cas");
        return eps;
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

StatePaths state_paths(const DeploymentConfig& config) {
    const fs::path dir = config.path("state_dir");
    return {dir / "services.lock", dir / "services.pid", dir / "endpoints.json", dir / "services.log"};
}

gram::ResourceConfig resource_config(const DeploymentConfig& config) {
    config.require_existing({"user_anchors", "host_anchors", "host_cert", "host_key", "gridmap", "sandbox_root"});
    gram::ResourceConfig rc;
    rc.user_anchors = credstore::load_trust_anchors(config.path("user_anchors"));
    rc.host_anchors = credstore::load_trust_anchors(config.path("host_anchors"));
    rc.host_cert = config.path("host_cert");
    rc.host_key = config.path("host_key");
    rc.gridmap = gridmap::load_gridmap(config.path("gridmap"));
    rc.accounts = config.accounts();
    if (rc.accounts.empty()) throw Error(ErrorCode::ConfigError, "no account.<name> entries configured");
    rc.sandbox_root = config.path("sandbox_root");
    if (config.get("resource_policy")) {
        config.require_existing({"resource_policy"});
        const fs::path anchors = config.optional_path("cas_anchors").value_or(config.path("user_anchors"));
        rc.cas = gram::CasEnforcement{cas::load_policy_file(config.path("resource_policy")),
                                      cas::CasTrust{credstore::load_trust_anchors(anchors),
                                                    config.require("cas_identity")}};
    }
    rc.required_vo = config.get("required_vo");
    rc.clock_skew = config.integer("clock_skew", secmsg::kDefaultClockSkew);
    rc.nonce_retention = config.integer("nonce_retention", secmsg::kDefaultNonceRetention);
    rc.lmjfs_idle_timeout = config.integer("lmjfs_idle_timeout", gram::kDefaultLmjfsIdleTimeout);
    rc.router_hint = tcp_hint(config.integer("router_port", 0));
    rc.service_hint = tcp_hint(0);
    return rc;
}

CasService::CasService(std::shared_ptr<cas::CasPolicyService> cas, credstore::TrustAnchorStore user_anchors,
                       gram::Clock clock, UnixTime clock_skew, UnixTime assertion_lifetime, EventSink& events,
                       std::vector<std::string> admins)
    : cas_(std::move(cas)),
      user_anchors_(std::move(user_anchors)),
      admins_(std::move(admins)),
      clock_(std::move(clock)),
      clock_skew_(clock_skew),
      assertion_lifetime_(assertion_lifetime),
      events_(events) {}

Json CasService::handle(const gram::Request& request) {
    const UnixTime now = clock_();
    const auto env = secmsg::SignedEnvelope::from_json(request.body);
    const auto verified = secmsg::verify_envelope(env, user_anchors_, replay_, now, clock_skew_);
    const Json doc = parse_document(to_string(verified.payload));
    const std::string& who = verified.who.effective_identity;

    if (request.op == "request_assertion") {
        if (get_string(doc, "op") != "cas_request") throw Error(ErrorCode::MalformedDocument, "expected cas_request");
        std::optional<cas::RightSet> requested;
        if (doc.contains("rights") && !doc["rights"].is_null()) {
            requested.emplace();
            for (const auto& r : get_array(doc, "rights")) {
                requested->insert(cas::Right::make(get_string(r, "resource"), get_string(r, "action")));
            }
        }
        const auto assertion = cas_->issue(verified.who, requested, now, assertion_lifetime_);
        events_.record("cas", "cas:issue subject=" + assertion.subject);
        return assertion.to_json();
    }
    if (request.op == "grant" || request.op == "revoke") {
        if (get_string(doc, "op") != "cas_admin") throw Error(ErrorCode::MalformedDocument, "expected cas_admin");
        if (std::find(admins_.begin(), admins_.end(), who) == admins_.end()) {
            throw Error(ErrorCode::AuthorizationDenied, who + " may not administer this VO");
        }
        const std::string subject = get_string(doc, "subject");
        const auto right = cas::Right::make(get_string(doc, "resource"), get_string(doc, "action"));
        if (request.op == "grant") {
            cas_->grant(subject, right);
        } else {
            cas_->revoke(subject, right);
        }
        events_.record(who, "cas:" + request.op + " subject=" + subject + " right=" + right.resource + ":" +
                                right.action);
        return Json::object();
    }
    throw Error(ErrorCode::UnknownOperation, request.op);
}

cas::CasAssertion request_assertion(gram::Transport& transport, const std::string& endpoint,
                                    const credstore::CredentialSet& cred,
                                    const std::optional<cas::RightSet>& requested, UnixTime now) {
    Json doc{{"op", "cas_request"}, {"rights", nullptr}};
    if (requested) {
        Json rights = Json::array();
        for (const auto& r : *requested) rights.push_back(Json{{"resource", r.resource}, {"action", r.action}});
        doc["rights"] = rights;
    }
    const auto env = secmsg::sign_envelope(cred, to_bytes(dump_document(doc)), std::string("cas"), now);
    return cas::CasAssertion::from_json(transport.call(endpoint, "request_assertion", env.to_json()));
}

void administer_cas(gram::Transport& transport, const std::string& endpoint, const credstore::CredentialSet& cred,
                    const std::string& op, const std::string& subject, const cas::Right& right, UnixTime now) {
    const Json doc{{"op", "cas_admin"}, {"subject", subject}, {"resource", right.resource}, {"action", right.action}};
    const auto env = secmsg::sign_envelope(cred, to_bytes(dump_document(doc)), std::string("cas"), now);
    transport.call(endpoint, op, env.to_json());
}

bool services_running(const DeploymentConfig& config) {
    const auto paths = state_paths(config);
    if (!fs::exists(paths.lock)) return false;
    const int fd = try_lock(paths.lock);
    if (fd < 0) return true;
    ::close(fd);
    return false;
}

ServiceEndpoints read_endpoints(const DeploymentConfig& config) {
    if (!services_running(config)) throw Error(ErrorCode::NotRunning, "services are not running");
    auto eps = parse_endpoints(state_paths(config).endpoints);
    if (!eps) throw Error(ErrorCode::NotRunning, "services are starting or the endpoints file is unreadable");
    return *eps;
}

void run_services(const DeploymentConfig& config) {
    const auto paths = state_paths(config);

    // Block the shutdown signals before any thread exists so that every
    // service thread inherits the mask and sigwait below receives them.
    sigset_t shutdown;
    sigemptyset(&shutdown);
    sigaddset(&shutdown, SIGTERM);
    sigaddset(&shutdown, SIGINT);
    pthread_sigmask(SIG_BLOCK, &shutdown, nullptr);

    const fs::path audit_path = config.path("audit_log");
    AuditLog audit(audit_path);
    auto transport = gram::make_tcp_transport();
    auto rc = resource_config(config);
    const UnixTime skew = rc.clock_skew;
    const auto user_anchors = rc.user_anchors;
    gram::Resource resource(std::move(rc), transport, audit);
    resource.start_reaper(1s);

    ServiceEndpoints eps{static_cast<long>(::getpid()), resource.router_endpoint(), std::nullopt};
    if (config.get("cas_policy")) {
        config.require_existing({"cas_policy", "cas_cert", "cas_key"});
        cas::VoPolicyStore store{config.require("cas_vo"), cas::load_policy_file(config.path("cas_policy"))};
        auto policy = std::make_shared<cas::CasPolicyService>(
            std::move(store), credstore::load_credential(config.path("cas_cert"), config.path("cas_key")),
            config.path("cas_policy"));
        std::vector<std::string> admins;
        if (auto text = config.get("cas_admins")) {
            std::stringstream ss(*text);
            std::string id;
            while (std::getline(ss, id, ';')) {
                if (!id.empty()) admins.push_back(id);
            }
        }
        auto service = std::make_shared<CasService>(
            policy, user_anchors, system_now, skew,
            config.integer("assertion_lifetime", cas::kDefaultAssertionLifetime), audit, std::move(admins));
        eps.cas = transport->listen(tcp_hint(config.integer("cas_port", 0)), service);
    }

    write_atomically(paths.pidfile, std::to_string(eps.pid) + "\n");
    write_atomically(paths.endpoints,
                     dump_document(Json{{"pid", eps.pid},
                                        {"router", eps.router},
                                        {"cas", eps.cas ? Json(*eps.cas) : Json(nullptr)}}) +
                         "\n");
    std::fprintf(stderr, "services up: router %s\n", eps.router.c_str());
    std::fflush(stderr);

    int sig = 0;
    sigwait(&shutdown, &sig);
    std::fprintf(stderr, "services down: signal %d\n", sig);
    std::fflush(stderr);
    if (eps.cas) transport->close(*eps.cas);
    std::error_code ec;
    fs::remove(paths.endpoints, ec);
    fs::remove(paths.pidfile, ec);
}

ServiceEndpoints services_up(const DeploymentConfig& config) {
    const auto paths = state_paths(config);
    fs::create_directories(paths.lock.parent_path());
    // Fail on configuration problems here rather than in the detached child.
    resource_config(config);
    config.path("audit_log");

    const int lock_fd = try_lock(paths.lock);
    if (lock_fd < 0) throw Error(ErrorCode::AlreadyRunning, "services already running");
    std::error_code ec;
    fs::remove(paths.endpoints, ec);

    std::fflush(stdout);
    std::fflush(stderr);
    const pid_t child = ::fork();
    if (child < 0) {
        ::close(lock_fd);
        throw Error(ErrorCode::IoError, "fork failed");
    }
    if (child == 0) {
        ::setsid();
        const int null_fd = ::open("/dev/null", O_RDONLY);
        const int log_fd = ::open(paths.log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0640);
        ::dup2(null_fd, STDIN_FILENO);
        ::dup2(log_fd < 0 ? null_fd : log_fd, STDOUT_FILENO);
        ::dup2(log_fd < 0 ? null_fd : log_fd, STDERR_FILENO);
        for (int fd = 3; fd < 1024; ++fd) {
            if (fd != lock_fd) ::close(fd);
        }
        int status = 0;
        try {
            run_services(config);
        } catch (const Error& e) {
            std::fprintf(stderr, "ERR %s %s\n", std::string(to_string(e.code())).c_str(), e.detail().c_str());
            status = 1;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "ERR IoError %s\n", e.what());
            status = 1;
        }
        std::fflush(stderr);
        std::_Exit(status);
    }
    ::close(lock_fd);

    const auto deadline = std::chrono::steady_clock::now() + kStartupWait;
    while (std::chrono::steady_clock::now() < deadline) {
        if (auto eps = parse_endpoints(paths.endpoints); eps && eps->pid == child) return *eps;
        int status = 0;
        if (::waitpid(child, &status, WNOHANG) == child) {
            const std::string why = last_line(paths.log);
            if (why.starts_with("ERR ")) {
                const auto rest = why.substr(4);
                const auto sp = rest.find(' ');
                if (auto code = error_code_from_string(rest.substr(0, sp))) {
                    throw Error(*code, sp == std::string::npos ? "" : rest.substr(sp + 1));
                }
            }
            throw Error(ErrorCode::IoError, "services exited during startup: " + why);
        }
        std::this_thread::sleep_for(20ms);
    }
    ::kill(child, SIGKILL);
    throw Error(ErrorCode::IoError, "services did not become ready");
}

void services_down(const DeploymentConfig& config) {
    const auto paths = state_paths(config);
    if (!services_running(config)) throw Error(ErrorCode::NotRunning, "services are not running");
    long pid = 0;
    {
        std::ifstream in(paths.pidfile);
        in >> pid;
    }
    if (pid <= 0) {
        if (auto eps = parse_endpoints(paths.endpoints)) pid = eps->pid;
    }
    if (pid <= 0) throw Error(ErrorCode::NotRunning, "no pid recorded for the running services");
    ::kill(static_cast<pid_t>(pid), SIGTERM);
    const auto deadline = std::chrono::steady_clock::now() + kShutdownWait;
    while (services_running(config)) {
        if (std::chrono::steady_clock::now() > deadline) {
            ::kill(static_cast<pid_t>(pid), SIGKILL);
            std::this_thread::sleep_for(100ms);
            break;
        }
        std::this_thread::sleep_for(20ms);
    }
    std::error_code ec;
    fs::remove(paths.endpoints, ec);
    fs::remove(paths.pidfile, ec);
}

}  // namespace gridforge::gridctl
