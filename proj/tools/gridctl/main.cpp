#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gridforge/cas/cas.hpp"
#include "gridforge/common/error.hpp"
#include "gridforge/credstore/credential.hpp"
#include "gridforge/gram/client.hpp"
#include "gridforge/gram/request.hpp"
#include "gridforge/gram/transport.hpp"
#include "gridforge/gridctl/audit.hpp"
#include "gridforge/gridctl/config.hpp"
#include "gridforge/gridctl/harness.hpp"
#include "gridforge/gridctl/init.hpp"
#include "gridforge/gridmap/gridmap.hpp"

namespace {

using namespace gridforge;
using gridctl::DeploymentConfig;

constexpr int kUsageError = 2;
constexpr int kOperationalError = 1;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

cas::Right parse_right(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::MalformedRight, "expected <resource>:<action>: " + text);
    return cas::Right::make(text.substr(0, colon), text.substr(colon + 1));
}

credstore::CredentialSet load_proxy(const DeploymentConfig& config) {
    return credstore::load_credential(config.path("proxy_cert"), config.path("proxy_key"));
}

credstore::TrustAnchorStore host_anchors(const DeploymentConfig& config) {
    return credstore::load_trust_anchors(config.path("host_anchors"));
}

std::string effective_identity(const credstore::CredentialSet& cred) {
    return credstore::describe_chain(cred.chain).effective_identity;
}

void print_status(const gram::JobStatus& s) {
    std::cout << "job_id " << s.job_id << "\n"
              << "state " << gram::to_string(s.state) << "\n"
              << "account " << s.local_account << "\n";
    if (s.exit_code) std::cout << "exit_code " << *s.exit_code << "\n";
}

gram::MjsClient connect_mjs(const DeploymentConfig& config, const std::string& reference) {
    const auto cred = load_proxy(config);
    const auto [endpoint, job_id] = gram::split_mjs_reference(reference);
    return gram::MjsClient::connect(gram::transport_for(endpoint), cred, reference, effective_identity(cred),
                                    host_anchors(config), system_now());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridforge operator and user tool"};
    app.require_subcommand(1);
    std::optional<std::string> config_flag;
    app.add_option("--config", config_flag, "Config file (default: $GRIDFORGE_CONFIG)");

    auto load_config = [&] { return DeploymentConfig::load(gridctl::resolve_config_path(config_flag)); };

    // init
    auto* init = app.add_subcommand("init", "Create a self-contained deployment directory");
    std::string init_dir;
    std::string init_users = "Alice";
    std::string init_unmapped;
    gridctl::InitOptions init_options;
    init->add_option("--dir", init_dir, "Target directory")->required();
    init->add_option("--users", init_users, "Comma-separated user names");
    init->add_option("--unmapped", init_unmapped, "Users left out of the grid-mapfile");
    init->add_option("--vo", init_options.vo, "VO name");
    init->add_flag("--enforce-cas", init_options.enforce_cas, "Require a CAS assertion for submission");

    // proxy-init / proxy-info
    auto* proxy_init = app.add_subcommand("proxy-init", "Create a proxy credential from the user credential");
    int proxy_hours = 12;
    std::optional<unsigned> proxy_depth;
    proxy_init->add_option("--hours", proxy_hours, "Lifetime in hours")->check(CLI::Range(1, 24 * 30));
    proxy_init->add_option("--depth", proxy_depth, "Further delegation levels allowed (default unlimited)");
    auto* proxy_info = app.add_subcommand("proxy-info", "Describe the current proxy credential");

    // cas-request
    auto* cas_request = app.add_subcommand("cas-request", "Obtain a CAS assertion for the current proxy");
    std::vector<std::string> cas_rights;
    std::optional<std::string> cas_out;
    cas_request->add_option("--right", cas_rights, "Requested right as <resource>:<action> (default: all)");
    cas_request->add_option("--out", cas_out, "Output file (default: config key 'assertion')");

    auto* cas_admin = app.add_subcommand("cas-admin", "Grant or revoke VO rights (CAS administrators only)");
    std::string admin_op;
    std::string admin_subject;
    std::string admin_right;
    cas_admin->add_option("op", admin_op, "grant or revoke")->required()->check(CLI::IsMember({"grant", "revoke"}));
    cas_admin->add_option("--subject", admin_subject, "Grid identity")->required();
    cas_admin->add_option("--right", admin_right, "<resource>:<action>")->required();

    // job-submit / job-status / job-cancel
    auto* job_submit = app.add_subcommand("job-submit", "Submit and start a job");
    gram::JobDescription job;
    std::optional<std::string> submit_account;
    std::optional<std::string> submit_assertion;
    bool no_start = false;
    job_submit->add_option("--exe", job.executable, "Executable")->required();
    job_submit->add_option("--arg", job.arguments, "Argument (repeatable)");
    job_submit->add_option("--queue", job.queue, "Queue");
    job_submit->add_option("--dir", job.working_dir, "Working directory inside the sandbox");
    job_submit->add_option("--account", submit_account, "Requested local account");
    job_submit->add_option("--assertion", submit_assertion, "CAS assertion file (default: config key 'assertion' if present)");
    job_submit->add_flag("--no-start", no_start, "Stop after delegation");

    auto* job_status = app.add_subcommand("job-status", "Show a job's state");
    std::string status_ref;
    bool status_wait = false;
    job_status->add_option("mjs", status_ref, "MJS reference printed by job-submit")->required();
    job_status->add_flag("--wait", status_wait, "Wait until the job is terminal");
    auto* job_cancel = app.add_subcommand("job-cancel", "Cancel a job");
    std::string cancel_ref;
    job_cancel->add_option("mjs", cancel_ref, "MJS reference printed by job-submit")->required();

    // gridmap check
    auto* gridmap_cmd = app.add_subcommand("gridmap", "Grid-mapfile tools");
    gridmap_cmd->require_subcommand(1);
    auto* gridmap_check = gridmap_cmd->add_subcommand("check", "Parse a grid-mapfile");
    std::optional<std::string> gridmap_file;
    gridmap_check->add_option("file", gridmap_file, "File (default: config key 'gridmap')");

    // services up|down|status
    auto* services = app.add_subcommand("services", "Local service harness");
    services->require_subcommand(1);
    auto* services_up = services->add_subcommand("up", "Start the services in the background");
    auto* services_down = services->add_subcommand("down", "Stop the services");
    auto* services_status = services->add_subcommand("status", "Show service endpoints");
    auto* services_run = services->add_subcommand("run", "Run the services in the foreground");

    // audit verify
    auto* audit = app.add_subcommand("audit", "Audit log tools");
    audit->require_subcommand(1);
    auto* audit_verify = audit->add_subcommand("verify", "Check the audit hash chain");
    std::optional<std::string> audit_file;
    audit_verify->add_option("file", audit_file, "Log file (default: config key 'audit_log')");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kUsageError;
    }

    try {
        if (*init) {
            init_options.users = split_list(init_users);
            init_options.unmapped = split_list(init_unmapped);
            gridctl::init_deployment(init_dir, init_options);
            std::cout << "initialized " << std::filesystem::absolute(init_dir).string() << "\n";
        } else if (*proxy_init) {
            const auto config = load_config();
            const auto user = credstore::load_credential(config.path("user_cert"), config.path("user_key"));
            const auto depth = proxy_depth ? credstore::DelegationDepth::limited(*proxy_depth)
                                           : credstore::DelegationDepth::unlimited();
            const auto proxy =
                credstore::create_proxy(user, Validity::starting(system_now(), proxy_hours * kHour), depth);
            credstore::save_credential(config.path("proxy_cert"), config.path("proxy_key"), proxy);
            std::cout << "proxy " << config.path("proxy_cert").string() << "\n"
                      << "not_after " << proxy.leaf().validity.not_after << "\n";
        } else if (*proxy_info) {
            const auto config = load_config();
            const auto proxy = load_proxy(config);
            const auto id = credstore::describe_chain(proxy.chain);
            const UnixTime left = std::max<UnixTime>(0, proxy.leaf().validity.not_after - system_now());
            std::cout << "subject " << id.leaf_subject << "\n"
                      << "identity " << id.effective_identity << "\n"
                      << "issuer_root " << id.root_subject << "\n"
                      << "remaining_depth " << id.remaining_delegation_depth.to_text() << "\n"
                      << "time_left " << left << "\n";
        } else if (*cas_request) {
            const auto config = load_config();
            const auto eps = gridctl::read_endpoints(config);
            if (!eps.cas) throw Error(ErrorCode::ConfigError, "no CAS service configured");
            std::optional<cas::RightSet> requested;
            for (const auto& text : cas_rights) {
                if (!requested) requested.emplace();
                requested->insert(parse_right(text));
            }
            const auto assertion = gridctl::request_assertion(*gram::transport_for(*eps.cas), *eps.cas,
                                                              load_proxy(config), requested, system_now());
            const std::filesystem::path out = cas_out ? std::filesystem::path(*cas_out) : config.path("assertion");
            std::ofstream(out, std::ios::trunc) << dump_document(assertion.to_json()) << "\n";
            std::cout << "assertion " << out.string() << "\n";
            for (const auto& r : assertion.rights) std::cout << "right " << r.resource << " " << r.action << "\n";
        } else if (*cas_admin) {
            const auto config = load_config();
            const auto eps = gridctl::read_endpoints(config);
            if (!eps.cas) throw Error(ErrorCode::ConfigError, "no CAS service configured");
            gridctl::administer_cas(*gram::transport_for(*eps.cas), *eps.cas, load_proxy(config), admin_op,
                                    admin_subject, parse_right(admin_right), system_now());
            std::cout << admin_op << " " << admin_subject << " " << admin_right << "\n";
        } else if (*job_submit) {
            const auto config = load_config();
            const auto eps = gridctl::read_endpoints(config);
            const auto cred = load_proxy(config);
            gram::SubmitOptions options;
            options.account = submit_account;
            std::optional<std::filesystem::path> assertion_file;
            if (submit_assertion) {
                assertion_file = *submit_assertion;
            } else if (auto p = config.optional_path("assertion"); p && std::filesystem::exists(*p)) {
                assertion_file = *p;
            }
            if (assertion_file) {
                options.assertion = cas::CasAssertion::from_json(parse_document(read_file(*assertion_file)));
            }
            gridctl::AuditLog log(config.path("audit_log"));
            auto sub = gram::client_submit(gram::transport_for(eps.router), cred, job, eps.router,
                                           host_anchors(config), options, log, system_now());
            std::cout << "job_id " << sub.job_id << "\n"
                      << "mjs " << sub.mjs_reference << "\n"
                      << "account " << sub.account << "\n";
            if (!no_start) std::cout << "state " << gram::to_string(sub.mjs.start().state) << "\n";
        } else if (*job_status) {
            const auto config = load_config();
            auto mjs = connect_mjs(config, status_ref);
            auto s = mjs.status();
            while (status_wait && !gram::is_terminal(s.state)) {
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
                s = mjs.status();
            }
            print_status(s);
        } else if (*job_cancel) {
            const auto config = load_config();
            print_status(connect_mjs(config, cancel_ref).cancel());
        } else if (*gridmap_check) {
            const std::filesystem::path file =
                gridmap_file ? std::filesystem::path(*gridmap_file) : load_config().path("gridmap");
            const auto gm = gridmap::load_gridmap(file);
            std::cout << "OK " << gm.entries().size() << " entries\n";
        } else if (*services_up) {
            const auto eps = gridctl::services_up(load_config());
            std::cout << "pid " << eps.pid << "\nrouter " << eps.router << "\n";
            if (eps.cas) std::cout << "cas " << *eps.cas << "\n";
        } else if (*services_down) {
            gridctl::services_down(load_config());
            std::cout << "stopped\n";
        } else if (*services_status) {
            const auto eps = gridctl::read_endpoints(load_config());
            std::cout << "pid " << eps.pid << "\nrouter " << eps.router << "\n";
            if (eps.cas) std::cout << "cas " << *eps.cas << "\n";
        } else if (*services_run) {
            gridctl::run_services(load_config());
        } else if (*audit_verify) {
            const std::filesystem::path file =
                audit_file ? std::filesystem::path(*audit_file) : load_config().path("audit_log");
            gridctl::audit_verify(file);
            std::cout << "OK " << gridctl::read_audit_entries(file).size() << " entries\n";
        }
    } catch (const Error& e) {
        std::cerr << "ERR " << to_string(e.code()) << " " << e.detail();
        if (e.index()) std::cerr << " [index=" << *e.index() << "]";
        std::cerr << std::endl;
        return kOperationalError;
    } catch (const std::exception& e) {
        std::cerr << "ERR IoError " << e.what() << std::endl;
        return kOperationalError;
    }
    return 0;
}
