// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails. Pass criterion ids (e.g. AC3) to run a subset.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "../support/deployment.hpp"
#include "gridforge/cas/cas.hpp"
#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"
#include "gridforge/credstore/credential.hpp"
#include "gridforge/gram/client.hpp"
#include "gridforge/gram/flow.hpp"
#include "gridforge/gram/request.hpp"
#include "gridforge/gridctl/audit.hpp"
#include "gridforge/gridctl/harness.hpp"
#include "gridforge/gridmap/gridmap.hpp"
#include "gridforge/secmsg/context.hpp"
#include "gridforge/secmsg/envelope.hpp"

namespace {

using namespace gridforge;
namespace fs = std::filesystem;
using credstore::CertType;
using credstore::Chain;
using credstore::CredentialSet;
using credstore::DelegationDepth;
using testing::Deployment;
using testing::DeploymentOptions;
using testing::TempDir;

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

std::optional<ErrorCode> error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

bool throws(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception&) {
        return true;
    }
    return false;
}

std::string name(std::optional<ErrorCode> code) { return code ? std::string(to_string(*code)) : "no error"; }

// ---------------------------------------------------------------------------
// CLI driver

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const TempDir& dir, const std::string& args) {
    const fs::path err = dir.path() / "cli-stderr.txt";
    const std::string cmd = std::string(GRIDCTL_BINARY) + " " + args + " 2>" + err.string();
    CliResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(err);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

std::string field(const std::string& out, const std::string& key) {
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        if (line.starts_with(key + " ")) return line.substr(key.size() + 1);
    }
    return {};
}

// ---------------------------------------------------------------------------
// AC1: flow fidelity through the real CLI and background services.

std::string ac1_flow_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    TempDir dir("gridforge-ac1");
    const std::string site = "--config " + (dir.path() / "gridforge.conf").string();
    const std::string alice = "--config " + (dir.path() / "users" / "Alice" / "gridforge.conf").string();
    auto must = [&](const std::string& args) {
        auto r = run_cli(dir, args);
        require(r.exit_code == 0, "gridctl " + args + " failed: " + r.err);
        return r;
    };
    must("init --dir " + dir.path().string() + " --users Alice");
    must(site + " services up");
    struct Down {
        std::function<void()> fn;
        ~Down() { fn(); }
    } down{[&] { run_cli(dir, site + " services down"); }};

    must(alice + " proxy-init --hours 12");
    auto first = must(alice + " job-submit --exe /bin/echo --arg hello");
    const std::string job1 = field(first.out, "job_id");
    auto st1 = must(alice + " job-status --wait " + field(first.out, "mjs"));
    require(field(st1.out, "state") == "Done", "first job ended " + field(st1.out, "state"));
    auto second = must(alice + " job-submit --exe /bin/echo --arg again");
    const std::string job2 = field(second.out, "job_id");
    auto st2 = must(alice + " job-status --wait " + field(second.out, "mjs"));
    require(field(st2.out, "state") == "Done", "second job ended " + field(st2.out, "state"));
    must(site + " services down");
    down.fn = [] {};
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path log = dir.path() / "audit.log";
    require(run_cli(dir, "audit verify " + log.string()).exit_code == 0, "audit log does not verify");
    std::vector<std::string> got;
    std::vector<std::string> details;
    for (const auto& e : gridctl::read_audit_entries(log)) {
        got.emplace_back(gram::flow::name_of(e.event));
        details.push_back(e.event);
    }
    std::vector<std::string> want = gram::flow::step_names({1, 2, 3, 4, 5, 6, 7});
    want.insert(want.end(), {"job:Active", "job:Done"});
    for (const auto& s : gram::flow::step_names({1, 2, 6, 7})) want.push_back(s);
    want.insert(want.end(), {"job:Active", "job:Done"});
    if (got != want) {
        std::string text;
        for (const auto& d : details) text += "\n    " + d;
        throw Failure("audit transcript differs from the expected sequence:" + text);
    }
    require(details[1].find("target=mmjfs") != std::string::npos, "first submission not routed to the MMJFS");
    require(details[10].find("target=lmjfs") != std::string::npos, "second submission not routed to the LMJFS");
    require(details[7].find("job=" + job1) != std::string::npos && details[13].find("job=" + job2) != std::string::npos,
            "job events name the wrong jobs");
    require(seconds < 5.0, "end-to-end run took " + std::to_string(seconds) + " s");
    char buf[160];
    std::snprintf(buf, sizeof buf, "7-step then 4-step transcript, %zu audit entries, %.2f s end to end", got.size(),
                  seconds);
    return buf;
}

// ---------------------------------------------------------------------------
// AC2: least privilege.

static_assert(!std::is_default_constructible_v<gram::Invocation>);
static_assert(!std::is_constructible_v<gram::Invocation, bool>);

std::string ac2_least_privilege() {
    Deployment d;
    auto& res = *d.resource;
    auto& tr = *d.transport;
    auto cas_policy = std::make_shared<cas::CasPolicyService>(
        cas::VoPolicyStore{"physics", {{Deployment::identity("Alice"), {cas::Right::make("/gram/*", "submit")}}}},
        d.cas_cred);
    auto cas_service = std::make_shared<gridctl::CasService>(
        cas_policy, d.user_anchors, [&d] { return d.now(); }, 300, 600, d.events,
        std::vector<std::string>{Deployment::identity("Carol")});
    const std::string cas_endpoint = d.transport->listen("inproc://cas", cas_service);

    // Legitimate traffic first, so that LMJFS instances exist and are reachable.
    auto alice = d.proxy("Alice");
    auto carol = d.proxy("Carol");
    auto bob = d.proxy("Bob");
    auto a_sub = d.submit(alice, Deployment::echo("a"));
    d.submit(carol, Deployment::echo("c"));

    std::vector<std::pair<std::string, std::vector<std::string>>> surface{
        {res.router_endpoint(), res.router().operations()},
        {res.mmjfs_endpoint(), res.mmjfs().operations()},
        {cas_endpoint, cas_service->operations()}};
    for (const auto& l : res.lmjfs_instances()) surface.emplace_back(l->endpoint(), l->operations());

    std::mt19937 rng(2024);
    auto random_text = [&] {
        std::string s(rng() % 40, ' ');
        for (auto& c : s) c = static_cast<char>(32 + rng() % 95);
        return s;
    };
    auto sign = [&](const CredentialSet& cred, const Json& payload, const char* hint) {
        return secmsg::sign_envelope(cred, to_bytes(dump_document(payload)), std::string(hint), d.now()).to_json();
    };
    std::size_t calls = 0;
    std::size_t ops = 0;
    for (int round = 0; round < 3; ++round) {
        for (const auto& [endpoint, names] : surface) {
            for (const auto& op : names) {
                ops += round == 0 ? 1 : 0;
                const auto* users = &alice;
                const std::vector<const CredentialSet*> signers{&alice, &bob, &carol};
                users = signers[rng() % signers.size()];
                const std::string who = credstore::describe_chain(users->chain).effective_identity;
                gram::SubmitRequest req{Deployment::identity(rng() % 2 ? "Alice" : "Bob"),
                                        rng() % 2 ? std::optional<std::string>("shared") : std::nullopt,
                                        std::nullopt, Deployment::echo("x")};
                std::vector<Json> bodies{
                    Json::object(),
                    Json(nullptr),
                    Json(random_text()),
                    Json::array({1, 2}),
                    sign(*users, req.to_json(), "gram"),
                    sign(*users, gram::Registration{"register", who, "inproc://evil"}.to_json(), "router"),
                    sign(res.lmjfs_instances().front()->credential(),
                         gram::Registration{"register", who, "inproc://evil"}.to_json(), "router"),
                    sign(*users, Json{{"op", "cas_admin"}, {"subject", who}, {"resource", "/gram/*"},
                                      {"action", "submit"}},
                         "cas"),
                    Json{{"job_id", a_sub.job_id}, {"token", base64_encode(to_bytes(random_text()))}},
                    Json{{"context_id", base64_encode(Bytes(16, 1))}, {"seq", 0}, {"body", ""}, {"auth_tag", ""},
                         {"confidential", false}},
                };
                for (const auto& body : bodies) {
                    ++calls;
                    try {
                        tr.call(endpoint, op, body);
                    } catch (const Error&) {
                    }
                }
            }
        }
    }
    // Unknown operations never reach a handler.
    for (const auto& [endpoint, names] : surface) {
        for (const char* op : {"starter_start", "grim_issue", "start_lmjfs", "issue_grim"}) {
            ++calls;
            require(error_of([&] { tr.call(endpoint, op, Json::object()); }) == ErrorCode::UnknownOperation,
                    std::string("operation ") + op + " reachable at " + endpoint);
        }
    }

    auto gate_count = [&](const std::string& helper) {
        const auto recs = res.gate().records();
        return static_cast<std::size_t>(std::count_if(recs.begin(), recs.end(),
                                                      [&](const auto& r) { return r.helper == helper; }));
    };
    auto starter_total = [&] { return res.starter().accepted_invocations() + res.starter().rejected_invocations(); };
    auto grim_total = [&] { return res.grim().accepted_invocations() + res.grim().rejected_invocations(); };
    require(starter_total() == gate_count("setuid-starter"),
            "starter invoked " + std::to_string(starter_total()) + " times, gate recorded " +
                std::to_string(gate_count("setuid-starter")));
    require(grim_total() == gate_count("grim"), "GRIM invoked outside the gate");
    // Every gate passage follows a verified, mapped request at the MMJFS.
    std::size_t verified = 0;
    for (const auto& e : d.events.events()) verified += gram::flow::name_of(e.event) == gram::flow::kVerifyMap;
    require(gate_count("setuid-starter") <= verified, "starter ran without a verified request");

    // Direct invocation with the network marker.
    const std::size_t starter_before = res.starter().accepted_invocations();
    const std::size_t grim_before = res.grim().accepted_invocations();
    const std::size_t records_before = res.gate().records().size();
    const std::vector<std::string> accounts{"alice", "carol", "shared", "root", ""};
    const std::vector<std::string> identities{Deployment::identity("Alice"), Deployment::identity("Bob"), ""};
    int rejected = 0;
    constexpr int kDirect = 1000;
    for (int i = 0; i < kDirect; ++i) {
        const auto& account = accounts[rng() % accounts.size()];
        const auto& identity = identities[rng() % identities.size()];
        const auto code = rng() % 2 ? error_of([&] {
            res.starter().start(gram::Invocation::network(), account, identity);
        })
                                    : error_of([&] { res.grim().issue(gram::Invocation::network(), identity, account); });
        rejected += code == ErrorCode::NetworkOriginRejected;
    }
    require(rejected == kDirect, std::to_string(kDirect - rejected) + " direct network-origin calls not rejected");
    require(res.starter().accepted_invocations() == starter_before && res.grim().accepted_invocations() == grim_before &&
                res.gate().records().size() == records_before,
            "network-origin calls changed helper state");
    return std::to_string(surface.size()) + " network services, " + std::to_string(ops) + " operations, " +
           std::to_string(calls) + " calls; helpers ran only via the gate (" + std::to_string(records_before) +
           " gate records); " + std::to_string(rejected) + "/" + std::to_string(kDirect) +
           " direct network-origin calls rejected";
}

// ---------------------------------------------------------------------------
// AC3: delegation-depth safety.

// Brute-force validator for the depth rule alone: every prefix of the chain,
// and every certificate j in it with a declared budget, must satisfy
// budget_j >= number of proxies after j within the prefix.
bool depth_oracle(const Chain& chain) {
    for (std::size_t len = 1; len <= chain.size(); ++len) {
        for (std::size_t j = 0; j < len; ++j) {
            const auto& declared = chain[j].max_delegation_depth;
            if (!declared || declared->is_unlimited()) continue;
            std::size_t proxies = 0;
            for (std::size_t k = j + 1; k < len; ++k) proxies += chain[k].type == CertType::Proxy;
            if (proxies > declared->levels()) return false;
        }
    }
    return true;
}

std::size_t proxies_in(const Chain& chain) {
    return static_cast<std::size_t>(
        std::count_if(chain.begin(), chain.end(), [](const auto& c) { return c.type == CertType::Proxy; }));
}

// Signed directly with the parent key, skipping create_proxy's clamping.
CredentialSet forged_proxy(const CredentialSet& parent, DelegationDepth depth) {
    auto kp = crypto::generate_signing_keypair();
    credstore::Certificate c;
    c.serial = crypto::random_u64() >> 2;
    c.subject = credstore::proxy_subject(parent.leaf().subject, c.serial);
    c.issuer = parent.leaf().subject;
    c.subject_public_key = kp.public_key;
    c.validity = parent.leaf().validity;
    c.type = CertType::Proxy;
    c.max_delegation_depth = depth;
    c.signature_scheme = std::string(crypto::kSignatureScheme);
    c.signature = crypto::sign(parent.private_key, c.canonical_body());
    CredentialSet out{parent.chain, kp.secret_key};
    out.chain.push_back(c);
    return out;
}

std::string ac3_depth_safety() {
    const UnixTime now = system_now();
    const auto ca = credstore::create_ca("/O=Grid/CN=Depth CA", Validity::starting(now - kHour, 2 * kDay));
    const credstore::TrustAnchorStore anchors{{ca.root()}};
    const std::vector<DelegationDepth> requests{DelegationDepth::limited(0), DelegationDepth::limited(1),
                                                DelegationDepth::limited(2), DelegationDepth::limited(3),
                                                DelegationDepth::unlimited()};
    std::size_t chains = 0;
    std::size_t valid = 0;
    std::string per_budget;
    for (std::uint32_t budget = 0; budget <= 3; ++budget) {
        const auto ee = credstore::issue_identity(ca, "/O=Grid/CN=Depth" + std::to_string(budget),
                                                  Validity::starting(now - 60, kDay), DelegationDepth::limited(budget));
        std::size_t deepest = 0;
        std::function<void(const CredentialSet&, std::uint32_t)> explore = [&](const CredentialSet& cred,
                                                                               std::uint32_t level) {
            ++chains;
            const bool accepted = !throws([&] { credstore::validate_chain(cred.chain, anchors, now); });
            const bool oracle = depth_oracle(cred.chain);
            require(accepted == oracle, "validator and oracle disagree on a chain of " +
                                            std::to_string(cred.chain.size()) + " certificates (budget " +
                                            std::to_string(budget) + ")");
            if (accepted) {
                ++valid;
                deepest = std::max(deepest, proxies_in(cred.chain));
                require(proxies_in(cred.chain) <= budget, "validating chain exceeds its budget");
            }
            if (level > budget + 1) return;
            for (const auto& req : requests) {
                try {
                    explore(credstore::create_proxy(cred, Validity::starting(now - 60, kHour), req), level + 1);
                } catch (const Error& e) {
                    require(e.code() == ErrorCode::DelegationDepthExhausted,
                            "unexpected create_proxy error " + std::string(to_string(e.code())));
                }
            }
            explore(forged_proxy(cred, DelegationDepth::unlimited()), level + 1);
        };
        explore(ee, 0);
        require(deepest == budget, "budget " + std::to_string(budget) + " allowed only " + std::to_string(deepest));
        per_budget += (budget ? ", " : "") + std::to_string(budget) + "->" + std::to_string(deepest);
    }
    return std::to_string(chains) + " chains (" + std::to_string(valid) +
           " validating) agree with the brute-force oracle; deepest valid per budget: " + per_budget;
}

// ---------------------------------------------------------------------------
// AC4: CAS intersection.

// Names over {a,b,/} below "/" up to length 3, plus each as a prefix pattern.
std::vector<std::string> resource_universe() {
    std::vector<std::string> names{"/"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i].size() >= 4) continue;
        for (char c : std::string("ab/")) names.push_back(names[i] + c);
    }
    std::vector<std::string> all = names;
    for (const auto& n : names) all.push_back(n + "*");
    return all;
}

// Concrete names a pattern admits, probed up to two characters beyond the
// longest name in play so prefix patterns are told apart exactly.
bool admits(const std::string& pattern, const std::string& name) {
    if (!pattern.empty() && pattern.back() == '*') {
        return name.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0;
    }
    return name == pattern;
}

std::vector<std::string> probe_names(const std::string& request) {
    if (request.empty() || request.back() != '*') return {request};
    const std::string base = request.substr(0, request.size() - 1);
    std::vector<std::string> out{base};
    for (char c1 : std::string("ab/")) {
        out.push_back(base + c1);
        for (char c2 : std::string("ab/")) out.push_back(base + c1 + c2);
    }
    return out;
}

// match(S): every request in the universe whose admitted names all fall
// inside a single grant of S with the same action.
using RequestKey = std::pair<std::string, std::string>;
std::set<RequestKey> match_set(const cas::RightSet& rights, const std::vector<std::string>& universe,
                               const std::vector<std::string>& actions) {
    std::set<RequestKey> out;
    for (const auto& action : actions) {
        for (const auto& res : universe) {
            const auto probes = probe_names(res);
            for (const auto& g : rights) {
                if (g.action != action) continue;
                if (std::all_of(probes.begin(), probes.end(), [&](const auto& n) { return admits(g.resource, n); })) {
                    out.emplace(res, action);
                    break;
                }
            }
        }
    }
    return out;
}

std::string ac4_cas_intersection() {
    const UnixTime now = system_now();
    const auto ca = credstore::create_ca("/O=Grid/CN=VO CA", Validity::starting(now - kDay, 30 * kDay));
    const auto rogue_ca = credstore::create_ca("/O=Grid/CN=Rogue CA", Validity::starting(now - kDay, 30 * kDay));
    const std::string cas_id = "/O=Grid/CN=cas/physics";
    const auto cas_cred = credstore::issue_identity(ca, cas_id, Validity::starting(now - kHour, 10 * kDay));
    const auto rogue_cas = credstore::issue_identity(rogue_ca, cas_id, Validity::starting(now - kHour, 10 * kDay));
    const cas::CasTrust trust{credstore::TrustAnchorStore{{ca.root()}}, cas_id};
    const auto alice_cred = credstore::issue_identity(ca, "/O=Grid/CN=Alice", Validity::starting(now - kHour, kDay));
    const auto alice = credstore::describe_chain(alice_cred.chain);
    const std::string bob = "/O=Grid/CN=Bob";

    const auto universe = resource_universe();
    const std::vector<std::string> actions{"read", "write"};
    std::mt19937 rng(4242);
    auto random_right = [&] {
        return cas::Right::make(universe[rng() % universe.size()], actions[rng() % actions.size()]);
    };
    auto random_set = [&](int max) {
        cas::RightSet s;
        const int n = static_cast<int>(rng() % (max + 1));
        for (int i = 0; i < n; ++i) s.insert(random_right());
        return s;
    };
    auto issue = [&](const std::string& subject, const cas::RightSet& rights, const CredentialSet& signer,
                     Validity validity) {
        const auto who = credstore::ValidatedIdentity{subject, subject, "", CertType::EndEntity,
                                                      DelegationDepth::unlimited(), {}};
        return cas::cas_issue(cas::VoPolicyStore{"physics", {{subject, rights}}}, who, std::nullopt, validity, signer);
    };

    enum class Kind { Valid, Expired, OtherSubject, Tampered, Untrusted, Absent };
    struct Triple {
        cas::PolicyGrants local;
        cas::RightSet vo;
        Kind kind;
        std::optional<cas::CasAssertion> assertion;
        cas::Right request;
    };
    auto make_triple = [&](Kind kind, cas::RightSet vo) {
        Triple t{{}, std::move(vo), kind, std::nullopt, random_right()};
        if (rng() % 4 == 0) t.local[alice.effective_identity] = random_set(2);
        t.local[rng() % 5 == 0 ? "VO:chemistry" : "VO:physics"] = random_set(4);
        if (rng() % 3 == 0) t.local[bob] = random_set(2);
        // Half the requests fall inside some granted pattern, so grants and
        // the interesting denials (DeniedVO, DeniedLocal) both occur often.
        if (rng() % 2 == 0) {
            std::vector<cas::Right> pool(t.vo.begin(), t.vo.end());
            for (const auto& [key, rights] : t.local) pool.insert(pool.end(), rights.begin(), rights.end());
            if (!pool.empty()) {
                const auto& seed = pool[rng() % pool.size()];
                const auto inside = match_set({seed}, universe, {seed.action});
                auto pick = std::next(inside.begin(), static_cast<long>(rng() % inside.size()));
                t.request = cas::Right::make(pick->first, pick->second);
            }
        }
        const Validity fresh = Validity::starting(now - 60, cas::kDefaultAssertionLifetime);
        switch (kind) {
            case Kind::Valid: t.assertion = issue(alice.effective_identity, t.vo, cas_cred, fresh); break;
            case Kind::Expired:
                t.assertion = issue(alice.effective_identity, t.vo, cas_cred, Validity::starting(now - kHour, 60));
                break;
            case Kind::OtherSubject: t.assertion = issue(bob, t.vo, cas_cred, fresh); break;
            case Kind::Tampered:
                t.assertion = issue(alice.effective_identity, t.vo, cas_cred, fresh);
                t.assertion->cas_signature[rng() % t.assertion->cas_signature.size()] ^= 0x20;
                break;
            case Kind::Untrusted: t.assertion = issue(alice.effective_identity, t.vo, rogue_cas, fresh); break;
            case Kind::Absent: break;
        }
        return t;
    };
    // Oracle: set evaluation over the universe.
    auto oracle = [&](const Triple& t) {
        const RequestKey r{t.request.resource, t.request.action};
        if (auto it = t.local.find(alice.effective_identity);
            it != t.local.end() && match_set(it->second, universe, actions).count(r)) {
            return true;
        }
        if (t.kind != Kind::Valid) return false;
        auto vo_entry = t.local.find("VO:physics");
        if (vo_entry == t.local.end()) return false;
        const auto local_set = match_set(vo_entry->second, universe, actions);
        const auto vo_set = match_set(t.vo, universe, actions);
        std::set<RequestKey> both;
        std::set_intersection(local_set.begin(), local_set.end(), vo_set.begin(), vo_set.end(),
                              std::inserter(both, both.begin()));
        return both.count(r) > 0;
    };
    auto decide = [&](const Triple& t) {
        const auto d = cas::authorize(t.local, t.assertion, alice, t.request, now, trust);
        require(d.allowed == (d.reason == cas::DecisionReason::Granted), "allowed/reason inconsistent");
        return d.allowed;
    };
    auto random_kind = [&] {
        const unsigned x = rng() % 20;
        if (x < 12) return Kind::Valid;
        const Kind rest[] = {Kind::Expired, Kind::OtherSubject, Kind::Tampered, Kind::Untrusted, Kind::Absent};
        return rest[x % 5];
    };

    constexpr int kTriples = 10000;
    int agree = 0;
    int granted = 0;
    for (int i = 0; i < kTriples; ++i) {
        cas::RightSet vo = random_set(4);
        vo.insert(random_right());
        const auto t = make_triple(random_kind(), vo);
        const bool got = decide(t);
        if (got != oracle(t)) {
            throw Failure("disagreement on triple " + std::to_string(i) + ": request " + t.request.resource + " " +
                          t.request.action + ", authorize=" + (got ? "allow" : "deny"));
        }
        ++agree;
        granted += got;
    }

    constexpr int kRemovals = 1000;
    int widened = 0;
    for (int i = 0; i < kRemovals; ++i) {
        cas::RightSet vo = random_set(4);
        vo.insert(random_right());
        vo.insert(random_right());
        auto t = make_triple(Kind::Valid, vo);
        const bool before = decide(t);
        Triple after = t;
        if (rng() % 2 == 0 && after.vo.size() > 1) {
            after.vo.erase(std::next(after.vo.begin(), static_cast<long>(rng() % after.vo.size())));
            after.assertion = issue(alice.effective_identity, after.vo, cas_cred,
                                    Validity::starting(now - 60, cas::kDefaultAssertionLifetime));
        } else {
            auto& entry = after.local.begin()->second;
            if (!entry.empty()) entry.erase(std::next(entry.begin(), static_cast<long>(rng() % entry.size())));
        }
        widened += !before && decide(after);
    }
    require(widened == 0, std::to_string(widened) + " removals turned a denial into a grant");
    return std::to_string(agree) + "/" + std::to_string(kTriples) + " triples agree with the set-intersection oracle (" +
           std::to_string(granted) + " granted); 0/" + std::to_string(kRemovals) + " removals widened access";
}

// ---------------------------------------------------------------------------
// AC5: message security.

std::string flip_bit(std::string text, std::mt19937& rng) {
    const std::size_t bit = rng() % (text.size() * 8);
    text[bit / 8] = static_cast<char>(text[bit / 8] ^ (1 << (bit % 8)));
    return text;
}

Bytes flip_bit(Bytes data, std::mt19937& rng) {
    const std::size_t bit = rng() % (data.size() * 8);
    data[bit / 8] = static_cast<std::uint8_t>(data[bit / 8] ^ (1 << (bit % 8)));
    return data;
}

std::string ac5_message_security() {
    const UnixTime now = system_now();
    const auto ca = credstore::create_ca("/O=Grid/CN=Msg CA", Validity::starting(now - kDay, 30 * kDay));
    const credstore::TrustAnchorStore anchors{{ca.root()}};
    const auto alice = credstore::create_proxy(
        credstore::issue_identity(ca, "/O=Grid/CN=Alice", Validity::starting(now - kHour, kDay)),
        Validity::starting(now - 60, kHour), DelegationDepth::unlimited());
    const auto server = credstore::issue_identity(ca, "/O=Grid/CN=host/server", Validity::starting(now - kHour, kDay));
    std::mt19937 rng(55);
    constexpr int kTrials = 1000;

    int env_detected = 0;
    for (int i = 0; i < kTrials; ++i) {
        const auto env = secmsg::sign_envelope(alice, to_bytes("payload " + std::to_string(i)), std::string("svc"), now);
        const std::string mutated = flip_bit(env.to_json().dump(), rng);
        secmsg::ReplayCache cache;
        env_detected += throws([&] {
            secmsg::verify_envelope(secmsg::SignedEnvelope::from_json(parse_document(mutated)), anchors, cache, now);
        });
    }

    struct Handshake {
        secmsg::SecurityContext client, server;
    };
    auto establish = [&] {
        auto [c, t1] = secmsg::context_initiate(alice);
        auto [s, t2] = secmsg::context_respond(server, t1, anchors, now);
        secmsg::context_accept(s, secmsg::context_complete(c, t2, anchors, now));
        return Handshake{std::move(c), std::move(s)};
    };
    int token_detected = 0;
    for (int i = 0; i < kTrials; ++i) {
        const int which = i % 3;
        token_detected += throws([&] {
            auto [c, t1] = secmsg::context_initiate(alice);
            if (which == 0) t1 = flip_bit(t1, rng);
            auto [s, t2] = secmsg::context_respond(server, t1, anchors, now);
            if (which == 1) t2 = flip_bit(t2, rng);
            Bytes t3 = secmsg::context_complete(c, t2, anchors, now);
            if (which == 2) t3 = flip_bit(t3, rng);
            secmsg::context_accept(s, t3);
        });
    }

    auto hs = establish();
    int msg_detected = 0;
    for (int i = 0; i < kTrials; ++i) {
        const auto msg = secmsg::context_wrap(hs.client, to_bytes("message " + std::to_string(i)), i % 2 == 0);
        const std::string mutated = flip_bit(msg.to_json().dump(), rng);
        msg_detected += throws([&] {
            secmsg::context_unwrap(hs.server, secmsg::ProtectedMessage::from_json(parse_document(mutated)));
        });
        secmsg::context_unwrap(hs.server, msg);
    }

    int replays = 0;
    secmsg::ReplayCache cache;
    for (int i = 0; i < kTrials; ++i) {
        const auto env = secmsg::sign_envelope(alice, to_bytes("once " + std::to_string(i)), std::string("svc"), now);
        secmsg::verify_envelope(env, anchors, cache, now);
        replays += error_of([&] { secmsg::verify_envelope(env, anchors, cache, now); }) == ErrorCode::ReplayDetected;
    }
    int reordered = 0;
    for (int i = 0; i < kTrials; ++i) {
        const auto m1 = secmsg::context_wrap(hs.client, to_bytes("first"), true);
        const auto m2 = secmsg::context_wrap(hs.client, to_bytes("second"), true);
        const bool early = throws([&] { secmsg::context_unwrap(hs.server, m2); });
        secmsg::context_unwrap(hs.server, m1);
        secmsg::context_unwrap(hs.server, m2);
        const bool again = throws([&] { secmsg::context_unwrap(hs.server, m1); });
        reordered += early && again;
    }

    const std::string summary = "detected " + std::to_string(env_detected) + "/1000 envelope, " +
                                std::to_string(token_detected) + "/1000 handshake-token, " +
                                std::to_string(msg_detected) + "/1000 protected-message bit flips; " +
                                std::to_string(replays) + "/1000 replays and " + std::to_string(reordered) +
                                "/1000 out-of-order deliveries rejected";
    require(env_detected == kTrials && token_detected == kTrials && msg_detected == kTrials && replays == kTrials &&
                reordered == kTrials,
            summary);
    return summary;
}

// ---------------------------------------------------------------------------
// AC6: client-side authorization of the MJS.

// An MJS stand-in that authenticates with whatever credential it is given.
class ImpostorMjs final : public gram::Service {
public:
    ImpostorMjs(CredentialSet cred, credstore::TrustAnchorStore user_anchors, UnixTime now)
        : cred_(std::move(cred)), anchors_(std::move(user_anchors)), now_(now) {}
    std::string_view name() const override { return "mjs"; }
    std::vector<std::string> operations() const override { return {"mjs.hello", "mjs.finish"}; }
    Json handle(const gram::Request& request) override {
        if (request.op == "mjs.hello") {
            auto [ctx, token2] = secmsg::context_respond(cred_, base64_decode(get_string(request.body, "token")),
                                                         anchors_, now_);
            ctx_ = std::move(ctx);
            return Json{{"token", base64_encode(token2)}, {"context_id", base64_encode(ctx_->context_id())}};
        }
        secmsg::context_accept(*ctx_, base64_decode(get_string(request.body, "token")));
        return Json::object();
    }

private:
    CredentialSet cred_;
    credstore::TrustAnchorStore anchors_;
    UnixTime now_;
    std::optional<secmsg::SecurityContext> ctx_;
};

std::string ac6_mutual_auth() {
    Deployment d;
    const UnixTime now = d.now();
    const auto alice = d.proxy("Alice");
    const std::string alice_id = Deployment::identity("Alice");
    const auto rogue_host_ca = credstore::create_ca("/O=Grid/CN=Host CA", Validity::starting(now - kDay, 30 * kDay));
    const auto rogue_host =
        credstore::issue_identity(rogue_host_ca, "/O=Grid/CN=host/localhost", Validity::starting(now - kHour, kDay));
    const auto user_rooted_host =
        credstore::issue_identity(d.user_ca, "/O=Grid/CN=host/localhost", Validity::starting(now - kHour, kDay));

    auto grim_like = [&](const CredentialSet& host, std::optional<std::string> identity, bool with_account) {
        credstore::Extensions ext;
        if (identity) ext[std::string(credstore::kExtGridIdentity)] = *identity;
        if (with_account) ext[std::string(credstore::kExtLocalAccount)] = "alice";
        ext[std::string(credstore::kExtLocalPolicy)] = "default";
        return credstore::create_proxy(host, Validity::starting(now - 60, kHour), DelegationDepth::limited(0), ext);
    };
    struct Case {
        std::string label;
        CredentialSet cred;
        std::optional<ErrorCode> expect;
    };
    std::vector<Case> cases;
    const std::vector<std::optional<std::string>> wrong_ids{Deployment::identity("Bob"), Deployment::identity("Carol"),
                                                            std::string(""), alice_id + " ", std::string("/O=Grid"),
                                                            std::nullopt};
    for (const auto& id : wrong_ids) {
        cases.push_back({"host-rooted, grid_identity=" + id.value_or("<absent>"), grim_like(d.host, id, true),
                         ErrorCode::GridIdentityMismatch});
    }
    cases.push_back({"host-rooted end entity", d.host, ErrorCode::UntrustedHost});
    cases.push_back({"host-rooted proxy without local_account", grim_like(d.host, alice_id, false),
                     ErrorCode::UntrustedHost});
    for (const auto* host : {&rogue_host, &user_rooted_host}) {
        const std::string root = host->root().subject + (host == &rogue_host ? " (rogue)" : " (user CA)");
        cases.push_back({"root " + root + ", matching identity", grim_like(*host, alice_id, true),
                         ErrorCode::UntrustedHost});
        cases.push_back({"root " + root + ", end entity", *host, ErrorCode::UntrustedHost});
        for (const auto& id : wrong_ids) {
            cases.push_back({"root " + root + ", grid_identity=" + id.value_or("<absent>"),
                             grim_like(*host, id, true), ErrorCode::UntrustedHost});
        }
    }
    cases.push_back({"user's own proxy claiming the identity", [&] {
                         credstore::Extensions ext{{std::string(credstore::kExtGridIdentity), alice_id},
                                                   {std::string(credstore::kExtLocalAccount), "alice"}};
                         return credstore::create_proxy(d.users.at("Alice"), Validity::starting(now - 60, kHour),
                                                        DelegationDepth::limited(0), ext);
                     }(),
                     ErrorCode::UntrustedHost});
    // Matching credentials: minted through the resource's own gate, and a
    // hand-built equivalent rooted at the host CA.
    cases.push_back({"GRIM credential from the gate", d.resource->gate().issue_grim(alice_id, "alice"), std::nullopt});
    cases.push_back({"host-rooted proxy naming the user", grim_like(d.host, alice_id, true), std::nullopt});

    std::size_t rejected = 0;
    std::size_t accepted = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        auto mjs = std::make_shared<ImpostorMjs>(c.cred, d.user_anchors, now);
        const std::string endpoint = d.transport->listen("inproc://impostor-" + std::to_string(i), mjs);
        const auto got = error_of([&] {
            gram::MjsClient::connect(d.transport, alice, gram::make_mjs_reference(endpoint, "job"), alice_id,
                                     d.host_anchors, now);
        });
        d.transport->close(endpoint);
        require(got == c.expect, c.label + ": expected " + name(c.expect) + ", got " + name(got));
        (c.expect ? rejected : accepted) += 1;
    }
    return std::to_string(rejected) + " mismatched or non-host-rooted credentials rejected, " +
           std::to_string(accepted) + " matching credentials accepted";
}

// ---------------------------------------------------------------------------
// AC7: identity isolation on a 3-user / 2-account resource.

class RecordingLauncher final : public gram::JobLauncher {
public:
    void launch(const gram::LaunchSpec& spec, ExitHandler) override {
        std::lock_guard lock(mu_);
        launches_.push_back(spec);
    }
    void cancel(const std::string&) override {}
    std::vector<gram::LaunchSpec> launches() const {
        std::lock_guard lock(mu_);
        return launches_;
    }

private:
    mutable std::mutex mu_;
    std::vector<gram::LaunchSpec> launches_;
};

std::string ac7_identity_isolation() {
    auto launcher = std::make_shared<RecordingLauncher>();
    DeploymentOptions o;
    o.gridmap_text =
        "\"/O=Grid/CN=Alice\" acct1\n"
        "\"/O=Grid/CN=Bob\" acct2\n"
        "\"/O=Grid/CN=Carol\" acct1,acct2\n";
    o.accounts = {{"acct1", {"default"}}, {"acct2", {"default"}}};
    o.users = {"Alice", "Bob", "Carol"};
    o.launcher = launcher;
    Deployment d(o);
    const auto gm = gridmap::parse_gridmap(o.gridmap_text);
    auto mapped = [&](const std::string& identity, const std::string& account) {
        return !error_of([&] { gridmap::map_identity(gm, identity, account); }).has_value();
    };
    const std::vector<std::string> users{"Alice", "Bob", "Carol"};
    const std::vector<std::optional<std::string>> accounts{std::nullopt, std::string("acct1"), std::string("acct2")};
    std::map<std::string, CredentialSet> proxies;
    for (const auto& u : users) proxies[u] = d.proxy(u);

    std::size_t attempts = 0;
    std::size_t accepted = 0;
    std::vector<gram::Submission> started;
    auto check_reply = [&](const std::string& signer, const Json& reply) {
        const std::string account = get_string(reply, "account");
        require(mapped(Deployment::identity(signer), account),
                signer + " obtained a job in unmapped account " + account);
    };
    // Honest clients through the full protocol, then every cross combination
    // of signer, declared identity, requested account and entry point.
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& signer : users) {
            for (const auto& account : accounts) {
                ++attempts;
                gram::SubmitOptions opts;
                opts.account = account;
                try {
                    auto sub = d.submit(proxies[signer], Deployment::echo("x"), opts);
                    require(mapped(Deployment::identity(signer), sub.account),
                            signer + " submitted into unmapped account " + sub.account);
                    sub.mjs.start();
                    started.push_back(std::move(sub));
                    ++accepted;
                } catch (const Error&) {
                }
            }
        }
        std::vector<std::string> entry_points{d.resource->router_endpoint(), d.resource->mmjfs_endpoint()};
        for (const auto& l : d.resource->lmjfs_instances()) entry_points.push_back(l->endpoint());
        for (const auto& signer : users) {
            for (const auto& declared : users) {
                for (const auto& account : accounts) {
                    for (const auto& endpoint : entry_points) {
                        ++attempts;
                        gram::SubmitRequest req{Deployment::identity(declared), account, std::nullopt,
                                                Deployment::echo("x")};
                        const auto env = secmsg::sign_envelope(proxies[signer], to_bytes(dump_document(req.to_json())),
                                                               std::string("gram"), d.now());
                        try {
                            check_reply(signer, d.transport->call(endpoint, "submit", env.to_json()));
                            ++accepted;
                        } catch (const Error&) {
                        }
                    }
                }
            }
        }
    }
    // Cross-user control of existing jobs: another user connects to the MJS
    // (expecting the owner's GRIM identity) and tries to start the job.
    std::size_t hijacks = 0;
    for (auto& l : d.resource->lmjfs_instances()) {
        for (const auto& job_id : l->job_ids()) {
            const auto rec = *l->job(job_id);
            for (const auto& other : users) {
                if (Deployment::identity(other) == rec.owner) continue;
                ++hijacks;
                const auto code = error_of([&] {
                    auto mjs = gram::MjsClient::connect(d.transport, proxies[other],
                                                        gram::make_mjs_reference(l->endpoint(), job_id), rec.owner,
                                                        d.host_anchors, d.now());
                    mjs.start();
                });
                require(code.has_value(), other + " controlled a job owned by " + rec.owner);
            }
        }
    }

    std::size_t jobs = 0;
    for (const auto& l : d.resource->lmjfs_instances()) {
        for (const auto& job_id : l->job_ids()) {
            ++jobs;
            const auto rec = *l->job(job_id);
            require(rec.local_account == l->settings().account, "job recorded under a foreign account");
            require(rec.owner == l->settings().grid_identity, "LMJFS holds a job of another identity");
            require(mapped(rec.owner, rec.local_account), rec.owner + " has a job in " + rec.local_account);
        }
    }
    const auto launches = launcher->launches();
    std::map<std::string, std::string> owner_of;
    for (const auto& l : d.resource->lmjfs_instances()) {
        for (const auto& job_id : l->job_ids()) owner_of[job_id] = l->job(job_id)->owner;
    }
    for (const auto& spec : launches) {
        require(owner_of.count(spec.job_id) > 0, "launch of an unknown job");
        require(mapped(owner_of[spec.job_id], spec.account),
                "job of " + owner_of[spec.job_id] + " ran in account " + spec.account);
        require(spec.sandbox.filename() == spec.account, "job ran outside its account sandbox");
    }
    require(launches.size() == started.size(), "launch count differs from started jobs");
    return std::to_string(attempts) + " submissions (" + std::to_string(accepted) + " accepted), " +
           std::to_string(jobs) + " jobs, " + std::to_string(launches.size()) + " launches, " +
           std::to_string(hijacks) + " cross-user control attempts refused; every job ran in an account mapped "
           "to its signer";
}

// ---------------------------------------------------------------------------
// AC8: audit tamper evidence.

std::string ac8_audit_tamper() {
    TempDir dir("gridforge-ac8");
    const fs::path log = dir.path() / "audit.log";
    {
        gridctl::AuditLog audit(log);
        for (int i = 0; i < 50; ++i) audit.append(i % 3 ? "lmjfs/alice" : "proxy-router", "event " + std::to_string(i));
    }
    std::vector<std::string> lines;
    {
        std::ifstream in(log);
        std::string line;
        while (std::getline(in, line)) lines.push_back(line);
    }
    require(lines.size() == 50, "expected 50 audit lines");
    require(run_cli(dir, "audit verify " + log.string()).exit_code == 0, "pristine log does not verify");

    using Mutation = std::function<std::string(const std::string&)>;
    auto edit = [](const std::function<void(gridctl::AuditEntry&)>& fn) -> Mutation {
        return [fn](const std::string& line) {
            auto e = gridctl::AuditEntry::from_line(line);
            fn(e);
            return e.to_line();
        };
    };
    const std::vector<std::pair<std::string, Mutation>> mutations{
        {"event", edit([](auto& e) { e.event += "!"; })},
        {"actor", edit([](auto& e) { e.actor = "mallory"; })},
        {"timestamp", edit([](auto& e) { e.timestamp += 1; })},
        {"index", edit([](auto& e) { e.index += 1; })},
        {"prev_digest", edit([](auto& e) { e.prev_digest[0] ^= 1; })},
        {"digest", edit([](auto& e) { e.digest[31] ^= 1; })},
        {"event with recomputed digest", edit([](auto& e) {
             e.event = "forged";
             e.digest = e.compute_digest();
         })},
        {"raw byte", [](const std::string& line) {
             std::string out = line;
             out[out.size() / 2] = static_cast<char>(out[out.size() / 2] ^ 0x04);
             return out;
         }},
    };
    std::size_t checks = 0;
    for (std::size_t pos = 0; pos < lines.size(); ++pos) {
        for (const auto& [label, mutate] : mutations) {
            auto copy = lines;
            copy[pos] = mutate(copy[pos]);
            {
                std::ofstream out(log, std::ios::trunc);
                for (const auto& l : copy) out << l << "\n";
            }
            // A re-signed entry cannot be caught in itself; its successor's
            // link breaks instead, unless it is the last entry.
            const bool resigned = label == "event with recomputed digest";
            if (resigned && pos + 1 == lines.size()) continue;
            const std::size_t expected = resigned ? pos + 1 : pos;
            require(gridctl::audit_first_bad(log) == expected,
                    "mutation '" + label + "' at " + std::to_string(pos) + " reported at " +
                        (gridctl::audit_first_bad(log) ? std::to_string(*gridctl::audit_first_bad(log)) : "nowhere"));
            ++checks;
            if (label == "event") {
                const auto r = run_cli(dir, "audit verify " + log.string());
                require(r.exit_code == 1 && r.err.starts_with("ERR ChainBroken") &&
                            r.err.find("[index=" + std::to_string(pos) + "]") != std::string::npos,
                        "audit verify CLI output for position " + std::to_string(pos) + ": " + r.err);
                ++checks;
            }
        }
    }
    return std::to_string(checks) + " tamper checks over all 50 positions report the correct first bad index";
}

// ---------------------------------------------------------------------------
// AC9: grid-mapfile conformance.

std::string collapse_whitespace(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::string out;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::string w;
        std::string joined;
        while (words >> w) joined += (joined.empty() ? "" : " ") + w;
        out += joined + "\n";
    }
    return out;
}

std::string ac9_gridmap() {
    const fs::path fixtures = fs::path(GRIDFORGE_FIXTURE_DIR) / "gridmap";
    std::ifstream in(fixtures / "valid.gridmap");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto line_count = std::count(text.begin(), text.end(), '\n');
    require(line_count == 20, "fixture has " + std::to_string(line_count) + " lines");
    const auto gm = gridmap::parse_gridmap(text);
    const std::string out = gm.serialize();
    require(collapse_whitespace(out) == collapse_whitespace(text), "round trip changed more than whitespace");
    require(gridmap::parse_gridmap(out).entries() == gm.entries(), "reparse differs");
    std::size_t multi = 0;
    for (const auto& e : gm.entries()) multi += e.accounts.size() > 1;
    require(multi > 0, "fixture lacks multi-account lines");

    struct Bad {
        const char* file;
        ErrorCode code;
        std::size_t line;
    };
    const Bad bad[] = {{"unquoted_identity.gridmap", ErrorCode::ParseError, 3},
                       {"bad_account.gridmap", ErrorCode::ParseError, 4},
                       {"duplicate_identity.gridmap", ErrorCode::DuplicateIdentity, 3},
                       {"unterminated_quote.gridmap", ErrorCode::ParseError, 2},
                       {"space_in_accounts.gridmap", ErrorCode::ParseError, 3}};
    for (const auto& b : bad) {
        try {
            gridmap::load_gridmap(fixtures / b.file);
            throw Failure(std::string(b.file) + " was accepted");
        } catch (const Error& e) {
            require(e.code() == b.code && e.index() == b.line,
                    std::string(b.file) + ": got " + std::string(to_string(e.code())) + " at line " +
                        (e.index() ? std::to_string(*e.index()) : "?"));
        }
    }
    return "20-line fixture (" + std::to_string(gm.entries().size()) + " entries, " + std::to_string(multi) +
           " multi-account) round-trips; 5 malformed fixtures rejected at the right lines";
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        const char* id;
        const char* title;
        std::string (*run)();
    };
    const Criterion criteria[] = {
        {"AC1", "flow fidelity", ac1_flow_fidelity},
        {"AC2", "least privilege", ac2_least_privilege},
        {"AC3", "delegation-depth safety", ac3_depth_safety},
        {"AC4", "CAS intersection", ac4_cas_intersection},
        {"AC5", "message security", ac5_message_security},
        {"AC6", "mutual-auth client-side authorization", ac6_mutual_auth},
        {"AC7", "identity isolation", ac7_identity_isolation},
        {"AC8", "audit tamper-evidence", ac8_audit_tamper},
        {"AC9", "grid-mapfile conformance", ac9_gridmap},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        std::string verdict;
        std::string detail;
        try {
            detail = c.run();
            verdict = "PASS";
        } catch (const std::exception& e) {
            detail = e.what();
            verdict = "FAIL";
            ++failed;
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char timing[32];
        std::snprintf(timing, sizeof timing, " [%.2fs]", secs);
        std::cout << verdict << " " << c.id << " " << c.title << ": " << detail << timing << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
