#include "gridforge/gram/lmjfs.hpp"

#include "gridforge/common/crypto.hpp"
#include "gridforge/common/error.hpp"
#include "gridforge/gram/flow.hpp"
#include "gridforge/gram/request.hpp"

namespace gridforge::gram {

namespace {

constexpr std::size_t kMaxSessions = 1024;
constexpr std::string_view kMjsPrefix = "mjs.";

Json wrap_reply(secmsg::SecurityContext& ctx, const Json& doc) {
    return secmsg::context_wrap(ctx, to_bytes(dump_document(doc)), true).to_json();
}

}  // namespace

cas::Right submit_right(std::string_view queue) { return cas::Right::make("/gram/" + std::string(queue), "submit"); }

Lmjfs::Lmjfs(LmjfsSettings settings, credstore::CredentialSet grim_credential, credstore::TrustAnchorStore user_anchors,
             std::shared_ptr<const gridmap::GridMap> gridmap, std::optional<CasEnforcement> cas,
             std::shared_ptr<JobLauncher> launcher, EventSink& events, Clock clock)
    : settings_(std::move(settings)),
      grim_(std::move(grim_credential)),
      user_anchors_(std::move(user_anchors)),
      gridmap_(std::move(gridmap)),
      cas_(std::move(cas)),
      launcher_(std::move(launcher)),
      events_(events),
      clock_(std::move(clock)),
      replay_(settings_.nonce_retention),
      actor_("lmjfs/" + settings_.account),
      last_activity_(clock_()) {
    const auto& ext = grim_.leaf().extensions;
    auto policy = ext.find(std::string(credstore::kExtLocalPolicy));
    if (policy != ext.end()) queues_ = parse_local_policy(policy->second);
}

std::vector<std::string> Lmjfs::operations() const {
    return {"submit",    "mjs.hello",  "mjs.finish", "mjs.delegate_begin", "mjs.delegate_finish",
            "mjs.start", "mjs.status", "mjs.cancel"};
}

void Lmjfs::set_endpoint(std::string endpoint) { endpoint_ = std::move(endpoint); }

Json Lmjfs::handle(const Request& request) {
    last_activity_ = clock_();
    try {
        if (request.op == "submit") return submit(request.body);
        if (request.op == "mjs.hello") return hello(request.body);
        if (request.op == "mjs.finish") return finish(request.body);
        return protected_op(request.op.substr(kMjsPrefix.size()), request.body);
    } catch (const Error& e) {
        throw flow::attributed(e, request.op == "submit" ? 6 : 7);
    }
}

Json Lmjfs::submit(const Json& envelope_doc) {
    const auto env = secmsg::SignedEnvelope::from_json(envelope_doc);
    const UnixTime now = clock_();
    const auto verified = secmsg::verify_envelope(env, user_anchors_, replay_, now, settings_.clock_skew);
    const auto req = SubmitRequest::from_json(parse_document(gridforge::to_string(verified.payload)));
    const std::string& signer = verified.who.effective_identity;

    std::string mapped;
    try {
        mapped = gridmap::map_identity(*gridmap_, signer, req.account);
    } catch (const Error& e) {
        throw Error(ErrorCode::AccountMismatch, "signer may not use account " + settings_.account + ": " + e.detail());
    }
    if (mapped != settings_.account || signer != settings_.grid_identity) {
        throw Error(ErrorCode::AccountMismatch,
                    signer + " (account " + mapped + ") may not use the LMJFS of " + settings_.grid_identity);
    }
    if (std::find(queues_.begin(), queues_.end(), req.job.queue) == queues_.end()) {
        throw Error(ErrorCode::QueueNotPermitted, "queue '" + req.job.queue + "' not allowed for " + settings_.account);
    }
    if (cas_) {
        const auto decision =
            cas::authorize(cas_->local_policy, req.assertion, verified.who, submit_right(req.job.queue), now, cas_->trust);
        if (!decision.allowed) {
            throw Error(ErrorCode::AuthorizationDenied,
                        "submit to queue " + req.job.queue + " denied: " + std::string(cas::to_string(decision.reason)));
        }
    }

    auto slot = std::make_shared<JobSlot>();
    slot->record.job_id = hex_encode(crypto::random_bytes(8));
    slot->record.description = req.job;
    slot->record.owner = signer;
    slot->record.local_account = settings_.account;
    const std::string job_id = slot->record.job_id;
    {
        std::lock_guard lock(mu_);
        jobs_[job_id] = slot;
    }
    const std::string reference = make_mjs_reference(endpoint_, job_id);
    events_.record(actor_, flow::detail(flow::kLmjfsCreate, "identity=" + signer + " job=" + job_id));
    return Json{{"job_id", job_id}, {"mjs", reference}, {"account", settings_.account}};
}

Json Lmjfs::hello(const Json& body) {
    const std::string job_id = get_string(body, "job_id");
    slot(job_id);
    auto s = std::make_shared<Session>();
    auto [ctx, token2] =
        secmsg::context_respond(grim_, base64_decode(get_string(body, "token")), user_anchors_, clock_());
    s->ctx = std::move(ctx);
    s->job_id = job_id;
    std::lock_guard lock(mu_);
    if (sessions_.size() >= kMaxSessions) sessions_.erase(sessions_.begin());
    sessions_[s->ctx.context_id()] = s;
    return Json{{"token", base64_encode(token2)}};
}

Json Lmjfs::finish(const Json& body) {
    auto s = session(get_base64(body, "context_id"));
    std::lock_guard lock(s->mu);
    secmsg::context_accept(s->ctx, get_base64(body, "token"));
    return Json{{"state", secmsg::to_string(s->ctx.state())}};
}

Json Lmjfs::protected_op(const std::string& op, const Json& body) {
    const auto msg = secmsg::ProtectedMessage::from_json(body);
    auto s = session(msg.context_id);
    std::lock_guard session_lock(s->mu);
    auto job = slot(s->job_id);

    if (op == "delegate_finish") {
        if (!s->pending) {
            throw Error(ErrorCode::InvalidState, "no delegation in progress");
        }
        {
            std::lock_guard lock(job->mu);
            check_owner(*s, job->record);
        }
        auto cred = secmsg::delegation_finish(s->ctx, *s->pending, msg);
        s->pending.reset();
        const auto id = credstore::validate_chain(cred.chain, user_anchors_, clock_());
        {
            std::lock_guard lock(job->mu);
            if (id.effective_identity != job->record.owner) {
                throw Error(ErrorCode::GridIdentityMismatch, "delegated credential is not the owner's");
            }
            job->record.delegated_credential = std::move(cred);
        }
        events_.record(actor_, flow::detail(flow::kMutualAuthDelegate, "identity=" + id.effective_identity +
                                                                              " job=" + s->job_id));
        return wrap_reply(s->ctx, Json{{"op", "delegated"}, {"job_id", s->job_id}});
    }

    const Json doc = parse_document(gridforge::to_string(secmsg::context_unwrap(s->ctx, msg)));
    if (get_string(doc, "op") != op || get_string(doc, "job_id") != s->job_id) {
        throw Error(ErrorCode::MalformedDocument, "protected request does not match the frame");
    }
    {
        std::lock_guard lock(job->mu);
        check_owner(*s, job->record);
    }

    if (op == "delegate_begin") {
        auto [pending, request] = secmsg::delegation_request(s->ctx);
        s->pending = std::move(pending);
        return request.to_json();
    }
    if (op == "start") {
        return wrap_reply(s->ctx, start_job(job));
    }
    std::lock_guard lock(job->mu);
    if (op == "cancel") {
        job->record.transition(JobState::Canceled);
        launcher_->cancel(job->record.job_id);
        events_.record(actor_, "job:Canceled job=" + job->record.job_id);
    } else if (op != "status") {
        throw Error(ErrorCode::UnknownOperation, "unknown MJS operation " + op);
    }
    return wrap_reply(s->ctx, job->record.to_json());
}

Json Lmjfs::start_job(const std::shared_ptr<JobSlot>& job) {
    std::lock_guard lock(job->mu);
    job->record.transition(JobState::Active);
    events_.record(actor_, "job:Active job=" + job->record.job_id);
    const LaunchSpec spec{job->record.job_id, settings_.account, settings_.sandbox, job->record.description};
    std::weak_ptr<JobSlot> weak = job;
    try {
        launcher_->launch(spec, [weak, actor = actor_, &events = events_](int exit_code) {
            auto j = weak.lock();
            if (!j) return;
            std::lock_guard l(j->mu);
            if (j->record.state != JobState::Active) return;
            j->record.exit_code = exit_code;
            j->record.transition(exit_code == 0 ? JobState::Done : JobState::Failed);
            events.record(actor, "job:" + std::string(to_string(j->record.state)) + " job=" + j->record.job_id);
        });
    } catch (const Error&) {
        job->record.transition(JobState::Failed);
        events_.record(actor_, "job:Failed job=" + job->record.job_id);
    }
    return job->record.to_json();
}

void Lmjfs::check_owner(const Session& s, const JobRecord& record) const {
    const auto& peer = s.ctx.peer_identity();
    if (s.ctx.state() != secmsg::ContextState::Established || !peer) {
        throw Error(ErrorCode::InvalidState, "security context not established");
    }
    if (peer->effective_identity != record.owner) {
        throw Error(ErrorCode::NotOwner, peer->effective_identity + " does not own job " + record.job_id);
    }
}

std::shared_ptr<Lmjfs::JobSlot> Lmjfs::slot(const std::string& job_id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) throw Error(ErrorCode::UnknownJob, "no job " + job_id);
    return it->second;
}

std::shared_ptr<Lmjfs::Session> Lmjfs::session(const Bytes& context_id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(context_id);
    if (it == sessions_.end()) throw Error(ErrorCode::InvalidState, "unknown security context");
    return it->second;
}

bool Lmjfs::idle(UnixTime now) const {
    if (now - last_activity_.load() < settings_.idle_timeout) return false;
    std::lock_guard lock(mu_);
    for (const auto& [_, j] : jobs_) {
        std::lock_guard l(j->mu);
        if (j->record.state == JobState::Active) return false;
    }
    return true;
}

std::optional<JobRecord> Lmjfs::job(const std::string& job_id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return std::nullopt;
    std::lock_guard l(it->second->mu);
    return it->second->record;
}

std::vector<std::string> Lmjfs::job_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : jobs_) out.push_back(id);
    return out;
}

}  // namespace gridforge::gram
