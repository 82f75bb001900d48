#include "stargen/console_api.hpp"

#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <regex>
#include <shared_mutex>
#include <thread>

#include "httplib.h"
#include "stargen/aggregate.hpp"
#include "stargen/json_io.hpp"
#include "stargen/util.hpp"

namespace stargen {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCampaign:
    case ErrorCode::UnknownModel:
    case ErrorCode::UnknownCondition:
    case ErrorCode::ReferenceError:
      return 404;
    case ErrorCode::QuotaExceeded:
    case ErrorCode::DuplicateCampaignId:
    case ErrorCode::ManifestHashMismatch:
      return 409;
    case ErrorCode::LockFailed:
      return 423;
    case ErrorCode::UnsupportedAxis:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::SyntaxError:
      return 400;
    case ErrorCode::Timeout:
      return 504;
    case ErrorCode::AuthFailure:
    case ErrorCode::TransportError:
      return 502;
    case ErrorCode::IoError:
    case ErrorCode::CorruptLine:
    case ErrorCode::MissingCreationEvent:
    case ErrorCode::RegistryCorrupt:
      return 500;
    default:
      return 422;
  }
}

std::filesystem::path draft_path(const std::filesystem::path& manifest_path) {
  auto p = manifest_path;
  p += ".draft";
  return p;
}

namespace {

json diag_json(const Diagnostic& d) {
  return {{"code", to_string(d.code)}, {"subject", d.subject}, {"where", d.where}, {"message", d.message}};
}

ApiResponse error_response(int status, std::string_view code, const std::string& message,
                           json detail = json::object()) {
  json body = {{"status", status}, {"code", code}, {"message", message}, {"detail", std::move(detail)}};
  return {status, body.dump()};
}

ApiResponse error_response(const Error& e, std::optional<int> status = std::nullopt) {
  json detail = {{"subject", e.subject()}, {"where", e.where()}};
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    json all = json::array();
    for (const auto& d : v->diagnostics()) all.push_back(diag_json(d));
    detail["diagnostics"] = all;
  }
  return error_response(status.value_or(http_status(e.code())), to_string(e.code()), e.what(),
                        std::move(detail));
}

ApiResponse ok(json body, int status = 200) { return {status, body.dump()}; }

json parse_body(const ApiRequest& req) {
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "request body must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SyntaxError, std::string("request body is not JSON: ") + e.what());
  }
}

std::string body_string(const json& j, const char* key, bool required = true) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw Error(ErrorCode::SchemaError, std::string("missing field '") + key + "'");
    return {};
  }
  if (!it->is_string()) throw Error(ErrorCode::SchemaError, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

json progress_json(const CampaignState& s) {
  json cells = json::array();
  for (const auto& c : s.progress()) {
    json j = to_json(c);
    j["display"] = c.render();
    cells.push_back(std::move(j));
  }
  return {{"campaign", s.config().id},
          {"models", s.config().models},
          {"trials", s.trial_count()},
          {"required", s.required_total()},
          {"complete", s.complete()},
          {"cells", cells}};
}

json summary_json(const CampaignState& s) {
  return {{"id", s.config().id},
          {"manifest", {{"name", s.config().manifest_name}, {"sha256", s.config().manifest_sha256}}},
          {"models", s.config().models},
          {"trials_per_condition", s.config().trials_per_condition},
          {"max_steps", s.config().max_steps},
          {"conditions", s.config().scope.size()},
          {"trials", s.trial_count()},
          {"required", s.required_total()},
          {"complete", s.complete()}};
}

}  // namespace

struct ConsoleApi::Impl {
  ServerOptions opts;
  CampaignDirectory dir;

  // Manifest and its draft; commit swaps them.
  std::shared_mutex manifest_mu;
  BenchmarkManifest manifest;

  // Writer thread: owns every CampaignWriter and drains an ordered queue.
  struct Job {
    std::string campaign;
    TrialInput input;
    std::promise<std::pair<TrialRecord, bool>> done;  // record, newly appended
  };
  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::deque<Job> queue;
  bool stopping = false;
  std::thread writer;
  std::map<std::string, std::unique_ptr<CampaignWriter>> writers;  // writer thread only

  // Snapshots of campaigns this server writes, refreshed after each append.
  std::mutex snap_mu;
  std::map<std::string, std::shared_ptr<const CampaignState>> snapshots;

  std::mutex create_mu;

  httplib::Server server;
  std::thread server_thread;

  explicit Impl(ServerOptions o) : opts(std::move(o)), dir(opts.campaign_dir) {
    manifest = load_manifest(opts.manifest_path.string());
    writer = std::thread([this] { writer_loop(); });
  }

  ~Impl() {
    {
      std::lock_guard lk(queue_mu);
      stopping = true;
    }
    queue_cv.notify_all();
    if (writer.joinable()) writer.join();
  }

  void writer_loop() {
    for (;;) {
      Job job;
      {
        std::unique_lock lk(queue_mu);
        queue_cv.wait(lk, [&] { return stopping || !queue.empty(); });
        if (queue.empty()) return;
        job = std::move(queue.front());
        queue.pop_front();
      }
      try {
        auto it = writers.find(job.campaign);
        if (it == writers.end()) {
          if (!dir.exists(job.campaign))
            throw Error(ErrorCode::UnknownCampaign, "no campaign '" + job.campaign + "'", job.campaign);
          it = writers.emplace(job.campaign, std::make_unique<CampaignWriter>(dir.open_writer(job.campaign)))
                   .first;
        }
        CampaignWriter& w = *it->second;
        auto before = w.state().trial_count();
        TrialRecord r = w.append(job.input);
        bool appended = w.state().trial_count() != before;
        {
          std::lock_guard lk(snap_mu);
          snapshots[job.campaign] = std::make_shared<const CampaignState>(w.state());
        }
        job.done.set_value({std::move(r), appended});
      } catch (...) {
        job.done.set_exception(std::current_exception());
      }
    }
  }

  std::pair<TrialRecord, bool> submit(const std::string& campaign, TrialInput input) {
    Job job{campaign, std::move(input), {}};
    auto fut = job.done.get_future();
    {
      std::lock_guard lk(queue_mu);
      queue.push_back(std::move(job));
    }
    queue_cv.notify_one();
    return fut.get();
  }

  std::shared_ptr<const CampaignState> snapshot(const std::string& id) {
    {
      std::lock_guard lk(snap_mu);
      auto it = snapshots.find(id);
      if (it != snapshots.end()) return it->second;
    }
    return std::make_shared<const CampaignState>(dir.load(id));
  }

  // ---- handlers ----

  ApiResponse health() { return ok({{"status", "ok"}}); }

  ApiResponse get_manifest(bool draft) {
    std::shared_lock lk(manifest_mu);
    BenchmarkManifest m = draft ? current_draft() : manifest;
    json body = json::parse(serialize_manifest(m));
    return ok({{"manifest", body}, {"sha256", manifest_hash(m)}, {"draft", draft},
               {"coverage", coverage_matrix(m).summary()}});
  }

  /// Caller holds manifest_mu.
  BenchmarkManifest current_draft() {
    auto p = draft_path(opts.manifest_path);
    if (std::filesystem::exists(p)) return load_manifest(p.string());
    return manifest;
  }

  ApiResponse list_campaigns() {
    json arr = json::array();
    for (const auto& id : dir.list()) {
      try {
        arr.push_back(summary_json(*snapshot(id)));
      } catch (const Error& e) {
        arr.push_back({{"id", id}, {"error", {{"code", to_string(e.code())}, {"message", e.what()}}}});
      }
    }
    return ok(arr);
  }

  ApiResponse create_campaign_endpoint(const ApiRequest& req) {
    json b = parse_body(req);
    std::shared_lock mlk(manifest_mu);
    std::vector<std::string> models;
    if (!b.contains("models") || !b["models"].is_array())
      throw Error(ErrorCode::SchemaError, "field 'models' must be an array of strings");
    for (const auto& m : b["models"]) {
      if (!m.is_string()) throw Error(ErrorCode::SchemaError, "model ids must be strings");
      models.push_back(m.get<std::string>());
    }
    std::vector<ScopeEntry> scope;
    std::string scope_kind = b.value("scope", std::string("default"));
    if (scope_kind == "compositions")
      scope = composition_scope(manifest);
    else if (scope_kind == "all") {
      scope = default_scope(manifest);
      auto comps = composition_scope(manifest);
      scope.insert(scope.end(), comps.begin(), comps.end());
    } else if (scope_kind != "default")
      throw Error(ErrorCode::InvalidConfig, "scope must be default, compositions or all");
    CampaignConfig cfg = make_config(body_string(b, "id"), manifest, std::move(models), std::move(scope));
    if (b.contains("trials_per_condition")) cfg.trials_per_condition = b["trials_per_condition"].get<std::uint32_t>();
    if (b.contains("max_steps")) cfg.max_steps = b["max_steps"].get<std::uint32_t>();
    std::lock_guard lk(create_mu);
    CampaignState s = dir.create(cfg, manifest);
    return ok(summary_json(s), 201);
  }

  ApiResponse post_trial(const std::string& id, const ApiRequest& req) {
    if (!dir.exists(id)) throw Error(ErrorCode::UnknownCampaign, "no campaign '" + id + "'", id);
    json b = parse_body(req);
    for (const auto& [k, v] : b.items())
      if (k != "model" && k != "condition" && k != "outcome" && k != "steps" && k != "note" &&
          k != "overflow" && k != "idempotency_key")
        throw Error(ErrorCode::SchemaError, "unknown field '" + k + "'");
    TrialInput in;
    in.model = body_string(b, "model");
    in.condition = body_string(b, "condition");
    auto outcome = parse_outcome(body_string(b, "outcome"));
    if (!outcome)
      throw Error(ErrorCode::SchemaError, "outcome must be success, failure, irrecoverable or timeout");
    in.outcome = *outcome;
    if (!b.contains("steps") || !b["steps"].is_number_unsigned())
      throw Error(ErrorCode::SchemaError, "field 'steps' must be a nonnegative integer");
    in.steps = b["steps"].get<std::uint32_t>();
    in.note = body_string(b, "note", false);
    if (b.contains("overflow")) {
      if (!b["overflow"].is_boolean()) throw Error(ErrorCode::SchemaError, "field 'overflow' must be boolean");
      in.allow_overflow = b["overflow"].get<bool>();
    }
    if (b.contains("idempotency_key")) in.idempotency_key = body_string(b, "idempotency_key");
    if (req.idempotency_key && !req.idempotency_key->empty()) in.idempotency_key = req.idempotency_key;

    auto [rec, appended] = submit(id, std::move(in));
    json body = to_json(rec);
    body["seq"] = rec.seq;
    body["timestamp"] = format_rfc3339(rec.timestamp);
    body["campaign"] = id;
    return ok(body, appended ? 201 : 200);
  }

  ApiResponse aggregates(const std::string& id, const ApiRequest& req) {
    std::optional<ReportGroup> group;
    if (auto it = req.query.find("group"); it != req.query.end()) {
      group = parse_group(it->second);
      if (!group)
        return error_response(400, "BadRequest",
                              "group must be condition, axis, category or composition",
                              {{"group", it->second}});
    }
    auto state = snapshot(id);
    std::shared_lock lk(manifest_mu);
    AggregateReport report = compute_report(*state, manifest);
    json doc = json::parse(export_report(report, ReportFormat::Chart, group));
    return ok(doc["records"]);
  }

  ApiResponse proposals(const ApiRequest& req) {
    json b = parse_body(req);
    std::shared_lock lk(manifest_mu);
    BenchmarkManifest draft = current_draft();
    ProposalRequest pr = make_request(draft, body_string(b, "base_task"), body_string(b, "axis"));
    if (b.contains("count")) pr.count = b["count"].get<unsigned>();
    if (b.contains("experimental")) pr.experimental = b["experimental"].get<bool>();
    auto image = opts.manifest_path.parent_path() / pr.base_task.scene.image;
    if (!pr.base_task.scene.image.empty() && std::filesystem::is_regular_file(image))
      pr.image = read_file(image);
    Prompt prompt = build_prompt(pr);
    auto backend = make_backend(opts.backend);
    DraftSet drafts;
    try {
      drafts = propose(draft, pr, *backend);
    } catch (const Error& e) {
      // A malformed or empty model response is an upstream failure.
      if (e.code() == ErrorCode::SchemaError || e.code() == ErrorCode::AllRejected)
        return error_response(e, 502);
      throw;
    }
    json rejections = json::array();
    for (const auto& r : drafts.rejections) rejections.push_back({{"index", r.index}, {"reason", r.reason}});
    return ok({{"base_task", pr.base_task.id},
               {"axis", pr.axis.id},
               {"category", pr.axis.category.label()},
               {"prompt", prompt.text},
               {"drafts", json::parse(drafts_json(drafts.drafts))},
               {"rejections", rejections}});
  }

  ApiResponse accept_condition(const ApiRequest& req) {
    json b = parse_body(req);
    json cj = b.contains("condition") ? b["condition"] : b;
    Condition c = condition_from_json(cj, "/condition");
    std::unique_lock lk(manifest_mu);
    BenchmarkManifest draft = current_draft();
    draft.conditions.push_back(c);
    auto diags = validate_manifest(draft);
    if (!diags.empty()) throw ValidationError(std::move(diags));
    write_file_atomic(draft_path(opts.manifest_path), serialize_manifest(draft));
    return ok({{"id", c.id}, {"conditions", draft.conditions.size()}, {"sha256", manifest_hash(draft)}},
              201);
  }

  ApiResponse commit() {
    std::unique_lock lk(manifest_mu);
    auto p = draft_path(opts.manifest_path);
    if (!std::filesystem::exists(p))
      return ok({{"committed", false}, {"sha256", manifest_hash(manifest)}});
    BenchmarkManifest draft = load_manifest(p.string());
    write_file_atomic(opts.manifest_path, serialize_manifest(draft));
    std::filesystem::remove(p);
    manifest = std::move(draft);
    return ok({{"committed", true}, {"sha256", manifest_hash(manifest)},
               {"conditions", manifest.conditions.size()}});
  }

  ApiResponse route(const ApiRequest& req) {
    static const std::regex campaign_re(R"(^/api/campaigns/([^/]+)(/[a-z]+)?$)");
    const std::string& p = req.path;
    const std::string& m = req.method;
    if (m == "OPTIONS") return {204, ""};
    if (m == "GET" && p == "/api/health") return health();
    if (m == "GET" && p == "/api/manifest") {
      auto it = req.query.find("draft");
      return get_manifest(it != req.query.end() && (it->second == "1" || it->second == "true"));
    }
    if (m == "GET" && p == "/api/manifest/draft") return get_manifest(true);
    if (m == "POST" && p == "/api/manifest/conditions") return accept_condition(req);
    if (m == "POST" && p == "/api/manifest/commit") return commit();
    if (m == "GET" && p == "/api/campaigns") return list_campaigns();
    if (m == "POST" && p == "/api/campaigns") return create_campaign_endpoint(req);
    if (m == "POST" && p == "/api/proposals") return proposals(req);
    std::smatch match;
    if (std::regex_match(p, match, campaign_re)) {
      std::string id = match[1];
      std::string sub = match[2];
      if (!valid_campaign_id(id)) throw Error(ErrorCode::UnknownCampaign, "no campaign '" + id + "'", id);
      if (m == "GET" && sub.empty()) return ok(summary_json(*snapshot(id)));
      if (m == "GET" && sub == "/progress") return ok(progress_json(*snapshot(id)));
      if (m == "GET" && sub == "/aggregates") return aggregates(id, req);
      if (m == "POST" && sub == "/trials") return post_trial(id, req);
    }
    return error_response(404, "NotFound", "no route for " + m + " " + p);
  }

  ApiResponse handle(const ApiRequest& req) {
    try {
      return route(req);
    } catch (const Error& e) {
      return error_response(e);
    } catch (const json::exception& e) {
      return error_response(422, "SchemaError", std::string("bad request body: ") + e.what());
    } catch (const std::exception& e) {
      return error_response(500, "InternalError", e.what());
    }
  }

  void install_routes(ConsoleApi& api) {
    server.set_default_headers({{"Access-Control-Allow-Origin", opts.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type, Idempotency-Key"}});
    auto bridge = [&api](const httplib::Request& hreq, httplib::Response& hres) {
      ApiRequest req;
      req.method = hreq.method;
      req.path = hreq.path;
      for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
      req.body = hreq.body;
      if (hreq.has_header("Idempotency-Key")) req.idempotency_key = hreq.get_header_value("Idempotency-Key");
      ApiResponse res = api.handle(req);
      hres.status = res.status;
      if (!res.body.empty()) hres.set_content(res.body, "application/json");
    };
    server.Get(".*", bridge);
    server.Post(".*", bridge);
    server.Options(".*", bridge);
  }
};

ConsoleApi::ConsoleApi(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  impl_->install_routes(*this);
}

ConsoleApi::~ConsoleApi() { stop(); }

ApiResponse ConsoleApi::handle(const ApiRequest& request) { return impl_->handle(request); }

int ConsoleApi::start() {
  int port = impl_->opts.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->opts.host);
  } else if (!impl_->server.bind_to_port(impl_->opts.host, port)) {
    port = -1;
  }
  if (port < 0)
    throw Error(ErrorCode::IoError, "cannot bind " + impl_->opts.host + ":" + std::to_string(impl_->opts.port));
  impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void ConsoleApi::run() {
  if (!impl_->server.listen(impl_->opts.host, impl_->opts.port))
    throw Error(ErrorCode::IoError, "cannot bind " + impl_->opts.host + ":" + std::to_string(impl_->opts.port));
}

void ConsoleApi::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

}  // namespace stargen
