#include "stargen/campaign.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <set>

#include "stargen/json_io.hpp"

namespace stargen {

using nlohmann::json;

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::Irrecoverable: return "irrecoverable";
    case Outcome::Timeout: return "timeout";
  }
  return "?";
}

std::optional<Outcome> parse_outcome(std::string_view s) {
  for (auto o : {Outcome::Success, Outcome::Failure, Outcome::Irrecoverable, Outcome::Timeout})
    if (to_string(o) == s) return o;
  return std::nullopt;
}

std::string_view to_string(ScopeKind k) {
  switch (k) {
    case ScopeKind::Base: return "base";
    case ScopeKind::Condition: return "condition";
    case ScopeKind::Composition: return "composition";
  }
  return "?";
}

std::optional<ScopeKind> parse_scope_kind(std::string_view s) {
  for (auto k : {ScopeKind::Base, ScopeKind::Condition, ScopeKind::Composition})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::NotEvaluated: return "not-evaluated";
    case CellStatus::Pending: return "pending";
    case CellStatus::Partial: return "partial";
    case CellStatus::Complete: return "complete";
  }
  return "?";
}

bool valid_campaign_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || !std::isalnum(static_cast<unsigned char>(id[0])))
    return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

// ---- config ---------------------------------------------------------------

bool CampaignConfig::excluded(std::string_view model, std::string_view condition) const {
  return std::any_of(exclusions.begin(), exclusions.end(), [&](const CellRef& c) {
    return c.model == model && c.condition == condition;
  });
}

const ScopeEntry* CampaignConfig::find_scope(std::string_view id) const noexcept {
  for (const auto& s : scope)
    if (s.id == id) return &s;
  return nullptr;
}

std::vector<ScopeEntry> default_scope(const BenchmarkManifest& m) {
  std::vector<ScopeEntry> out;
  for (const auto& b : m.base_tasks) out.push_back({b.id, ScopeKind::Base});
  for (const auto& c : m.conditions) out.push_back({c.id, ScopeKind::Condition});
  return out;
}

std::vector<ScopeEntry> composition_scope(const BenchmarkManifest& m) {
  std::vector<ScopeEntry> out;
  for (const auto& c : m.compositions) out.push_back({c.id, ScopeKind::Composition});
  return out;
}

CampaignConfig make_config(std::string id, const BenchmarkManifest& manifest,
                           std::vector<std::string> models, std::vector<ScopeEntry> scope) {
  CampaignConfig c;
  c.id = std::move(id);
  c.manifest_name = manifest.name;
  c.manifest_sha256 = manifest_hash(manifest);
  c.models = std::move(models);
  c.scope = scope.empty() ? default_scope(manifest) : std::move(scope);
  return c;
}

namespace {

[[noreturn]] void bad_config(const CampaignConfig& c, std::string msg) {
  throw Error(ErrorCode::InvalidConfig, std::move(msg), c.id);
}

/// Invariants that hold without the manifest at hand.
void check_config_shape(const CampaignConfig& c) {
  if (!valid_campaign_id(c.id)) bad_config(c, "invalid campaign id '" + c.id + "'");
  if (c.models.empty()) bad_config(c, "models must not be empty");
  std::set<std::string> models;
  for (const auto& m : c.models) {
    if (m.empty()) bad_config(c, "empty model id");
    if (!models.insert(m).second) bad_config(c, "duplicate model '" + m + "'");
  }
  if (c.trials_per_condition < 1) bad_config(c, "trials_per_condition must be >= 1");
  if (c.max_steps < 1) bad_config(c, "max_steps must be >= 1");
  if (c.scope.empty()) bad_config(c, "scope must not be empty");
  std::set<std::string> ids;
  for (const auto& s : c.scope)
    if (!ids.insert(s.id).second) bad_config(c, "duplicate scope entry '" + s.id + "'");
  std::set<CellRef> cells;
  for (const auto& x : c.exclusions) {
    if (!models.count(x.model)) bad_config(c, "exclusion names unknown model '" + x.model + "'");
    if (!ids.count(x.condition))
      bad_config(c, "exclusion names condition outside scope '" + x.condition + "'");
    if (!cells.insert(x).second)
      bad_config(c, "duplicate exclusion " + x.model + "/" + x.condition);
  }
}

std::string cell_key(std::string_view model, std::string_view condition) {
  std::string k(model);
  k.push_back('\x1f');
  k.append(condition);
  return k;
}

CellStatus status_of(const ProgressCell& c, bool excluded) {
  if (excluded) return CellStatus::NotEvaluated;
  if (c.done == 0) return CellStatus::Pending;
  return c.done >= c.required ? CellStatus::Complete : CellStatus::Partial;
}

}  // namespace

// ---- json mappings -----------------------------------------------------------

json to_json(const CampaignConfig& c) {
  json scope = json::array();
  for (const auto& s : c.scope) scope.push_back({{"id", s.id}, {"kind", to_string(s.kind)}});
  json excl = json::array();
  for (const auto& x : c.exclusions) excl.push_back({{"model", x.model}, {"condition", x.condition}});
  return {{"id", c.id},
          {"manifest", {{"name", c.manifest_name}, {"sha256", c.manifest_sha256}}},
          {"models", c.models},
          {"trials_per_condition", c.trials_per_condition},
          {"max_steps", c.max_steps},
          {"scope", scope},
          {"exclusions", excl}};
}

namespace {

void expect_keys(const json& j, std::initializer_list<std::string_view> keys, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be an object");
  for (const auto& [k, v] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw Error(ErrorCode::InvalidConfig, std::string(what) + ": unknown field '" + k + "'");
  for (auto k : keys)
    if (!j.contains(k))
      throw Error(ErrorCode::InvalidConfig,
                  std::string(what) + ": missing field '" + std::string(k) + "'");
}

std::uint32_t positive_u32(const json& v, const char* what) {
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xFFFFFFFFull)
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a nonnegative integer");
  return static_cast<std::uint32_t>(v.get<std::uint64_t>());
}

std::string string_of(const json& v, const char* what) {
  if (!v.is_string()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a string");
  return v.get<std::string>();
}

}  // namespace

CampaignConfig config_from_json(const json& j) {
  expect_keys(j, {"id", "manifest", "models", "trials_per_condition", "max_steps", "scope", "exclusions"},
              "config");
  CampaignConfig c;
  c.id = string_of(j["id"], "id");
  expect_keys(j["manifest"], {"name", "sha256"}, "config.manifest");
  c.manifest_name = string_of(j["manifest"]["name"], "manifest.name");
  c.manifest_sha256 = string_of(j["manifest"]["sha256"], "manifest.sha256");
  if (!j["models"].is_array()) throw Error(ErrorCode::InvalidConfig, "models must be an array");
  for (const auto& m : j["models"]) c.models.push_back(string_of(m, "model"));
  c.trials_per_condition = positive_u32(j["trials_per_condition"], "trials_per_condition");
  c.max_steps = positive_u32(j["max_steps"], "max_steps");
  if (!j["scope"].is_array()) throw Error(ErrorCode::InvalidConfig, "scope must be an array");
  for (const auto& s : j["scope"]) {
    expect_keys(s, {"id", "kind"}, "scope entry");
    auto kind = parse_scope_kind(string_of(s["kind"], "scope.kind"));
    if (!kind) throw Error(ErrorCode::InvalidConfig, "scope.kind must be base|condition|composition");
    c.scope.push_back({string_of(s["id"], "scope.id"), *kind});
  }
  if (!j["exclusions"].is_array()) throw Error(ErrorCode::InvalidConfig, "exclusions must be an array");
  for (const auto& x : j["exclusions"]) {
    expect_keys(x, {"model", "condition"}, "exclusion");
    c.exclusions.push_back(
        {string_of(x["model"], "exclusion.model"), string_of(x["condition"], "exclusion.condition")});
  }
  return c;
}

json to_json(const TrialRecord& t) {
  json j = {{"model", t.model},     {"condition", t.condition}, {"outcome", to_string(t.outcome)},
            {"steps", t.steps},     {"note", t.note},           {"overflow", t.overflow}};
  if (t.idempotency_key) j["idempotency_key"] = *t.idempotency_key;
  return j;
}

json to_json(const ProgressCell& c) {
  return {{"model", c.model},         {"condition", c.condition}, {"kind", to_string(c.kind)},
          {"done", c.done},           {"required", c.required},   {"successes", c.successes},
          {"overflow", c.overflow},   {"status", to_string(c.status)}};
}

std::string event_checksum(json event) {
  event.erase("checksum");
  return sha256_hex(event.dump()).substr(0, 16);
}

// ---- state ----------------------------------------------------------------

std::string ProgressCell::render() const {
  if (status == CellStatus::NotEvaluated) return "--";
  return std::to_string(done) + "/" + std::to_string(required);
}

CampaignState::CampaignState(CampaignConfig config) : config_(std::move(config)) {
  for (const auto& s : config_.scope) {
    for (const auto& m : config_.models) {
      ProgressCell c;
      c.model = m;
      c.condition = s.id;
      c.kind = s.kind;
      bool excl = config_.excluded(m, s.id);
      c.required = excl ? 0 : config_.trials_per_condition;
      c.status = status_of(c, excl);
      index_.emplace(cell_key(m, s.id), cells_.size());
      cells_.push_back(std::move(c));
    }
  }
}

const ProgressCell* CampaignState::cell(std::string_view model, std::string_view condition) const {
  auto it = index_.find(cell_key(model, condition));
  return it == index_.end() ? nullptr : &cells_[it->second];
}

ProgressCell* CampaignState::mutable_cell(std::string_view model, std::string_view condition) {
  auto it = index_.find(cell_key(model, condition));
  return it == index_.end() ? nullptr : &cells_[it->second];
}

std::vector<ProgressCell> CampaignState::queue() const {
  std::vector<ProgressCell> out;
  for (const auto& c : cells_)
    if (c.status == CellStatus::Pending || c.status == CellStatus::Partial) out.push_back(c);
  return out;
}

std::uint64_t CampaignState::required_total() const noexcept {
  std::uint64_t n = 0;
  for (const auto& c : cells_) n += c.required;
  return n;
}

bool CampaignState::complete() const noexcept {
  return std::all_of(cells_.begin(), cells_.end(), [](const ProgressCell& c) {
    return c.status == CellStatus::Complete || c.status == CellStatus::NotEvaluated;
  });
}

const TrialRecord* CampaignState::find_idempotent(std::string_view key) const {
  auto it = idempotency_.find(key);
  return it == idempotency_.end() ? nullptr : &trials_[it->second];
}

bool CampaignState::check(const TrialInput& in) const {
  const auto& id = config_.id;
  if (std::find(config_.models.begin(), config_.models.end(), in.model) == config_.models.end())
    throw Error(ErrorCode::UnknownModel, "model '" + in.model + "' is not part of campaign", id);
  if (!config_.find_scope(in.condition))
    throw Error(ErrorCode::UnknownCondition,
                "condition '" + in.condition + "' is not part of campaign", id);
  const ProgressCell* c = cell(in.model, in.condition);
  if (c->status == CellStatus::NotEvaluated)
    throw Error(ErrorCode::CellExcluded,
                "cell " + in.model + "/" + in.condition + " is excluded from this campaign", id);
  if (in.steps > config_.max_steps)
    throw Error(ErrorCode::ProtocolViolation,
                "steps " + std::to_string(in.steps) + " exceed max_steps " +
                    std::to_string(config_.max_steps),
                id);
  if (in.outcome == Outcome::Timeout && in.steps != config_.max_steps)
    throw Error(ErrorCode::ProtocolViolation,
                "timeout requires steps == " + std::to_string(config_.max_steps) + ", got " +
                    std::to_string(in.steps),
                id);
  if (in.idempotency_key && in.idempotency_key->empty())
    throw Error(ErrorCode::ProtocolViolation, "empty idempotency key", id);
  if (c->done >= c->required) {
    if (!in.allow_overflow)
      throw Error(ErrorCode::QuotaExceeded,
                  "cell " + in.model + "/" + in.condition + " already has " +
                      std::to_string(c->done) + "/" + std::to_string(c->required) + " trials",
                  id);
    return true;
  }
  return false;
}

void CampaignState::apply(TrialRecord r) {
  ProgressCell* c = mutable_cell(r.model, r.condition);
  if (r.overflow) {
    ++c->overflow;
  } else {
    ++c->done;
    if (r.success()) ++c->successes;
  }
  c->status = status_of(*c, false);
  last_seq_ = r.seq;
  last_timestamp_ = r.timestamp;
  if (r.idempotency_key) idempotency_.emplace(*r.idempotency_key, trials_.size());
  trials_.push_back(std::move(r));
}

void CampaignState::note_created(std::uint64_t seq, Timestamp t) {
  last_seq_ = seq;
  last_timestamp_ = t;
}

std::string CampaignState::canonical_json() const {
  json cells = json::array();
  for (const auto& c : cells_) cells.push_back(to_json(c));
  json trials = json::array();
  for (const auto& t : trials_) {
    json j = to_json(t);
    j["seq"] = t.seq;
    trials.push_back(std::move(j));
  }
  return json{{"config", to_json(config_)}, {"cells", cells}, {"trials", trials}}.dump();
}

// ---- log ------------------------------------------------------------------

namespace {

std::string render_event(json event) {
  event["checksum"] = event_checksum(event);
  return event.dump();
}

}  // namespace

std::string CampaignLog::bytes() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

CampaignLog::Prepared CampaignLog::prepare(const TrialInput& in) const {
  bool overflow = state_.check(in);
  TrialRecord r;
  r.seq = lines_.size() + 1;
  r.campaign = state_.config().id;
  r.model = in.model;
  r.condition = in.condition;
  r.outcome = in.outcome;
  r.steps = in.steps;
  r.timestamp = in.timestamp.value_or(utc_now());
  r.note = in.note;
  r.overflow = overflow;
  r.idempotency_key = in.idempotency_key;

  json ev = to_json(r);
  ev["seq"] = r.seq;
  ev["event"] = "trial";
  ev["timestamp"] = format_rfc3339(r.timestamp);
  return {std::move(r), render_event(std::move(ev))};
}

void CampaignLog::commit(Prepared p) {
  lines_.push_back(std::move(p.line));
  state_.apply(std::move(p.record));
}

CampaignLog create_campaign(const CampaignConfig& config, const BenchmarkManifest& manifest,
                            std::optional<Timestamp> now) {
  check_config_shape(config);
  if (config.manifest_name != manifest.name)
    throw Error(ErrorCode::ManifestHashMismatch,
                "config references manifest '" + config.manifest_name + "', got '" +
                    manifest.name + "'",
                config.id);
  std::string actual = manifest_hash(manifest);
  if (config.manifest_sha256 != actual)
    throw Error(ErrorCode::ManifestHashMismatch,
                "config references manifest hash " + config.manifest_sha256 +
                    ", manifest hashes to " + actual,
                config.id);
  for (const auto& s : config.scope) {
    bool ok = false;
    switch (s.kind) {
      case ScopeKind::Base: ok = manifest.find_base_task(s.id) != nullptr; break;
      case ScopeKind::Condition: ok = manifest.find_condition(s.id) != nullptr; break;
      case ScopeKind::Composition: ok = manifest.find_composition(s.id) != nullptr; break;
    }
    if (!ok)
      bad_config(config, "scope entry '" + s.id + "' is not a " + std::string(to_string(s.kind)) +
                             " in the manifest");
  }

  Timestamp t = now.value_or(utc_now());
  json ev = {{"seq", 1}, {"event", "created"}, {"timestamp", format_rfc3339(t)},
             {"config", to_json(config)}};
  CampaignLog log;
  log.state_ = CampaignState(config);
  log.state_.note_created(1, t);
  log.lines_.push_back(render_event(std::move(ev)));
  return log;
}

TrialRecord record_trial(CampaignLog& log, const TrialInput& input) {
  if (input.idempotency_key)
    if (const TrialRecord* prior = log.state().find_idempotent(*input.idempotency_key)) return *prior;
  auto p = log.prepare(input);
  TrialRecord r = p.record;
  log.commit(std::move(p));
  return r;
}

namespace {

Timestamp event_time(const json& ev, std::size_t line) {
  auto it = ev.find("timestamp");
  if (it == ev.end() || !it->is_string()) throw CorruptLineError(line, "missing timestamp");
  try {
    return parse_rfc3339(it->get<std::string>());
  } catch (const std::exception&) {
    throw CorruptLineError(line, "bad timestamp");
  }
}

void expect_event_keys(const json& ev, std::initializer_list<std::string_view> required,
                       std::initializer_list<std::string_view> optional, std::size_t line) {
  for (const auto& [k, v] : ev.items())
    if (std::find(required.begin(), required.end(), k) == required.end() &&
        std::find(optional.begin(), optional.end(), k) == optional.end())
      throw CorruptLineError(line, "unknown field '" + k + "'");
  for (auto k : required)
    if (!ev.contains(k)) throw CorruptLineError(line, "missing field '" + std::string(k) + "'");
}

}  // namespace

CampaignLog CampaignLog::replay(std::string_view bytes) {
  CampaignLog log;
  std::size_t pos = 0, line = 0;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    std::string_view text =
        bytes.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? bytes.size() : nl + 1;
    ++line;

    if (text.empty()) throw CorruptLineError(line, "empty line");
    json ev;
    try {
      ev = json::parse(text);
    } catch (const json::exception&) {
      throw CorruptLineError(line, "malformed JSON");
    }
    if (!ev.is_object()) throw CorruptLineError(line, "event is not an object");
    auto cs = ev.find("checksum");
    if (cs == ev.end() || !cs->is_string()) throw CorruptLineError(line, "missing checksum");
    if (cs->get<std::string>() != event_checksum(ev)) throw CorruptLineError(line, "checksum mismatch");
    auto seq = ev.find("seq");
    if (seq == ev.end() || !seq->is_number_unsigned() || seq->get<std::uint64_t>() != line)
      throw CorruptLineError(line, "sequence gap: expected seq " + std::to_string(line));
    auto kind = ev.find("event");
    if (kind == ev.end() || !kind->is_string()) throw CorruptLineError(line, "missing event type");
    std::string type = kind->get<std::string>();

    if (line == 1) {
      if (type != "created")
        throw Error(ErrorCode::MissingCreationEvent, "log does not start with a creation event");
      expect_event_keys(ev, {"checksum", "seq", "event", "timestamp", "config"}, {}, line);
      Timestamp t = event_time(ev, line);
      CampaignConfig cfg;
      try {
        cfg = config_from_json(ev["config"]);
        check_config_shape(cfg);
      } catch (const Error& e) {
        throw CorruptLineError(line, e.what());
      }
      log.state_ = CampaignState(std::move(cfg));
      log.state_.note_created(1, t);
    } else if (type == "trial") {
      expect_event_keys(ev,
                        {"checksum", "seq", "event", "timestamp", "model", "condition", "outcome",
                         "steps", "note", "overflow"},
                        {"idempotency_key"}, line);
      TrialInput in;
      TrialRecord r;
      try {
        in.model = ev["model"].get<std::string>();
        in.condition = ev["condition"].get<std::string>();
        auto o = parse_outcome(ev["outcome"].get<std::string>());
        if (!o) throw CorruptLineError(line, "unknown outcome");
        in.outcome = *o;
        if (!ev["steps"].is_number_unsigned() || ev["steps"].get<std::uint64_t>() > 0xFFFFFFFFull)
          throw CorruptLineError(line, "bad steps");
        in.steps = ev["steps"].get<std::uint32_t>();
        in.note = ev["note"].get<std::string>();
        r.overflow = ev["overflow"].get<bool>();
        if (ev.contains("idempotency_key"))
          in.idempotency_key = ev["idempotency_key"].get<std::string>();
      } catch (const json::exception&) {
        throw CorruptLineError(line, "malformed trial record");
      }
      in.allow_overflow = r.overflow;
      bool overflow = false;
      try {
        overflow = log.state_.check(in);
      } catch (const Error& e) {
        throw CorruptLineError(line, std::string(to_string(e.code())) + ": " + e.what());
      }
      if (overflow != r.overflow) throw CorruptLineError(line, "overflow flag inconsistent with quota");
      if (in.idempotency_key && log.state_.find_idempotent(*in.idempotency_key))
        throw CorruptLineError(line, "duplicate idempotency key");
      r.seq = line;
      r.campaign = log.state_.config().id;
      r.model = std::move(in.model);
      r.condition = std::move(in.condition);
      r.outcome = in.outcome;
      r.steps = in.steps;
      r.timestamp = event_time(ev, line);
      r.note = std::move(in.note);
      r.idempotency_key = std::move(in.idempotency_key);
      log.state_.apply(std::move(r));
    } else {
      throw CorruptLineError(line, "unexpected event '" + type + "'");
    }
    log.lines_.emplace_back(text);
  }
  if (line == 0) throw Error(ErrorCode::MissingCreationEvent, "log is empty");
  return log;
}

CampaignState replay(std::string_view bytes) { return CampaignLog::replay(bytes).state(); }

// ---- files ----------------------------------------------------------------

FileLock::FileLock(const std::filesystem::path& path) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0)
    throw Error(ErrorCode::LockFailed, "cannot open lock file: " + std::string(std::strerror(errno)),
                path.string());
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    int err = errno;
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::LockFailed,
                err == EWOULDBLOCK ? "campaign log is locked by another writer"
                                   : "flock failed: " + std::string(std::strerror(err)),
                path.string());
  }
}

FileLock::~FileLock() {
  if (fd_ >= 0) ::close(fd_);  // releases the flock
}

FileLock::FileLock(FileLock&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

namespace {

void append_line(const std::filesystem::path& path, const std::string& line) {
  int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) throw Error(ErrorCode::IoError, "cannot open log: " + std::string(std::strerror(errno)), path.string());
  std::string buf = line + "\n";
  std::size_t off = 0;
  while (off < buf.size()) {
    ssize_t n = ::write(fd, buf.data() + off, buf.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      ::close(fd);
      throw Error(ErrorCode::IoError, "append failed: " + std::string(std::strerror(err)), path.string());
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    int err = errno;
    ::close(fd);
    throw Error(ErrorCode::IoError, "fsync failed: " + std::string(std::strerror(err)), path.string());
  }
  ::close(fd);
}

CampaignLog read_log(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoError, e.what(), path.string());
  }
  return CampaignLog::replay(bytes);
}

}  // namespace

CampaignWriter::CampaignWriter(std::filesystem::path log_path, std::filesystem::path lock_path)
    : lock_(lock_path), path_(std::move(log_path)), log_(read_log(path_)) {}

TrialRecord CampaignWriter::append(const TrialInput& input) {
  if (input.idempotency_key)
    if (const TrialRecord* prior = log_.state().find_idempotent(*input.idempotency_key)) return *prior;
  auto p = log_.prepare(input);
  append_line(path_, p.line);
  TrialRecord r = p.record;
  log_.commit(std::move(p));
  return r;
}

CampaignDirectory::CampaignDirectory(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path CampaignDirectory::log_path(std::string_view id) const {
  return dir_ / (std::string(id) + ".stargen.log");
}

std::filesystem::path CampaignDirectory::lock_path(std::string_view id) const {
  return dir_ / (std::string(id) + ".lock");
}

std::vector<std::string> CampaignDirectory::list() const {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir_, ec)) {
    std::string name = e.path().filename().string();
    constexpr std::string_view suffix = ".stargen.log";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      std::string id = name.substr(0, name.size() - suffix.size());
      if (valid_campaign_id(id)) ids.push_back(std::move(id));
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool CampaignDirectory::exists(std::string_view id) const {
  return valid_campaign_id(id) && std::filesystem::exists(log_path(id));
}

CampaignState CampaignDirectory::create(const CampaignConfig& config,
                                        const BenchmarkManifest& manifest,
                                        std::optional<Timestamp> now) {
  if (!valid_campaign_id(config.id))
    throw Error(ErrorCode::InvalidConfig, "invalid campaign id '" + config.id + "'", config.id);
  std::filesystem::create_directories(dir_);
  FileLock lock(lock_path(config.id));
  if (std::filesystem::exists(log_path(config.id)))
    throw Error(ErrorCode::DuplicateCampaignId, "campaign '" + config.id + "' already exists",
                config.id);
  CampaignLog log = create_campaign(config, manifest, now);
  write_file_atomic(log_path(config.id), log.bytes());
  return log.state();
}

CampaignState CampaignDirectory::load(std::string_view id) const {
  if (!exists(id))
    throw Error(ErrorCode::UnknownCampaign, "no campaign '" + std::string(id) + "'", std::string(id));
  return read_log(log_path(id)).state();
}

CampaignWriter CampaignDirectory::open_writer(std::string_view id) const {
  if (!exists(id))
    throw Error(ErrorCode::UnknownCampaign, "no campaign '" + std::string(id) + "'", std::string(id));
  return CampaignWriter(log_path(id), lock_path(id));
}

}  // namespace stargen
