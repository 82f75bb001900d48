#include "stargen/proposer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "stargen/json_io.hpp"
#include "stargen/util.hpp"

namespace stargen {

using nlohmann::json;

bool axis_supported(std::string_view axis_id) {
  return std::find(kSupportedAxes.begin(), kSupportedAxes.end(), axis_id) != kSupportedAxes.end();
}

ProposalRequest make_request(const BenchmarkManifest& manifest, std::string_view base_task,
                             std::string_view axis, const AxisRegistry& registry) {
  const BaseTask* base = manifest.find_base_task(base_task);
  if (!base)
    throw Error(ErrorCode::ReferenceError, "unknown base task '" + std::string(base_task) + "'",
                std::string(base_task));
  ProposalRequest r{*base, registry.lookup(axis), 3, {}, "image/jpeg", false};
  return r;
}

// ---- prompt -----------------------------------------------------------------

ResponseSchema schema_for(const AxisDescriptor& axis) {
  return {axis.category.contains(Modality::Visual), axis.category.contains(Modality::Semantic)};
}

std::string ResponseSchema::json() const {
  nlohmann::ordered_json props = nlohmann::ordered_json::object();
  std::vector<std::string> required;
  if (visual) {
    props["visualChange"] = {{"type", "STRING"},
                             {"description", "Text prompt for an image-editing model to modify the task"},
                             {"nullable", false}};
    required.push_back("visualChange");
  }
  if (language) {
    props["languageChange"] = {{"type", "STRING"},
                               {"description", "Updated language instruction for the modified task"},
                               {"nullable", false}};
    required.push_back("languageChange");
  }
  std::string description = visual && language ? "Visual and language instruction changes for a task."
                            : visual            ? "Visual changes for a task."
                                                : "Language instruction changes for a task.";
  nlohmann::ordered_json doc = {
      {"description", description},
      {"type", "ARRAY"},
      {"items", {{"type", "OBJECT"}, {"properties", props}, {"required", required}}}};
  return doc.dump(2);
}

namespace {

struct AxisPrompt {
  std::string_view axis;
  std::string_view change;    // "...that each involve <change>."
  std::string_view reminder;  // closing atomicity sentence
};

// The VSB-NOBJ wording is the reference example prompt; the other four are
// reconstructed from the axis definitions in the same shape.
constexpr AxisPrompt kAxisPrompts[] = {
    {"VSB-NOBJ",
     "changing a single task-relevant object to a new object with a different visual appearance, "
     "semantic description, and physical characteristics",
     "Remember to only change one object, and to only change an object that is involved in the "
     "task."},
    {"V-OBJ",
     "changing the visual appearance of a single task-relevant object, such as its color, without "
     "changing how the robot would need to move to complete the task",
     "Remember to only change one object, and to only change its appearance."},
    {"S-PROP",
     "referring to a task-relevant object by one of its physical properties, such as its color, "
     "mass, or size, instead of by its name",
     "Remember to only change how one object is described, and to keep the task itself the same."},
    {"VB-POSE",
     "changing the position or orientation of a single task-relevant object in the scene, so that "
     "the robot would need to move differently to complete the task",
     "Remember to only change the pose of one object, and to only change an object that is "
     "involved in the task."},
    {"SB-VRB",
     "changing the action the robot must perform on a task-relevant object to a new action that "
     "requires a different behavior",
     "Remember to only change the action, and to keep the same task-relevant objects."},
};

std::string lower_first(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

Prompt build_prompt(const ProposalRequest& req) {
  const AxisDescriptor& axis = req.axis;
  ResponseSchema schema = schema_for(axis);
  if (!schema.visual && !schema.language)
    throw Error(ErrorCode::UnsupportedAxis,
                "axis " + axis.id + " is behavioral-only and cannot be expressed as an image edit "
                "or an instruction change",
                axis.id);
  if (!axis_supported(axis.id) && !req.experimental)
    throw Error(ErrorCode::UnsupportedAxis,
                "axis " + axis.id + " is not supported by the proposer (supported: V-OBJ, S-PROP, "
                "VB-POSE, SB-VRB, VSB-NOBJ)",
                axis.id);
  if (req.count == 0) throw Error(ErrorCode::UnsupportedAxis, "count must be positive", axis.id);

  std::string change, reminder;
  for (const auto& p : kAxisPrompts) {
    if (p.axis == axis.id) {
      change = p.change;
      reminder = p.reminder;
    }
  }
  if (change.empty()) {
    change = "a single change of the kind \"" + axis.name + "\" (" + lower_first(axis.description) + ")";
    reminder = "Remember to only make one change, and to only change something that is involved "
               "in the task.";
  }

  std::string n = std::to_string(req.count);
  std::string text = "This is an image of a scene where a robot is to complete the task \"" +
                     req.base_task.instruction + "\". Suggest " + n +
                     " changes to the task that each involve " + change + ". Do this by providing ";
  if (schema.language && schema.visual) {
    text += n + " updated language instructions for each of the modified tasks, and corresponding "
                "text prompts to an image-editing model that would each perform a single change "
                "to the scene to create the modified task.";
  } else if (schema.language) {
    text += n + " updated language instructions for each of the modified tasks.";
  } else {
    text += n + " text prompts to an image-editing model that would each perform a single change "
                "to the scene to create the modified task.";
  }
  text += " " + reminder;
  return {std::move(text), schema};
}

// ---- parsing ------------------------------------------------------------------

ParsedProposals parse_proposals(std::string_view body, const AxisDescriptor& axis) {
  json doc;
  try {
    doc = json::parse(body.begin(), body.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("response is not JSON: ") + e.what(), axis.id);
  }
  if (!doc.is_array())
    throw Error(ErrorCode::SchemaError,
                std::string("response must be an array of objects, got ") + doc.type_name(), axis.id);
  for (std::size_t i = 0; i < doc.size(); ++i)
    if (!doc[i].is_object())
      throw Error(ErrorCode::SchemaError,
                  "response item " + std::to_string(i) + " is not an object", axis.id, "/" + std::to_string(i));

  ResponseSchema schema = schema_for(axis);
  ParsedProposals out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    std::string reason;
    for (const auto& [k, v] : item.items())
      if (k != "visualChange" && k != "languageChange") {
        reason = "unknown field '" + k + "'";
        break;
      }
    Proposal p;
    auto field = [&](const char* name, bool required, std::optional<std::string>& slot) {
      if (!reason.empty()) return;
      auto it = item.find(name);
      if (it == item.end()) {
        if (required)
          reason = std::string("missing ") + name + " (required for axis " + axis.id + ", category " +
                   axis.category.set_string() + ")";
        return;
      }
      if (!required) {
        reason = std::string(name) + " not allowed for axis " + axis.id + " (category " +
                 axis.category.set_string() + ")";
        return;
      }
      if (!it->is_string()) {
        reason = std::string(name) + " must be a string";
        return;
      }
      std::string text = normalize_whitespace(it->get<std::string>());
      if (text.empty()) {
        reason = std::string(name) + " is empty";
        return;
      }
      slot = std::move(text);
    };
    field("visualChange", schema.visual, p.visual_change);
    field("languageChange", schema.language, p.language_change);
    if (reason.empty())
      out.proposals.push_back(std::move(p));
    else
      out.rejections.push_back({i, std::move(reason)});
  }
  if (out.proposals.empty()) {
    std::string msg = "no valid proposals";
    for (const auto& r : out.rejections) msg += "; item " + std::to_string(r.index) + ": " + r.reason;
    throw Error(ErrorCode::AllRejected, msg, axis.id);
  }
  return out;
}

Condition proposal_to_condition(const Proposal& p, const ProposalRequest& req, std::size_t k) {
  const AxisDescriptor& axis = req.axis;
  Condition c;
  c.id = req.base_task.id + "_" + axis.id + "_" + std::to_string(k);
  c.base_task = req.base_task.id;
  c.axis = axis.id;
  if (p.visual_change) c.delta.visual = ChangeNote{*p.visual_change};
  if (p.language_change) c.delta.instruction = *p.language_change;
  if (axis.category.contains(Modality::Behavioral))
    c.delta.behavioral = ChangeNote{"implied by axis " + axis.id};
  c.delta.factor = "proposed " + lower_first(axis.name);
  c.notes = "draft from VLM proposal";
  if (p.visual_change) c.notes += "; scene edit pending: " + *p.visual_change;
  if (c.delta.behavioral) c.notes += "; behavioral change needs human confirmation";
  c.scene_image = req.base_task.scene.image;
  categorize(req.base_task, c.delta);  // surface NoOpInstruction etc. to the caller
  return c;
}

// ---- config -------------------------------------------------------------------

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  if (value.empty() || !std::all_of(value.begin(), value.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw Error(ErrorCode::InvalidConfig, key + " must be a nonnegative integer, got '" + value + "'");
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, key + " is out of range");
  }
}

constexpr std::string_view kConfigKeys[] = {"backend",  "endpoint",   "model",   "credential_env",
                                            "mock_dir", "timeout_ms", "retries", "backoff_ms"};

void apply_setting(BackendConfig& c, const std::string& key, const std::string& value) {
  if (key == "backend") {
    if (value != "mock" && value != "http")
      throw Error(ErrorCode::InvalidConfig, "backend must be mock or http, got '" + value + "'");
    c.backend = value;
  } else if (key == "endpoint") {
    c.endpoint = value;
  } else if (key == "model") {
    c.model = value;
  } else if (key == "credential_env") {
    c.credential_env = value;
  } else if (key == "mock_dir") {
    c.mock_dir = value;
  } else if (key == "timeout_ms") {
    c.timeout = std::chrono::milliseconds(parse_uint(key, value));
  } else if (key == "retries") {
    auto n = parse_uint(key, value);
    if (n < 1 || n > 10) throw Error(ErrorCode::InvalidConfig, "retries must be between 1 and 10");
    c.attempts = static_cast<unsigned>(n);
  } else if (key == "backoff_ms") {
    c.backoff = std::chrono::milliseconds(parse_uint(key, value));
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  }
}

}  // namespace

BackendConfig parse_backend_config(std::string_view text, const EnvLookup& env) {
  BackendConfig c;
  std::size_t lineno = 0, pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"') {
      auto close = value.find('"', 1);
      if (close == std::string::npos)
        throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(lineno) + ": unterminated string");
      value = value.substr(1, close - 1);
    } else if (auto hash = value.find(" #"); hash != std::string::npos) {
      value = trim(std::string_view(value).substr(0, hash));
    }
    apply_setting(c, key, value);
  }
  for (auto key : kConfigKeys) {
    std::string name = "STARGEN_";
    for (char ch : key) name.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
    if (auto v = env(name)) apply_setting(c, std::string(key), *v);
  }
  return c;
}

BackendConfig load_backend_config(const std::optional<std::filesystem::path>& file,
                                  const EnvLookup& env) {
  std::string text;
  if (file) {
    try {
      text = read_file(*file);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, e.what(), file->string());
    }
  }
  return parse_backend_config(text, env);
}

// ---- backends -----------------------------------------------------------------

MockBackend::MockBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string MockBackend::request(const ProposalRequest& req, const Prompt&) {
  auto path = dir_ / (req.axis.id + "__" + req.base_task.id + ".json");
  try {
    return read_file(path);
  } catch (const std::exception&) {
    throw Error(ErrorCode::TransportError, "mock backend has no response for " + req.axis.id + " on " +
                                               req.base_task.id,
                path.string());
  }
}

HttpBackend::HttpBackend(BackendConfig config, std::optional<std::string> credential, Sleeper sleeper)
    : config_(std::move(config)), credential_(std::move(credential)), sleep_(std::move(sleeper)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpBackend::request_body(const BackendConfig& config, const ProposalRequest& req,
                                      const Prompt& prompt) {
  json body = {{"model", config.model},
               {"prompt", prompt.text},
               {"count", req.count},
               {"response_schema", json::parse(prompt.schema.json())}};
  if (!req.image.empty())
    body["image"] = {{"media_type", req.media_type}, {"data", base64_encode(req.image)}};
  return body.dump();
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host:port
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "endpoint must be an absolute http(s) URL: '" + url + "'");
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw Error(ErrorCode::InvalidConfig, "unsupported endpoint scheme '" + scheme + "'");
  auto slash = url.find('/', scheme_end + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string HttpBackend::request(const ProposalRequest& req, const Prompt& prompt) {
  Endpoint ep = split_endpoint(config_.endpoint);
  std::string body = request_body(config_, req, prompt);
  httplib::Headers headers;
  if (credential_) headers.emplace("Authorization", "Bearer " + *credential_);

  bool last_was_timeout = false;
  std::string last_error;
  for (unsigned attempt = 0; attempt < config_.attempts; ++attempt) {
    if (attempt > 0) sleep_(config_.backoff * (1u << (attempt - 1)));

    httplib::Client client(ep.origin);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(ep.path, headers, body, "application/json");
    auto elapsed = std::chrono::steady_clock::now() - started;

    if (!res) {
      auto err = res.error();
      last_was_timeout = err == httplib::Error::ConnectionTimeout ||
                         (err == httplib::Error::Read && elapsed >= config_.timeout * 9 / 10);
      last_error = httplib::to_string(err);
      continue;
    }
    int status = res->status;
    if (status >= 200 && status < 300) return res->body;
    if (status == 401 || status == 403)
      throw Error(ErrorCode::AuthFailure, "backend rejected credentials (HTTP " + std::to_string(status) + ")",
                  config_.endpoint);
    last_was_timeout = status == 408 || status == 504;
    last_error = "HTTP " + std::to_string(status);
    if (status != 408 && status != 429 && status < 500)
      throw Error(ErrorCode::TransportError, "backend returned " + last_error, config_.endpoint);
  }
  std::string msg = "backend request failed after " + std::to_string(config_.attempts) +
                    " attempts: " + last_error;
  throw Error(last_was_timeout ? ErrorCode::Timeout : ErrorCode::TransportError, msg, config_.endpoint);
}

std::unique_ptr<VlmBackend> make_backend(const BackendConfig& config, const EnvLookup& env) {
  if (config.backend == "mock") {
    if (config.mock_dir.empty())
      throw Error(ErrorCode::InvalidConfig, "mock backend needs mock_dir");
    return std::make_unique<MockBackend>(config.mock_dir);
  }
  if (config.endpoint.empty()) throw Error(ErrorCode::InvalidConfig, "http backend needs endpoint");
  split_endpoint(config.endpoint);  // validate early
  return std::make_unique<HttpBackend>(config, env(config.credential_env));
}

std::string request_proposals(const ProposalRequest& req, VlmBackend& backend) {
  return backend.request(req, build_prompt(req));
}

DraftSet propose(const BenchmarkManifest& manifest, const ProposalRequest& req, VlmBackend& backend) {
  std::string body = request_proposals(req, backend);
  ParsedProposals parsed = parse_proposals(body, req.axis);

  std::set<std::string> taken;
  for (const auto& b : manifest.base_tasks) taken.insert(b.id);
  for (const auto& c : manifest.conditions) taken.insert(c.id);
  for (const auto& c : manifest.compositions) taken.insert(c.id);

  DraftSet out;
  out.rejections = parsed.rejections;
  std::size_t k = 0;
  for (std::size_t i = 0; i < parsed.proposals.size(); ++i) {
    std::string prefix = req.base_task.id + "_" + req.axis.id + "_";
    do ++k;
    while (taken.count(prefix + std::to_string(k)));
    try {
      Condition c = proposal_to_condition(parsed.proposals[i], req, k);
      taken.insert(c.id);
      out.drafts.push_back(std::move(c));
    } catch (const Error& e) {
      out.rejections.push_back({i, std::string(to_string(e.code())) + ": " + e.what()});
      --k;
    }
  }
  return out;
}

std::string drafts_json(const std::vector<Condition>& drafts) {
  json arr = json::array();
  for (const auto& c : drafts) arr.push_back(to_json(c));
  return arr.dump(2) + "\n";
}

}  // namespace stargen
