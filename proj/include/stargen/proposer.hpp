#pragma once

// VLM-assisted perturbation proposals: prompt construction, backends,
// response parsing, and conversion into draft manifest conditions.

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stargen/manifest.hpp"

namespace stargen {

/// Axes with dedicated prompts. Others need `experimental`; behavioral-only
/// axes cannot be proposed at all (neither response field can express them).
inline constexpr std::array<std::string_view, 5> kSupportedAxes{"V-OBJ", "S-PROP", "VB-POSE",
                                                                "SB-VRB", "VSB-NOBJ"};
bool axis_supported(std::string_view axis_id);

struct ProposalRequest {
  BaseTask base_task;
  AxisDescriptor axis;
  unsigned count = 3;
  std::string image;  // raw bytes; may be empty
  std::string media_type = "image/jpeg";
  bool experimental = false;
};

/// Looks up base task and axis. Throws Error(ReferenceError|UnknownAxis).
ProposalRequest make_request(const BenchmarkManifest& manifest, std::string_view base_task,
                             std::string_view axis, const AxisRegistry& registry = AxisRegistry::canonical());

struct ResponseSchema {
  bool visual = false;    // visualChange required
  bool language = false;  // languageChange required

  /// Array-of-objects schema descriptor in the VLM's structured-output
  /// dialect; only the required fields are declared.
  std::string json() const;
};

ResponseSchema schema_for(const AxisDescriptor& axis);

struct Prompt {
  std::string text;
  ResponseSchema schema;
};

/// Throws Error(UnsupportedAxis) for an unsupported axis without the
/// experimental flag, for behavioral-only axes, and for count == 0.
Prompt build_prompt(const ProposalRequest& request);

struct Proposal {
  std::optional<std::string> visual_change;
  std::optional<std::string> language_change;

  friend bool operator==(const Proposal&, const Proposal&) = default;
};

struct Rejection {
  std::size_t index;
  std::string reason;
};

struct ParsedProposals {
  std::vector<Proposal> proposals;
  std::vector<Rejection> rejections;
};

/// Throws Error(SchemaError) unless `body` is a JSON array of objects, and
/// Error(AllRejected) when no item survives per-axis field checks.
ParsedProposals parse_proposals(std::string_view body, const AxisDescriptor& axis);

/// Draft condition `<base>_<axis>_<k>`. Behavioral change is synthesized as
/// "implied by axis <id>" when the axis category includes B.
Condition proposal_to_condition(const Proposal& proposal, const ProposalRequest& request,
                                std::size_t k);

// ---- backends -----------------------------------------------------------------

struct BackendConfig {
  std::string backend = "mock";  // mock | http
  std::string endpoint;          // http://host:port/path
  std::string model;
  /// Name of the environment variable holding the API credential.
  std::string credential_env = "STARGEN_API_KEY";
  std::filesystem::path mock_dir;
  std::chrono::milliseconds timeout{30000};
  unsigned attempts = 3;
  std::chrono::milliseconds backoff{1000};
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

/// Reads `key = value` lines (comments with '#', [section] headers ignored,
/// values optionally double-quoted) and then applies `STARGEN_<KEY>`
/// environment overrides. Throws Error(InvalidConfig).
BackendConfig load_backend_config(const std::optional<std::filesystem::path>& file,
                                  const EnvLookup& env = process_env());
BackendConfig parse_backend_config(std::string_view text, const EnvLookup& env = process_env());

class VlmBackend {
public:
  virtual ~VlmBackend() = default;
  /// Raw response body. Throws Error(Timeout|AuthFailure|TransportError).
  virtual std::string request(const ProposalRequest& request, const Prompt& prompt) = 0;
};

/// Serves `<axis>__<base_task_id>.json` from a directory.
class MockBackend : public VlmBackend {
public:
  explicit MockBackend(std::filesystem::path dir);
  std::string request(const ProposalRequest& request, const Prompt& prompt) override;

private:
  std::filesystem::path dir_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// One POST per attempt carrying prompt, inline base64 image and schema.
/// Retries connection failures, timeouts, 429 and 5xx with delay
/// backoff * 2^k; 401/403 fail immediately with AuthFailure.
class HttpBackend : public VlmBackend {
public:
  HttpBackend(BackendConfig config, std::optional<std::string> credential, Sleeper sleeper = {});
  std::string request(const ProposalRequest& request, const Prompt& prompt) override;

  /// Request body for one call (exposed for tests).
  static std::string request_body(const BackendConfig& config, const ProposalRequest& request,
                                  const Prompt& prompt);

private:
  BackendConfig config_;
  std::optional<std::string> credential_;
  Sleeper sleep_;
};

std::unique_ptr<VlmBackend> make_backend(const BackendConfig& config,
                                         const EnvLookup& env = process_env());

/// build_prompt + backend call.
std::string request_proposals(const ProposalRequest& request, VlmBackend& backend);

struct DraftSet {
  std::vector<Condition> drafts;
  std::vector<Rejection> rejections;
};

/// Full pipeline: prompt, call, parse, convert. Draft ids are numbered from 1
/// and skip ids already present in `manifest`.
DraftSet propose(const BenchmarkManifest& manifest, const ProposalRequest& request,
                 VlmBackend& backend);

/// Drafts as a JSON array of condition objects (manifest schema), 2-space
/// indent, trailing newline.
std::string drafts_json(const std::vector<Condition>& drafts);

}  // namespace stargen
