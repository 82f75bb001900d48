#pragma once

// Evaluation campaigns: configuration, the append-only trial log, replay,
// and the (model x condition) progress grid.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stargen/manifest.hpp"
#include "stargen/util.hpp"

namespace stargen {

enum class Outcome { Success, Failure, Irrecoverable, Timeout };

std::string_view to_string(Outcome o);
/// Accepts the lowercase wire names ("success", "failure", ...).
std::optional<Outcome> parse_outcome(std::string_view s);

enum class ScopeKind { Base, Condition, Composition };

std::string_view to_string(ScopeKind k);
std::optional<ScopeKind> parse_scope_kind(std::string_view s);

struct ScopeEntry {
  std::string id;
  ScopeKind kind;

  friend bool operator==(const ScopeEntry&, const ScopeEntry&) = default;
};

struct CellRef {
  std::string model;
  std::string condition;

  friend bool operator==(const CellRef&, const CellRef&) = default;
  friend auto operator<=>(const CellRef&, const CellRef&) = default;
};

struct CampaignConfig {
  std::string id;
  std::string manifest_name;
  std::string manifest_sha256;
  std::vector<std::string> models;
  std::uint32_t trials_per_condition = 5;
  std::uint32_t max_steps = 100;
  /// Conditions evaluated in this campaign, in report order.
  std::vector<ScopeEntry> scope;
  /// Cells that are deliberately never run; they render as "--".
  std::vector<CellRef> exclusions;

  bool excluded(std::string_view model, std::string_view condition) const;
  const ScopeEntry* find_scope(std::string_view id) const noexcept;

  friend bool operator==(const CampaignConfig&, const CampaignConfig&) = default;
};

/// Base tasks followed by atomic conditions, in manifest order.
std::vector<ScopeEntry> default_scope(const BenchmarkManifest& manifest);
/// All compositions, in manifest order.
std::vector<ScopeEntry> composition_scope(const BenchmarkManifest& manifest);

/// Fills the manifest reference and, if `scope` is empty, the default scope.
CampaignConfig make_config(std::string id, const BenchmarkManifest& manifest,
                           std::vector<std::string> models, std::vector<ScopeEntry> scope = {});

struct TrialRecord {
  std::uint64_t seq = 0;
  std::string campaign;
  std::string model;
  std::string condition;
  Outcome outcome = Outcome::Failure;
  std::uint32_t steps = 0;
  Timestamp timestamp{};
  std::string note;
  /// Recorded beyond the cell quota; excluded from default aggregates.
  bool overflow = false;
  std::optional<std::string> idempotency_key;

  bool success() const noexcept { return outcome == Outcome::Success; }
};

/// What an evaluator submits; seq and overflow tagging are assigned by the log.
struct TrialInput {
  std::string model;
  std::string condition;
  Outcome outcome = Outcome::Failure;
  std::uint32_t steps = 0;
  std::string note;
  /// Permission to record past the quota.
  bool allow_overflow = false;
  std::optional<std::string> idempotency_key;
  /// Defaults to the current time.
  std::optional<Timestamp> timestamp;
};

enum class CellStatus { NotEvaluated, Pending, Partial, Complete };

std::string_view to_string(CellStatus s);

struct ProgressCell {
  std::string model;
  std::string condition;
  ScopeKind kind = ScopeKind::Condition;
  std::uint32_t done = 0;  // in-quota trials
  std::uint32_t required = 0;
  std::uint32_t successes = 0;  // in-quota successes
  std::uint32_t overflow = 0;
  CellStatus status = CellStatus::Pending;

  /// "--" for not-evaluated cells, otherwise "done/required".
  std::string render() const;
};

class CampaignState {
public:
  CampaignState() = default;
  explicit CampaignState(CampaignConfig config);

  const CampaignConfig& config() const noexcept { return config_; }
  const std::vector<TrialRecord>& trials() const noexcept { return trials_; }

  /// Grid in condition-major, model-minor order.
  const std::vector<ProgressCell>& progress() const noexcept { return cells_; }
  /// nullptr when (model, condition) is not part of the grid.
  const ProgressCell* cell(std::string_view model, std::string_view condition) const;

  /// Incomplete, evaluable cells in condition-major, model-minor order.
  std::vector<ProgressCell> queue() const;

  std::uint64_t trial_count() const noexcept { return trials_.size(); }
  std::uint64_t required_total() const noexcept;
  bool complete() const noexcept;

  std::uint64_t last_seq() const noexcept { return last_seq_; }
  Timestamp last_timestamp() const noexcept { return last_timestamp_; }

  const TrialRecord* find_idempotent(std::string_view key) const;

  /// Compact, sorted-key JSON of config, grid and trials, without timestamps.
  /// Two states built from the same event order are byte-identical.
  std::string canonical_json() const;

  /// Checks the protocol rules for `input`; throws Error on violation and
  /// returns whether the trial lands beyond the quota.
  bool check(const TrialInput& input) const;
  void apply(TrialRecord record);
  void note_created(std::uint64_t seq, Timestamp t);

private:
  ProgressCell* mutable_cell(std::string_view model, std::string_view condition);

  CampaignConfig config_;
  std::vector<TrialRecord> trials_;
  std::vector<ProgressCell> cells_;
  std::map<std::string, std::size_t, std::less<>> index_;  // "model\x1f condition" -> cell
  std::map<std::string, std::size_t, std::less<>> idempotency_;
  std::uint64_t last_seq_ = 0;
  Timestamp last_timestamp_{};
};

/// An event log held in memory: the JSON lines plus the state they replay to.
class CampaignLog {
public:
  /// Parses and verifies log bytes. Throws Error(MissingCreationEvent) for an
  /// empty log or one that does not open with a creation event, and
  /// CorruptLineError(n) for a sequence gap, checksum mismatch, malformed
  /// record, or a trial that breaks the protocol.
  static CampaignLog replay(std::string_view bytes);

  const CampaignState& state() const noexcept { return state_; }
  const std::vector<std::string>& lines() const noexcept { return lines_; }
  /// Lines joined with '\n', trailing newline included.
  std::string bytes() const;

  struct Prepared {
    TrialRecord record;
    std::string line;
  };
  /// Validates `input` against the current state and renders the next event
  /// without changing the log.
  Prepared prepare(const TrialInput& input) const;
  void commit(Prepared prepared);

private:
  friend CampaignLog create_campaign(const CampaignConfig&, const BenchmarkManifest&,
                                     std::optional<Timestamp>);
  CampaignState state_;
  std::vector<std::string> lines_;
};

/// Validates `config` against `manifest` and returns a log holding only the
/// creation event. Throws Error(ManifestHashMismatch) or Error(InvalidConfig).
CampaignLog create_campaign(const CampaignConfig& config, const BenchmarkManifest& manifest,
                            std::optional<Timestamp> now = std::nullopt);

/// Appends one trial. An input whose idempotency key was already recorded
/// returns the earlier record and leaves the log unchanged. Throws
/// Error(UnknownModel|UnknownCondition|CellExcluded|ProtocolViolation|
/// QuotaExceeded).
TrialRecord record_trial(CampaignLog& log, const TrialInput& input);

CampaignState replay(std::string_view bytes);

/// Exclusive advisory lock on `<id>.lock`; throws Error(LockFailed) if
/// another holder exists.
class FileLock {
public:
  explicit FileLock(const std::filesystem::path& path);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  FileLock(FileLock&& other) noexcept;
  FileLock& operator=(FileLock&&) = delete;

private:
  int fd_ = -1;
};

/// Sole writer of one campaign log file. Holds the lock for its lifetime.
class CampaignWriter {
public:
  CampaignWriter(std::filesystem::path log_path, std::filesystem::path lock_path);

  const CampaignState& state() const noexcept { return log_.state(); }
  /// Validates, appends and fsyncs one trial event.
  TrialRecord append(const TrialInput& input);

private:
  FileLock lock_;
  std::filesystem::path path_;
  CampaignLog log_;
};

/// A directory of `<id>.stargen.log` files.
class CampaignDirectory {
public:
  explicit CampaignDirectory(std::filesystem::path dir);

  const std::filesystem::path& path() const noexcept { return dir_; }
  std::filesystem::path log_path(std::string_view id) const;
  std::filesystem::path lock_path(std::string_view id) const;

  /// Campaign ids, sorted.
  std::vector<std::string> list() const;
  bool exists(std::string_view id) const;

  /// Throws Error(DuplicateCampaignId) if the id is taken.
  CampaignState create(const CampaignConfig& config, const BenchmarkManifest& manifest,
                       std::optional<Timestamp> now = std::nullopt);
  /// Throws Error(UnknownCampaign).
  CampaignState load(std::string_view id) const;
  CampaignWriter open_writer(std::string_view id) const;

private:
  std::filesystem::path dir_;
};

/// Campaign ids are used as file names: [A-Za-z0-9][A-Za-z0-9_.-]*.
bool valid_campaign_id(std::string_view id);

}  // namespace stargen
