#pragma once

// Success-rate aggregation over replayed campaign state, and report export.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stargen/campaign.hpp"
#include "stargen/manifest.hpp"

namespace stargen {

struct RateCell {
  std::uint64_t successes = 0;
  std::uint64_t total = 0;

  /// Only meaningful when total > 0.
  double rate() const noexcept { return total ? static_cast<double>(successes) / total : 0.0; }
  RateCell& operator+=(const RateCell& o) noexcept {
    successes += o.successes;
    total += o.total;
    return *this;
  }
  friend bool operator==(const RateCell&, const RateCell&) = default;
};

/// One aggregated value. `partial` marks a value that includes a cell with
/// fewer than the required trials.
struct RateEntry {
  std::string key;
  RateCell cell;
  bool partial = false;
};

/// Pseudo-axis under which base-task trials pool.
inline constexpr std::string_view kInDistributionKey = "ID";
inline constexpr std::string_view kOverallKey = "overall";

struct ModelRates {
  std::string model;
  /// Scope order; never-attempted cells omitted.
  std::vector<RateEntry> conditions;
  /// "ID" first, then registry order. Atomic conditions only.
  std::vector<RateEntry> axes;
  /// Canonical category order (V, S, B, VB, SB, VS, VSB), keyed by label.
  std::vector<RateEntry> categories;
  /// Per composition id, scope order.
  std::vector<RateEntry> compositions;
  /// Per composition signature ("VB-POSE+VB-ISC"), first-seen order.
  std::vector<RateEntry> composition_groups;
  /// Sum over all composed trials; absent when none were run.
  std::optional<RateEntry> composition_overall;

  const RateEntry* find(std::vector<RateEntry> ModelRates::*section, std::string_view key) const;
};

struct AggregateReport {
  std::string campaign_id;
  std::string manifest_name;
  std::string manifest_sha256;
  /// Timestamp of the last log event, so a report is a pure function of the log.
  std::string generated_at;
  std::uint64_t trial_count = 0;
  std::uint64_t overflow_count = 0;
  /// Config order.
  std::vector<ModelRates> models;

  const ModelRates* model(std::string_view id) const;
};

/// Counts Success outcomes over non-overflow trials. Throws
/// Error(ManifestHashMismatch) when `manifest` is not the one the campaign
/// was created against.
AggregateReport compute_report(const CampaignState& state, const BenchmarkManifest& manifest,
                               const AxisRegistry& registry = AxisRegistry::canonical());

enum class ReportGroup { Condition, Axis, Category, Composition };

std::string_view to_string(ReportGroup g);
std::optional<ReportGroup> parse_group(std::string_view s);

/// Flat view used by every export: one record per (model, key).
struct ReportRow {
  std::string model;
  /// "condition", "axis", "category", "composition", "pair" or "overall".
  std::string group;
  std::string key;
  RateCell cell;
  bool partial = false;

  /// CSV key with its group prefix: "cond:carrot_base", "axis:ID", "cat:VB",
  /// "comp:<id>", "pair:VB-POSE+VB-ISC", "overall".
  std::string prefixed_key() const;
};

/// Rows for one group (all groups when nullopt), model-major in config order.
std::vector<ReportRow> report_rows(const AggregateReport& report,
                                   std::optional<ReportGroup> group = std::nullopt);

enum class ReportFormat { Markdown, Csv, Chart };

/// Accepts "md"/"markdown", "csv", "chart"/"chart-data"; throws
/// Error(UnsupportedFormat) otherwise.
ReportFormat parse_format(std::string_view s);

/// Deterministic bytes.
std::string export_report(const AggregateReport& report, ReportFormat format,
                          std::optional<ReportGroup> group = std::nullopt);
std::string export_report(const AggregateReport& report, std::string_view format,
                          std::optional<ReportGroup> group = std::nullopt);

}  // namespace stargen
