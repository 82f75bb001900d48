#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "stargen/taxonomy.hpp"

namespace stargen {

struct BenchmarkManifest {
  std::string name;
  std::vector<BaseTask> base_tasks;
  std::vector<Condition> conditions;
  std::vector<CompositeCondition> compositions;

  const BaseTask* find_base_task(std::string_view id) const noexcept;
  const Condition* find_condition(std::string_view id) const noexcept;
  const CompositeCondition* find_composition(std::string_view id) const noexcept;

  friend bool operator==(const BenchmarkManifest&, const BenchmarkManifest&) = default;
};

/// Parses and fully validates a manifest document. Throws ValidationError
/// carrying every SyntaxError / SchemaError / ReferenceError / DuplicateId
/// and taxonomy finding, each tagged with the offending id and a JSON
/// pointer.
BenchmarkManifest parse_manifest(std::string_view document,
                                 const AxisRegistry& registry = AxisRegistry::canonical());

/// Structural checks only (ids, references, taxonomy). Empty when valid.
std::vector<Diagnostic> validate_manifest(const BenchmarkManifest& manifest,
                                          const AxisRegistry& registry = AxisRegistry::canonical());

/// Canonical form: sorted keys, 2-space indent, lists in declaration order,
/// absent optionals omitted, UTF-8, trailing newline.
std::string serialize_manifest(const BenchmarkManifest& manifest);

/// SHA-256 (hex) of the canonical serialization.
std::string manifest_hash(const BenchmarkManifest& manifest);

BenchmarkManifest load_manifest(const std::string& path,
                                const AxisRegistry& registry = AxisRegistry::canonical());

struct CoverageMatrix {
  std::string label;
  /// Canonical axes present, in registry order.
  std::vector<std::string> axes_present;
  /// Non-canonical axes used; never counted against the 22.
  std::vector<std::string> custom_axes;
  std::set<Category> categories_present;

  std::size_t axes_count() const noexcept { return axes_present.size(); }
  std::size_t categories_count() const noexcept { return categories_present.size(); }
  bool has(std::string_view axis) const;

  /// "axes: 13/22, categories: 5/7"
  std::string summary() const;
};

CoverageMatrix coverage_matrix(const BenchmarkManifest& manifest,
                               const AxisRegistry& registry = AxisRegistry::canonical());

/// Builds a matrix from a plain axis list (e.g. a prior-work row).
CoverageMatrix coverage_from_axes(std::string label, const std::vector<std::string>& axes,
                                  const AxisRegistry& registry = AxisRegistry::canonical());

struct CoverageDiff {
  std::vector<std::string> added;    // in a, not in b
  std::vector<std::string> removed;  // in b, not in a
  /// Markdown checkmark table over all 22 canonical axes, one row per side.
  std::string table;

  bool empty() const noexcept { return added.empty() && removed.empty(); }
};

CoverageDiff diff_coverage(const CoverageMatrix& a, const CoverageMatrix& b);

/// Loads the encoded prior-work rows ({"columns": [...], "rows": [{name,
/// group, axes}]}).
std::vector<CoverageMatrix> load_coverage_rows(std::string_view document);

}  // namespace stargen
