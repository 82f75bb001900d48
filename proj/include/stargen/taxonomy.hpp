#pragma once

// Category algebra, the axis registry, and categorization of perturbation
// deltas relative to a base task.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stargen/error.hpp"

namespace stargen {

/// Canonical order: Visual < Semantic < Behavioral.
enum class Modality : std::uint8_t { Visual = 0, Semantic = 1, Behavioral = 2 };

inline constexpr std::array<Modality, 3> kModalities{Modality::Visual, Modality::Semantic,
                                                     Modality::Behavioral};

std::string_view to_string(Modality m);

/// A non-empty set of modalities. Exactly seven values exist.
class Category {
public:
  /// Throws Error(InvalidDelta) on an empty set.
  static Category of(std::initializer_list<Modality> members);
  /// Parses a canonical label ("V", "SB", "VSB", ...). Letters must be in
  /// canonical order.
  static std::optional<Category> from_label(std::string_view label);
  static std::optional<Category> from_bits(std::uint8_t bits);

  /// All seven categories in canonical report order: V, S, B, VB, SB, VS, VSB.
  static const std::array<Category, 7>& all();

  bool contains(Modality m) const noexcept { return bits_ & bit(m); }
  std::uint8_t bits() const noexcept { return bits_; }
  std::size_t size() const noexcept;
  std::vector<Modality> members() const;

  /// First letters in canonical modality order, e.g. "VSB".
  std::string label() const;
  /// "{V,S,B}" form used in diagnostics.
  std::string set_string() const;
  /// Position in all(); gives the report ordering.
  std::size_t rank() const noexcept;

  Category operator|(Category other) const noexcept { return Category(bits_ | other.bits_); }

  friend bool operator==(Category, Category) = default;
  friend bool operator<(Category a, Category b) noexcept { return a.rank() < b.rank(); }

private:
  explicit Category(std::uint8_t bits) noexcept : bits_(bits) {}
  static constexpr std::uint8_t bit(Modality m) noexcept {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(m));
  }

  std::uint8_t bits_;
};

/// Set union; commutative, associative, idempotent. Throws
/// std::invalid_argument on an empty list.
Category compose(std::span<const Category> categories);

struct AxisDescriptor {
  std::string id;  // e.g. "S-PROP"
  std::string name;
  Category category;
  std::string description;
  std::vector<std::string> example_factors;
  bool canonical = true;

  /// Letters before the first hyphen.
  std::string_view prefix() const;
};

struct RegistryReport {
  std::map<std::string, std::size_t> counts_by_label;  // keyed by category label
  std::size_t total = 0;
  std::size_t canonical = 0;
  std::size_t categories = 0;
  std::vector<std::string> custom_axes;
};

/// Immutable axis registry. The canonical registry is built once; custom
/// axes are added by copying into a new registry.
class AxisRegistry {
public:
  static const AxisRegistry& canonical();

  /// Returns a copy with `axis` appended and flagged non-canonical.
  /// Duplicate ids are rejected with Error(DuplicateId); prefix/category
  /// consistency is checked by selfcheck(), not here.
  AxisRegistry with_custom(AxisDescriptor axis) const;

  /// Throws Error(UnknownAxis).
  const AxisDescriptor& lookup(std::string_view id) const;
  const AxisDescriptor* find(std::string_view id) const noexcept;

  const std::vector<AxisDescriptor>& axes() const noexcept { return axes_; }
  std::size_t canonical_count() const noexcept;

  /// Verifies the canonical 22-axis / 7-category structure and that every
  /// axis prefix equals its category label. Throws Error(RegistryCorrupt).
  RegistryReport selfcheck() const;

private:
  AxisRegistry() = default;
  std::vector<AxisDescriptor> axes_;
};

inline constexpr std::size_t kCanonicalAxisCount = 22;
inline constexpr std::size_t kCategoryCount = 7;

/// Convenience for the canonical registry.
const AxisDescriptor& axis_lookup(std::string_view id);
RegistryReport registry_selfcheck(const AxisRegistry& registry = AxisRegistry::canonical());

struct SceneObject {
  std::string name;
  std::map<std::string, std::string> properties;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

struct SceneDescriptor {
  std::string image;
  std::vector<SceneObject> objects;

  friend bool operator==(const SceneDescriptor&, const SceneDescriptor&) = default;
};

struct BaseTask {
  std::string id;
  std::string instruction;
  SceneDescriptor scene;
  std::string behavior_signature;
  std::string success_criterion;
  std::uint32_t demo_count = 0;

  friend bool operator==(const BaseTask&, const BaseTask&) = default;
};

/// Returns diagnostics for a malformed base task (empty instruction or
/// scene image reference).
std::vector<Diagnostic> check_base_task(const BaseTask& task);

struct ChangeNote {
  std::string description;

  friend bool operator==(const ChangeNote&, const ChangeNote&) = default;
};

/// What a perturbation changes. Behavioral change is attested, not derived.
struct PerturbationDelta {
  std::optional<ChangeNote> visual;
  std::optional<std::string> instruction;  // full replacement instruction
  std::optional<ChangeNote> behavioral;
  std::string factor;

  friend bool operator==(const PerturbationDelta&, const PerturbationDelta&) = default;
};

/// Derives the category of `delta` relative to `base`.
/// Throws Error(EmptyDelta) if no channel is present, Error(NoOpInstruction)
/// if the instruction normalizes to the base instruction, Error(InvalidDelta)
/// for an empty/multi-part factor or empty change description.
Category categorize(const BaseTask& base, const PerturbationDelta& delta);

struct Condition {
  std::string id;
  std::string base_task;
  std::string axis;
  PerturbationDelta delta;
  std::string notes;
  std::string scene_image;

  friend bool operator==(const Condition&, const Condition&) = default;
};

struct CompositionPart {
  std::string axis;
  PerturbationDelta delta;

  friend bool operator==(const CompositionPart&, const CompositionPart&) = default;
};

struct CompositeCondition {
  std::string id;
  std::string base_task;
  std::vector<CompositionPart> parts;
  std::optional<std::string> effective_instruction;
  std::string notes;
  std::string scene_image;

  /// "VB-POSE+VB-ISC": part axes joined in declaration order.
  std::string signature() const;

  friend bool operator==(const CompositeCondition&, const CompositeCondition&) = default;
};

/// Union of per-part categories. Propagates categorize errors.
Category derived_category(const BaseTask& base, const CompositeCondition& composite);

/// std::nullopt when the condition is consistent with its axis. Otherwise a
/// CategoryMismatch (message "expected {V} got {S}"), UnknownAxis, or the
/// categorize error, with the condition id as subject.
std::optional<Diagnostic> validate_condition(const AxisRegistry& registry, const BaseTask& base,
                                             const Condition& condition);

/// Per-part validation plus composite rules: at least two parts, parts
/// pairwise distinct by axis or factor, effective_instruction present only
/// when some part changes the instruction and never a no-op.
std::vector<Diagnostic> validate_composite(const AxisRegistry& registry, const BaseTask& base,
                                           const CompositeCondition& composite);

}  // namespace stargen
