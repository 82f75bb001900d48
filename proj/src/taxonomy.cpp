#include "stargen/taxonomy.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <stdexcept>
#include <utility>

#include "stargen/util.hpp"

namespace stargen {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Visual: return "Visual";
    case Modality::Semantic: return "Semantic";
    case Modality::Behavioral: return "Behavioral";
  }
  return "?";
}

// ---- Category -------------------------------------------------------------

namespace {
constexpr char kLetters[] = {'V', 'S', 'B'};
// bits: V=1, S=2, B=4; report order V, S, B, VB, SB, VS, VSB
constexpr std::array<std::uint8_t, 7> kOrder{1, 2, 4, 5, 6, 3, 7};
}  // namespace

Category Category::of(std::initializer_list<Modality> members) {
  std::uint8_t bits = 0;
  for (Modality m : members) bits |= bit(m);
  if (bits == 0) throw Error(ErrorCode::InvalidDelta, "a category needs at least one modality");
  return Category(bits);
}

std::optional<Category> Category::from_bits(std::uint8_t bits) {
  if (bits == 0 || bits > 7) return std::nullopt;
  return Category(bits);
}

std::optional<Category> Category::from_label(std::string_view label) {
  if (label.empty()) return std::nullopt;
  std::uint8_t bits = 0;
  int last = -1;
  for (char c : label) {
    int idx = -1;
    for (int i = 0; i < 3; ++i)
      if (kLetters[i] == c) idx = i;
    if (idx <= last) return std::nullopt;  // unknown letter, repeat, or out of order
    last = idx;
    bits |= static_cast<std::uint8_t>(1u << idx);
  }
  return Category(bits);
}

const std::array<Category, 7>& Category::all() {
  static const std::array<Category, 7> values = [] {
    std::array<Category, 7> out{Category(1), Category(1), Category(1), Category(1),
                                Category(1), Category(1), Category(1)};
    for (std::size_t i = 0; i < kOrder.size(); ++i) out[i] = Category(kOrder[i]);
    return out;
  }();
  return values;
}

std::size_t Category::size() const noexcept { return std::popcount(bits_); }

std::vector<Modality> Category::members() const {
  std::vector<Modality> out;
  for (Modality m : kModalities)
    if (contains(m)) out.push_back(m);
  return out;
}

std::string Category::label() const {
  std::string out;
  for (int i = 0; i < 3; ++i)
    if (bits_ & (1u << i)) out.push_back(kLetters[i]);
  return out;
}

std::string Category::set_string() const {
  std::string out = "{";
  for (char c : label()) {
    if (out.size() > 1) out.push_back(',');
    out.push_back(c);
  }
  out.push_back('}');
  return out;
}

std::size_t Category::rank() const noexcept {
  for (std::size_t i = 0; i < kOrder.size(); ++i)
    if (kOrder[i] == bits_) return i;
  return kOrder.size();
}

Category compose(std::span<const Category> categories) {
  if (categories.empty()) throw std::invalid_argument("compose: empty category list");
  Category acc = categories.front();
  for (Category c : categories.subspan(1)) acc = acc | c;
  return acc;
}

// ---- Axis registry --------------------------------------------------------

std::string_view AxisDescriptor::prefix() const {
  std::string_view v = id;
  return v.substr(0, v.find('-'));
}

namespace {

AxisDescriptor axis(std::string id, std::string name, std::string_view label,
                    std::string description, std::vector<std::string> factors) {
  return AxisDescriptor{std::move(id), std::move(name), *Category::from_label(label),
                        std::move(description), std::move(factors), true};
}

std::vector<AxisDescriptor> canonical_axes() {
  return {
      axis("V-AUG", "Image Augmentations", "V",
           "Realistic generic augmentations in image space.",
           {"lighting", "image blur", "image contrast"}),
      axis("V-SC", "Visual Scene", "V",
           "Visual changes to scene elements that do not affect behavior.",
           {"surface color", "distractor object appearance", "distractor object placement",
            "textures"}),
      axis("V-OBJ", "Visual Task Object", "V",
           "Visual changes to task-relevant objects that do not affect behavior.",
           {"manipulated object color", "other object color"}),
      axis("V-VIEW", "Viewpoint", "V", "Changes to camera viewpoints.",
           {"camera pose", "partial occlusion"}),
      axis("S-PROP", "Object Properties", "S",
           "Changes to instruction that require additional knowledge about physical properties "
           "of a task-relevant object.",
           {"referencing objects based on color", "referencing objects based on mass",
            "referencing objects based on size"}),
      axis("S-LANG", "Language Rephrase", "S",
           "Simple rephrasing of the instruction that does not affect underlying behavior.",
           {"verb synonyms", "removing articles"}),
      axis("S-MO", "Multi-Object Referencing", "S",
           "Changes to instruction that involve references to spatial relationships between "
           "multiple objects when defining a task, without changing behavior.",
           {"left or right of an object", "in an object"}),
      axis("S-AFF", "Human Affordances", "S",
           "Changes to instruction that require knowledge of human affordances, or how humans "
           "interact with an object.",
           {"human comfort", "object use cases"}),
      axis("S-INT", "Internet Knowledge", "S",
           "Changes to instruction that require external knowledge that can be found on the "
           "internet.",
           {"famous nouns", "properties of common objects"}),
      axis("B-HOBJ", "Hidden Object", "B",
           "Unobserved changes to task-relevant objects that affect behavior.",
           {"task-relevant object mass", "friction", "fragility"}),
      axis("B-HSC", "Hidden Scene", "B",
           "Unobserved changes to scene elements that affect behavior.",
           {"surface friction", "temperature"}),
      axis("VB-POSE", "Object Poses", "VB", "Changes to task-relevant object poses in the scene.",
           {"manipulated object pose", "other object pose"}),
      axis("VB-ISC", "Interacting Scene", "VB", "Changes to scene elements that affect behavior.",
           {"clutter", "surface height"}),
      axis("VB-MOBJ", "Morphed Objects", "VB",
           "Changes to task-relevant objects that affect their geometry.",
           {"manipulated object size", "manipulated object shape"}),
      axis("VB-ROB", "Robot Embodiment", "VB",
           "Changes to the robot embodiment that affect behavior.",
           {"new robot arm", "new gripper or hand"}),
      axis("VB-SYM", "Symmetry", "VB",
           "Specific to bimanual embodiments, symmetry captures changes that require the robot "
           "to mirror behavior across arms.",
           {"different arm, same absolute motion", "different arm, flipped absolute motion"}),
      axis("SB-ADV", "Motion Adverbs", "SB",
           "Changes to instruction involving motion descriptors that affect behavior.",
           {"speed"}),
      axis("SB-SMO", "Spatial Multi-Object", "SB",
           "Changes to instruction that involve references to spatial relationships between "
           "multiple objects when defining a task, that affect behavior.",
           {"changing spatial references relative to the same object"}),
      axis("SB-NOUN", "Noun Grounding", "SB",
           "Replacing nouns with other nouns already in the scene.",
           {"other manipulated object"}),
      axis("SB-VRB", "Action Verbs", "SB", "Changes to action verbs that require new behavior.",
           {"new action to perform on task-relevant object"}),
      axis("VS-PROP", "New Object Property", "VS",
           "Changes to task-relevant object properties that affect object appearance and "
           "language instruction, but not behavior.",
           {"new object color when base language instruction refers to the object color"}),
      axis("VSB-NOBJ", "New Object", "VSB",
           "Changes to task-relevant objects to new objects with different visual appearances, "
           "semantic descriptions, and physical characteristics.",
           {"new manipulated object"}),
  };
}

}  // namespace

const AxisRegistry& AxisRegistry::canonical() {
  static const AxisRegistry registry = [] {
    AxisRegistry r;
    r.axes_ = canonical_axes();
    return r;
  }();
  return registry;
}

AxisRegistry AxisRegistry::with_custom(AxisDescriptor axis) const {
  if (find(axis.id))
    throw Error(ErrorCode::DuplicateId, "axis id already registered", axis.id);
  AxisRegistry copy = *this;
  axis.canonical = false;
  copy.axes_.push_back(std::move(axis));
  return copy;
}

const AxisDescriptor* AxisRegistry::find(std::string_view id) const noexcept {
  for (const auto& a : axes_)
    if (a.id == id) return &a;
  return nullptr;
}

const AxisDescriptor& AxisRegistry::lookup(std::string_view id) const {
  if (const auto* a = find(id)) return *a;
  throw Error(ErrorCode::UnknownAxis, "no axis with id '" + std::string(id) + "'",
              std::string(id));
}

std::size_t AxisRegistry::canonical_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(axes_.begin(), axes_.end(), [](const auto& a) { return a.canonical; }));
}

RegistryReport AxisRegistry::selfcheck() const {
  RegistryReport report;
  for (Category c : Category::all()) report.counts_by_label[c.label()] = 0;

  std::set<std::uint8_t> canonical_categories;
  for (const auto& a : axes_) {
    if (a.prefix() != a.category.label())
      throw Error(ErrorCode::RegistryCorrupt,
                  "axis prefix '" + std::string(a.prefix()) + "' does not match category " +
                      a.category.set_string(),
                  a.id);
    ++report.counts_by_label[a.category.label()];
    ++report.total;
    if (a.canonical) {
      ++report.canonical;
      canonical_categories.insert(a.category.bits());
    } else {
      report.custom_axes.push_back(a.id);
    }
  }
  report.categories = canonical_categories.size();
  if (report.canonical != kCanonicalAxisCount)
    throw Error(ErrorCode::RegistryCorrupt,
                "expected 22 canonical axes, found " + std::to_string(report.canonical));
  if (report.categories != kCategoryCount)
    throw Error(ErrorCode::RegistryCorrupt,
                "canonical axes cover " + std::to_string(report.categories) + " of 7 categories");
  return report;
}

const AxisDescriptor& axis_lookup(std::string_view id) {
  return AxisRegistry::canonical().lookup(id);
}

RegistryReport registry_selfcheck(const AxisRegistry& registry) { return registry.selfcheck(); }

// ---- Categorization -------------------------------------------------------

std::vector<Diagnostic> check_base_task(const BaseTask& task) {
  std::vector<Diagnostic> out;
  if (normalize_whitespace(task.instruction).empty())
    out.push_back({ErrorCode::InvalidBaseTask, task.id, "", "instruction is empty"});
  if (normalize_whitespace(task.scene.image).empty())
    out.push_back({ErrorCode::InvalidBaseTask, task.id, "", "scene image reference is empty"});
  return out;
}

namespace {

void check_factor(const std::string& factor) {
  std::string norm = normalize_whitespace(factor);
  if (norm.empty()) throw Error(ErrorCode::InvalidDelta, "factor label is empty");
  if (norm.find_first_of("+,;") != std::string::npos)
    throw Error(ErrorCode::InvalidDelta,
                "factor '" + norm + "' names more than one change; use a composition");
}

}  // namespace

Category categorize(const BaseTask& base, const PerturbationDelta& delta) {
  if (!delta.visual && !delta.instruction && !delta.behavioral)
    throw Error(ErrorCode::EmptyDelta, "delta changes no channel");
  check_factor(delta.factor);
  if (delta.visual && normalize_whitespace(delta.visual->description).empty())
    throw Error(ErrorCode::InvalidDelta, "visual change has no description");
  if (delta.behavioral && normalize_whitespace(delta.behavioral->description).empty())
    throw Error(ErrorCode::InvalidDelta, "behavioral change has no description");

  std::uint8_t bits = 0;
  if (delta.visual) bits |= 1;
  if (delta.instruction) {
    if (normalize_whitespace(*delta.instruction) == normalize_whitespace(base.instruction))
      throw Error(ErrorCode::NoOpInstruction,
                  "instruction '" + normalize_whitespace(*delta.instruction) +
                      "' is the base instruction");
    bits |= 2;
  }
  if (delta.behavioral) bits |= 4;
  return *Category::from_bits(bits);
}

std::string CompositeCondition::signature() const {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back('+');
    out += p.axis;
  }
  return out;
}

Category derived_category(const BaseTask& base, const CompositeCondition& composite) {
  if (composite.parts.empty())
    throw Error(ErrorCode::CompositionError, "composition has no parts", composite.id);
  std::vector<Category> cats;
  cats.reserve(composite.parts.size());
  for (const auto& p : composite.parts) cats.push_back(categorize(base, p.delta));
  return compose(cats);
}

namespace {

std::optional<Diagnostic> check_against_axis(const AxisRegistry& registry, const BaseTask& base,
                                             const std::string& subject,
                                             const std::string& axis_id,
                                             const PerturbationDelta& delta) {
  const AxisDescriptor* axis = registry.find(axis_id);
  if (!axis)
    return Diagnostic{ErrorCode::UnknownAxis, subject, "", "no axis with id '" + axis_id + "'"};
  try {
    Category derived = categorize(base, delta);
    if (derived != axis->category)
      return Diagnostic{ErrorCode::CategoryMismatch, subject, "",
                        "axis " + axis_id + ": expected " + axis->category.set_string() +
                            " got " + derived.set_string()};
  } catch (const Error& e) {
    return Diagnostic{e.code(), subject, "", e.diagnostic().message};
  }
  return std::nullopt;
}

}  // namespace

std::optional<Diagnostic> validate_condition(const AxisRegistry& registry, const BaseTask& base,
                                             const Condition& condition) {
  return check_against_axis(registry, base, condition.id, condition.axis, condition.delta);
}

std::vector<Diagnostic> validate_composite(const AxisRegistry& registry, const BaseTask& base,
                                           const CompositeCondition& composite) {
  std::vector<Diagnostic> out;
  if (composite.parts.size() < 2)
    out.push_back({ErrorCode::CompositionError, composite.id, "",
                   "a composition needs at least two parts"});
  bool any_semantic = false;
  for (std::size_t i = 0; i < composite.parts.size(); ++i) {
    const auto& part = composite.parts[i];
    if (auto d = check_against_axis(registry, base, composite.id, part.axis, part.delta)) {
      d->where = "parts/" + std::to_string(i);
      out.push_back(std::move(*d));
    }
    if (part.delta.instruction) any_semantic = true;
    for (std::size_t j = 0; j < i; ++j) {
      const auto& other = composite.parts[j];
      if (other.axis == part.axis &&
          normalize_whitespace(other.delta.factor) == normalize_whitespace(part.delta.factor))
        out.push_back({ErrorCode::CompositionError, composite.id, "parts/" + std::to_string(i),
                       "part repeats axis " + part.axis + " with the same factor"});
    }
  }
  if (composite.effective_instruction) {
    if (!any_semantic)
      out.push_back({ErrorCode::CompositionError, composite.id, "effective_instruction",
                     "effective_instruction given but no part changes the instruction"});
    else if (normalize_whitespace(*composite.effective_instruction) ==
             normalize_whitespace(base.instruction))
      out.push_back({ErrorCode::NoOpInstruction, composite.id, "effective_instruction",
                     "effective instruction equals the base instruction"});
  }
  return out;
}

}  // namespace stargen
