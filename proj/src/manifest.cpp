#include "stargen/manifest.hpp"

#include <algorithm>
#include <map>
#include "json.hpp"
#include <set>
#include <utility>

#include "stargen/json_io.hpp"
#include "stargen/util.hpp"

namespace stargen {

using nlohmann::json;

const BaseTask* BenchmarkManifest::find_base_task(std::string_view id) const noexcept {
  for (const auto& b : base_tasks)
    if (b.id == id) return &b;
  return nullptr;
}

const Condition* BenchmarkManifest::find_condition(std::string_view id) const noexcept {
  for (const auto& c : conditions)
    if (c.id == id) return &c;
  return nullptr;
}

const CompositeCondition* BenchmarkManifest::find_composition(std::string_view id) const noexcept {
  for (const auto& c : compositions)
    if (c.id == id) return &c;
  return nullptr;
}

// ---- reading --------------------------------------------------------------

namespace {

std::string type_name(const json& v) { return v.type_name(); }

/// Reads the fields of one JSON object, recording schema problems instead of
/// stopping at the first one.
class Fields {
public:
  Fields(const json& obj, std::string path, std::string subject, std::vector<Diagnostic>& out,
         std::initializer_list<std::string_view> allowed)
      : obj_(obj), path_(std::move(path)), subject_(std::move(subject)), out_(out) {
    if (!obj_.is_object()) {
      fail(path_, "expected object, got " + type_name(obj_));
      ok_ = false;
      return;
    }
    for (const auto& [key, value] : obj_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        fail(path_ + "/" + key, "unknown field '" + key + "'");
    }
  }

  bool ok() const noexcept { return ok_; }
  void set_subject(std::string s) { subject_ = std::move(s); }

  std::string str(std::string_view key) {
    const json* v = get(key, true);
    if (!v) return {};
    if (!v->is_string()) {
      fail(at(key), "expected string, got " + type_name(*v));
      return {};
    }
    return v->get<std::string>();
  }

  std::optional<std::string> opt_str(std::string_view key) {
    const json* v = get(key, false);
    if (!v) return std::nullopt;
    if (!v->is_string()) {
      fail(at(key), "expected string, got " + type_name(*v));
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::uint32_t count(std::string_view key) {
    const json* v = get(key, true);
    if (!v) return 0;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      fail(at(key), "expected nonnegative integer, got " + v->dump());
      return 0;
    }
    auto n = v->get<std::uint64_t>();
    if (n > 0xFFFFFFFFull) {
      fail(at(key), "integer out of range");
      return 0;
    }
    return static_cast<std::uint32_t>(n);
  }

  const json* object(std::string_view key, bool required) {
    const json* v = get(key, required);
    if (v && !v->is_object()) {
      fail(at(key), "expected object, got " + type_name(*v));
      return nullptr;
    }
    return v;
  }

  const json* array(std::string_view key, bool required) {
    const json* v = get(key, required);
    if (v && !v->is_array()) {
      fail(at(key), "expected array, got " + type_name(*v));
      return nullptr;
    }
    return v;
  }

  std::string at(std::string_view key) const { return path_ + "/" + std::string(key); }

  void fail(std::string where, std::string message) {
    out_.push_back({ErrorCode::SchemaError, subject_, std::move(where), std::move(message)});
  }

private:
  const json* get(std::string_view key, bool required) {
    if (!ok_) return nullptr;
    auto it = obj_.find(key);
    if (it == obj_.end()) {
      if (required) fail(at(key), "missing field '" + std::string(key) + "'");
      return nullptr;
    }
    return &*it;
  }

  const json& obj_;
  std::string path_;
  std::string subject_;
  std::vector<Diagnostic>& out_;
  bool ok_ = true;
};

std::string peek_id(const json& v) {
  if (v.is_object()) {
    auto it = v.find("id");
    if (it != v.end() && it->is_string()) return it->get<std::string>();
  }
  return {};
}

ChangeNote read_note(const json& v, const std::string& path, const std::string& subject,
                     std::vector<Diagnostic>& out) {
  Fields f(v, path, subject, out, {"description"});
  return ChangeNote{f.str("description")};
}

PerturbationDelta read_delta(const json& v, const std::string& path, const std::string& subject,
                             std::vector<Diagnostic>& out) {
  Fields f(v, path, subject, out, {"visual", "instruction", "behavioral", "factor"});
  PerturbationDelta d;
  if (!f.ok()) return d;
  if (const json* vis = f.object("visual", false)) d.visual = read_note(*vis, f.at("visual"), subject, out);
  d.instruction = f.opt_str("instruction");
  if (const json* beh = f.object("behavioral", false))
    d.behavioral = read_note(*beh, f.at("behavioral"), subject, out);
  d.factor = f.str("factor");
  return d;
}

BaseTask read_base_task(const json& v, const std::string& path, std::vector<Diagnostic>& out) {
  std::string subject = peek_id(v);
  Fields f(v, path, subject, out,
           {"id", "instruction", "scene", "behavior_signature", "success_criterion", "demo_count"});
  BaseTask t;
  if (!f.ok()) return t;
  t.id = f.str("id");
  t.instruction = f.str("instruction");
  if (const json* scene = f.object("scene", true)) {
    Fields sf(*scene, f.at("scene"), subject, out, {"image", "objects"});
    t.scene.image = sf.str("image");
    if (const json* objs = sf.array("objects", true)) {
      for (std::size_t i = 0; i < objs->size(); ++i) {
        std::string opath = sf.at("objects") + "/" + std::to_string(i);
        Fields of((*objs)[i], opath, subject, out, {"name", "properties"});
        SceneObject obj;
        obj.name = of.str("name");
        if (const json* props = of.object("properties", true)) {
          for (const auto& [k, pv] : props->items()) {
            if (!pv.is_string())
              of.fail(opath + "/properties/" + k, "expected string, got " + type_name(pv));
            else
              obj.properties.emplace(k, pv.get<std::string>());
          }
        }
        t.scene.objects.push_back(std::move(obj));
      }
    }
  }
  t.behavior_signature = f.str("behavior_signature");
  t.success_criterion = f.str("success_criterion");
  t.demo_count = f.count("demo_count");
  return t;
}

Condition read_condition(const json& v, const std::string& path, std::vector<Diagnostic>& out) {
  std::string subject = peek_id(v);
  Fields f(v, path, subject, out, {"id", "base_task", "axis", "delta", "notes", "scene_image"});
  Condition c;
  if (!f.ok()) return c;
  c.id = f.str("id");
  c.base_task = f.str("base_task");
  c.axis = f.str("axis");
  if (const json* d = f.object("delta", true)) c.delta = read_delta(*d, f.at("delta"), subject, out);
  c.notes = f.str("notes");
  c.scene_image = f.str("scene_image");
  return c;
}

CompositeCondition read_composition(const json& v, const std::string& path,
                                    std::vector<Diagnostic>& out) {
  std::string subject = peek_id(v);
  Fields f(v, path, subject, out,
           {"id", "base_task", "parts", "effective_instruction", "notes", "scene_image"});
  CompositeCondition c;
  if (!f.ok()) return c;
  c.id = f.str("id");
  c.base_task = f.str("base_task");
  if (const json* parts = f.array("parts", true)) {
    for (std::size_t i = 0; i < parts->size(); ++i) {
      std::string ppath = f.at("parts") + "/" + std::to_string(i);
      Fields pf((*parts)[i], ppath, subject, out, {"axis", "delta"});
      CompositionPart part;
      part.axis = pf.str("axis");
      if (const json* d = pf.object("delta", true))
        part.delta = read_delta(*d, ppath + "/delta", subject, out);
      c.parts.push_back(std::move(part));
    }
  }
  c.effective_instruction = f.opt_str("effective_instruction");
  c.notes = f.str("notes");
  c.scene_image = f.str("scene_image");
  return c;
}

Diagnostic syntax_diagnostic(std::string_view doc, const json::parse_error& e) {
  std::size_t byte = e.byte;
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < doc.size(); ++i) {
    if (doc[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  std::string msg = e.what();
  // strip the library's "[json.exception.parse_error.101] " prefix
  if (auto p = msg.find("] "); p != std::string::npos) msg = msg.substr(p + 2);
  return {ErrorCode::SyntaxError, "",
          "offset " + std::to_string(byte) + " (line " + std::to_string(line) + ", column " +
              std::to_string(col) + ")",
          msg};
}

}  // namespace

BenchmarkManifest parse_manifest(std::string_view document, const AxisRegistry& registry) {
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ValidationError({syntax_diagnostic(document, e)});
  }

  std::vector<Diagnostic> diags;
  BenchmarkManifest m;
  Fields top(root, "", "", diags, {"name", "base_tasks", "conditions", "compositions"});
  if (top.ok()) {
    m.name = top.str("name");
    if (const json* arr = top.array("base_tasks", true))
      for (std::size_t i = 0; i < arr->size(); ++i)
        m.base_tasks.push_back(read_base_task((*arr)[i], "/base_tasks/" + std::to_string(i), diags));
    if (const json* arr = top.array("conditions", true))
      for (std::size_t i = 0; i < arr->size(); ++i)
        m.conditions.push_back(read_condition((*arr)[i], "/conditions/" + std::to_string(i), diags));
    if (const json* arr = top.array("compositions", true))
      for (std::size_t i = 0; i < arr->size(); ++i)
        m.compositions.push_back(
            read_composition((*arr)[i], "/compositions/" + std::to_string(i), diags));
  }
  if (!diags.empty()) throw ValidationError(std::move(diags));

  auto semantic = validate_manifest(m, registry);
  if (!semantic.empty()) throw ValidationError(std::move(semantic));
  return m;
}

std::vector<Diagnostic> validate_manifest(const BenchmarkManifest& m, const AxisRegistry& registry) {
  std::vector<Diagnostic> out;
  if (normalize_whitespace(m.name).empty())
    out.push_back({ErrorCode::SchemaError, "", "/name", "manifest name is empty"});
  if (m.base_tasks.empty())
    out.push_back({ErrorCode::SchemaError, "", "/base_tasks", "at least one base task is required"});

  // Base tasks, conditions and compositions share one id namespace because
  // campaign trials reference any of them by id.
  std::map<std::string, std::string> seen;
  auto claim = [&](const std::string& id, const std::string& where) {
    if (id.empty()) {
      out.push_back({ErrorCode::SchemaError, "", where + "/id", "id is empty"});
      return;
    }
    auto [it, inserted] = seen.emplace(id, where);
    if (!inserted)
      out.push_back({ErrorCode::DuplicateId, id, where + "/id", "id already used at " + it->second});
  };

  for (std::size_t i = 0; i < m.base_tasks.size(); ++i) {
    const auto& b = m.base_tasks[i];
    std::string where = "/base_tasks/" + std::to_string(i);
    claim(b.id, where);
    for (auto d : check_base_task(b)) {
      d.where = where;
      out.push_back(std::move(d));
    }
  }
  for (std::size_t i = 0; i < m.conditions.size(); ++i) {
    const auto& c = m.conditions[i];
    std::string where = "/conditions/" + std::to_string(i);
    claim(c.id, where);
    const BaseTask* base = m.find_base_task(c.base_task);
    if (!base) {
      out.push_back({ErrorCode::ReferenceError, c.id, where + "/base_task",
                     "unknown base task '" + c.base_task + "'"});
      continue;
    }
    if (auto d = validate_condition(registry, *base, c)) {
      d->where = where + (d->code == ErrorCode::UnknownAxis ? "/axis" : "/delta");
      out.push_back(std::move(*d));
    }
  }
  for (std::size_t i = 0; i < m.compositions.size(); ++i) {
    const auto& c = m.compositions[i];
    std::string where = "/compositions/" + std::to_string(i);
    claim(c.id, where);
    const BaseTask* base = m.find_base_task(c.base_task);
    if (!base) {
      out.push_back({ErrorCode::ReferenceError, c.id, where + "/base_task",
                     "unknown base task '" + c.base_task + "'"});
      continue;
    }
    for (auto d : validate_composite(registry, *base, c)) {
      d.where = where + (d.where.empty() ? "" : "/" + d.where);
      out.push_back(std::move(d));
    }
  }
  return out;
}

// ---- writing --------------------------------------------------------------

namespace {

json to_json(const PerturbationDelta& d) {
  json j = json::object();
  if (d.visual) j["visual"] = {{"description", d.visual->description}};
  if (d.instruction) j["instruction"] = *d.instruction;
  if (d.behavioral) j["behavioral"] = {{"description", d.behavioral->description}};
  j["factor"] = d.factor;
  return j;
}

json to_json(const BaseTask& b) {
  json objects = json::array();
  for (const auto& o : b.scene.objects) {
    json props = json::object();
    for (const auto& [k, v] : o.properties) props[k] = v;
    objects.push_back({{"name", o.name}, {"properties", props}});
  }
  return {{"id", b.id},
          {"instruction", b.instruction},
          {"scene", {{"image", b.scene.image}, {"objects", objects}}},
          {"behavior_signature", b.behavior_signature},
          {"success_criterion", b.success_criterion},
          {"demo_count", b.demo_count}};
}


json to_json(const CompositeCondition& c) {
  json parts = json::array();
  for (const auto& p : c.parts) parts.push_back({{"axis", p.axis}, {"delta", to_json(p.delta)}});
  json j = {{"id", c.id},       {"base_task", c.base_task},        {"parts", parts},
            {"notes", c.notes}, {"scene_image", c.scene_image}};
  if (c.effective_instruction) j["effective_instruction"] = *c.effective_instruction;
  return j;
}

}  // namespace

json to_json(const Condition& c) {
  return {{"id", c.id},           {"base_task", c.base_task}, {"axis", c.axis},
          {"delta", to_json(c.delta)}, {"notes", c.notes},     {"scene_image", c.scene_image}};
}

Condition condition_from_json(const json& j, const std::string& where) {
  std::vector<Diagnostic> diags;
  Condition c = read_condition(j, where, diags);
  if (!diags.empty()) throw ValidationError(std::move(diags));
  return c;
}

std::string serialize_manifest(const BenchmarkManifest& m) {
  json base = json::array(), conds = json::array(), comps = json::array();
  for (const auto& b : m.base_tasks) base.push_back(to_json(b));
  for (const auto& c : m.conditions) conds.push_back(to_json(c));
  for (const auto& c : m.compositions) comps.push_back(to_json(c));
  json root = {{"name", m.name}, {"base_tasks", base}, {"conditions", conds}, {"compositions", comps}};
  return root.dump(2) + "\n";
}

std::string manifest_hash(const BenchmarkManifest& m) { return sha256_hex(serialize_manifest(m)); }

BenchmarkManifest load_manifest(const std::string& path, const AxisRegistry& registry) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::IoError, e.what(), path);
  }
  return parse_manifest(text, registry);
}

// ---- coverage -------------------------------------------------------------

bool CoverageMatrix::has(std::string_view axis) const {
  return std::find(axes_present.begin(), axes_present.end(), axis) != axes_present.end() ||
         std::find(custom_axes.begin(), custom_axes.end(), axis) != custom_axes.end();
}

std::string CoverageMatrix::summary() const {
  return "axes: " + std::to_string(axes_count()) + "/" + std::to_string(kCanonicalAxisCount) +
         ", categories: " + std::to_string(categories_count()) + "/" +
         std::to_string(kCategoryCount);
}

CoverageMatrix coverage_from_axes(std::string label, const std::vector<std::string>& axes,
                                  const AxisRegistry& registry) {
  std::set<std::string> wanted(axes.begin(), axes.end());
  CoverageMatrix cm;
  cm.label = std::move(label);
  for (const auto& a : registry.axes()) {
    if (!wanted.count(a.id)) continue;
    (a.canonical ? cm.axes_present : cm.custom_axes).push_back(a.id);
    cm.categories_present.insert(a.category);
    wanted.erase(a.id);
  }
  if (!wanted.empty()) registry.lookup(*wanted.begin());  // throws UnknownAxis
  return cm;
}

CoverageMatrix coverage_matrix(const BenchmarkManifest& m, const AxisRegistry& registry) {
  std::vector<std::string> axes;
  for (const auto& c : m.conditions) axes.push_back(c.axis);
  for (const auto& c : m.compositions)
    for (const auto& p : c.parts) axes.push_back(p.axis);
  return coverage_from_axes(m.name, axes, registry);
}

CoverageDiff diff_coverage(const CoverageMatrix& a, const CoverageMatrix& b) {
  CoverageDiff d;
  for (const auto& x : a.axes_present)
    if (!b.has(x)) d.added.push_back(x);
  for (const auto& x : a.custom_axes)
    if (!b.has(x)) d.added.push_back(x);
  for (const auto& x : b.axes_present)
    if (!a.has(x)) d.removed.push_back(x);
  for (const auto& x : b.custom_axes)
    if (!a.has(x)) d.removed.push_back(x);

  const auto& axes = AxisRegistry::canonical().axes();
  std::string header = "| benchmark |", rule = "|---|";
  for (const auto& ax : axes) {
    header += " " + ax.id + " |";
    rule += ":---:|";
  }
  auto row = [&](const CoverageMatrix& m) {
    std::string r = "| " + (m.label.empty() ? std::string("(unnamed)") : m.label) + " |";
    for (const auto& ax : axes) r += m.has(ax.id) ? " ✓ |" : "  |";
    return r;
  };
  d.table = header + "\n" + rule + "\n" + row(a) + "\n" + row(b) + "\n";
  return d;
}

std::vector<CoverageMatrix> load_coverage_rows(std::string_view document) {
  json root;
  try {
    root = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw ValidationError({syntax_diagnostic(document, e)});
  }
  if (!root.is_object() || !root.contains("rows") || !root["rows"].is_array())
    throw Error(ErrorCode::SchemaError, "coverage rows document needs a 'rows' array");
  std::vector<CoverageMatrix> out;
  for (const auto& r : root["rows"]) {
    if (!r.is_object() || !r.contains("name") || !r.contains("axes"))
      throw Error(ErrorCode::SchemaError, "coverage row needs 'name' and 'axes'");
    out.push_back(coverage_from_axes(r["name"].get<std::string>(),
                                     r["axes"].get<std::vector<std::string>>()));
  }
  return out;
}

}  // namespace stargen
