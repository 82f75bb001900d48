#pragma once

// Helpers shared by the unit suites and the acceptance runner.

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "stargen/manifest.hpp"
#include "stargen/util.hpp"

namespace stargen::testing {

inline std::filesystem::path data_dir() { return STARGEN_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return STARGEN_TEST_DATA_DIR; }
inline std::filesystem::path manifest_path() { return data_dir() / "bridgev2-star.stargen.json"; }
inline std::filesystem::path fixture_path(const std::string& name) {
  return data_dir() / "fixtures" / (name + ".stargen.log");
}

inline const BenchmarkManifest& bundled_manifest() {
  static const BenchmarkManifest m = load_manifest(manifest_path().string());
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("stargen-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// ---- random generators ----------------------------------------------------------

inline std::string random_words(std::mt19937& rng, int min_words = 1, int max_words = 5) {
  static const std::vector<std::string> words{
      "put", "carrot", "on", "plate", "the", "orange", "object", "knife", "sink", "pot",
      "lift", "place", "red", "bowl", "cup", "spoon", "zucchini", "near", "left", "tópico",
      "★", "table", "drying", "rack", "move", "blue", "\"quoted\"", "a\\b"};
  std::uniform_int_distribution<int> n(min_words, max_words);
  std::uniform_int_distribution<std::size_t> w(0, words.size() - 1);
  std::string out;
  int count = n(rng);
  for (int i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += words[w(rng)];
  }
  return out;
}

inline BaseTask random_base_task(std::mt19937& rng, const std::string& id) {
  BaseTask b;
  b.id = id;
  b.instruction = random_words(rng, 2, 6);
  b.scene.image = "scenes/" + id + ".jpg";
  std::uniform_int_distribution<int> objs(0, 3);
  int n = objs(rng);
  for (int i = 0; i < n; ++i) {
    SceneObject o;
    o.name = random_words(rng, 1, 1) + std::to_string(i);
    if (rng() % 2) o.properties["color"] = random_words(rng, 1, 1);
    if (rng() % 2) o.properties["location"] = random_words(rng, 1, 2);
    b.scene.objects.push_back(std::move(o));
  }
  b.behavior_signature = random_words(rng, 0, 6);
  b.success_criterion = random_words(rng, 0, 6);
  b.demo_count = rng() % 50;
  return b;
}

/// A delta whose derived category is exactly `category` relative to `base`.
inline PerturbationDelta random_delta(std::mt19937& rng, const BaseTask& base, Category category) {
  PerturbationDelta d;
  d.factor = random_words(rng, 1, 3);
  if (category.contains(Modality::Visual)) d.visual = ChangeNote{random_words(rng, 1, 6)};
  if (category.contains(Modality::Semantic)) {
    std::string instr;
    do {
      instr = random_words(rng, 1, 7);
      if (rng() % 4 == 0) instr = "  " + instr + "\t ";  // un-normalized but still a change
    } while (normalize_whitespace(instr) == normalize_whitespace(base.instruction));
    d.instruction = instr;
  }
  if (category.contains(Modality::Behavioral)) d.behavioral = ChangeNote{random_words(rng, 1, 6)};
  return d;
}

inline Category random_category(std::mt19937& rng) {
  return Category::all()[rng() % Category::all().size()];
}

inline const AxisDescriptor& random_axis(std::mt19937& rng) {
  const auto& axes = AxisRegistry::canonical().axes();
  return axes[rng() % axes.size()];
}

/// A valid manifest with 1-3 base tasks, 0-8 conditions and 0-3 compositions.
inline BenchmarkManifest random_manifest(std::mt19937& rng) {
  BenchmarkManifest m;
  m.name = "bench " + random_words(rng, 1, 2);
  int nb = 1 + rng() % 3;
  for (int i = 0; i < nb; ++i) m.base_tasks.push_back(random_base_task(rng, "base_" + std::to_string(i)));
  int nc = rng() % 9;
  for (int i = 0; i < nc; ++i) {
    const BaseTask& b = m.base_tasks[rng() % m.base_tasks.size()];
    const AxisDescriptor& axis = random_axis(rng);
    Condition c;
    c.id = "cond_" + std::to_string(i);
    c.base_task = b.id;
    c.axis = axis.id;
    c.delta = random_delta(rng, b, axis.category);
    c.notes = random_words(rng, 0, 4);
    c.scene_image = rng() % 2 ? b.scene.image : "scenes/" + c.id + ".jpg";
    m.conditions.push_back(std::move(c));
  }
  int nk = rng() % 4;
  for (int i = 0; i < nk; ++i) {
    const BaseTask& b = m.base_tasks[rng() % m.base_tasks.size()];
    CompositeCondition k;
    k.id = "comp_" + std::to_string(i);
    k.base_task = b.id;
    int parts = 2 + rng() % 2;
    std::vector<std::string> used;
    while (static_cast<int>(k.parts.size()) < parts) {
      const AxisDescriptor& axis = random_axis(rng);
      if (std::find(used.begin(), used.end(), axis.id) != used.end()) continue;
      used.push_back(axis.id);
      k.parts.push_back({axis.id, random_delta(rng, b, axis.category)});
    }
    bool any_instruction = false;
    for (const auto& p : k.parts) any_instruction |= p.delta.instruction.has_value();
    if (any_instruction && rng() % 2) {
      std::string eff;
      do eff = random_words(rng, 2, 7);
      while (normalize_whitespace(eff) == normalize_whitespace(b.instruction));
      k.effective_instruction = eff;
    }
    k.notes = random_words(rng, 0, 4);
    k.scene_image = b.scene.image;
    m.compositions.push_back(std::move(k));
  }
  return m;
}

/// Success counts summed straight from raw log lines, independent of the
/// campaign/aggregate code paths: (model, condition) -> (successes, total).
inline std::map<std::pair<std::string, std::string>, std::pair<int, int>> raw_cell_counts(
    const std::string& log_bytes) {
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> out;
  std::size_t start = 0;
  while (start < log_bytes.size()) {
    std::size_t end = log_bytes.find('\n', start);
    if (end == std::string::npos) end = log_bytes.size();
    auto j = nlohmann::json::parse(log_bytes.substr(start, end - start));
    start = end + 1;
    if (j["event"] != "trial" || j["overflow"].get<bool>()) continue;
    auto& c = out[{j["model"].get<std::string>(), j["condition"].get<std::string>()}];
    c.second += 1;
    c.first += j["outcome"] == "success" ? 1 : 0;
  }
  return out;
}

}  // namespace stargen::testing
