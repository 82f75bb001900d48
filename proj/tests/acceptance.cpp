// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "stargen/aggregate.hpp"
#include "stargen/campaign.hpp"
#include "stargen/cli.hpp"
#include "stargen/console_api.hpp"
#include "stargen/proposer.hpp"
#include "support.hpp"

using namespace stargen;
using namespace stargen::testing;
using nlohmann::json;

namespace {

struct Checks {
  std::vector<std::string> failures;
  void operator()(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;  // "no error" never matches the codes checked below
}

bool rate_is(const AggregateReport& r, const std::string& model, std::vector<RateEntry> ModelRates::*section,
             const std::string& key, std::uint64_t s, std::uint64_t t) {
  const ModelRates* m = r.model(model);
  if (!m) return false;
  const RateEntry* e = m->find(section, key);
  return e && e->cell.successes == s && e->cell.total == t;
}

void main_results(Checks& check) {
  auto t0 = std::chrono::steady_clock::now();
  CampaignState state = replay(read_file(fixture_path("main_results")));
  AggregateReport r = compute_report(state, bundled_manifest());
  auto elapsed = std::chrono::steady_clock::now() - t0;
  check(state.trial_count() == 885, "885 trials");
  check(state.config().scope.size() == 59, "59 conditions");
  check(bundled_manifest().base_tasks.size() == 4 && bundled_manifest().conditions.size() == 55, "4 + 55");
  check(rate_is(r, "openvla-bridge-ft", &ModelRates::conditions, "carrot_base", 3, 5), "OpenVLA carrot base 3/5");
  check(rate_is(r, "pi0-bridge-ft", &ModelRates::conditions, "knife_camera", 5, 5), "pi0 knife camera 5/5");
  check(rate_is(r, "minivla-bridge-ft", &ModelRates::axes, "V-OBJ", 12, 15), "MiniVLA V-OBJ 12/15");
  check(rate_is(r, "pi0-bridge-ft", &ModelRates::axes, "ID", 18, 20), "pi0 ID 18/20");
  check(elapsed < std::chrono::seconds(1), "runtime under 1 s");
}

void compositional(Checks& check) {
  AggregateReport r = compute_report(replay(read_file(fixture_path("compositional"))), bundled_manifest());
  // every row of the two-axis table: {model, group, successes, total}; "" is the overall row
  struct Row {
    const char* model;
    const char* group;
    std::uint64_t s, t;
  };
  const std::vector<Row> expected{
      {"openvla-oxe", "S-PROP+S-LANG", 6, 10}, {"openvla-oxe", "V-SC+V-OBJ", 3, 10},
      {"openvla-oxe", "VB-POSE+VB-ISC", 5, 10}, {"openvla-oxe", "", 14, 30},
      {"openvla-oxe-ft", "S-PROP+S-LANG", 8, 10}, {"openvla-oxe-ft", "V-SC+V-OBJ", 6, 10},
      {"openvla-oxe-ft", "VB-POSE+VB-ISC", 6, 10}, {"openvla-oxe-ft", "", 20, 30},
      {"openvla-bridge-ft", "S-PROP+S-LANG", 4, 10}, {"openvla-bridge-ft", "V-SC+V-OBJ", 5, 10},
      {"openvla-bridge-ft", "VB-POSE+VB-ISC", 3, 10}, {"openvla-bridge-ft", "", 12, 30},
      {"openvla-bridge-vqa-ft", "S-PROP+S-LANG", 0, 10}, {"openvla-bridge-vqa-ft", "V-SC+V-OBJ", 6, 10},
      {"openvla-bridge-vqa-ft", "VB-POSE+VB-ISC", 7, 10}, {"openvla-bridge-vqa-ft", "", 13, 30},
      {"minivla-bridge-ft", "S-PROP+S-LANG", 4, 10}, {"minivla-bridge-ft", "V-SC+V-OBJ", 8, 10},
      {"minivla-bridge-ft", "VB-POSE+VB-ISC", 5, 10}, {"minivla-bridge-ft", "", 17, 30},
      {"minivla-bridge-novq-ft", "S-PROP+S-LANG", 2, 10}, {"minivla-bridge-novq-ft", "V-SC+V-OBJ", 5, 10},
      {"minivla-bridge-novq-ft", "VB-POSE+VB-ISC", 6, 10}, {"minivla-bridge-novq-ft", "", 13, 30},
      {"pi0-bridge-ft", "S-PROP+S-LANG", 1, 10}, {"pi0-bridge-ft", "V-SC+V-OBJ", 7, 10},
      {"pi0-bridge-ft", "VB-POSE+VB-ISC", 8, 10}, {"pi0-bridge-ft", "", 16, 30},
  };
  for (const auto& row : expected) {
    std::string what = std::string(row.model) + " " + (*row.group ? row.group : "overall");
    const ModelRates* m = r.model(row.model);
    if (!m) {
      check(false, what);
      continue;
    }
    if (*row.group) {
      check(rate_is(r, row.model, &ModelRates::composition_groups, row.group, row.s, row.t), what);
    } else {
      check(m->composition_overall && m->composition_overall->cell.successes == row.s &&
                m->composition_overall->cell.total == row.t,
            what);
    }
  }
}

void categorization(Checks& check) {
  auto mk = [](std::string id, std::string instr) {
    BaseTask b;
    b.id = std::move(id);
    b.instruction = std::move(instr);
    b.scene.objects = {{"carrot", {{"color", "orange"}}}, {"apple", {{"color", "red"}}}};
    return b;
  };
  BaseTask carrot = mk("carrot", "pick up carrot"), apple = mk("apple", "pick up apple");
  PerturbationDelta d;
  d.instruction = "pick up the orange object";
  d.factor = "referencing color";
  check(categorize(carrot, d).label() == "S", "orange object on carrot task is {S}");
  d.behavioral = ChangeNote{"now grasps carrot"};
  check(categorize(apple, d).label() == "SB", "orange object on apple task is {S,B}");

  std::mt19937 rng(1234);
  BaseTask base = mk("base", "put carrot on plate");
  for (int i = 0; i < 1000; ++i) {
    CompositeCondition k;
    k.id = "k";
    k.base_task = base.id;
    std::uint8_t expected = 0;
    int parts = 2 + rng() % 3;
    for (int p = 0; p < parts; ++p) {
      Category c = random_category(rng);
      expected |= c.bits();
      auto delta = random_delta(rng, base, c);
      Category got = categorize(base, delta);
      check(got == c && got.size() >= 1, "randomized delta category");
      k.parts.push_back({"X-" + std::to_string(p), delta});
    }
    Category derived = derived_category(base, k);
    check(derived.bits() == expected && derived.size() >= 1, "union law");
  }
  check(code_of([&] { categorize(base, PerturbationDelta{.factor = "nothing"}); }) == ErrorCode::EmptyDelta,
        "empty delta is rejected rather than categorized as empty");
}

void registry_coverage(Checks& check) {
  auto r = registry_selfcheck();
  check(r.total == 22 && r.categories == 7, "22 axes / 7 categories");
  check(r.counts_by_label == std::map<std::string, std::size_t>{{"V", 4}, {"S", 5}, {"B", 2}, {"VB", 5},
                                                                 {"SB", 4}, {"VS", 1}, {"VSB", 1}},
        "4/5/2/5/4/1/1 split");
  auto cov = coverage_matrix(bundled_manifest());
  check(cov.summary() == "axes: 13/22, categories: 5/7", "13 axes, 5 categories");
  check(cov.axes_present == std::vector<std::string>{"V-SC", "V-OBJ", "V-VIEW", "S-PROP", "S-LANG", "S-MO",
                                                     "S-INT", "VB-POSE", "VB-ISC", "VB-MOBJ", "SB-SMO",
                                                     "SB-VRB", "VSB-NOBJ"},
        "axis set");
}

void manifest_round_trip(Checks& check) {
  const auto& m = bundled_manifest();
  std::string text = serialize_manifest(m);
  check(parse_manifest(text) == m && serialize_manifest(parse_manifest(text)) == text, "bundled round trip");
  std::mt19937 rng(2024);
  for (int i = 0; i < 200; ++i) {
    BenchmarkManifest rm = random_manifest(rng);
    check(validate_manifest(rm).empty(), "random manifest valid");
    std::string t = serialize_manifest(rm);
    check(parse_manifest(t) == rm && serialize_manifest(parse_manifest(t)) == t, "random round trip");
  }
  json base = json::parse(text);
  auto diagnosed = [&](json j, ErrorCode code, const std::string& subject) {
    std::vector<Diagnostic> ds;
    try {
      parse_manifest(j.dump());
    } catch (const ValidationError& e) {
      ds = e.diagnostics();
    }
    return std::any_of(ds.begin(), ds.end(), [&](const Diagnostic& d) { return d.code == code && d.subject == subject; });
  };
  json j = base;
  j["conditions"][3]["axis"] = "X-FOO";
  check(diagnosed(j, ErrorCode::UnknownAxis, j["conditions"][3]["id"]), "unknown axis");
  j = base;
  j["conditions"][7]["base_task"] = "nowhere";
  check(diagnosed(j, ErrorCode::ReferenceError, j["conditions"][7]["id"]), "dangling base task");
  j = base;
  j["conditions"][0]["delta"]["instruction"] = "  put carrot  on plate";
  check(diagnosed(j, ErrorCode::NoOpInstruction, j["conditions"][0]["id"]), "no-op instruction");
}

void campaign_protocol(Checks& check) {
  std::string bytes = read_file(fixture_path("main_results"));
  std::string a = replay(bytes).canonical_json();
  check(replay(bytes).canonical_json() == a && replay(bytes).canonical_json() == a, "replay determinism");

  auto cfg = make_config("p", bundled_manifest(), {"m"}, {{"carrot_base", ScopeKind::Base}});
  auto t0 = parse_rfc3339("2025-02-03T09:00:00Z");
  CampaignLog log = create_campaign(cfg, bundled_manifest(), t0);
  TrialInput t{.model = "m", .condition = "carrot_base", .outcome = Outcome::Success, .steps = 30, .timestamp = t0};
  for (int i = 0; i < 5; ++i) record_trial(log, t);
  check(code_of([&] { record_trial(log, t); }) == ErrorCode::QuotaExceeded, "QuotaExceeded on 6th trial");

  CampaignLog log2 = create_campaign(cfg, bundled_manifest(), t0);
  t.outcome = Outcome::Timeout;
  t.steps = 40;
  check(code_of([&] { record_trial(log2, t); }) == ErrorCode::ProtocolViolation, "timeout with steps != 100");
  t.steps = 100;
  check(code_of([&] { record_trial(log2, t); }) == ErrorCode::IoError, "timeout with 100 steps accepted");
}

void proposer_loop(Checks& check) {
  MockBackend mock(data_dir() / "mock_vlm");
  for (auto axis : kSupportedAxes) {
    std::string ax(axis);
    auto req = make_request(bundled_manifest(), "carrot_base", ax);
    DraftSet d = propose(bundled_manifest(), req, mock);
    check(d.drafts.size() == 3 && d.rejections.empty(), ax + ": 3 drafts");
    for (const auto& c : d.drafts)
      check(!validate_condition(AxisRegistry::canonical(), req.base_task, c).has_value(), ax + ": draft valid");
    check(drafts_json(propose(bundled_manifest(), req, mock).drafts) == drafts_json(d.drafts),
          ax + ": deterministic");
  }
  MockBackend malformed(test_data_dir() / "mock_malformed");
  for (auto axis : kSupportedAxes) {
    std::string ax(axis);
    auto req = make_request(bundled_manifest(), "carrot_base", ax);
    check(code_of([&] { propose(bundled_manifest(), req, malformed); }) == ErrorCode::SchemaError,
          ax + ": malformed body gives SchemaError");
  }
}

void cross_interface(Checks& check) {
  TempDir tmp;
  auto manifest = tmp / "bench.stargen.json";
  std::filesystem::copy_file(manifest_path(), manifest);
  ServerOptions opts;
  opts.campaign_dir = tmp.path();
  opts.manifest_path = manifest;
  ConsoleApi api(opts);
  for (std::string name : {"main_results", "compositional"}) {
    auto log = tmp / (name + ".stargen.log");
    std::filesystem::copy_file(fixture_path(name), log);

    std::istringstream in;
    std::ostringstream out, err;
    auto env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
    int code = run_cli({"report", log.string(), "--manifest", manifest.string(), "--format", "csv"},
                       {in, out, err, env});
    check(code == 0, name + ": CLI report succeeds");
    std::map<std::string, std::pair<long, long>> cli, http;
    std::istringstream csv(out.str());
    std::string line;
    std::getline(csv, line);
    while (std::getline(csv, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
      if (f.size() != 5) {
        check(false, name + ": csv row shape");
        continue;
      }
      cli[f[0] + "|" + f[1]] = {std::stol(f[2]), std::stol(f[3])};
    }
    auto res = api.handle({"GET", "/api/campaigns/" + name + "/aggregates", {}, "", std::nullopt});
    check(res.status == 200, name + ": API aggregates succeed");
    if (res.status != 200) continue;
    for (const auto& r : json::parse(res.body)) {
      ReportRow row{r["model"], r["group"], r["key"], {}, false};
      http[row.model + "|" + row.prefixed_key()] = {r["successes"].get<long>(), r["total"].get<long>()};
    }
    check(!cli.empty() && cli == http, name + ": CLI csv equals API aggregates");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Checks&)>>> criteria{
      {"main results fixture reproduces 885 trials and spot cells", main_results},
      {"compositional fixture reproduces the two-axis table", compositional},
      {"categorization example, union law, never empty", categorization},
      {"registry 22/7 split and manifest coverage 13/22, 5/7", registry_coverage},
      {"manifest round trip and seeded corruptions", manifest_round_trip},
      {"replay determinism, quota and timeout rules", campaign_protocol},
      {"proposer closed loop on the mock backend", proposer_loop},
      {"CLI csv and API aggregates agree on both fixtures", cross_interface},
  };
  int failed = 0, n = 0;
  for (const auto& [description, run] : criteria) {
    ++n;
    Checks checks;
    try {
      run(checks);
    } catch (const std::exception& e) {
      checks.failures.push_back(std::string("exception: ") + e.what());
    }
    if (checks.failures.empty()) {
      std::cout << "PASS [" << n << "] " << description << "\n";
    } else {
      ++failed;
      std::cout << "FAIL [" << n << "] " << description << " (" << checks.failures.size()
                << " failed checks, first: " << checks.failures.front() << ")\n";
    }
  }
  return failed == 0 ? 0 : 1;
}
