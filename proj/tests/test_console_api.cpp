#include <sstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "stargen/aggregate.hpp"
#include "stargen/cli.hpp"
#include "stargen/console_api.hpp"
#include "support.hpp"

using namespace stargen;
using namespace stargen::testing;
using nlohmann::json;

namespace {

/// A campaign directory seeded with the bundled manifest and fixtures.
struct Workspace {
  TempDir tmp;
  std::filesystem::path manifest = tmp / "bridgev2-star.stargen.json";

  Workspace() {
    std::filesystem::copy_file(manifest_path(), manifest);
    for (const char* f : {"main_results", "model_ablations", "compositional"})
      std::filesystem::copy_file(fixture_path(f), tmp / (std::string(f) + ".stargen.log"));
  }

  ServerOptions options() const {
    ServerOptions o;
    o.campaign_dir = tmp.path();
    o.manifest_path = manifest;
    o.port = 0;
    o.backend.backend = "mock";
    o.backend.mock_dir = data_dir() / "mock_vlm";
    return o;
  }
};

ApiResponse get(ConsoleApi& api, const std::string& path, std::map<std::string, std::string> query = {}) {
  return api.handle({"GET", path, std::move(query), "", std::nullopt});
}

ApiResponse post(ConsoleApi& api, const std::string& path, const json& body,
                 std::optional<std::string> key = std::nullopt) {
  return api.handle({"POST", path, {}, body.dump(), std::move(key)});
}

json trial(const std::string& model, const std::string& cond, const std::string& outcome, int steps) {
  return {{"model", model}, {"condition", cond}, {"outcome", outcome}, {"steps", steps}};
}

}  // namespace

TEST_CASE("health, manifest and campaign listing") {
  Workspace ws;
  ConsoleApi api(ws.options());
  CHECK(get(api, "/api/health").status == 200);

  auto m = get(api, "/api/manifest");
  REQUIRE(m.status == 200);
  json mj = json::parse(m.body);
  CHECK(mj["manifest"]["conditions"].size() == 55);
  CHECK(mj["coverage"] == "axes: 13/22, categories: 5/7");

  json list = json::parse(get(api, "/api/campaigns").body);
  REQUIRE(list.size() == 3);
  CHECK(list[0]["id"] == "compositional");

  auto missing = get(api, "/api/campaigns/nope/progress");
  CHECK(missing.status == 404);
  json err = json::parse(missing.body);
  CHECK(err["code"] == "UnknownCampaign");
  CHECK(err["status"] == 404);
  CHECK(get(api, "/api/nowhere").status == 404);
}

TEST_CASE("progress over the main fixture") {
  Workspace ws;
  ConsoleApi api(ws.options());
  json p = json::parse(get(api, "/api/campaigns/main_results/progress").body);
  CHECK(p["trials"] == 885);
  CHECK(p["complete"] == true);
  CHECK(p["cells"].size() == 59 * 3);

  json ablations = json::parse(get(api, "/api/campaigns/model_ablations/progress").body);
  bool saw_dash = false;
  for (const auto& c : ablations["cells"])
    if (c["model"] == "openvla-oxe" && c["condition"] == "carrot_in_sink") saw_dash = c["display"] == "--";
  CHECK(saw_dash);
}

TEST_CASE("trial posting rules") {
  Workspace ws;
  ConsoleApi api(ws.options());
  auto created = post(api, "/api/campaigns", {{"id", "live"}, {"models", {"m1", "m2"}}});
  REQUIRE(created.status == 201);
  CHECK(post(api, "/api/campaigns", {{"id", "live"}, {"models", {"m1"}}}).status == 409);

  json fresh = json::parse(get(api, "/api/campaigns/live/progress").body);
  for (const auto& c : fresh["cells"]) CHECK(c["display"] == "0/5");

  auto r = post(api, "/api/campaigns/live/trials", trial("m1", "carrot_base", "success", 30));
  CHECK(r.status == 201);
  CHECK(json::parse(r.body)["seq"] == 2);
  for (int i = 0; i < 4; ++i)
    CHECK(post(api, "/api/campaigns/live/trials", trial("m1", "carrot_base", "failure", 30)).status == 201);
  auto quota = post(api, "/api/campaigns/live/trials", trial("m1", "carrot_base", "success", 30));
  CHECK(quota.status == 409);
  CHECK(json::parse(quota.body)["code"] == "QuotaExceeded");

  auto timeout = post(api, "/api/campaigns/live/trials", trial("m2", "carrot_base", "timeout", 40));
  CHECK(timeout.status == 422);
  CHECK(json::parse(timeout.body)["code"] == "ProtocolViolation");
  CHECK(post(api, "/api/campaigns/live/trials", trial("m2", "carrot_base", "timeout", 100)).status == 201);
  CHECK(post(api, "/api/campaigns/live/trials", trial("m9", "carrot_base", "success", 1)).status == 404);
  CHECK(post(api, "/api/campaigns/live/trials", trial("m1", "nope", "success", 1)).status == 404);
  CHECK(post(api, "/api/campaigns/nope/trials", trial("m1", "carrot_base", "success", 1)).status == 404);
  CHECK(post(api, "/api/campaigns/live/trials", {{"model", "m1"}}).status == 422);
  CHECK(api.handle({"POST", "/api/campaigns/live/trials", {}, "{not json", std::nullopt}).status == 400);

  json p = json::parse(get(api, "/api/campaigns/live/progress").body);
  CHECK(p["trials"] == 6);
}

TEST_CASE("idempotency key") {
  Workspace ws;
  ConsoleApi api(ws.options());
  post(api, "/api/campaigns", {{"id", "idem"}, {"models", {"m"}}});
  auto a = post(api, "/api/campaigns/idem/trials", trial("m", "knife_base", "success", 10), "key-1");
  auto b = post(api, "/api/campaigns/idem/trials", trial("m", "knife_base", "success", 10), "key-1");
  CHECK(a.status == 201);
  CHECK(b.status == 200);
  CHECK(json::parse(a.body)["seq"] == json::parse(b.body)["seq"]);
  CHECK(json::parse(get(api, "/api/campaigns/idem").body)["trials"] == 1);
}

TEST_CASE("aggregates endpoint") {
  Workspace ws;
  ConsoleApi api(ws.options());
  auto r = get(api, "/api/campaigns/main_results/aggregates", {{"group", "axis"}});
  REQUIRE(r.status == 200);
  bool found = false;
  for (const auto& rec : json::parse(r.body))
    if (rec["model"] == "minivla-bridge-ft" && rec["key"] == "V-OBJ") {
      CHECK(rec["successes"] == 12);
      CHECK(rec["total"] == 15);
      found = true;
    }
  CHECK(found);

  auto bad = get(api, "/api/campaigns/main_results/aggregates", {{"group", "foo"}});
  CHECK(bad.status == 400);

  post(api, "/api/campaigns", {{"id", "empty"}, {"models", {"m"}}});
  auto empty = get(api, "/api/campaigns/empty/aggregates", {{"group", "category"}});
  CHECK(empty.status == 200);
  CHECK(json::parse(empty.body) == json::array());

  // records equal the aggregate module's chart export
  auto state = replay(read_file(fixture_path("main_results")));
  json chart = json::parse(export_report(compute_report(state, bundled_manifest()), ReportFormat::Chart,
                                         ReportGroup::Category));
  CHECK(json::parse(get(api, "/api/campaigns/main_results/aggregates", {{"group", "category"}}).body).dump() ==
        chart["records"].dump());
}

TEST_CASE("aggregates follow new trials") {
  Workspace ws;
  ConsoleApi api(ws.options());
  post(api, "/api/campaigns", {{"id", "grow"}, {"models", {"m"}}});
  post(api, "/api/campaigns/grow/trials", trial("m", "carrot_color", "success", 10));
  auto first = json::parse(get(api, "/api/campaigns/grow/aggregates", {{"group", "axis"}}).body);
  post(api, "/api/campaigns/grow/trials", trial("m", "carrot_color", "failure", 10));
  auto second = json::parse(get(api, "/api/campaigns/grow/aggregates", {{"group", "axis"}}).body);
  REQUIRE(first.size() == 1);
  CHECK(first[0]["total"] == 1);
  CHECK(second[0]["total"] == 2);
  CHECK(second[0]["successes"] == 1);
}

TEST_CASE("proposals and draft manifest staging") {
  Workspace ws;
  ConsoleApi api(ws.options());
  std::string original = read_file(ws.manifest);

  auto r = post(api, "/api/proposals", {{"base_task", "carrot_base"}, {"axis", "S-PROP"}});
  REQUIRE(r.status == 200);
  json body = json::parse(r.body);
  REQUIRE(body["drafts"].size() == 3);
  for (const auto& d : body["drafts"]) {
    CHECK(d["delta"].contains("instruction"));
    CHECK_FALSE(d["delta"].contains("visual"));
  }

  auto unsupported = post(api, "/api/proposals", {{"base_task", "carrot_base"}, {"axis", "V-VIEW"}});
  CHECK(unsupported.status == 400);
  CHECK(json::parse(unsupported.body)["code"] == "UnsupportedAxis");

  auto accepted = post(api, "/api/manifest/conditions", body["drafts"][0]);
  CHECK(accepted.status == 201);
  CHECK(json::parse(get(api, "/api/manifest/draft").body)["manifest"]["conditions"].size() == 56);
  CHECK(json::parse(get(api, "/api/manifest").body)["manifest"]["conditions"].size() == 55);
  CHECK(read_file(ws.manifest) == original);

  json bad = body["drafts"][1];
  bad["axis"] = "V-SC";
  auto mislabeled = post(api, "/api/manifest/conditions", {{"condition", bad}});
  CHECK(mislabeled.status == 422);
  CHECK(json::parse(mislabeled.body)["code"] == "CategoryMismatch");

  CHECK(post(api, "/api/manifest/commit", json::object()).status == 200);
  CHECK(load_manifest(ws.manifest.string()).conditions.size() == 56);
  CHECK_FALSE(std::filesystem::exists(draft_path(ws.manifest)));
}

TEST_CASE("proposal transport failures map to 502") {
  Workspace ws;
  auto opts = ws.options();
  opts.backend.backend = "http";
  opts.backend.endpoint = "http://127.0.0.1:1/v1";
  opts.backend.backoff = std::chrono::milliseconds(1);
  ConsoleApi api(opts);
  auto r = post(api, "/api/proposals", {{"base_task", "carrot_base"}, {"axis", "S-PROP"}});
  CHECK(r.status == 502);
  CHECK(json::parse(r.body)["code"] == "TransportError");

  opts.backend.backend = "mock";
  opts.backend.mock_dir = test_data_dir() / "mock_malformed";
  ConsoleApi api2(opts);
  CHECK(post(api2, "/api/proposals", {{"base_task", "carrot_base"}, {"axis", "S-PROP"}}).status == 502);
}

TEST_CASE("concurrent trial posts over HTTP produce a gap-free log") {
  Workspace ws;
  ConsoleApi api(ws.options());
  int port = api.start();
  httplib::Client setup("127.0.0.1", port);
  auto created = setup.Post("/api/campaigns",
                            json({{"id", "race"}, {"models", {"a", "b", "c", "d"}}, {"trials_per_condition", 10}})
                                .dump(),
                            "application/json");
  REQUIRE(created);
  REQUIRE(created->status == 201);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");

  constexpr int kClients = 8, kPerClient = 5;
  std::vector<std::thread> clients;
  std::atomic<int> accepted{0};
  for (int c = 0; c < kClients; ++c) {
    clients.emplace_back([&, c] {
      httplib::Client cli("127.0.0.1", port);
      for (int i = 0; i < kPerClient; ++i) {
        std::string model = std::string(1, static_cast<char>('a' + c % 4));
        auto res = cli.Post("/api/campaigns/race/trials",
                            trial(model, "carrot_base", i % 2 ? "success" : "failure", 20).dump(),
                            "application/json");
        if (res && res->status == 201) ++accepted;
      }
    });
  }
  for (auto& t : clients) t.join();
  CHECK(accepted == kClients * kPerClient);

  auto lines = read_file(ws.tmp / "race.stargen.log");
  CampaignLog log = CampaignLog::replay(lines);  // throws on any gap or bad checksum
  CHECK(log.state().trial_count() == kClients * kPerClient);
  CHECK(log.lines().size() == 1 + kClients * kPerClient);

  auto progress = setup.Get("/api/campaigns/race/progress");
  REQUIRE(progress);
  CHECK(json::parse(progress->body)["trials"] == kClients * kPerClient);

  auto options = setup.Options("/api/campaigns");
  REQUIRE(options);
  CHECK(options->status == 204);
  api.stop();
}

TEST_CASE("server holds the writer lock") {
  Workspace ws;
  ConsoleApi api(ws.options());
  post(api, "/api/campaigns", {{"id", "held"}, {"models", {"m"}}});
  CHECK(post(api, "/api/campaigns/held/trials", trial("m", "carrot_base", "success", 5)).status == 201);
  CampaignDirectory dir(ws.tmp.path());
  CHECK_THROWS_AS(dir.open_writer("held"), Error);
}

TEST_CASE("CLI csv and API aggregates agree on both fixtures") {
  Workspace ws;
  ConsoleApi api(ws.options());
  for (const char* name : {"main_results", "compositional"}) {
    std::istringstream in;
    std::ostringstream out, err;
    auto env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
    int code = run_cli({"report", (ws.tmp / (std::string(name) + ".stargen.log")).string(), "--manifest",
                        ws.manifest.string(), "--format", "csv"},
                       {in, out, err, env});
    REQUIRE(code == 0);
    std::map<std::string, std::pair<long, long>> cli;
    std::istringstream csv(out.str());
    std::string line;
    std::getline(csv, line);  // header
    while (std::getline(csv, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
      REQUIRE(f.size() == 5);
      cli[f[0] + "|" + f[1]] = {std::stol(f[2]), std::stol(f[3])};
    }
    json records = json::parse(get(api, std::string("/api/campaigns/") + name + "/aggregates").body);
    std::map<std::string, std::pair<long, long>> http;
    for (const auto& r : records) {
      ReportRow row{r["model"], r["group"], r["key"], {}, false};
      http[row.model + "|" + row.prefixed_key()] = {r["successes"].get<long>(), r["total"].get<long>()};
    }
    CHECK(cli.size() > 0);
    CHECK(cli == http);
  }
}
