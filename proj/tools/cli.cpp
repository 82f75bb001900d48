#include "stargen/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "stargen/aggregate.hpp"
#include "stargen/campaign.hpp"
#include "stargen/console_api.hpp"
#include "stargen/manifest.hpp"
#include "stargen/util.hpp"

namespace fs = std::filesystem;

namespace stargen {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::LockFailed:
    case ErrorCode::TransportError:
    case ErrorCode::Timeout:
    case ErrorCode::AuthFailure:
      return kExitIo;
    case ErrorCode::UnsupportedAxis:
    case ErrorCode::UnsupportedFormat:
      return kExitUsage;
    default:
      return kExitValidation;
  }
}

namespace {

void print_error(std::ostream& err, const Error& e) {
  if (const auto* v = dynamic_cast<const ValidationError*>(&e)) {
    for (const auto& d : v->diagnostics()) err << "error: " << d.to_string() << "\n";
    return;
  }
  err << "error: " << e.diagnostic().to_string() << "\n";
}

/// `<dir>/<id>.stargen.log` -> (dir, id)
std::pair<fs::path, std::string> split_log_path(const fs::path& log) {
  std::string name = log.filename().string();
  constexpr std::string_view suffix = ".stargen.log";
  if (name.size() <= suffix.size() || !name.ends_with(suffix))
    throw Error(ErrorCode::IoError, "campaign log must be named <id>.stargen.log", log.string());
  if (!fs::is_regular_file(log)) throw Error(ErrorCode::IoError, "no such campaign log", log.string());
  fs::path dir = log.parent_path();
  if (dir.empty()) dir = ".";
  return {dir, name.substr(0, name.size() - suffix.size())};
}

CampaignState load_state(const fs::path& log) {
  auto [dir, id] = split_log_path(log);
  return CampaignDirectory(dir).load(id);
}

/// Finds the manifest a campaign was created against: `explicit_path` if
/// given, otherwise a `*.stargen.json` beside the log or in the working
/// directory whose canonical hash matches.
BenchmarkManifest manifest_for(const CampaignState& state, const fs::path& log,
                               const std::string& explicit_path) {
  if (!explicit_path.empty()) return load_manifest(explicit_path);
  fs::path log_dir = log.parent_path().empty() ? fs::path(".") : log.parent_path();
  std::vector<fs::path> dirs{log_dir, log_dir / "..", "."};
  for (const auto& d : dirs) {
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(d, ec)) {
      std::string name = e.path().filename().string();
      if (!name.ends_with(".stargen.json")) continue;
      try {
        BenchmarkManifest m = load_manifest(e.path().string());
        if (manifest_hash(m) == state.config().manifest_sha256) return m;
      } catch (const Error&) {
      }
    }
  }
  throw Error(ErrorCode::IoError,
              "no manifest with hash " + state.config().manifest_sha256 + " found; pass --manifest",
              state.config().id);
}

BackendConfig backend_config(const std::string& config_path, const EnvLookup& env) {
  if (!config_path.empty()) return load_backend_config(fs::path(config_path), env);
  if (fs::exists("stargen.toml")) return load_backend_config(fs::path("stargen.toml"), env);
  return load_backend_config(std::nullopt, env);
}

// ---- subcommands ----------------------------------------------------------------

int cmd_validate(const std::string& path, CliIo& io) {
  BenchmarkManifest m = load_manifest(path);
  io.out << "ok: " << m.name << " (" << m.base_tasks.size() << " base tasks, "
         << m.conditions.size() << " conditions, " << m.compositions.size() << " compositions)\n";
  io.out << coverage_matrix(m).summary() << "\n";
  return kExitOk;
}

struct InitArgs {
  std::string manifest, id, dir = ".", scope = "default";
  std::vector<std::string> models, conditions, exclusions;
  std::uint32_t trials = 5, max_steps = 100;
};

int cmd_init(const InitArgs& a, CliIo& io) {
  BenchmarkManifest m = load_manifest(a.manifest);
  std::vector<ScopeEntry> scope;
  if (!a.conditions.empty()) {
    for (const auto& id : a.conditions) {
      if (m.find_base_task(id)) scope.push_back({id, ScopeKind::Base});
      else if (m.find_condition(id)) scope.push_back({id, ScopeKind::Condition});
      else if (m.find_composition(id)) scope.push_back({id, ScopeKind::Composition});
      else throw Error(ErrorCode::UnknownCondition, "no condition '" + id + "' in manifest", id);
    }
  } else if (a.scope == "compositions") {
    scope = composition_scope(m);
  } else if (a.scope == "all") {
    scope = default_scope(m);
    auto c = composition_scope(m);
    scope.insert(scope.end(), c.begin(), c.end());
  }
  CampaignConfig cfg = make_config(a.id, m, a.models, std::move(scope));
  cfg.trials_per_condition = a.trials;
  cfg.max_steps = a.max_steps;
  for (const auto& x : a.exclusions) {
    auto colon = x.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorCode::InvalidConfig, "--exclude expects model:condition, got '" + x + "'");
    cfg.exclusions.push_back({x.substr(0, colon), x.substr(colon + 1)});
  }
  CampaignDirectory dir(a.dir);
  CampaignState s = dir.create(cfg, m);
  io.out << "created " << dir.log_path(cfg.id).string() << ": " << cfg.models.size() << " models x "
         << cfg.scope.size() << " conditions, " << s.required_total() << " trials required\n";
  return kExitOk;
}

struct TrialArgs {
  std::string log, model, condition, outcome, note;
  std::optional<std::uint32_t> steps;
  bool overflow = false, interactive = false;
};

std::string read_line(CliIo& io, const std::string& prompt, bool& eof) {
  io.out << prompt << std::flush;
  std::string line;
  if (!std::getline(io.in, line)) {
    eof = true;
    return {};
  }
  return normalize_whitespace(line);
}

int cmd_trial_interactive(CampaignWriter& w, CliIo& io) {
  std::set<std::string> skipped;
  std::size_t recorded = 0;
  for (;;) {
    std::optional<ProgressCell> cell;
    for (const auto& c : w.state().queue())
      if (!skipped.count(c.model + "\x1f" + c.condition)) {
        cell = c;
        break;
      }
    if (!cell) {
      io.out << (w.state().complete() ? "campaign complete\n" : "no cells left in queue\n");
      break;
    }
    std::uint32_t max_steps = w.state().config().max_steps;
    io.out << "\n" << cell->condition << " / " << cell->model << "  [" << cell->render() << "]\n";
    bool eof = false;
    std::string ans = read_line(io, "outcome [s]uccess [f]ailure [i]rrecoverable [t]imeout, [n]ext cell, [q]uit: ", eof);
    if (eof || ans == "q") break;
    if (ans == "n") {
      skipped.insert(cell->model + "\x1f" + cell->condition);
      continue;
    }
    std::optional<Outcome> outcome;
    if (ans == "s") outcome = Outcome::Success;
    else if (ans == "f") outcome = Outcome::Failure;
    else if (ans == "i") outcome = Outcome::Irrecoverable;
    else if (ans == "t") outcome = Outcome::Timeout;
    else outcome = parse_outcome(ans);
    if (!outcome) {
      io.err << "unrecognized outcome '" << ans << "'\n";
      continue;
    }
    TrialInput in;
    in.model = cell->model;
    in.condition = cell->condition;
    in.outcome = *outcome;
    if (*outcome == Outcome::Timeout) {
      in.steps = max_steps;
    } else {
      std::string s = read_line(io, "steps (0-" + std::to_string(max_steps) + "): ", eof);
      if (eof) break;
      try {
        std::size_t used = 0;
        unsigned long v = std::stoul(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        in.steps = static_cast<std::uint32_t>(v);
      } catch (const std::exception&) {
        io.err << "steps must be a nonnegative integer\n";
        continue;
      }
    }
    in.note = read_line(io, "note (optional): ", eof);
    try {
      TrialRecord r = w.append(in);
      ++recorded;
      io.out << "recorded seq " << r.seq << "\n";
    } catch (const Error& e) {
      print_error(io.err, e);
    }
  }
  io.out << recorded << " trial(s) recorded\n";
  return kExitOk;
}

int cmd_trial(const TrialArgs& a, CliIo& io) {
  auto [dir_path, id] = split_log_path(a.log);
  CampaignDirectory dir(dir_path);
  CampaignWriter w = dir.open_writer(id);
  if (a.interactive) return cmd_trial_interactive(w, io);

  if (a.model.empty() || a.condition.empty() || a.outcome.empty())
    throw CLI::ValidationError("--model, --condition and --outcome are required unless --interactive");
  TrialInput in;
  in.model = a.model;
  in.condition = a.condition;
  auto o = parse_outcome(a.outcome);
  if (!o) throw CLI::ValidationError("--outcome must be success, failure, irrecoverable or timeout");
  in.outcome = *o;
  if (a.steps) in.steps = *a.steps;
  else if (*o == Outcome::Timeout) in.steps = w.state().config().max_steps;
  else throw CLI::ValidationError("--steps is required unless the outcome is timeout");
  in.note = a.note;
  in.allow_overflow = a.overflow;
  TrialRecord r = w.append(in);
  const ProgressCell* c = w.state().cell(r.model, r.condition);
  io.out << "recorded seq " << r.seq << ": " << r.model << " / " << r.condition << " "
         << to_string(r.outcome) << (r.overflow ? " (over quota)" : "") << "  [" << c->render() << "]\n";
  return kExitOk;
}

struct ReportArgs {
  std::string log, manifest, group, format = "md", out;
};

int cmd_report(const ReportArgs& a, CliIo& io) {
  ReportFormat format = parse_format(a.format);
  std::optional<ReportGroup> group;
  if (!a.group.empty()) {
    group = parse_group(a.group);
    if (!group) throw CLI::ValidationError("--group must be condition, axis, category or composition");
  }
  CampaignState s = load_state(a.log);
  BenchmarkManifest m = manifest_for(s, a.log, a.manifest);
  std::string text = export_report(compute_report(s, m), format, group);
  if (a.out.empty()) {
    io.out << text;
  } else {
    try {
      write_file_atomic(a.out, text);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, e.what(), a.out);
    }
  }
  return kExitOk;
}

struct ProposeArgs {
  std::string manifest, base_task, axis, backend, mock_dir, accept_into, config, image;
  unsigned count = 3;
  bool experimental = false;
};

int cmd_propose(const ProposeArgs& a, CliIo& io) {
  BenchmarkManifest m = load_manifest(a.manifest);
  BackendConfig bc = backend_config(a.config, io.env);
  if (!a.backend.empty()) bc.backend = a.backend;
  if (!a.mock_dir.empty()) bc.mock_dir = a.mock_dir;

  ProposalRequest req = make_request(m, a.base_task, a.axis);
  req.count = a.count;
  req.experimental = a.experimental;
  build_prompt(req);  // rejects unsupported axes before touching the backend
  fs::path image = a.image.empty() ? fs::path(a.manifest).parent_path() / req.base_task.scene.image
                                   : fs::path(a.image);
  if (!a.image.empty() || (!req.base_task.scene.image.empty() && fs::is_regular_file(image))) {
    try {
      req.image = read_file(image);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, e.what(), image.string());
    }
    auto ext = image.extension().string();
    if (ext == ".png") req.media_type = "image/png";
  }

  auto backend = make_backend(bc, io.env);
  DraftSet drafts = propose(m, req, *backend);
  for (const auto& r : drafts.rejections) io.err << "rejected item " << r.index << ": " << r.reason << "\n";
  io.out << drafts_json(drafts.drafts);

  if (!a.accept_into.empty()) {
    if (!drafts.rejections.empty()) {
      io.err << "error: not accepting drafts because some proposals failed validation\n";
      return kExitValidation;
    }
    BenchmarkManifest target = load_manifest(a.accept_into);
    for (const auto& c : drafts.drafts) target.conditions.push_back(c);
    auto diags = validate_manifest(target);
    if (!diags.empty()) throw ValidationError(std::move(diags));
    try {
      write_file_atomic(a.accept_into, serialize_manifest(target));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, e.what(), a.accept_into);
    }
    io.err << "accepted " << drafts.drafts.size() << " draft(s) into " << a.accept_into << "\n";
  }
  return kExitOk;
}

struct CoverageArgs {
  std::string manifest, against, prior;
};

int cmd_coverage(const CoverageArgs& a, CliIo& io) {
  BenchmarkManifest m = load_manifest(a.manifest);
  CoverageMatrix mine = coverage_matrix(m);
  io.out << mine.summary() << "\n";
  if (!mine.custom_axes.empty()) {
    io.out << "custom axes:";
    for (const auto& x : mine.custom_axes) io.out << " " << x;
    io.out << "\n";
  }
  std::vector<CoverageMatrix> others;
  if (!a.prior.empty()) {
    std::string text;
    try {
      text = read_file(a.prior);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::IoError, e.what(), a.prior);
    }
    auto rows = load_coverage_rows(text);
    if (a.against.empty()) {
      others = std::move(rows);
    } else {
      for (auto& r : rows)
        if (r.label == a.against) others.push_back(std::move(r));
    }
  }
  if (!a.against.empty() && others.empty()) {
    if (!fs::exists(a.against))
      throw Error(ErrorCode::IoError, "'" + a.against + "' is neither a prior-work row nor a manifest file");
    others.push_back(coverage_matrix(load_manifest(a.against)));
  }
  if (others.empty()) {
    CoverageMatrix none;
    none.label = "(none)";
    io.out << "\n" << diff_coverage(mine, none).table;
    return kExitOk;
  }
  for (const auto& o : others) {
    CoverageDiff d = diff_coverage(mine, o);
    io.out << "\nvs " << o.label << " (" << o.summary() << ")\n";
    io.out << "only in " << mine.label << ":";
    for (const auto& x : d.added) io.out << " " << x;
    io.out << "\nonly in " << o.label << ":";
    for (const auto& x : d.removed) io.out << " " << x;
    io.out << "\n\n" << d.table;
  }
  return kExitOk;
}

struct ServeArgs {
  std::string campaign_dir = ".", manifest, config, host = "127.0.0.1";
  int port = kDefaultPort;
};

int cmd_serve(const ServeArgs& a, CliIo& io) {
  ServerOptions o;
  o.campaign_dir = a.campaign_dir;
  o.port = a.port;
  o.host = a.host;
  o.backend = backend_config(a.config, io.env);
  if (!a.manifest.empty()) {
    o.manifest_path = a.manifest;
  } else {
    std::vector<fs::path> found;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(a.campaign_dir, ec))
      if (e.path().filename().string().ends_with(".stargen.json")) found.push_back(e.path());
    if (found.size() != 1)
      throw CLI::ValidationError("--manifest is required unless the campaign directory holds exactly one *.stargen.json");
    o.manifest_path = found.front();
  }
  ConsoleApi api(o);
  io.err << "serving " << o.campaign_dir.string() << " on http://" << o.host << ":" << o.port << "\n";
  api.run();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, CliIo io) {
  CLI::App app{"Benchmark manifests, evaluation campaigns and success-rate reports", "stargen"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stargen 0.1.0");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a manifest and print its coverage");
  validate->add_option("manifest", validate_path, "Manifest file")->required();

  InitArgs init;
  auto* campaign = app.add_subcommand("campaign", "Campaign management");
  campaign->require_subcommand(1);
  auto* init_cmd = campaign->add_subcommand("init", "Create a campaign log");
  init_cmd->add_option("manifest", init.manifest, "Manifest file")->required();
  init_cmd->add_option("--id", init.id, "Campaign id")->required();
  init_cmd->add_option("--model", init.models, "Model id (repeatable)")->required();
  init_cmd->add_option("--dir", init.dir, "Campaign directory")->capture_default_str();
  init_cmd->add_option("--trials", init.trials, "Trials per condition")->capture_default_str()->check(CLI::PositiveNumber);
  init_cmd->add_option("--max-steps", init.max_steps, "Step budget per trial")->capture_default_str()->check(CLI::PositiveNumber);
  init_cmd->add_option("--scope", init.scope, "default (base tasks + conditions), compositions, or all")
      ->check(CLI::IsMember({"default", "compositions", "all"}))
      ->capture_default_str();
  init_cmd->add_option("--condition", init.conditions, "Explicit scope entry (repeatable)");
  init_cmd->add_option("--exclude", init.exclusions, "model:condition cell never run (repeatable)");

  TrialArgs trial;
  auto* trial_cmd = app.add_subcommand("trial", "Record trial outcomes");
  trial_cmd->add_option("campaign", trial.log, "Campaign log (<id>.stargen.log)")->required();
  trial_cmd->add_option("--model", trial.model, "Model id");
  trial_cmd->add_option("--condition", trial.condition, "Condition id");
  trial_cmd->add_option("--outcome", trial.outcome, "success|failure|irrecoverable|timeout");
  trial_cmd->add_option("--steps", trial.steps, "Steps executed");
  trial_cmd->add_option("--note", trial.note, "Free-text note");
  trial_cmd->add_flag("--overflow", trial.overflow, "Allow recording beyond the cell quota");
  trial_cmd->add_flag("-i,--interactive", trial.interactive, "Prompt for each remaining cell");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Aggregate success rates");
  report_cmd->add_option("campaign", report.log, "Campaign log")->required();
  report_cmd->add_option("--manifest", report.manifest, "Manifest (found by hash if omitted)");
  report_cmd->add_option("--group", report.group, "condition|axis|category|composition (default: all)");
  report_cmd->add_option("--format", report.format, "md|csv|chart")->capture_default_str();
  report_cmd->add_option("-o,--out", report.out, "Write to file instead of stdout");

  ProposeArgs propose_args;
  auto* propose_cmd = app.add_subcommand("propose", "Draft new conditions with a VLM");
  propose_cmd->add_option("manifest", propose_args.manifest, "Manifest file")->required();
  propose_cmd->add_option("--base-task", propose_args.base_task, "Base task id")->required();
  propose_cmd->add_option("--axis", propose_args.axis, "Axis id")->required();
  propose_cmd->add_option("--backend", propose_args.backend, "mock|http (overrides config)")
      ->check(CLI::IsMember({"mock", "http"}));
  propose_cmd->add_option("--mock-dir", propose_args.mock_dir, "Mock response directory");
  propose_cmd->add_option("--count", propose_args.count, "Proposals to request")->capture_default_str()->check(CLI::PositiveNumber);
  propose_cmd->add_option("--image", propose_args.image, "Scene image to send");
  propose_cmd->add_option("--config", propose_args.config, "Backend config file (default ./stargen.toml)");
  propose_cmd->add_option("--accept-into", propose_args.accept_into, "Append drafts to this manifest");
  propose_cmd->add_flag("--experimental", propose_args.experimental, "Allow axes without a dedicated prompt");

  CoverageArgs coverage;
  auto* coverage_cmd = app.add_subcommand("coverage", "Axis coverage of a manifest");
  coverage_cmd->add_option("manifest", coverage.manifest, "Manifest file")->required();
  coverage_cmd->add_option("--against", coverage.against, "Prior-work row name or another manifest");
  coverage_cmd->add_option("--prior", coverage.prior, "Prior-work coverage rows (JSON)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the console API");
  serve_cmd->add_option("--port", serve.port, "Port")->capture_default_str();
  serve_cmd->add_option("--campaign-dir", serve.campaign_dir, "Campaign directory")->capture_default_str();
  serve_cmd->add_option("--manifest", serve.manifest, "Manifest file");
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--config", serve.config, "Backend config file");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    if (*validate) return cmd_validate(validate_path, io);
    if (*init_cmd) return cmd_init(init, io);
    if (*trial_cmd) return cmd_trial(trial, io);
    if (*report_cmd) return cmd_report(report, io);
    if (*propose_cmd) return cmd_propose(propose_args, io);
    if (*coverage_cmd) return cmd_coverage(coverage, io);
    if (*serve_cmd) return cmd_serve(serve, io);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, io.out, io.err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    print_error(io.err, e);
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace stargen
