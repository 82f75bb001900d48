#include "stargen/aggregate.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"
#include "stargen/util.hpp"

namespace stargen {

using nlohmann::json;

const RateEntry* ModelRates::find(std::vector<RateEntry> ModelRates::*section,
                                  std::string_view key) const {
  for (const auto& e : this->*section)
    if (e.key == key) return &e;
  if (section == &ModelRates::composition_groups && composition_overall &&
      key == kOverallKey)
    return &*composition_overall;
  return nullptr;
}

const ModelRates* AggregateReport::model(std::string_view id) const {
  for (const auto& m : models)
    if (m.model == id) return &m;
  return nullptr;
}

namespace {

/// Accumulates entries keyed by string, remembering a rank for ordering.
class Pool {
public:
  void add(const std::string& key, std::size_t rank, const ProgressCell& c) {
    auto [it, inserted] = slots_.try_emplace(key);
    if (inserted) it->second.rank = rank;
    it->second.entry.key = key;
    it->second.entry.cell += RateCell{c.successes, c.done};
    it->second.entry.partial |= c.status == CellStatus::Partial;
  }

  std::vector<RateEntry> take() const {
    std::vector<const Slot*> order;
    for (const auto& [k, s] : slots_) order.push_back(&s);
    std::stable_sort(order.begin(), order.end(),
                     [](const Slot* a, const Slot* b) { return a->rank < b->rank; });
    std::vector<RateEntry> out;
    for (const Slot* s : order) out.push_back(s->entry);
    return out;
  }

private:
  struct Slot {
    std::size_t rank = 0;
    RateEntry entry;
  };
  std::map<std::string, Slot> slots_;
};

}  // namespace

AggregateReport compute_report(const CampaignState& state, const BenchmarkManifest& manifest,
                               const AxisRegistry& registry) {
  const CampaignConfig& cfg = state.config();
  std::string hash = manifest_hash(manifest);
  if (hash != cfg.manifest_sha256)
    throw Error(ErrorCode::ManifestHashMismatch,
                "campaign was created against manifest " + cfg.manifest_sha256 +
                    ", given manifest hashes to " + hash,
                cfg.id);

  AggregateReport r;
  r.campaign_id = cfg.id;
  r.manifest_name = cfg.manifest_name;
  r.manifest_sha256 = cfg.manifest_sha256;
  r.generated_at = format_rfc3339(state.last_timestamp());
  r.trial_count = state.trial_count();
  for (const auto& t : state.trials()) r.overflow_count += t.overflow ? 1 : 0;

  std::map<std::string, std::size_t> axis_rank;
  for (std::size_t i = 0; i < registry.axes().size(); ++i) axis_rank[registry.axes()[i].id] = i + 1;

  // Composition signatures rank by first appearance in scope.
  std::map<std::string, std::size_t> signature_rank;
  for (const auto& s : cfg.scope)
    if (s.kind == ScopeKind::Composition)
      if (const auto* comp = manifest.find_composition(s.id))
        signature_rank.try_emplace(comp->signature(), signature_rank.size());

  for (const auto& model : cfg.models) {
    ModelRates mr;
    mr.model = model;
    Pool axes, categories, groups;
    RateEntry overall{std::string(kOverallKey), {}, false};

    for (const auto& s : cfg.scope) {
      const ProgressCell* c = state.cell(model, s.id);
      if (!c || c->done == 0) continue;  // never attempted: omitted, not zero
      bool partial = c->status == CellStatus::Partial;
      mr.conditions.push_back({s.id, {c->successes, c->done}, partial});

      switch (s.kind) {
        case ScopeKind::Base:
          axes.add(std::string(kInDistributionKey), 0, *c);
          break;
        case ScopeKind::Condition: {
          const Condition* cond = manifest.find_condition(s.id);
          const AxisDescriptor& ax = registry.lookup(cond->axis);
          axes.add(ax.id, axis_rank[ax.id], *c);
          categories.add(ax.category.label(), ax.category.rank(), *c);
          break;
        }
        case ScopeKind::Composition: {
          const CompositeCondition* comp = manifest.find_composition(s.id);
          mr.compositions.push_back({s.id, {c->successes, c->done}, partial});
          std::string sig = comp->signature();
          groups.add(sig, signature_rank[sig], *c);
          overall.cell += RateCell{c->successes, c->done};
          overall.partial |= partial;
          break;
        }
      }
    }
    mr.axes = axes.take();
    mr.categories = categories.take();
    mr.composition_groups = groups.take();
    if (overall.cell.total > 0) mr.composition_overall = overall;
    r.models.push_back(std::move(mr));
  }
  return r;
}

std::string_view to_string(ReportGroup g) {
  switch (g) {
    case ReportGroup::Condition: return "condition";
    case ReportGroup::Axis: return "axis";
    case ReportGroup::Category: return "category";
    case ReportGroup::Composition: return "composition";
  }
  return "?";
}

std::optional<ReportGroup> parse_group(std::string_view s) {
  for (auto g : {ReportGroup::Condition, ReportGroup::Axis, ReportGroup::Category,
                 ReportGroup::Composition})
    if (to_string(g) == s) return g;
  return std::nullopt;
}

std::string ReportRow::prefixed_key() const {
  if (group == "condition") return "cond:" + key;
  if (group == "axis") return "axis:" + key;
  if (group == "category") return "cat:" + key;
  if (group == "composition") return "comp:" + key;
  if (group == "pair") return "pair:" + key;
  return key;  // overall
}

std::vector<ReportRow> report_rows(const AggregateReport& report, std::optional<ReportGroup> group) {
  auto want = [&](ReportGroup g) { return !group || *group == g; };
  std::vector<ReportRow> rows;
  auto emit = [&](const std::string& model, const char* name, const std::vector<RateEntry>& v) {
    for (const auto& e : v) rows.push_back({model, name, e.key, e.cell, e.partial});
  };
  for (const auto& m : report.models) {
    if (want(ReportGroup::Condition)) emit(m.model, "condition", m.conditions);
    if (want(ReportGroup::Axis)) emit(m.model, "axis", m.axes);
    if (want(ReportGroup::Category)) emit(m.model, "category", m.categories);
    if (want(ReportGroup::Composition)) {
      emit(m.model, "composition", m.compositions);
      emit(m.model, "pair", m.composition_groups);
      if (m.composition_overall)
        rows.push_back({m.model, "overall", m.composition_overall->key, m.composition_overall->cell,
                        m.composition_overall->partial});
    }
  }
  return rows;
}

ReportFormat parse_format(std::string_view s) {
  if (s == "md" || s == "markdown") return ReportFormat::Markdown;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "chart" || s == "chart-data") return ReportFormat::Chart;
  throw Error(ErrorCode::UnsupportedFormat,
              "unsupported report format '" + std::string(s) + "' (expected md, csv or chart)");
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string export_csv(const AggregateReport& report, std::optional<ReportGroup> group) {
  std::string out = "model,key,successes,total,rate\r\n";
  for (const auto& r : report_rows(report, group)) {
    out += csv_field(r.model) + "," + csv_field(r.prefixed_key()) + "," +
           std::to_string(r.cell.successes) + "," + std::to_string(r.cell.total) + "," +
           format_percent(r.cell.successes, r.cell.total) + "\r\n";
  }
  return out;
}

std::string export_chart(const AggregateReport& report, std::optional<ReportGroup> group) {
  json records = json::array();
  for (const auto& r : report_rows(report, group))
    records.push_back({{"model", r.model},
                       {"group", r.group},
                       {"key", r.key},
                       {"successes", r.cell.successes},
                       {"total", r.cell.total}});
  json doc = {{"campaign", report.campaign_id},
              {"manifest", {{"name", report.manifest_name}, {"sha256", report.manifest_sha256}}},
              {"generated_at", report.generated_at},
              {"records", records}};
  return doc.dump(2) + "\n";
}

/// Row keys of one section across all models, in the order the first model
/// to report each key placed it (sections are already rank-sorted).
std::vector<std::string> union_keys(const AggregateReport& report,
                                    const std::vector<RateEntry> ModelRates::*section) {
  std::vector<std::string> keys;
  for (const auto& m : report.models) {
    std::size_t insert_at = 0;
    for (const auto& e : m.*section) {
      auto it = std::find(keys.begin(), keys.end(), e.key);
      if (it == keys.end()) {
        keys.insert(keys.begin() + static_cast<std::ptrdiff_t>(insert_at), e.key);
        ++insert_at;
      } else {
        insert_at = static_cast<std::size_t>(it - keys.begin()) + 1;
      }
    }
  }
  return keys;
}

std::string md_cell(const RateEntry* e, bool with_percent) {
  if (!e) return "--";
  std::string s = std::to_string(e->cell.successes) + "/" + std::to_string(e->cell.total);
  if (e->partial) s += "*";
  if (with_percent) s += " (" + format_percent(e->cell.successes, e->cell.total) + ")";
  return s;
}

std::string md_table(const AggregateReport& report, const std::string& first_col,
                     std::vector<RateEntry> ModelRates::*section, bool with_percent,
                     bool with_overall, bool& any_partial) {
  std::string out = "| " + first_col + " |";
  std::string rule = "|---|";
  for (const auto& m : report.models) {
    out += " " + m.model + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  std::vector<std::string> keys = union_keys(report, section);
  if (with_overall &&
      std::any_of(report.models.begin(), report.models.end(),
                  [](const ModelRates& m) { return m.composition_overall.has_value(); }))
    keys.emplace_back(kOverallKey);
  for (const auto& k : keys) {
    out += "| " + k + " |";
    for (const auto& m : report.models) {
      const RateEntry* e = m.find(section, k);
      if (e && e->partial) any_partial = true;
      out += " " + md_cell(e, with_percent) + " |";
    }
    out += "\n";
  }
  return out;
}

std::string export_markdown(const AggregateReport& report, std::optional<ReportGroup> group) {
  auto want = [&](ReportGroup g) { return !group || *group == g; };
  bool any_partial = false;
  std::string out = "# Campaign report: " + report.campaign_id + "\n\n";
  out += "- manifest: " + report.manifest_name + " (sha256 " + report.manifest_sha256 + ")\n";
  out += "- generated: " + report.generated_at + "\n";
  out += "- trials: " + std::to_string(report.trial_count);
  if (report.overflow_count)
    out += " (" + std::to_string(report.overflow_count) + " over quota, excluded)";
  out += "\n";

  if (want(ReportGroup::Condition)) {
    out += "\n## Conditions\n\n";
    out += md_table(report, "condition", &ModelRates::conditions, false, false, any_partial);
  }
  if (want(ReportGroup::Axis)) {
    out += "\n## Axes\n\n";
    out += "ID pools every base task evaluated for the model.\n\n";
    out += md_table(report, "axis", &ModelRates::axes, true, false, any_partial);
  }
  if (want(ReportGroup::Category)) {
    out += "\n## Categories\n\n";
    out += md_table(report, "category", &ModelRates::categories, true, false, any_partial);
  }
  if (want(ReportGroup::Composition)) {
    out += "\n## Compositions\n\n";
    out += md_table(report, "composition", &ModelRates::compositions, false, false, any_partial);
    out += "\n## Composition groups\n\n";
    out += md_table(report, "axes", &ModelRates::composition_groups, true, true, any_partial);
  }
  if (any_partial) out += "\n\\* partially evaluated: fewer trials than the campaign requires.\n";
  return out;
}

}  // namespace

std::string export_report(const AggregateReport& report, ReportFormat format,
                          std::optional<ReportGroup> group) {
  switch (format) {
    case ReportFormat::Markdown: return export_markdown(report, group);
    case ReportFormat::Csv: return export_csv(report, group);
    case ReportFormat::Chart: return export_chart(report, group);
  }
  throw Error(ErrorCode::UnsupportedFormat, "unsupported report format");
}

std::string export_report(const AggregateReport& report, std::string_view format,
                          std::optional<ReportGroup> group) {
  return export_report(report, parse_format(format), group);
}

}  // namespace stargen
