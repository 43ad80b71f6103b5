#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "headline/error.hpp"
#include "headline/harness.hpp"

namespace headline::harness {

MetricMap metric_map(const metrics::MetricReport& r) {
  return {{"bleu", r.bleu},           {"rouge1", r.rouge1.f1},       {"rouge2", r.rouge2.f1},
          {"rougeL", r.rougeL.f1},    {"bertscore", r.bertscore.f1}, {"meteor", r.meteor}};
}

MetricMap metric_map_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw SchemaError("metric map must be a JSON object");
  if (j.contains("scale") && j.contains("bertscore_f1")) {
    return metric_map(metrics::report_from_json(nlohmann::json(j)));
  }
  MetricMap m;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) continue;
    m.emplace_back(key, value.get<double>());
  }
  return m;
}

std::optional<double> delta_percent(double baseline, double proposed) {
  if (baseline == 0.0) return std::nullopt;
  const double raw = (proposed - baseline) / baseline * 100.0;
  const double rounded = std::floor(raw * 10.0 + 0.5) / 10.0;
  return rounded == 0.0 ? 0.0 : rounded;
}

std::string render_delta(const std::optional<double>& delta) {
  if (!delta) return "—";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", *delta);
  return buf;
}

ComparisonTable compare(const MetricMap& baseline, const MetricMap& proposed) {
  std::map<std::string, double> lookup;
  for (const auto& [k, v] : proposed) {
    if (!lookup.emplace(k, v).second) throw SchemaError("duplicate metric key '" + k + "'");
  }
  std::set<std::string> base_keys;
  for (const auto& [k, v] : baseline) {
    if (!base_keys.insert(k).second) throw SchemaError("duplicate metric key '" + k + "'");
  }
  if (base_keys.size() != lookup.size()) throw SchemaError("baseline and proposed report different metrics");
  ComparisonTable table;
  for (const auto& [k, v] : baseline) {
    const auto it = lookup.find(k);
    if (it == lookup.end()) throw SchemaError("metric '" + k + "' missing from the proposed side");
    table.rows.push_back({k, v, it->second, delta_percent(v, it->second)});
  }
  return table;
}

ComparisonTable compare(const RunRecord& baseline, const RunRecord& proposed) {
  ComparisonTable t = compare(metric_map(baseline.metrics_percent()), metric_map(proposed.metrics_percent()));
  t.baseline_label = baseline.run_id;
  t.proposed_label = proposed.run_id;
  return t;
}

ReportFormat parse_report_format(std::string_view s) {
  if (s == "tsv") return ReportFormat::kTsv;
  if (s == "json") return ReportFormat::kJson;
  if (s == "markdown" || s == "md") return ReportFormat::kMarkdown;
  throw ParameterError("unknown report format '" + std::string(s) + "' (tsv, json, markdown)");
}

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Tab and newline would break the row structure of tsv and markdown.
std::string cell(std::string s) {
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

std::string md_cell(const std::string& s) {
  std::string out;
  for (char c : cell(s)) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

struct SampleRow {
  std::size_t id;
  std::string reference;
  std::vector<std::string> outputs;
};

std::vector<std::string> run_labels(std::span<const RunRecord> runs) {
  std::map<std::string, int> mode_count;
  for (const auto& r : runs) ++mode_count[std::string(to_string(r.mode))];
  std::vector<std::string> labels;
  for (const auto& r : runs) {
    const std::string mode(to_string(r.mode));
    labels.push_back(mode_count[mode] == 1 ? mode : r.run_id);
  }
  return labels;
}

std::vector<SampleRow> sample_rows(std::span<const RunRecord> runs, std::size_t count) {
  std::vector<std::map<std::size_t, const SampleRecord*>> by_id(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const auto& s : runs[r].samples) by_id[r][s.id] = &s;
  }
  std::vector<SampleRow> rows;
  for (const auto& s : runs.front().samples) {
    if (rows.size() >= count) break;
    SampleRow row{s.id, s.reference, {}};
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const auto it = by_id[r].find(s.id);
      row.outputs.push_back(it == by_id[r].end() ? std::string() : it->second->generated);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void comparison_tsv(std::ostream& out, const ComparisonTable& t) {
  out << "metric\t" << cell(t.baseline_label) << '\t' << cell(t.proposed_label) << "\tdelta\n";
  for (const auto& row : t.rows) {
    out << row.metric << '\t' << fixed2(row.baseline) << '\t' << fixed2(row.proposed) << '\t'
        << render_delta(row.delta_percent) << '\n';
  }
}

nlohmann::ordered_json comparison_json(const ComparisonTable& t) {
  nlohmann::ordered_json tj;
  tj["baseline"] = t.baseline_label;
  tj["proposed"] = t.proposed_label;
  tj["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json rj;
    rj["metric"] = row.metric;
    rj["baseline"] = row.baseline;
    rj["proposed"] = row.proposed;
    rj["delta_percent"] = row.delta_percent ? nlohmann::ordered_json(*row.delta_percent) : nlohmann::ordered_json(nullptr);
    rj["delta"] = render_delta(row.delta_percent);
    tj["rows"].push_back(rj);
  }
  return tj;
}

void comparison_markdown(std::ostream& out, const ComparisonTable& t) {
  out << "| Metric | " << md_cell(t.baseline_label) << " | " << md_cell(t.proposed_label)
      << " | Δ |\n|---|---:|---:|---:|\n";
  for (const auto& row : t.rows) {
    out << "| " << row.metric << " | " << fixed2(row.baseline) << " | " << fixed2(row.proposed) << " | "
        << render_delta(row.delta_percent) << " |\n";
  }
}

std::string render_tsv(std::span<const RunRecord> runs, std::span<const ComparisonTable> comparisons,
                       const std::vector<SampleRow>& samples, const std::vector<std::string>& labels) {
  std::ostringstream out;
  for (const auto& t : comparisons) {
    comparison_tsv(out, t);
    out << '\n';
  }
  out << "run_id\tmode";
  for (const auto& [name, value] : metric_map(metrics::MetricReport{})) out << '\t' << name;
  out << '\n';
  for (const auto& r : runs) {
    out << cell(r.run_id) << '\t' << to_string(r.mode);
    for (const auto& [name, value] : metric_map(r.metrics_percent())) out << '\t' << fixed2(value);
    out << '\n';
  }
  out << "\nid\treference";
  for (const auto& l : labels) out << '\t' << cell(l);
  out << '\n';
  for (const auto& s : samples) {
    out << s.id << '\t' << cell(s.reference);
    for (const auto& o : s.outputs) out << '\t' << cell(o);
    out << '\n';
  }
  return out.str();
}

std::string render_json(std::span<const RunRecord> runs, std::span<const ComparisonTable> comparisons,
                        const std::vector<SampleRow>& samples, const std::vector<std::string>& labels) {
  nlohmann::ordered_json doc;
  doc["comparisons"] = nlohmann::ordered_json::array();
  for (const auto& t : comparisons) doc["comparisons"].push_back(comparison_json(t));
  doc["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json rj;
    rj["run_id"] = r.run_id;
    rj["mode"] = std::string(to_string(r.mode));
    rj["metrics"] = metrics::to_json(r.metrics_percent());
    doc["runs"].push_back(rj);
  }
  doc["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    nlohmann::ordered_json sj;
    sj["id"] = s.id;
    sj["reference"] = s.reference;
    nlohmann::ordered_json outputs;
    for (std::size_t i = 0; i < labels.size(); ++i) outputs[labels[i]] = s.outputs[i];
    sj["outputs"] = outputs;
    doc["samples"].push_back(sj);
  }
  return doc.dump(2) + "\n";
}

std::string render_markdown(std::span<const RunRecord> runs, std::span<const ComparisonTable> comparisons,
                            const std::vector<SampleRow>& samples, const std::vector<std::string>& labels) {
  std::ostringstream out;
  for (const auto& t : comparisons) {
    comparison_markdown(out, t);
    out << '\n';
  }
  out << "| Run | Mode";
  const MetricMap names = metric_map(metrics::MetricReport{});
  for (const auto& [name, value] : names) out << " | " << name;
  out << " |\n|---|---";
  for (std::size_t i = 0; i < names.size(); ++i) out << "|---:";
  out << "|\n";
  for (const auto& r : runs) {
    out << "| " << md_cell(r.run_id) << " | " << to_string(r.mode);
    for (const auto& [name, value] : metric_map(r.metrics_percent())) out << " | " << fixed2(value);
    out << " |\n";
  }
  out << "\n| Id | Reference";
  for (const auto& l : labels) out << " | " << md_cell(l);
  out << " |\n|---|---";
  for (std::size_t i = 0; i < labels.size(); ++i) out << "|---";
  out << "|\n";
  for (const auto& s : samples) {
    out << "| " << s.id << " | " << md_cell(s.reference);
    for (const auto& o : s.outputs) out << " | " << md_cell(o);
    out << " |\n";
  }
  return out.str();
}

}  // namespace

std::string render_comparison(const ComparisonTable& table, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kTsv:
      comparison_tsv(out, table);
      break;
    case ReportFormat::kJson:
      out << comparison_json(table).dump(2) << '\n';
      break;
    case ReportFormat::kMarkdown:
      comparison_markdown(out, table);
      break;
  }
  return out.str();
}

std::string render_report(std::span<const RunRecord> runs, std::span<const ComparisonTable> comparisons,
                          ReportFormat format, const ReportOptions& options) {
  if (runs.empty()) throw ParameterError("a report needs at least one run");
  const auto labels = run_labels(runs);
  const auto samples = sample_rows(runs, options.sample_count);
  switch (format) {
    case ReportFormat::kTsv:
      return render_tsv(runs, comparisons, samples, labels);
    case ReportFormat::kJson:
      return render_json(runs, comparisons, samples, labels);
    case ReportFormat::kMarkdown:
      return render_markdown(runs, comparisons, samples, labels);
  }
  throw ParameterError("unknown report format");
}

}  // namespace headline::harness
