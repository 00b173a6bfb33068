#include "crowdqc/report_io.hpp"

#include <cstdio>

namespace crowdqc {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json fraction_json(const std::optional<Fraction>& f) {
  if (!f) return nullptr;
  ordered_json j = ordered_json::object();
  j["value"] = f->value();
  j["numerator"] = f->numerator;
  j["denominator"] = f->denominator;
  return j;
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? fixed(*v) : "n/a"; }

std::string cell(const std::optional<Fraction>& f) {
  if (!f) return "n/a";
  return fixed(f->value()) + " (" + std::to_string(f->numerator) + "/" + std::to_string(f->denominator) + ")";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out += ' ';
    else out.push_back(c);
  }
  return out;
}

}  // namespace

ordered_json report_to_json(const QualityReport& report) {
  ordered_json j = ordered_json::object();
  j["schema"] = 1;
  j["template"] = std::string(to_string(report.template_kind));
  j["submission_count"] = report.submission_count;
  j["unit_count"] = report.unit_count;

  ordered_json th = ordered_json::object();
  th["min_overlap"] = report.thresholds.min_overlap;
  th["pattern_min_answers"] = report.thresholds.pattern_min_answers;
  th["pattern_modal_fraction"] = report.thresholds.pattern_modal_fraction;
  th["golden_pass_threshold"] = report.golden_pass_threshold;
  th["time_sigma"] = 2;
  j["thresholds"] = std::move(th);

  ordered_json workers = ordered_json::array();
  for (const auto& w : report.workers) {
    ordered_json wj = ordered_json::object();
    wj["worker_id"] = w.worker_id;
    wj["units_submitted"] = w.units_submitted;
    wj["answers"] = w.answers;
    wj["duplicate_consistency"] = fraction_json(w.duplicate_consistency);
    wj["golden_accuracy"] = fraction_json(w.golden_accuracy);
    wj["exclude_recommended"] = w.exclude_recommended;
    wj["time_flag"] = w.time_flag;
    wj["time_flagged_units"] = w.time_flagged_units;
    wj["mean_seconds"] = w.mean_seconds;
    wj["pattern_flag"] = w.pattern_flag;
    wj["pattern_description"] = w.pattern_description;
    wj["vs_rest_kappa"] = optional_json(w.vs_rest_kappa);
    wj["feedback_count"] = w.feedback_count;
    workers.push_back(std::move(wj));
  }
  j["workers"] = std::move(workers);

  if (report.agreement) {
    const auto& a = *report.agreement;
    ordered_json aj = ordered_json::object();
    aj["min_overlap"] = a.min_overlap;
    ordered_json pairs = ordered_json::array();
    for (const auto& [pair, pa] : a.pairwise) {
      ordered_json pj = ordered_json::object();
      pj["worker_a"] = pair.first;
      pj["worker_b"] = pair.second;
      pj["kappa"] = pa.kappa;
      pj["overlap"] = pa.overlap;
      pairs.push_back(std::move(pj));
    }
    aj["pairwise"] = std::move(pairs);
    ordered_json insufficient = ordered_json::array();
    for (const auto& [pair, overlap] : a.insufficient_overlap) {
      ordered_json pj = ordered_json::object();
      pj["worker_a"] = pair.first;
      pj["worker_b"] = pair.second;
      pj["overlap"] = overlap;
      insufficient.push_back(std::move(pj));
    }
    aj["insufficient_overlap"] = std::move(insufficient);
    ordered_json pq = ordered_json::object();
    for (const auto& [q, k] : a.per_question) pq[q] = optional_json(k);
    aj["per_question"] = std::move(pq);
    aj["overall"] = optional_json(a.overall);
    aj["pooled_overlap"] = a.pooled_overlap;
    j["agreement"] = std::move(aj);
  } else {
    j["agreement"] = nullptr;
  }

  ordered_json dist = ordered_json::object();
  for (const auto& [q, labels] : report.label_distribution) {
    ordered_json lj = ordered_json::object();
    for (const auto& [label, count] : labels) lj[label] = count;
    dist[q] = std::move(lj);
  }
  j["label_distribution"] = std::move(dist);

  ordered_json dur = ordered_json::object();
  dur["count"] = report.durations.count;
  dur["mean_seconds"] = report.durations.mean_seconds;
  dur["std_seconds"] = report.durations.std_seconds;
  dur["population_insufficient"] = report.time_population_insufficient;
  j["durations"] = std::move(dur);

  ordered_json fb = ordered_json::array();
  for (const auto& f : report.feedback) {
    ordered_json fj = ordered_json::object();
    fj["worker_id"] = f.worker_id;
    fj["unit_id"] = f.unit_id;
    fj["text"] = f.text;
    fb.push_back(std::move(fj));
  }
  j["feedback"] = std::move(fb);
  j["not_applicable"] = report.not_applicable;
  return j;
}

std::string report_json_text(const QualityReport& report) { return report_to_json(report).dump(2) + "\n"; }

std::string report_to_markdown(const QualityReport& report) {
  std::string md;
  md += "# Data quality summary\n\n";
  md += "- Template: " + std::string(to_string(report.template_kind)) + "\n";
  md += "- Submissions: " + std::to_string(report.submission_count) + " over " +
        std::to_string(report.unit_count) + " units\n";
  md += "- Unit duration: mean " + fixed(report.durations.mean_seconds, 1) + " s, std " +
        fixed(report.durations.std_seconds, 1) + " s\n";
  if (report.time_population_insufficient) {
    md += "- Time outliers: fewer than 3 workers, no time flags computed\n";
  }
  if (!report.not_applicable.empty()) {
    md += "- Not applicable to this template:";
    for (const auto& s : report.not_applicable) md += " " + s;
    md += "\n";
  }
  md += "\n## Workers\n\n";
  md += "| Worker | Units | Mean s | Duplicate consistency | Golden accuracy | Exclude? | Time flag | Pattern flag | Kappa vs rest |\n";
  md += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& w : report.workers) {
    md += "| " + md_escape(w.worker_id) + " | " + std::to_string(w.units_submitted) + " | " +
          fixed(w.mean_seconds, 1) + " | " + cell(w.duplicate_consistency) + " | " + cell(w.golden_accuracy) +
          " | " + (w.exclude_recommended ? "yes" : "no") + " | " +
          (w.time_flag ? "yes (" + std::to_string(w.time_flagged_units.size()) + " units)" : "no") + " | " +
          (w.pattern_flag ? "yes: " + md_escape(w.pattern_description) : "no") + " | " + cell(w.vs_rest_kappa) +
          " |\n";
  }

  if (report.agreement) {
    const auto& a = *report.agreement;
    md += "\n## Agreement (Cohen's kappa)\n\n";
    md += "- Overall (pooled): " + cell(a.overall) + " over " + std::to_string(a.pooled_overlap) + " judgements\n";
    for (const auto& [q, k] : a.per_question) md += "- Question `" + q + "`: " + cell(k) + "\n";
    if (!a.pairwise.empty()) {
      md += "\n| Worker A | Worker B | Kappa | Overlap |\n|---|---|---|---|\n";
      for (const auto& [pair, pa] : a.pairwise) {
        md += "| " + md_escape(pair.first) + " | " + md_escape(pair.second) + " | " + fixed(pa.kappa) + " | " +
              std::to_string(pa.overlap) + " |\n";
      }
    }
    if (!a.insufficient_overlap.empty()) {
      md += "\n" + std::to_string(a.insufficient_overlap.size()) + " worker pair(s) below the minimum overlap of " +
            std::to_string(a.min_overlap) + ".\n";
    }
  }

  if (!report.label_distribution.empty()) {
    md += "\n## Label distribution\n";
    for (const auto& [q, labels] : report.label_distribution) {
      md += "\n### " + q + "\n\n| Label | Count |\n|---|---|\n";
      for (const auto& [label, count] : labels) md += "| " + md_escape(label) + " | " + std::to_string(count) + " |\n";
    }
  }

  if (!report.feedback.empty()) {
    md += "\n## Worker feedback\n\n";
    for (const auto& f : report.feedback) {
      md += "- " + md_escape(f.worker_id) + " on " + f.unit_id + ": " + md_escape(f.text) + "\n";
    }
  }
  return md;
}

}  // namespace crowdqc
