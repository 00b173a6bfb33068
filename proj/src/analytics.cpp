#include "crowdqc/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "crowdqc/error.hpp"
#include "crowdqc/kappa.hpp"

namespace crowdqc {

namespace {

constexpr std::string_view kIntentQuestion = "intent";
constexpr std::string_view kEntityQuestion = "entity";

/// Answers indexed by slot position; throws unit_mismatch when the submission
/// does not line up with the unit.
std::vector<const Answer*> answers_by_position(const Submission& submission, const TaskUnit& unit) {
  if (submission.unit_id != unit.unit_id) {
    throw Error(ErrorCode::unit_mismatch,
                "submission for " + submission.unit_id + " checked against " + unit.unit_id);
  }
  if (submission.answers.size() != unit.slots.size()) {
    throw Error(ErrorCode::unit_mismatch, "submission has " + std::to_string(submission.answers.size()) +
                                              " answers for " + std::to_string(unit.slots.size()) + " slots");
  }
  std::vector<const Answer*> out(unit.slots.size(), nullptr);
  for (const auto& a : submission.answers) {
    if (a.position < 0 || a.position >= static_cast<std::int64_t>(out.size()) || out[a.position] != nullptr) {
      throw Error(ErrorCode::unit_mismatch, "answer positions do not cover the unit's slots");
    }
    out[a.position] = &a;
  }
  return out;
}

std::string span_signature(const SpanSet& set) {
  if (set.spans.empty()) return "(none)";
  std::string out;
  for (const auto& s : set.spans) {
    if (!out.empty()) out += ";";
    out += std::to_string(s.start) + "-" + std::to_string(s.end) + ":" + s.type;
  }
  return out;
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", v * 100.0);
  return buf;
}

}  // namespace

const PairAgreement* AgreementTable::find(const std::string& a, const std::string& b) const {
  auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  auto it = pairwise.find(key);
  return it == pairwise.end() ? nullptr : &it->second;
}

WorkerLabels collect_labels(const ProjectData& data) {
  WorkerLabels out;
  const auto kind = data.config.template_kind;
  if (kind == TemplateKind::interactive) return out;

  std::unordered_map<std::string, const TaskUnit*> units;
  for (const auto& u : data.units) units.emplace(u.unit_id, &u);
  std::unordered_map<std::string, const AnnotationItem*> items;
  for (const auto& i : data.items) items.emplace(i.id, &i);
  for (const auto& g : data.golden_pool) items.emplace(g.item.id, &g.item);

  for (const auto& sub : data.submissions) {
    auto uit = units.find(sub.unit_id);
    if (uit == units.end()) throw Error(ErrorCode::unit_mismatch, "submission references unknown unit " + sub.unit_id);
    const TaskUnit& unit = *uit->second;
    auto answers = answers_by_position(sub, unit);
    auto& mine = out[sub.worker_id];
    for (const auto& slot : unit.slots) {
      if (slot.kind == SlotKind::duplicate) continue;
      const Answer& a = *answers[slot.position];
      if (const auto* c = std::get_if<IntentChoice>(&a.payload)) {
        mine[{unit.unit_id, slot.position, std::string(kIntentQuestion), 0}] = c->label;
      } else if (const auto* r = std::get_if<Ratings>(&a.payload)) {
        for (const auto& [q, label] : r->by_question) mine[{unit.unit_id, slot.position, q, 0}] = label;
      } else if (const auto* s = std::get_if<SpanSet>(&a.payload)) {
        auto iit = items.find(slot.item_ref);
        if (iit == items.end()) continue;
        auto tokens = whitespace_tokens(iit->second->text);
        for (std::size_t t = 0; t < tokens.size(); ++t) {
          std::string label(kOutsideLabel);
          for (const auto& span : s->spans) {
            if (span.start < tokens[t].second && tokens[t].first < span.end) {
              label = span.type;
              break;
            }
          }
          mine[{unit.unit_id, slot.position, std::string(kEntityQuestion), static_cast<std::int64_t>(t)}] = label;
        }
      }
    }
  }
  return out;
}

AgreementTable agreement_table(const WorkerLabels& labels, std::int64_t min_overlap) {
  AgreementTable table;
  table.min_overlap = min_overlap;

  std::vector<std::string> pooled_a;
  std::vector<std::string> pooled_b;
  std::map<std::string, std::vector<double>> question_kappas;

  for (auto a = labels.begin(); a != labels.end(); ++a) {
    for (auto b = std::next(a); b != labels.end(); ++b) {
      std::vector<std::string> la;
      std::vector<std::string> lb;
      std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> by_question;
      auto ia = a->second.begin();
      auto ib = b->second.begin();
      while (ia != a->second.end() && ib != b->second.end()) {
        if (ia->first < ib->first) {
          ++ia;
        } else if (ib->first < ia->first) {
          ++ib;
        } else {
          la.push_back(ia->second);
          lb.push_back(ib->second);
          auto& q = by_question[ia->first.question];
          q.first.push_back(ia->second);
          q.second.push_back(ib->second);
          pooled_a.push_back(ia->first.question + '\x1f' + ia->second);
          pooled_b.push_back(ib->first.question + '\x1f' + ib->second);
          ++ia;
          ++ib;
        }
      }
      const auto overlap = static_cast<std::int64_t>(la.size());
      if (overlap == 0) continue;
      auto key = std::make_pair(a->first, b->first);
      if (overlap < min_overlap) {
        table.insufficient_overlap[key] = overlap;
      } else {
        table.pairwise[key] = {cohen_kappa(la, lb), overlap};
      }
      for (const auto& [q, seqs] : by_question) {
        auto& slot = question_kappas[q];
        if (static_cast<std::int64_t>(seqs.first.size()) >= min_overlap) {
          slot.push_back(cohen_kappa(seqs.first, seqs.second));
        }
      }
    }
  }
  for (const auto& [q, ks] : question_kappas) {
    if (ks.empty()) {
      table.per_question[q] = std::nullopt;
    } else {
      double sum = 0.0;
      for (double k : ks) sum += k;
      table.per_question[q] = sum / static_cast<double>(ks.size());
    }
  }
  table.pooled_overlap = static_cast<std::int64_t>(pooled_a.size());
  if (table.pooled_overlap >= min_overlap && table.pooled_overlap > 0) {
    table.overall = cohen_kappa(pooled_a, pooled_b);
  }
  return table;
}

std::optional<double> worker_vs_rest_kappa(const std::string& worker, const AgreementTable& table) {
  double weighted = 0.0;
  std::int64_t weight = 0;
  for (const auto& [pair, agreement] : table.pairwise) {
    if (pair.first != worker && pair.second != worker) continue;
    weighted += agreement.kappa * static_cast<double>(agreement.overlap);
    weight += agreement.overlap;
  }
  if (weight == 0) return std::nullopt;
  return weighted / static_cast<double>(weight);
}

TimeOutliers detect_time_outliers(const Durations& durations) {
  TimeOutliers out;
  struct Totals {
    __int128 count = 0;
    __int128 sum = 0;
    __int128 squares = 0;
  };
  Totals all;
  std::map<std::string, Totals> per_worker;
  for (const auto& [worker, units] : durations) {
    if (units.empty()) continue;
    auto& t = per_worker[worker];
    for (const auto& [_, ms] : units) {
      t.count += 1;
      t.sum += ms;
      t.squares += static_cast<__int128>(ms) * ms;
    }
    all.count += t.count;
    all.sum += t.sum;
    all.squares += t.squares;
  }
  if (per_worker.size() < 3) {
    out.insufficient_population = true;
    return out;
  }
  for (const auto& [worker, own] : per_worker) {
    const __int128 n = all.count - own.count;
    const __int128 s = all.sum - own.sum;
    const __int128 q = all.squares - own.squares;
    // |t - mu| > 2 sigma  <=>  (n-1)(n t - S)^2 > 4 n (n Q - S^2), sample sigma.
    const __int128 spread = 4 * n * (n * q - s * s);
    for (const auto& [unit, ms] : durations.at(worker)) {
      const __int128 dev = n * ms - s;
      if ((n - 1) * dev * dev > spread) out.flagged.emplace(worker, unit);
    }
  }
  return out;
}

PatternResult detect_pattern(const std::vector<std::string>& answers, const AnalysisThresholds& thresholds) {
  PatternResult r;
  r.answers = static_cast<std::int64_t>(answers.size());
  if (answers.empty()) return r;
  std::map<std::string, std::int64_t> counts;
  for (const auto& a : answers) ++counts[a];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  r.dominant = best->first;
  r.proportion = static_cast<double>(best->second) / static_cast<double>(r.answers);
  r.flagged = r.answers >= thresholds.pattern_min_answers &&
              static_cast<double>(best->second) >=
                  thresholds.pattern_modal_fraction * static_cast<double>(r.answers) - 1e-9;
  r.description = "dominant answer '" + r.dominant + "' in " + std::to_string(best->second) + "/" +
                  std::to_string(r.answers) + " answers (" + format_percent(r.proportion) + ")";
  return r;
}

std::optional<Fraction> duplicate_consistency(const Submission& submission, const TaskUnit& unit) {
  auto answers = answers_by_position(submission, unit);
  Fraction f;
  for (const auto& slot : unit.slots) {
    if (slot.kind != SlotKind::duplicate) continue;
    const auto& dup = answers[slot.position]->payload;
    if (std::holds_alternative<Transcript>(dup)) return std::nullopt;
    ++f.denominator;
    if (dup == answers[slot.of_position]->payload) ++f.numerator;
  }
  if (f.denominator == 0) return std::nullopt;
  return f;
}

std::optional<Fraction> golden_accuracy(const Submission& submission, const TaskUnit& unit) {
  auto answers = answers_by_position(submission, unit);
  Fraction f;
  for (const auto& slot : unit.slots) {
    if (slot.kind != SlotKind::golden || !slot.expected) continue;
    ++f.denominator;
    if (answers[slot.position]->payload == *slot.expected) ++f.numerator;
  }
  if (f.denominator == 0) return std::nullopt;
  return f;
}

QualityReport build_report(const ProjectData& data) {
  if (data.submissions.empty()) throw Error(ErrorCode::no_submissions, "project has no submissions");

  const auto& config = data.config;
  const bool interactive = config.template_kind == TemplateKind::interactive;

  QualityReport report;
  report.template_kind = config.template_kind;
  report.submission_count = static_cast<std::int64_t>(data.submissions.size());
  report.unit_count = static_cast<std::int64_t>(data.units.size());
  report.thresholds = config.qc.thresholds;
  report.golden_pass_threshold = config.qc.golden_pass_threshold;

  std::unordered_map<std::string, std::size_t> unit_index;
  for (std::size_t i = 0; i < data.units.size(); ++i) unit_index.emplace(data.units[i].unit_id, i);

  std::vector<const Submission*> subs;
  for (const auto& s : data.submissions) {
    if (!unit_index.contains(s.unit_id)) {
      throw Error(ErrorCode::unit_mismatch, "submission references unknown unit " + s.unit_id);
    }
    subs.push_back(&s);
  }
  std::sort(subs.begin(), subs.end(), [&](const Submission* a, const Submission* b) {
    auto ua = unit_index.at(a->unit_id);
    auto ub = unit_index.at(b->unit_id);
    if (ua != ub) return ua < ub;
    if (a->worker_id != b->worker_id) return a->worker_id < b->worker_id;
    return a->submission_id < b->submission_id;
  });

  struct Accumulator {
    WorkerSummary summary;
    Fraction dup;
    Fraction gold;
    std::int64_t total_ms = 0;
    std::vector<std::string> categorical;
  };
  std::map<std::string, Accumulator> acc;
  Durations durations;
  long double sum_ms = 0;

  for (const Submission* s : subs) {
    const TaskUnit& unit = data.units[unit_index.at(s->unit_id)];
    auto& a = acc[s->worker_id];
    a.summary.worker_id = s->worker_id;
    a.summary.units_submitted += 1;
    a.summary.answers += static_cast<std::int64_t>(s->answers.size());
    a.total_ms += s->total_ms;
    durations[s->worker_id][s->unit_id] = s->total_ms;
    sum_ms += s->total_ms;

    if (s->feedback && !s->feedback->empty()) {
      a.summary.feedback_count += 1;
      report.feedback.push_back({s->worker_id, s->unit_id, *s->feedback});
    }
    if (interactive) continue;

    if (auto d = duplicate_consistency(*s, unit)) {
      a.dup.numerator += d->numerator;
      a.dup.denominator += d->denominator;
    }
    if (auto g = golden_accuracy(*s, unit)) {
      a.gold.numerator += g->numerator;
      a.gold.denominator += g->denominator;
    }
    auto answers = answers_by_position(*s, unit);
    for (const Answer* ans : answers) {
      if (const auto* c = std::get_if<IntentChoice>(&ans->payload)) {
        a.categorical.push_back(c->label);
      } else if (const auto* r = std::get_if<Ratings>(&ans->payload)) {
        for (const auto& cat : config.categories) {
          auto it = r->by_question.find(cat.name);
          if (it != r->by_question.end()) a.categorical.push_back(it->second);
        }
      } else if (const auto* sp = std::get_if<SpanSet>(&ans->payload)) {
        a.categorical.push_back(span_signature(*sp));
      }
    }
  }

  auto time = detect_time_outliers(durations);
  report.time_population_insufficient = time.insufficient_population;

  if (!interactive) {
    auto labels = collect_labels(data);
    report.agreement = agreement_table(labels, config.qc.thresholds.min_overlap);
    for (const auto& [worker, judgements] : labels) {
      for (const auto& [key, label] : judgements) ++report.label_distribution[key.question][label];
    }
  } else {
    report.not_applicable = {"agreement", "pattern", "duplicate_consistency", "golden_accuracy",
                             "label_distribution"};
  }

  for (auto& [worker, a] : acc) {
    auto& w = a.summary;
    w.mean_seconds = static_cast<double>(a.total_ms) / 1000.0 / static_cast<double>(w.units_submitted);
    for (const auto& [flag_worker, unit] : time.flagged) {
      if (flag_worker == worker) w.time_flagged_units.push_back(unit);
    }
    std::sort(w.time_flagged_units.begin(), w.time_flagged_units.end(),
              [&](const std::string& x, const std::string& y) { return unit_index.at(x) < unit_index.at(y); });
    w.time_flag = !w.time_flagged_units.empty();
    if (!interactive) {
      if (a.dup.denominator > 0) w.duplicate_consistency = a.dup;
      if (a.gold.denominator > 0) {
        w.golden_accuracy = a.gold;
        w.exclude_recommended = a.gold.value() < config.qc.golden_pass_threshold;
      }
      auto pattern = detect_pattern(a.categorical, config.qc.thresholds);
      w.pattern_flag = pattern.flagged;
      w.pattern_description = pattern.description;
      w.vs_rest_kappa = worker_vs_rest_kappa(worker, *report.agreement);
    }
    report.workers.push_back(std::move(w));
  }

  const auto n = static_cast<long double>(subs.size());
  report.durations.count = static_cast<std::int64_t>(subs.size());
  const long double mean_ms = sum_ms / n;
  report.durations.mean_seconds = static_cast<double>(mean_ms / 1000.0L);
  if (subs.size() > 1) {
    long double ss = 0;
    for (const Submission* s : subs) {
      long double d = static_cast<long double>(s->total_ms) - mean_ms;
      ss += d * d;
    }
    report.durations.std_seconds = static_cast<double>(std::sqrt(ss / (n - 1)) / 1000.0L);
  }
  return report;
}

}  // namespace crowdqc
