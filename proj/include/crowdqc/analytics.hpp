#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crowdqc/submission.hpp"

namespace crowdqc {

/// Exact ratio; the denominator is the number of slots the metric looked at.
struct Fraction {
  std::int64_t numerator = 0;
  std::int64_t denominator = 0;

  double value() const { return denominator == 0 ? 0.0 : static_cast<double>(numerator) / denominator; }
  bool operator==(const Fraction&) const = default;
};

/// Identifies one categorical judgement: a slot of a unit, the question asked
/// about it, and (entity template) the token index.
struct LabelKey {
  std::string unit_id;
  std::int64_t position = 0;
  std::string question;
  std::int64_t token = 0;

  auto operator<=>(const LabelKey&) const = default;
};

/// worker -> judgement -> label.
using WorkerLabels = std::map<std::string, std::map<LabelKey, std::string>>;

struct PairAgreement {
  double kappa = 0.0;
  std::int64_t overlap = 0;
  bool operator==(const PairAgreement&) const = default;
};

struct AgreementTable {
  std::int64_t min_overlap = 5;
  /// Keyed by (a, b) with a < b; use find() for order-free lookup.
  std::map<std::pair<std::string, std::string>, PairAgreement> pairwise;
  /// Pairs that co-annotated something but fewer than min_overlap judgements.
  std::map<std::pair<std::string, std::string>, std::int64_t> insufficient_overlap;
  /// Mean pairwise kappa restricted to each question; absent without a qualifying pair.
  std::map<std::string, std::optional<double>> per_question;
  /// Kappa over every co-annotated judgement of every pair, pooled.
  std::optional<double> overall;
  std::int64_t pooled_overlap = 0;

  const PairAgreement* find(const std::string& a, const std::string& b) const;
  bool operator==(const AgreementTable&) const = default;
};

/// Categorical judgements per worker. Second occurrences of duplicated items
/// are skipped; golden slots are kept. Interactive projects yield nothing.
WorkerLabels collect_labels(const ProjectData& data);

AgreementTable agreement_table(const WorkerLabels& labels, std::int64_t min_overlap = 5);

/// Overlap-weighted mean of the worker's qualifying pairwise kappas.
std::optional<double> worker_vs_rest_kappa(const std::string& worker, const AgreementTable& table);

/// worker -> unit -> milliseconds.
using Durations = std::map<std::string, std::map<std::string, std::int64_t>>;

struct TimeOutliers {
  std::set<std::pair<std::string, std::string>> flagged;  // (worker, unit)
  bool insufficient_population = false;
  bool operator==(const TimeOutliers&) const = default;
};

/// Leave-one-worker-out rule: a duration t is flagged when |t - mu| > 2 sigma,
/// with mu and the sample sigma taken over every other worker's durations
/// (any deviation when sigma = 0). Evaluated in exact integer arithmetic.
/// Needs at least three workers.
TimeOutliers detect_time_outliers(const Durations& durations);

struct PatternResult {
  bool flagged = false;
  std::string dominant;
  double proportion = 0.0;
  std::int64_t answers = 0;
  std::string description;
  bool operator==(const PatternResult&) const = default;
};

PatternResult detect_pattern(const std::vector<std::string>& answers,
                             const AnalysisThresholds& thresholds = {});

/// Fraction of duplicate slots answered like their original. Throws
/// Error(unit_mismatch) when the submission does not belong to the unit.
std::optional<Fraction> duplicate_consistency(const Submission& submission, const TaskUnit& unit);

/// Fraction of golden slots answered with the expected answer.
std::optional<Fraction> golden_accuracy(const Submission& submission, const TaskUnit& unit);

struct WorkerSummary {
  std::string worker_id;
  std::int64_t units_submitted = 0;
  std::int64_t answers = 0;
  std::optional<Fraction> duplicate_consistency;
  std::optional<Fraction> golden_accuracy;
  /// Advisory: golden accuracy below the pass threshold. The worker is still paid.
  bool exclude_recommended = false;
  bool time_flag = false;
  std::vector<std::string> time_flagged_units;
  double mean_seconds = 0.0;
  bool pattern_flag = false;
  std::string pattern_description;
  std::optional<double> vs_rest_kappa;
  std::int64_t feedback_count = 0;

  bool operator==(const WorkerSummary&) const = default;
};

struct DurationStats {
  std::int64_t count = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
  bool operator==(const DurationStats&) const = default;
};

struct FeedbackEntry {
  std::string worker_id;
  std::string unit_id;
  std::string text;
  bool operator==(const FeedbackEntry&) const = default;
};

struct QualityReport {
  TemplateKind template_kind = TemplateKind::intent_classification;
  std::int64_t submission_count = 0;
  std::int64_t unit_count = 0;
  AnalysisThresholds thresholds;
  double golden_pass_threshold = 0.8;
  /// One row per worker, sorted by worker id.
  std::vector<WorkerSummary> workers;
  /// Absent for interactive projects.
  std::optional<AgreementTable> agreement;
  std::map<std::string, std::map<std::string, std::int64_t>> label_distribution;
  DurationStats durations;
  bool time_population_insufficient = false;
  std::vector<FeedbackEntry> feedback;
  /// Sections that do not apply to the template (interactive: free-form dialog).
  std::vector<std::string> not_applicable;

  bool operator==(const QualityReport&) const = default;
};

/// Assembles every quality metric. Throws Error(no_submissions) for an empty
/// submission set. Deterministic: input order of submissions does not matter.
QualityReport build_report(const ProjectData& data);

}  // namespace crowdqc
