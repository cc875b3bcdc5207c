#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "how2/corpus/records.hpp"

namespace how2::agreement {

using Label = int;
using OptLabel = std::optional<Label>;

// items x raters; nullopt marks a missing label.
struct LabelMatrix {
  std::vector<std::vector<OptLabel>> cells;

  std::size_t items() const noexcept { return cells.size(); }
  std::size_t raters() const noexcept { return cells.empty() ? 0 : cells.front().size(); }
  /// Throws ValidationError on ragged rows or fewer than two raters.
  void validate() const;
};

/// Nominal Krippendorff's alpha via the coincidence matrix; items with fewer
/// than two labels are not pairable and are skipped. Throws UndefinedError
/// when nothing is pairable or expected disagreement is zero.
double krippendorff_alpha(const LabelMatrix& matrix);

struct Majority {
  OptLabel label;  // empty on a tie
  bool tie() const noexcept { return !label.has_value(); }
};

/// The most frequent label when it is unique; a tie otherwise. Missing labels
/// are ignored. Throws ValidationError when no label is present.
Majority majority_label(const std::vector<OptLabel>& labels);

struct PercentAgreement {
  double overall = 0.0;
  std::map<Label, double> per_class;        // keyed by the reference class
  std::map<Label, std::size_t> class_counts;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // reference ties or missing candidate labels
};

/// Agreement of `candidate` with `reference`, stratified by the reference
/// class. Items where either side is empty are excluded and counted. Throws
/// AlignmentError on a length mismatch and UndefinedError when nothing remains.
PercentAgreement percent_agreement(const std::vector<OptLabel>& candidate, const std::vector<OptLabel>& reference);

/// For each rater, percent agreement with the majority of the other raters
/// on items where both exist and the majority is not a tie. A rater with no
/// usable item gets nullopt. Throws ValidationError with fewer than three raters.
std::vector<std::optional<double>> leave_one_out(const LabelMatrix& matrix);

// Label encoding for verdicts: has_failure = 1, no_failure = 0.
inline Label verdict_label(corpus::Verdict v) noexcept { return v == corpus::Verdict::has_failure ? 1 : 0; }

struct AgreementInputs {
  std::vector<std::string> item_keys;       // instance_id + "|" + generation_id
  std::vector<std::string> annotator_ids;   // rater columns
  LabelMatrix human;
  std::vector<OptLabel> judge;              // per item; empty without a valid judgment
};

/// Builds the human matrix from annotations (one item per generation) and
/// aligns judge verdicts to it.
AgreementInputs collect_agreement_inputs(const std::vector<corpus::AnnotationRecord>& annotations,
                                         const std::vector<corpus::JudgmentRecord>& judgments);

/// Alpha among humans, judge vs human majority, and leave-one-out, as JSON.
nlohmann::ordered_json agreement_report(const AgreementInputs& inputs);

}  // namespace how2::agreement
