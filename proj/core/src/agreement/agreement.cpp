#include "how2/agreement/agreement.hpp"

#include <algorithm>
#include <unordered_map>

#include "how2/util/error.hpp"

namespace how2::agreement {

void LabelMatrix::validate() const {
  const auto r = raters();
  for (const auto& row : cells) {
    if (row.size() != r) throw ValidationError("label matrix rows have different lengths");
  }
  if (!cells.empty() && r < 2) throw ValidationError("label matrix needs at least two raters");
}

double krippendorff_alpha(const LabelMatrix& matrix) {
  matrix.validate();
  // Coincidence counts o[c][k]; each pairable item contributes m_u (m_u - 1)
  // ordered pairs weighted by 1 / (m_u - 1).
  std::map<Label, std::map<Label, double>> o;
  for (const auto& row : matrix.cells) {
    std::vector<Label> values;
    for (const auto& cell : row) {
      if (cell) values.push_back(*cell);
    }
    const auto m = values.size();
    if (m < 2) continue;
    const double w = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i != j) o[values[i]][values[j]] += w;
      }
    }
  }
  std::map<Label, double> n_c;
  double n = 0.0;
  for (const auto& [c, row] : o) {
    for (const auto& [k, v] : row) {
      n_c[c] += v;
      n += v;
    }
  }
  if (n <= 1.0) throw UndefinedError("alpha is undefined without pairable labels");
  double observed = 0.0;
  for (const auto& [c, row] : o) {
    for (const auto& [k, v] : row) {
      if (c != k) observed += v;
    }
  }
  double expected = 0.0;
  for (const auto& [c, nc] : n_c) {
    for (const auto& [k, nk] : n_c) {
      if (c != k) expected += nc * nk;
    }
  }
  const double d_o = observed / n;
  const double d_e = expected / (n * (n - 1.0));
  if (d_e == 0.0) throw UndefinedError("alpha is undefined when all pairable labels are identical");
  return 1.0 - d_o / d_e;
}

Majority majority_label(const std::vector<OptLabel>& labels) {
  std::map<Label, std::size_t> counts;
  for (const auto& l : labels) {
    if (l) ++counts[*l];
  }
  if (counts.empty()) throw ValidationError("majority of an empty label set");
  std::size_t best = 0;
  for (const auto& [label, c] : counts) best = std::max(best, c);
  Majority m;
  std::size_t holders = 0;
  for (const auto& [label, c] : counts) {
    if (c == best) {
      ++holders;
      m.label = label;
    }
  }
  if (holders > 1) m.label.reset();
  return m;
}

PercentAgreement percent_agreement(const std::vector<OptLabel>& candidate, const std::vector<OptLabel>& reference) {
  if (candidate.size() != reference.size()) {
    throw AlignmentError("candidate and reference label sequences differ in length");
  }
  PercentAgreement out;
  std::size_t matches = 0;
  std::map<Label, std::size_t> class_matches;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (!candidate[i] || !reference[i]) {
      ++out.n_excluded;
      continue;
    }
    ++out.n_used;
    ++out.class_counts[*reference[i]];
    if (*candidate[i] == *reference[i]) {
      ++matches;
      ++class_matches[*reference[i]];
    }
  }
  if (out.n_used == 0) throw UndefinedError("percent agreement is undefined with no comparable items");
  out.overall = static_cast<double>(matches) / static_cast<double>(out.n_used);
  for (const auto& [label, n] : out.class_counts) {
    out.per_class[label] = static_cast<double>(class_matches[label]) / static_cast<double>(n);
  }
  return out;
}

std::vector<std::optional<double>> leave_one_out(const LabelMatrix& matrix) {
  matrix.validate();
  const auto r = matrix.raters();
  if (r < 3) throw ValidationError("leave-one-out agreement needs at least three raters");
  std::vector<std::optional<double>> out(r);
  for (std::size_t rater = 0; rater < r; ++rater) {
    std::size_t used = 0, matches = 0;
    for (const auto& row : matrix.cells) {
      if (!row[rater]) continue;
      std::vector<OptLabel> others;
      for (std::size_t k = 0; k < r; ++k) {
        if (k != rater && row[k]) others.push_back(row[k]);
      }
      if (others.empty()) continue;
      const auto m = majority_label(others);
      if (m.tie()) continue;
      ++used;
      if (*m.label == *row[rater]) ++matches;
    }
    if (used) out[rater] = static_cast<double>(matches) / static_cast<double>(used);
  }
  return out;
}

AgreementInputs collect_agreement_inputs(const std::vector<corpus::AnnotationRecord>& annotations,
                                         const std::vector<corpus::JudgmentRecord>& judgments) {
  AgreementInputs in;
  std::unordered_map<std::string, std::size_t> item_index, rater_index;
  auto key_of = [](const std::string& inst, const std::string& gen) { return inst + "|" + gen; };
  for (const auto& a : annotations) {
    const auto key = key_of(a.instance_id, a.generation_id);
    if (item_index.emplace(key, in.item_keys.size()).second) in.item_keys.push_back(key);
    if (rater_index.emplace(a.annotator_id, in.annotator_ids.size()).second) in.annotator_ids.push_back(a.annotator_id);
  }
  in.human.cells.assign(in.item_keys.size(), std::vector<OptLabel>(in.annotator_ids.size()));
  for (const auto& a : annotations) {
    auto& cell = in.human.cells[item_index.at(key_of(a.instance_id, a.generation_id))][rater_index.at(a.annotator_id)];
    if (cell) throw ValidationError("annotator " + a.annotator_id + " labelled " + a.instance_id + " twice");
    cell = verdict_label(a.binary());
  }
  in.judge.assign(in.item_keys.size(), std::nullopt);
  for (const auto& j : judgments) {
    const auto it = item_index.find(key_of(j.instance_id, j.generation_id));
    if (it != item_index.end() && j.valid) in.judge[it->second] = verdict_label(j.binary());
  }
  return in;
}

namespace {

const char* class_name(Label l) { return l == 1 ? "has_failure" : "no_failure"; }

nlohmann::ordered_json percent_json(const PercentAgreement& p) {
  nlohmann::ordered_json per = nlohmann::ordered_json::object();
  for (const auto& [label, v] : p.per_class) {
    per[class_name(label)] = {{"agreement", v}, {"n", p.class_counts.at(label)}};
  }
  return {{"overall", p.overall}, {"per_class", std::move(per)}, {"n_used", p.n_used}, {"n_excluded", p.n_excluded}};
}

template <typename Fn>
nlohmann::ordered_json guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return {{"error", std::string(to_string(e.category()))}, {"message", e.what()}};
  }
}

}  // namespace

nlohmann::ordered_json agreement_report(const AgreementInputs& inputs) {
  nlohmann::ordered_json out;
  out["n_items"] = inputs.item_keys.size();
  out["n_annotators"] = inputs.annotator_ids.size();
  out["krippendorff_alpha"] = guarded([&] { return nlohmann::ordered_json(krippendorff_alpha(inputs.human)); });

  std::vector<OptLabel> majority;
  std::size_t ties = 0;
  for (const auto& row : inputs.human.cells) {
    const bool any = std::any_of(row.begin(), row.end(), [](const auto& c) { return c.has_value(); });
    const auto m = any ? majority_label(row) : Majority{};
    if (m.tie()) ++ties;
    majority.push_back(m.label);
  }
  out["majority_ties"] = ties;
  out["judge_vs_majority"] = guarded([&] { return percent_json(percent_agreement(inputs.judge, majority)); });
  out["leave_one_out"] = guarded([&] {
    const auto loo = leave_one_out(inputs.human);
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t r = 0; r < loo.size(); ++r) {
      per[inputs.annotator_ids[r]] = loo[r] ? nlohmann::ordered_json(*loo[r]) : nlohmann::ordered_json(nullptr);
    }
    return per;
  });
  return out;
}

}  // namespace how2::agreement
