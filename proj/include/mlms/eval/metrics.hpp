// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mlms::eval {

/// Mann-Whitney AUC with half credit for ties, via tie-averaged rank sums.
/// Throws UserError when the labels hold a single class, DataError on NaN.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Scores and 0/1 labels for n_clips x n_tags, row-major.
struct ScoreMatrix {
  std::size_t n_clips = 0;
  std::size_t n_tags = 0;
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> tags;

  void validate() const;
};

struct TagAucs {
  std::vector<double> auc;  // per tag; NaN for excluded tags
  std::vector<std::string> excluded;  // tags with a single class
  double mean = 0.0;  // unweighted over evaluable tags
};

/// Throws UserError when no tag is evaluable.
TagAucs tag_aucs(const ScoreMatrix& m);
double mean_auc(const ScoreMatrix& m, std::vector<std::string>* excluded = nullptr);

/// Fraction of exact matches; throws UserError on empty or unequal inputs.
double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

/// Row-wise argmax (first maximum) of an n x k score matrix.
std::vector<std::uint32_t> argmax_rows(std::span<const float> scores, std::size_t k);

/// Per-tag AUCs of several configurations against a declared baseline.
struct TagReport {
  std::vector<std::string> configurations;
  std::string baseline;
  std::vector<std::string> tags;  // sorted by baseline AUC, descending; excluded tags last
  std::vector<std::vector<double>> auc;        // [configuration][tag]
  std::vector<std::vector<double>> increment;  // auc - baseline auc
  std::vector<double> mean;                    // per configuration
  std::vector<std::string> excluded;

  std::size_t config_index(const std::string& name) const;
  /// tag, auc:<config>..., delta:<config>... for every non-baseline config.
  std::string to_csv() const;
};

TagReport per_tag_report(const std::vector<std::pair<std::string, ScoreMatrix>>& configurations,
                         const std::string& baseline);

/// Fixed-width text table of configuration rows in the given order.
struct SummaryRow {
  std::string configuration;
  std::string model;  // "local" / "global"
  double value = 0.0;
};
std::string summary_table(const std::vector<SummaryRow>& rows, const std::string& metric,
                          const std::vector<std::string>& notes = {});

}  // namespace mlms::eval
